mod common;

use std::collections::BTreeMap;

use cbd_core::contextuality::{Witness, CertificateReport};
use cbd_core::corpus::{self, random, Skeleton};
use cbd_core::coupling::multimaximal_binary;
use cbd_core::lp::{self, Constraint, LinearProgram, Relation};
use cbd_core::model::{outcomes, RawLabel};
use cbd_core::rational::{rat, Rational};
use cbd_core::{
    build_coupling_spec, check, check_pair_consistency, measure, subsystem, AnalysisOptions, CCSystem, Cell,
    ContentId, ContextId, Distribution, Error, SolveMode, Verdict,
};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use proptest::test_runner::Config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> AnalysisOptions {
    AnalysisOptions::default()
}

fn config(cases: u32) -> Config {
    Config { cases, failure_persistence: None, ..Config::default() }
}

/// A random binary system on a cyclic (rank 2..=5) or R_ex skeleton: noncontextual
/// by construction, consistently connected, or unconstrained.
fn random_system(rng: &mut ChaCha8Rng) -> CCSystem {
    let skeleton = if rng.gen_bool(0.5) {
        corpus::cyclic_skeleton(rng.gen_range(2..=5)).unwrap()
    } else {
        corpus::rex_skeleton()
    };
    match rng.gen_range(0..3) {
        0 => random::random_noncontextual_binary(rng, &skeleton, 4),
        1 => {
            let values = rng.gen_range(2..=4);
            random::random_consistent_binary(rng, &skeleton, values)
        }
        _ => random::random_binary_system(rng, &skeleton),
    }
}

fn verdict(sys: &CCSystem) -> Verdict {
    check(sys, &opts()).unwrap().verdict
}

/// Traditional test: one value per content, bunches as marginals. Built
/// from the system directly, without the coupling spec.
fn traditional_noncontextual(sys: &CCSystem) -> bool {
    let contents = sys.contents();
    let shape: Vec<usize> = contents.iter().map(|q| sys.value_set(q).unwrap().len()).collect();
    let assignments: Vec<Vec<usize>> = outcomes(&shape).collect();
    let mut program = LinearProgram::new(assignments.len());
    for bunch in sys.bunches() {
        let idx: Vec<usize> = bunch.contents.iter().map(|q| contents.iter().position(|c| c == q).unwrap()).collect();
        for local in outcomes(bunch.dist.shape()) {
            let terms: Vec<(usize, Rational)> = assignments
                .iter()
                .enumerate()
                .filter(|(_, a)| idx.iter().zip(&local).all(|(&i, v)| a[i] == *v))
                .map(|(x, _)| (x, Rational::one()))
                .collect();
            program.add_constraint(Constraint::new(terms, Relation::Eq, bunch.dist.mass(&local)));
        }
    }
    lp::solve(&program, SolveMode::Exact).unwrap().is_feasible()
}

/// `Σ_r λ_r b_r` is a lower bound on `Σ|x_j|` over `A x = b` whenever every
/// column satisfies `|Σ_r λ_r a_rj| ≤ 1`.
fn l1_lower_bound(program: &LinearProgram, lambda: &[Rational]) -> Option<Rational> {
    let mut g = vec![Rational::zero(); program.num_vars];
    for (c, l) in program.constraints.iter().zip(lambda) {
        assert_eq!(c.relation, Relation::Eq);
        for (j, a) in &c.terms {
            g[*j] += a * l;
        }
    }
    if g.iter().all(|v| v.abs() <= Rational::one()) {
        Some(program.constraints.iter().zip(lambda).map(|(c, l)| &c.rhs * l).sum())
    } else {
        None
    }
}

#[test]
fn spec_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rex = random::random_binary_system(&mut rng, &corpus::rex_skeleton());
    let spec = build_coupling_spec(&rex, &opts()).unwrap();
    assert_eq!(spec.num_outcomes(), 512);
    let per_bunch: Vec<usize> = ["c1", "c2", "c3"]
        .iter()
        .map(|c| spec.bunch_constraints.iter().filter(|r| r.label.as_ref().unwrap().starts_with(&format!("bunch {c}:"))).count())
        .collect();
    assert_eq!(per_bunch, [8, 4, 16]);

    let cyc3 = random::random_binary_system(&mut rng, &corpus::cyclic_skeleton(3).unwrap());
    assert_eq!(build_coupling_spec(&cyc3, &opts()).unwrap().num_outcomes(), 64);

    let one = Skeleton { contents: rex.contents().to_vec(), contexts: vec![corpus::rex_skeleton().contexts[2].clone()] }
        .fill_binary(vec![Distribution::uniform(vec![2; 4])])
        .unwrap();
    let spec = build_coupling_spec(&one, &opts()).unwrap();
    assert!(spec.connection_constraints.is_empty() && spec.proper_constraints.is_empty());
    assert_eq!(verdict(&one), Verdict::Noncontextual);
}

#[test]
fn product_bunches_are_noncontextual() {
    let m = Distribution::univariate(vec![rat(1, 3), rat(2, 3)]).unwrap();
    let spec = corpus::CyclicSpec { bunches: vec![m.product(&m); 4] };
    let sys = corpus::gen_cyclic(&spec).unwrap();
    let report = check(&sys, &opts()).unwrap();
    assert_eq!(report.verdict, Verdict::Noncontextual);
    assert!(matches!(report.witness, Some(Witness::Coupling(_))));
}

#[test]
fn pr_box_is_contextual() {
    let sys = corpus::pr_box();
    for mode in [SolveMode::Exact, SolveMode::FloatThenVerify] {
        let report = check(&sys, &AnalysisOptions { mode, ..opts() }).unwrap();
        assert_eq!(report.verdict, Verdict::Contextual);
        let CertificateReport { rows, verified } = report.certificate.unwrap();
        assert!(verified && !rows.is_empty());
    }
    // Oracle: no mixture of the 16 deterministic content assignments fits the bunches.
    let (a, b) = common::pr_box_content_level();
    assert!(common::nonnegative_solution(&a, &b).is_none());
    assert!(!traditional_noncontextual(&sys));
}

#[test]
fn all_correlated_cycle_is_noncontextual() {
    let spec = corpus::CyclicSpec { bunches: vec![corpus::correlated_pair(&rat(1, 1)); 4] };
    let sys = corpus::gen_cyclic(&spec).unwrap();
    assert_eq!(verdict(&sys), Verdict::Noncontextual);
    let (a, mut b) = common::pr_box_content_level();
    // flip the fourth bunch to perfect correlation as well
    for (r, v) in b.iter_mut().enumerate().skip(12) {
        *v = if r == 12 || r == 15 { rat(1, 2) } else { Rational::zero() };
    }
    assert!(common::nonnegative_solution(&a, &b).is_some());
}

#[test]
fn pr_box_measure_is_proved_optimal() {
    let sys = corpus::pr_box();
    let report = measure(&sys, &opts()).unwrap();
    assert_eq!(report.verdict, Verdict::Contextual);
    let tv = report.total_variation.clone().unwrap();
    assert_eq!(report.measure, Some(&tv - Rational::one()));
    assert_eq!(tv, rat(4, 3));

    // Upper bound: the witness is a quasi-coupling with exactly this total variation.
    let spec = build_coupling_spec(&sys, &opts()).unwrap();
    let program = spec.program(true);
    let Some(Witness::Quasi(q)) = &report.witness else { panic!("expected a quasi-coupling") };
    let x: Vec<Rational> = outcomes(&spec.shape).map(|o| q.masses.get(&o).cloned().unwrap_or_else(Rational::zero)).collect();
    program.verify_point(&x).unwrap();
    assert_eq!(x.iter().map(|v| v.abs()).sum::<Rational>(), tv);

    // Lower bound: dual multipliers of the L1 program, checked column by column here.
    let signed: Vec<usize> = (0..program.num_vars).collect();
    let solution = lp::minimize_l1(&program, &signed, SolveMode::Exact).unwrap();
    let split_duals = solution.duals.unwrap();
    assert_eq!(l1_lower_bound(&program, &split_duals), Some(rat(4, 3)));

    // Restricting the joint to one value per content is tighter: there the optimum is 2.
    let (a, b) = common::pr_box_content_level();
    assert_eq!(common::min_l1(&a, &b), Some(rat(2, 1)));
}

#[test]
fn noncontextual_measure_is_zero_with_proper_witness() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sys = random::random_noncontextual_binary(&mut rng, &corpus::rex_skeleton(), 4);
    let report = measure(&sys, &opts()).unwrap();
    assert_eq!(report.measure, Some(Rational::zero()));
    assert!(matches!(report.witness, Some(Witness::Coupling(_))));

    let single = corpus::example2();
    let report = measure(&single, &opts()).unwrap();
    assert_eq!(report.measure, Some(Rational::zero()));
}

#[test]
fn categorical_examples() {
    assert_eq!(verdict(&corpus::example2()), Verdict::Noncontextual);
    assert_eq!(verdict(&corpus::example1()), Verdict::Contextual);
    let report = measure(&corpus::example1(), &opts()).unwrap();
    assert_eq!(report.verdict, Verdict::Contextual);
    assert_eq!(report.measure, None);
    assert!(report.notes[0].contains("no multimaximal coupling"));
}

#[test]
fn cea18_is_too_large() {
    let sys = corpus::cea18_one_hot();
    assert!(matches!(check(&sys, &opts()), Err(Error::TooLarge(_))));
    assert!(matches!(measure(&sys, &opts()), Err(Error::TooLarge(_))));
}

#[test]
fn subsystem_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rex = random::random_binary_system(&mut rng, &corpus::rex_skeleton());
    let sub = subsystem(&rex, &[Cell::new("q3", "c2")]).unwrap();
    let c2 = sub.bunch(&ContextId::new("c2")).unwrap();
    assert_eq!(c2.contents, vec![ContentId::new("q1")]);
    assert_eq!(c2.dist, rex.marginal(&ContextId::new("c2"), &[ContentId::new("q1")]).unwrap());

    assert_eq!(subsystem(&rex, &[]).unwrap(), rex);

    let sub = subsystem(&rex, &[Cell::new("q1", "c2"), Cell::new("q3", "c2")]).unwrap();
    assert!(sub.bunch(&ContextId::new("c2")).is_none());
    assert_eq!(sub.contexts().count(), 2);

    assert!(matches!(subsystem(&rex, &[Cell::new("q3", "c1")]), Err(Error::Model(_))));
}

#[test]
fn pair_diagnostics() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let nc = random::random_noncontextual_binary(&mut rng, &corpus::rex_skeleton(), 3);
    assert_eq!(verdict(&nc), Verdict::Noncontextual);
    assert!(check_pair_consistency(&nc, &opts()).unwrap().contextual_pairs.is_empty());

    let pr = corpus::pr_box();
    let report = check_pair_consistency(&pr, &opts()).unwrap();
    assert_eq!(report.pairs_checked, 6);
    assert!(report.contextual_pairs.is_empty());
    assert_eq!(verdict(&pr), Verdict::Contextual);

    // Search small rank-2 cycles for a contextual one, then pad it with an unrelated context.
    let pad = Distribution::univariate(vec![rat(1, 2), rat(1, 2)]).unwrap();
    let mut found = None;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cyc = random::random_binary_system(&mut rng, &corpus::cyclic_skeleton(2).unwrap());
        if verdict(&cyc) == Verdict::Contextual {
            found = Some(cyc);
            break;
        }
    }
    let cyc = found.expect("some rank-2 cycle is contextual");
    let mut skeleton = Skeleton::from(&cyc);
    skeleton.contents.push(ContentId::new("q3"));
    skeleton.contexts.push((ContextId::new("c3"), vec![ContentId::new("q3")]));
    let mut dists: Vec<Distribution> = cyc.bunches().iter().map(|b| b.dist.clone()).collect();
    dists.push(pad);
    let padded = skeleton.fill_binary(dists).unwrap();
    let report = check_pair_consistency(&padded, &opts()).unwrap();
    assert_eq!(report.contextual_pairs, vec![(ContextId::new("c1"), ContextId::new("c2"))]);
}

/// Renames every content and context and reverses every value set.
fn relabel(sys: &CCSystem) -> CCSystem {
    let mut raw = sys.to_raw();
    let q = |s: &str| format!("x_{s}");
    let c = |s: &str| format!("ctx-{s}");
    raw.contents = raw.contents.iter().map(|s| q(s)).collect();
    raw.value_sets = raw
        .value_sets
        .iter()
        .map(|(k, v)| {
            let mut v: Vec<RawLabel> = v.iter().map(|l| RawLabel::Str(format!("v{}", l.to_label()))).collect();
            v.reverse();
            (q(k), v)
        })
        .collect();
    for ctx in raw.contexts.iter_mut() {
        ctx.id = c(&ctx.id);
        ctx.cells = ctx.cells.iter().map(|s| q(s)).collect();
        for e in ctx.distribution.iter_mut() {
            e.outcome = e.outcome.iter().map(|(k, v)| (q(k), RawLabel::Str(format!("v{}", v.to_label())))).collect();
        }
    }
    cbd_core::model::validate_system(&raw).unwrap()
}

proptest! {
    #![proptest_config(config(40))]

    #[test]
    fn verdict_matches_measure(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng);
        let c = check(&sys, &opts()).unwrap();
        let m = measure(&sys, &opts()).unwrap();
        let measure = m.measure.clone().expect("binary systems always have a quasi-coupling");
        prop_assert_eq!(c.verdict == Verdict::Noncontextual, measure.is_zero());
        prop_assert_eq!(c.verdict, m.verdict);
        prop_assert!(!measure.is_negative());

        // The witness is a valid quasi-coupling with proper, exact margins.
        let spec = build_coupling_spec(&sys, &opts()).unwrap();
        let x: Vec<Rational> = match m.witness.unwrap() {
            Witness::Coupling(w) => outcomes(&spec.shape).map(|o| w.dist.mass(&o)).collect(),
            Witness::Quasi(q) => outcomes(&spec.shape).map(|o| q.masses.get(&o).cloned().unwrap_or_else(Rational::zero)).collect(),
        };
        prop_assert!(x.iter().sum::<Rational>().is_one());
        spec.program(true).verify_point(&x).unwrap();
        prop_assert_eq!(x.iter().map(|v| v.abs()).sum::<Rational>(), m.total_variation.unwrap());
    }

    #[test]
    fn fast_mode_gives_identical_results(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng);
        let fast = AnalysisOptions { mode: SolveMode::FloatThenVerify, ..opts() };
        prop_assert_eq!(check(&sys, &opts()).unwrap().verdict, check(&sys, &fast).unwrap().verdict);
        prop_assert_eq!(measure(&sys, &opts()).unwrap().measure, measure(&sys, &fast).unwrap().measure);
    }

    #[test]
    fn noncontextuality_survives_cell_deletion(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let skeleton = if rng.gen_bool(0.5) { corpus::cyclic_skeleton(rng.gen_range(2..=4)).unwrap() } else { corpus::rex_skeleton() };
        let sys = random::random_noncontextual_binary(&mut rng, &skeleton, 4);
        prop_assert_eq!(verdict(&sys), Verdict::Noncontextual);
        for cell in sys.cells() {
            let sub = subsystem(&sys, &[cell]).unwrap();
            prop_assert_eq!(verdict(&sub), Verdict::Noncontextual);
        }
    }

    #[test]
    fn consistent_systems_match_traditional_test(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let skeleton = if rng.gen_bool(0.6) { corpus::cyclic_skeleton(rng.gen_range(2..=5)).unwrap() } else { corpus::rex_skeleton() };
        let values = rng.gen_range(2..=5);
        let sys = random::random_consistent_binary(&mut rng, &skeleton, values);
        prop_assert!(sys.is_consistently_connected().0);
        prop_assert_eq!(verdict(&sys) == Verdict::Noncontextual, traditional_noncontextual(&sys));
    }

    #[test]
    fn binary_connection_block_pins_one_distribution(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random::random_binary_system(&mut rng, &corpus::rex_skeleton());
        let spec = build_coupling_spec(&sys, &opts()).unwrap();
        for conn in sys.connections().into_iter().filter(|c| c.len() > 1) {
            // Rows of this connection, rewritten over its own 2^k outcomes.
            let prefix = format!("connection {}:", conn.content);
            let coords: Vec<usize> = conn.cells.iter().map(|c| spec.cells.iter().position(|s| s == c).unwrap()).collect();
            let joint: Vec<Vec<usize>> = outcomes(&spec.shape).collect();
            let local_shape = vec![2; conn.len()];
            let local_index = |x: usize| {
                let o: Vec<usize> = coords.iter().map(|&c| joint[x][c]).collect();
                cbd_core::model::outcome_index(&local_shape, &o)
            };
            let rows: Vec<&Constraint> = spec.connection_constraints.iter().filter(|r| r.label.as_ref().unwrap().starts_with(&prefix)).collect();
            let n = 1 << conn.len();
            let a: Vec<Vec<Rational>> = rows
                .iter()
                .map(|r| {
                    let mut row = vec![Rational::zero(); n];
                    let locals: std::collections::BTreeSet<usize> = r.terms.iter().map(|(x, _)| local_index(*x)).collect();
                    prop_assert_eq!(locals.len(), 1);
                    row[*locals.iter().next().unwrap()] = Rational::one();
                    Ok(row)
                })
                .collect::<Result<_, TestCaseError>>()?;
            let b: Vec<Rational> = rows.iter().map(|r| r.rhs.clone()).collect();
            let vertices = common::basic_solutions(&a, &b);
            prop_assert_eq!(vertices.len(), 1);
            let stair = multimaximal_binary(&conn).unwrap();
            let expected: Vec<Rational> = outcomes(&local_shape).map(|o| stair.dist.mass(&o)).collect();
            prop_assert_eq!(&vertices[0], &expected);
        }
    }

}

proptest! {
    #![proptest_config(config(15))]

    #[test]
    fn relabeling_changes_nothing(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng);
        let other = relabel(&sys);
        let (a, b) = (measure(&sys, &opts()).unwrap(), measure(&other, &opts()).unwrap());
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert_eq!(a.measure, b.measure);
        prop_assert_eq!(verdict(&sys), verdict(&other));
    }

    #[test]
    fn single_context_contents_do_not_matter(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_system(&mut rng);
        // Add a content measured only in the first context, correlated with the rest of that bunch.
        let mut skeleton = Skeleton::from(&base);
        let extra = ContentId::new("solo");
        skeleton.contents.push(extra.clone());
        skeleton.contexts[0].1.push(extra.clone());
        let k = skeleton.contexts[0].1.len();
        let first = &base.bunches()[0].dist;
        let mut masses: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        for (o, m) in first.iter() {
            let t = random::random_probability(&mut rng, 6);
            let mut a = o.clone();
            a.push(0);
            masses.insert(a, m * &t);
            let mut b = o.clone();
            b.push(1);
            masses.insert(b, m * (Rational::one() - t));
        }
        let mut dists: Vec<Distribution> = base.bunches().iter().map(|b| b.dist.clone()).collect();
        dists[0] = Distribution::new(vec![2; k], masses).unwrap();
        let with = skeleton.fill_binary(dists).unwrap();
        prop_assert_eq!(&subsystem(&with, &[Cell { content: extra, context: skeleton.contexts[0].0.clone() }]).unwrap(), &base);
        prop_assert_eq!(verdict(&with), verdict(&base));
        prop_assert_eq!(measure(&with, &opts()).unwrap().measure, measure(&base, &opts()).unwrap().measure);
    }
}
