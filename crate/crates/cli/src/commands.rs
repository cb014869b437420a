use std::path::Path;

use cbd_core::corpus::{self, DichotomizationMap};
use cbd_core::coupling::{self, MultimaximalOutcome};
use cbd_core::lp::write_lp;
use cbd_core::model::rational_json;
use cbd_core::rational::format_rational;
use cbd_core::{
    build_coupling_spec, check, check_pair_consistency, measure, subsystem, AnalysisOptions, CCSystem, Cell, ContentId,
    Connection,
};
use serde_json::{json, Value};

use crate::{gen, Cli, CliError, Command, Output};

fn load(path: &Path) -> Result<CCSystem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(CCSystem::from_json_str(&text)?)
}

fn labels(list: &str) -> Vec<String> {
    list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn system_output(system: &CCSystem) -> Output {
    Output::Text(system.to_json_string())
}

/// Runs one command and returns what it would print.
pub fn run(cli: &Cli) -> Result<Output, CliError> {
    let opts = cli.options();
    match &cli.command {
        Command::Validate { input } => Ok(Output::Json(summary(&load(input)?))),
        Command::Coupling { input, content } => {
            let system = load(input)?;
            let connections = match content {
                Some(q) => vec![system.connection_of(&ContentId::new(q.clone()))?],
                None => system.connections(),
            };
            let reports = connections
                .iter()
                .map(|c| connection_report(c, cli.limit, &opts))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Output::Json(json!({ "connections": reports })))
        }
        Command::Check { input, pairs } => {
            let system = load(input)?;
            let mut report = check(&system, &opts)?.to_json(&system);
            if *pairs {
                report["pairs"] = check_pair_consistency(&system, &opts)?.to_json();
            }
            Ok(Output::Json(report))
        }
        Command::Measure { input } => {
            let system = load(input)?;
            Ok(Output::Json(measure(&system, &opts)?.to_json(&system)))
        }
        Command::Subsystem { input, drop } => {
            let system = load(input)?;
            let cells = drop.iter().map(|s| s.parse::<Cell>().map_err(CliError::Usage)).collect::<Result<Vec<_>, _>>()?;
            Ok(system_output(&subsystem(&system, &cells)?))
        }
        Command::Dichotomize { input, content, splits } => {
            let system = load(input)?;
            let q = ContentId::new(content.clone());
            let map = if splits.is_empty() {
                DichotomizationMap::all(&system, &q)?
            } else {
                let sides: Vec<Vec<String>> = splits.iter().map(|s| labels(s)).collect();
                DichotomizationMap::from_labels(&system, &q, &sides)?
            };
            let out = corpus::dichotomize(&system, &map)?;
            eprintln!(
                "{q}: {} split(s); cells {} -> {}, joint outcomes {} -> {}",
                map.splits.len(),
                system.cells().len(),
                out.cells().len(),
                system.joint_outcome_count(),
                out.joint_outcome_count()
            );
            Ok(system_output(&out))
        }
        Command::Coarsen { input, content, lumps } => {
            let system = load(input)?;
            let blocks: Vec<Vec<String>> = lumps.iter().map(|s| labels(s)).collect();
            Ok(system_output(&corpus::coarse_grain(&system, &ContentId::new(content.clone()), &blocks)?))
        }
        Command::Gen { kind, rank, seed } => Ok(system_output(&gen::generate(*kind, *rank, *seed)?)),
        Command::LpDump { input, signed } => {
            let system = load(input)?;
            let spec = build_coupling_spec(&system, &opts)?;
            Ok(Output::Text(write_lp(&spec.program(*signed))))
        }
    }
}

fn summary(system: &CCSystem) -> Value {
    let (consistent, inconsistent) = system.is_consistently_connected();
    json!({
        "valid": true,
        "contents": system.contents().len(),
        "contexts": system.bunches().len(),
        "cells": system.cells().len(),
        "binary": system.is_binary(),
        "consistently_connected": consistent,
        "inconsistent_contents": inconsistent,
        "joint_outcomes": system.joint_outcome_count().to_string(),
    })
}

fn connection_report(connection: &Connection, limit: usize, opts: &AnalysisOptions) -> Result<Value, CliError> {
    let cells: Vec<String> = connection.cells.iter().map(Cell::to_string).collect();
    let mut pairs = Vec::new();
    for i in 0..connection.len() {
        for j in i + 1..connection.len() {
            let m = coupling::max_pair_probability(&connection.marginals[i], &connection.marginals[j])?;
            pairs.push(json!({ "cells": [cells[i], cells[j]], "max_equal": rational_json(&m) }));
        }
    }
    let multimaximal = if connection.is_binary() {
        let c = coupling::multimaximal_binary(connection)?;
        json!({ "exists": true, "unique": true, "couplings": [c.to_json()] })
    } else {
        match coupling::multimaximal_exists(connection, opts)? {
            MultimaximalOutcome::Impossible(cert) => json!({
                "exists": false,
                "certificate": {
                    "verified": cert.verify(),
                    "rows": cert.rows().iter().map(|(label, l)| json!({ "constraint": label, "multiplier": format_rational(l) })).collect::<Vec<_>>(),
                },
            }),
            MultimaximalOutcome::Exists(_) => {
                let found = coupling::enumerate_multimaximal(connection, limit, opts)?;
                let truncated = found.len() >= limit;
                json!({
                    "exists": true,
                    "unique": !truncated && found.len() == 1,
                    "truncated": truncated,
                    "couplings": found.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
                })
            }
        }
    };
    Ok(json!({
        "content": connection.content.as_str(),
        "cells": cells,
        "consistent": connection.is_consistent(),
        "pair_maxima": pairs,
        "multimaximal": multimaximal,
    }))
}
