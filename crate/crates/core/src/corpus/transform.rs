use std::collections::{BTreeMap, BTreeSet};

use super::CorpusError;
use crate::model::{Bunch, CCSystem, ContentId, Outcome, ValueSet};

/// Which binary splits replace a content. Each split is the set of value
/// indices mapped to the first binary value; it is stored as the side that
/// contains value 0, so a split and its complement coincide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DichotomizationMap {
    pub content: ContentId,
    pub splits: Vec<BTreeSet<usize>>,
}

impl DichotomizationMap {
    /// All `2^(m-1) - 1` splits of an `m`-valued content, in lexicographic order.
    pub fn all(system: &CCSystem, content: &ContentId) -> Result<Self, CorpusError> {
        let m = value_set(system, content)?.len();
        let mut splits: Vec<BTreeSet<usize>> = (0u64..(1u64 << (m - 1)) - 1)
            .map(|mask| std::iter::once(0).chain((1..m).filter(|v| mask >> (v - 1) & 1 == 1)).collect())
            .collect();
        splits.sort_by(|a, b| a.iter().cmp(b.iter()));
        Ok(DichotomizationMap { content: content.clone(), splits })
    }

    /// Splits given by value labels; either side of a split may be listed.
    pub fn from_labels(system: &CCSystem, content: &ContentId, splits: &[Vec<String>]) -> Result<Self, CorpusError> {
        let vs = value_set(system, content)?;
        let m = vs.len();
        let mut out: Vec<BTreeSet<usize>> = Vec::new();
        for split in splits {
            let mut side = BTreeSet::new();
            for label in split {
                let v = vs
                    .index_of(label)
                    .ok_or_else(|| CorpusError::InvalidSplit(format!("{content} has no value {label:?}")))?;
                side.insert(v);
            }
            if side.is_empty() || side.len() == m {
                return Err(CorpusError::InvalidSplit(format!("{{{}}} is not a proper nonempty subset", split.join(","))));
            }
            if !side.contains(&0) {
                side = (0..m).filter(|v| !side.contains(v)).collect();
            }
            if out.contains(&side) {
                return Err(CorpusError::InvalidSplit(format!("{{{}}} is listed twice", split.join(","))));
            }
            out.push(side);
        }
        if out.is_empty() {
            return Err(CorpusError::InvalidSplit("no splits given".into()));
        }
        Ok(DichotomizationMap { content: content.clone(), splits: out })
    }
}

fn value_set<'a>(system: &'a CCSystem, content: &ContentId) -> Result<&'a ValueSet, CorpusError> {
    system
        .value_set(content)
        .filter(|_| system.contents().contains(content))
        .ok_or_else(|| CorpusError::UnknownContent(content.clone()))
}

/// Replaces a content by jointly distributed binary indicators, one per split.
///
/// In every context measuring the content, its coordinate is replaced by the
/// indicators (value `"1"` when the original value is in the split), pushed
/// forward exactly. A binary content with the split `{first value}` is left
/// unchanged.
pub fn dichotomize(system: &CCSystem, map: &DichotomizationMap) -> Result<CCSystem, CorpusError> {
    let q = &map.content;
    let vs = value_set(system, q)?;
    let m = vs.len();
    for split in &map.splits {
        if split.is_empty() || split.len() >= m || split.iter().any(|&v| v >= m) {
            return Err(CorpusError::InvalidSplit(format!("{split:?} is not a proper subset of {m} values")));
        }
    }
    if m == 2 && map.splits.len() == 1 && map.splits[0] == BTreeSet::from([0]) {
        return Ok(system.clone());
    }

    let names: Vec<ContentId> = map
        .splits
        .iter()
        .map(|s| ContentId::new(format!("{q}:{{{}}}", s.iter().map(|&v| vs.label(v)).collect::<Vec<_>>().join(","))))
        .collect();
    if let Some(clash) = names.iter().find(|n| system.contents().contains(n)) {
        return Err(CorpusError::InvalidSplit(format!("new content {clash} already exists")));
    }
    let contents: Vec<ContentId> = system
        .contents()
        .iter()
        .flat_map(|c| if c == q { names.clone() } else { vec![c.clone()] })
        .collect();
    let mut value_sets: BTreeMap<ContentId, ValueSet> = system.value_sets().clone();
    value_sets.remove(q);
    for n in &names {
        value_sets.insert(n.clone(), ValueSet::binary());
    }

    let bunches = system
        .bunches()
        .iter()
        .map(|b| {
            let Some(pos) = b.position(q) else {
                return b.clone();
            };
            let mut contents = b.contents[..pos].to_vec();
            contents.extend(names.iter().cloned());
            contents.extend_from_slice(&b.contents[pos + 1..]);
            let mut shape = b.dist.shape()[..pos].to_vec();
            shape.extend(std::iter::repeat_n(2, names.len()));
            shape.extend_from_slice(&b.dist.shape()[pos + 1..]);
            let dist = b.dist.push_forward(shape, |o| {
                let mut out: Outcome = o[..pos].to_vec();
                out.extend(map.splits.iter().map(|s| usize::from(!s.contains(&o[pos]))));
                out.extend_from_slice(&o[pos + 1..]);
                out
            });
            Bunch { context: b.context.clone(), contents, dist }
        })
        .collect();
    Ok(CCSystem::new(contents, value_sets, bunches)?)
}

/// Lumps values of one content in every context that measures it.
///
/// `lump` lists blocks of labels; unlisted values stay on their own. Each
/// block is named after its first value in value-set order and blocks are
/// ordered by that value.
pub fn coarse_grain(system: &CCSystem, content: &ContentId, lump: &[Vec<String>]) -> Result<CCSystem, CorpusError> {
    let vs = value_set(system, content)?;
    let m = vs.len();
    let mut block_of: Vec<Option<usize>> = vec![None; m];
    for (k, block) in lump.iter().enumerate() {
        if block.is_empty() {
            return Err(CorpusError::InvalidPartition("empty block".into()));
        }
        for label in block {
            let v = vs
                .index_of(label)
                .ok_or_else(|| CorpusError::InvalidPartition(format!("{content} has no value {label:?}")))?;
            if block_of[v].is_some() {
                return Err(CorpusError::InvalidPartition(format!("value {label:?} is in more than one block")));
            }
            block_of[v] = Some(k);
        }
    }
    // Representative (smallest member) of each value's block.
    let rep: Vec<usize> = (0..m)
        .map(|v| match block_of[v] {
            Some(k) => (0..m).find(|&u| block_of[u] == Some(k)).expect("v is a member"),
            None => v,
        })
        .collect();
    let reps: Vec<usize> = (0..m).filter(|&v| rep[v] == v).collect();
    let new_index: Vec<usize> = rep.iter().map(|r| reps.binary_search(r).expect("representative")).collect();
    let new_set = ValueSet::new(reps.iter().map(|&v| vs.label(v).to_string())).expect("labels stay distinct");

    let mut value_sets = system.value_sets().clone();
    value_sets.insert(content.clone(), new_set);
    let bunches = system
        .bunches()
        .iter()
        .map(|b| {
            let Some(pos) = b.position(content) else {
                return b.clone();
            };
            let mut shape = b.dist.shape().to_vec();
            shape[pos] = reps.len();
            let dist = b.dist.push_forward(shape, |o| {
                let mut out = o.to_vec();
                out[pos] = new_index[o[pos]];
                out
            });
            Bunch { context: b.context.clone(), contents: b.contents.clone(), dist }
        })
        .collect();
    Ok(CCSystem::new(system.contents().to_vec(), value_sets, bunches)?)
}
