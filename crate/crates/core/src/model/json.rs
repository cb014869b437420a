//! The JSON document format for systems.
//!
//! ```json
//! {
//!   "contents": ["q1", "q2"],
//!   "value_sets": {"q1": ["1", "2"], "q2": ["1", "2"]},
//!   "contexts": [
//!     {"id": "c1", "cells": ["q1", "q2"],
//!      "distribution": [{"outcome": {"q1": "1", "q2": "1"}, "p": "1/2"},
//!                       {"outcome": {"q1": "2", "q2": "2"}, "p": "0.5"}]}
//!   ]
//! }
//! ```
//!
//! Output is canonical: object keys sorted, contents and contexts in system
//! order, outcomes in canonical order, masses as reduced `p/q` strings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{CCSystem, Distribution, ValueSet};
use crate::rational::{format_rational, parse_rational, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSystem {
    pub contents: Vec<String>,
    pub value_sets: BTreeMap<String, Vec<RawLabel>>,
    pub contexts: Vec<RawContext>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawContext {
    pub id: String,
    pub cells: Vec<String>,
    pub distribution: Vec<RawEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEntry {
    pub outcome: BTreeMap<String, RawLabel>,
    pub p: RawMass,
}

/// Value labels may be written as strings or integers; both become strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawLabel {
    Int(i64),
    Str(String),
}

impl RawLabel {
    pub fn to_label(&self) -> String {
        match self {
            RawLabel::Int(i) => i.to_string(),
            RawLabel::Str(s) => s.clone(),
        }
    }
}

/// A probability mass: a rational or decimal string, or a bare JSON number
/// (read through its shortest decimal spelling).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawMass {
    Str(String),
    Num(serde_json::Number),
}

impl RawMass {
    pub fn parse(&self) -> Result<Rational, String> {
        let text = match self {
            RawMass::Str(s) => s.clone(),
            RawMass::Num(n) => n.to_string(),
        };
        parse_rational(&text).map_err(|_| text)
    }
}

/// `{"exact": "p/q", "~decimal": f}` pair used in reports.
pub fn rational_json(value: &Rational) -> Value {
    json!({ "exact": format_rational(value), "~decimal": to_f64(value) })
}

/// Distribution entries with labeled outcomes, zero masses omitted.
pub fn distribution_json(keys: &[String], value_sets: &[&ValueSet], dist: &Distribution) -> Value {
    let entries = dist
        .iter()
        .map(|(outcome, p)| {
            let mut o = Map::new();
            for ((key, vs), v) in keys.iter().zip(value_sets).zip(outcome) {
                o.insert(key.clone(), Value::String(vs.label(*v).to_string()));
            }
            json!({ "outcome": o, "p": format_rational(p) })
        })
        .collect();
    Value::Array(entries)
}

impl CCSystem {
    pub fn to_raw(&self) -> RawSystem {
        RawSystem {
            contents: self.contents.iter().map(|q| q.0.clone()).collect(),
            value_sets: self
                .value_sets
                .iter()
                .map(|(q, vs)| (q.0.clone(), vs.labels().iter().cloned().map(RawLabel::Str).collect()))
                .collect(),
            contexts: self
                .bunches
                .iter()
                .map(|b| RawContext {
                    id: b.context.0.clone(),
                    cells: b.contents.iter().map(|q| q.0.clone()).collect(),
                    distribution: b
                        .dist
                        .iter()
                        .map(|(o, p)| RawEntry {
                            outcome: b
                                .contents
                                .iter()
                                .zip(o)
                                .map(|(q, v)| (q.0.clone(), RawLabel::Str(self.value_sets[q].label(*v).into())))
                                .collect(),
                            p: RawMass::Str(format_rational(p)),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Canonical JSON value of the system.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self.to_raw()).expect("raw systems always serialize")
    }

    /// Canonical pretty-printed JSON text, stable byte for byte.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("values always serialize");
        s.push('\n');
        s
    }
}
