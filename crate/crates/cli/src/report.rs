use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    /// 0 pass, 1 fail, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Inconclusive => 2,
        }
    }
}

/// One asserted check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, status: Status, detail: impl Into<String>) -> Self {
        Self { name: name.into(), status, value: None, threshold: None, detail: detail.into() }
    }

    /// Passes when `value ≤ threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            status: Status::from_bool(value <= threshold),
            value: Some(value),
            threshold: Some(threshold),
            detail: format!("{value} ≤ {threshold}"),
        }
    }

    /// Passes when `value ≥ threshold`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            status: Status::from_bool(value >= threshold),
            value: Some(value),
            threshold: Some(threshold),
            detail: format!("{value} ≥ {threshold}"),
        }
    }
}

/// What an experiment hands back to the runner.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn metric(&mut self, key: impl Into<String>, value: impl Serialize) {
        self.metrics.insert(key.into(), serde_json::to_value(value).expect("metrics serialize"));
    }

    /// Worst status; a run with no checks passes.
    pub fn status(&self) -> Status {
        self.checks.iter().map(|c| c.status).max().unwrap_or(Status::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<String>,
    pub config_hash: String,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub timestamp: String,
    pub status: Status,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
    /// Files written next to the summary, sorted.
    pub artifacts: Vec<String>,
}
