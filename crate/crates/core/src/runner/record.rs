use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{CheckName, ExperimentConfig};
use crate::control::Direction;
use crate::talg::Element;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Refused,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Refused => "refused",
        }
    }

    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// A sample point, entries as `[re, im]` in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub label: String,
    pub value: f64,
    pub point: Vec<[f64; 2]>,
}

impl WitnessRecord {
    pub fn new(label: impl Into<String>, value: f64, x: &Element) -> Self {
        WitnessRecord {
            label: label.into(),
            value,
            point: x.as_slice().iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: CheckName,
    pub verdict: Verdict,
    pub max: Option<f64>,
    pub median: Option<f64>,
    pub witness: Option<WitnessRecord>,
    pub metrics: BTreeMap<String, f64>,
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn new(name: CheckName, verdict: Verdict) -> Self {
        CheckRecord {
            name,
            verdict,
            max: None,
            median: None,
            witness: None,
            metrics: BTreeMap::new(),
            note: None,
        }
    }

    pub fn refused(name: CheckName, why: impl Into<String>) -> Self {
        CheckRecord {
            note: Some(why.into()),
            ..CheckRecord::new(name, Verdict::Refused)
        }
    }

    pub fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    /// Sets `max` and `median` from a sample of residuals.
    pub fn stats(mut self, values: &[f64]) -> Self {
        self.max = values.iter().copied().reduce(f64::max);
        self.median = median(values);
        self
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub direction: Direction,
    pub seed_chain: BTreeMap<String, u64>,
    pub n_star: Option<usize>,
    /// `φ̃(x, x, 0)` at `‖x‖ = 1`.
    pub bound: Option<f64>,
    pub max_fh_gap: Option<f64>,
    pub checks: Vec<CheckRecord>,
    pub verdict: Verdict,
    /// The only field allowed to differ between identical runs.
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn check(&self, name: CheckName) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }
}
