use std::fmt;

use kottler::profile::round_sig15;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Verdict {
    /// Pass iff `|value − expected| ≤ tolerance`, judged on the values as
    /// they will be printed so the status recomputes from the output.
    pub fn within(check: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        let (value, expected, tolerance) = (round_sig15(value), round_sig15(expected), round_sig15(tolerance));
        let ok = (value - expected).abs() <= tolerance;
        Verdict {
            check: check.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            value: Some(value),
            expected: Some(expected),
            tolerance: Some(tolerance),
            detail: None,
        }
    }

    /// Bound on a non-negative quantity, `0 ≤ value ≤ bound`.
    pub fn at_most(check: impl Into<String>, value: f64, bound: f64) -> Self {
        Verdict::within(check, value, 0.0, bound)
    }

    pub fn holds(check: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Verdict {
            check: check.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            value: None,
            expected: None,
            tolerance: None,
            detail: Some(detail.into()),
        }
    }

    pub fn error(check: impl Into<String>, detail: impl Into<String>) -> Self {
        Verdict {
            check: check.into(),
            status: Status::Error,
            value: None,
            expected: None,
            tolerance: None,
            detail: Some(detail.into()),
        }
    }

    pub fn prefixed(mut self, prefix: &str) -> Self {
        self.check = format!("{prefix}.{}", self.check);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub run_id: String,
    pub config: Value,
    pub result: Value,
    pub verdicts: Vec<Verdict>,
}

impl Report {
    pub fn new(config: Value, result: Value, verdicts: Vec<Verdict>) -> Self {
        let config = round_floats(config);
        Report {
            run_id: run_id(&config),
            config,
            result: round_floats(result),
            verdicts,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.status == Status::Pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// First 16 hex digits of the SHA-256 of the compact config JSON.
pub fn run_id(config: &Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    hex::encode(digest)[..16].to_string()
}

/// Rounds every float in a JSON tree to 15 significant digits.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(num) if num.is_f64() => num
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig15(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(round_floats).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}
