//! The one report shape shared by every command.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Bumped on any change to the JSON shape.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
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
}

/// An exact residual rendered as text, or a measured number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Residual {
    Exact(String),
    Numeric(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub residual: Residual,
    pub details: Map<String, Value>,
}

impl Check {
    pub fn exact(name: impl Into<String>, residual: impl ToString, ok: bool) -> Self {
        Check {
            name: name.into(),
            status: Status::from_bool(ok),
            residual: Residual::Exact(residual.to_string()),
            details: Map::new(),
        }
    }

    /// Passes iff `value` is finite and `ok`.
    pub fn numeric(name: impl Into<String>, value: f64, ok: bool) -> Self {
        Check {
            name: name.into(),
            status: Status::from_bool(ok && value.is_finite()),
            residual: Residual::Numeric(if value.is_finite() { value } else { f64::MAX }),
            details: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelInfo {
    pub dof: usize,
    /// As written in the config.
    pub hamiltonian: String,
    /// Canonical form of the parsed polynomial.
    pub canonical: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub model: ModelInfo,
    pub checks: Vec<Check>,
    pub elapsed_ms: u64,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}
