use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Bumped on any change to the report layout.
pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl Assertion {
    /// `|value − expected| ≤ tolerance`.
    pub fn near(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: (value - expected).abs() <= tolerance,
            value,
            expected,
            tolerance,
        }
    }

    /// `value ≤ bound`, reported with expected 0.
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= bound,
            value,
            expected: 0.0,
            tolerance: bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub config_echo: Value,
    pub results: Value,
    pub assertions: Vec<Assertion>,
}

impl Report {
    pub fn new(config_echo: Value, results: Value, assertions: Vec<Assertion>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_owned(),
            config_echo,
            results,
            assertions,
        }
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        self.assertions
            .iter()
            .map(|a| {
                format!(
                    "{} {}: {:.12e} (expected {:.12e}, tolerance {:.1e})",
                    if a.passed { "PASS" } else { "FAIL" },
                    a.name,
                    a.value,
                    a.expected,
                    a.tolerance
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}
