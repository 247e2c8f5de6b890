//! Check/suite records shared by the verification suites and the CLI.

use serde::{Deserialize, Serialize};

/// A single named check: an observed value, the bound it was held against,
/// and the slack (bound - observed for upper bounds, observed - bound for
/// lower bounds). Informational entries carry no bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
}

impl Check {
    /// observed <= bound.
    pub fn le(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: observed <= bound,
            observed,
            bound: Some(bound),
            slack: Some(bound - observed),
        }
    }

    /// observed >= bound.
    pub fn ge(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: observed >= bound,
            observed,
            bound: Some(bound),
            slack: Some(observed - bound),
        }
    }

    /// A yes/no check; observed is 1.0 / 0.0.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            passed: ok,
            observed: if ok { 1.0 } else { 0.0 },
            bound: None,
            slack: None,
        }
    }

    /// Informational record that never fails.
    pub fn info(name: impl Into<String>, observed: f64) -> Self {
        Self {
            name: name.into(),
            passed: true,
            observed,
            bound: None,
            slack: None,
        }
    }
}

/// A named bundle of checks. `passed` is maintained as the conjunction of
/// the member checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Suite {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Suite {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: true,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}
