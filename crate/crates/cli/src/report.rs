//! Machine-readable results: `report.json` and `ratefit_*.json`.

use std::fs;
use std::path::Path;

use nonlocal_aggregation::diagnostics::LpExponent;
use serde::Serialize;

use crate::config::Scenario;
use crate::error::CliError;

/// Statement a check verifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Claim {
    #[serde(rename = "thm2.1")]
    Decay,
    #[serde(rename = "thm2.4")]
    RarefactionRate,
    #[serde(rename = "thm2.5")]
    InviscidLimit,
    #[serde(rename = "cor2.6")]
    SelfSimilarLimit,
    #[serde(rename = "lemma3.1")]
    SignIdentity,
    #[serde(rename = "lemma3.2")]
    ViscousProfile,
    #[serde(rename = "lemma3.4")]
    LogBound,
}

impl Claim {
    pub fn tag(self) -> &'static str {
        match self {
            Claim::Decay => "thm2.1",
            Claim::RarefactionRate => "thm2.4",
            Claim::InviscidLimit => "thm2.5",
            Claim::SelfSimilarLimit => "cor2.6",
            Claim::SignIdentity => "lemma3.1",
            Claim::ViscousProfile => "lemma3.2",
            Claim::LogBound => "lemma3.4",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub claim: Claim,
    pub pass: bool,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `"<= 1.05"`.
    pub threshold: String,
}

impl Check {
    pub fn at_most(name: impl Into<String>, claim: Claim, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            claim,
            pass: value <= limit,
            value,
            threshold: format!("<= {limit}"),
        }
    }

    pub fn at_least(name: impl Into<String>, claim: Claim, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            claim,
            pass: value >= limit,
            value,
            threshold: format!(">= {limit}"),
        }
    }

    pub fn below(name: impl Into<String>, claim: Claim, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            claim,
            pass: value < limit,
            value,
            threshold: format!("< {limit}"),
        }
    }

    pub fn within(name: impl Into<String>, claim: Claim, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            claim,
            pass: value >= lo && value <= hi,
            value,
            threshold: format!("in [{lo}, {hi}]"),
        }
    }

    pub fn status(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: Scenario,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(scenario: Scenario, seed: u64, checks: Vec<Check>) -> Self {
        Self {
            scenario,
            seed,
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub p: LpExponent,
    pub slope: f64,
    pub window: [f64; 2],
    pub pass: bool,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serialises");
    text.push('\n');
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
