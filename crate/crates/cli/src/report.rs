//! Check records, the suite report and its files.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const RNG_NAME: &str = "ChaCha8Rng";

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// The property checked, written as a formula.
    pub anchor: String,
    /// SHA-256 of the check's inputs (parameters, seed, stream).
    pub inputs_digest: String,
    pub measured: Value,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn digest(v: &Value) -> String {
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}

/// Collects the checks of one suite.
pub struct SuiteLog {
    pub name: String,
    seed: u64,
    stream: u64,
    pub checks: Vec<CheckRecord>,
    pub decay_rows: Vec<DecayCsvRow>,
    pub residual_rows: Vec<ResidualCsvRow>,
    /// Wall time per check, measured since the previous record.
    pub check_ms: Vec<(String, f64)>,
    mark: Instant,
}

impl SuiteLog {
    pub fn new(name: &str, seed: u64, stream: u64) -> Self {
        Self {
            name: name.to_string(),
            seed,
            stream,
            checks: Vec::new(),
            decay_rows: Vec::new(),
            residual_rows: Vec::new(),
            check_ms: Vec::new(),
            mark: Instant::now(),
        }
    }

    pub fn record(&mut self, name: &str, anchor: &str, inputs: Value, measured: Value, tolerance: f64, pass: bool) {
        let full = serde_json::json!({
            "check": format!("{}/{}", self.name, name),
            "inputs": inputs,
            "seed": self.seed,
            "stream": self.stream,
        });
        let now = Instant::now();
        self.check_ms.push((format!("{}/{}", self.name, name), (now - self.mark).as_secs_f64() * 1e3));
        self.mark = now;
        self.checks.push(CheckRecord {
            name: format!("{}/{}", self.name, name),
            anchor: anchor.to_string(),
            inputs_digest: digest(&full),
            measured,
            tolerance,
            pass,
        });
    }

    /// Records a check whose computation failed outright.
    pub fn record_error(&mut self, name: &str, anchor: &str, inputs: Value, tolerance: f64, err: impl std::fmt::Display) {
        self.record(name, anchor, inputs, serde_json::json!({ "error": err.to_string() }), tolerance, false);
    }

    pub fn residuals(&mut self, check: &str, trace: usize, values: &[f64]) {
        for (level, &r) in values.iter().enumerate() {
            self.residual_rows.push(ResidualCsvRow {
                suite: self.name.clone(),
                check: check.to_string(),
                trace,
                level: level + 1,
                residual: r,
            });
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayCsvRow {
    pub n: usize,
    pub forward_norm: f64,
    pub backward_norm: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualCsvRow {
    pub suite: String,
    pub check: String,
    pub trace: usize,
    pub level: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteSection {
    pub name: String,
    pub checks: Vec<CheckRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    /// `name: anchor` of every failing check.
    pub failing: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub tool: String,
    pub version: String,
    pub rng: String,
    pub seed: u64,
    pub rng_streams: BTreeMap<String, u64>,
    pub config_digest: String,
    pub suites: Vec<SuiteSection>,
    pub summary: Summary,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.suites.iter().flat_map(|s| &s.checks).find(|c| c.name == name)
    }

    pub fn checks(&self) -> impl Iterator<Item = &CheckRecord> {
        self.suites.iter().flat_map(|s| &s.checks)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub suites_ms: BTreeMap<String, f64>,
    pub checks_ms: BTreeMap<String, f64>,
    pub total_ms: f64,
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r).map_err(std::io::Error::other)?;
    }
    w.flush()
}
