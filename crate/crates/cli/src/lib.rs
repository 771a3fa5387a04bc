//! Batch runner for the verification suites.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod suites;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use config::SuiteConfig;
use report::{digest, write_csv, SuiteLog, SuiteReport, SuiteSection, Summary, Timing, RNG_NAME};

pub const TOOL: &str = "opalg";

/// A finished run: the deterministic report plus the data behind the CSV
/// tables and the wall-clock timings.
pub struct RunOutput {
    pub report: SuiteReport,
    pub logs: Vec<SuiteLog>,
    pub timing: Timing,
}

/// Validates `cfg` and runs its suites in parallel, with every tolerance
/// multiplied by `tol_scale`.
pub fn run(cfg: &SuiteConfig, tol_scale: f64) -> Result<RunOutput, Vec<String>> {
    let mut errs = cfg.validate();
    if !(tol_scale.is_finite() && tol_scale > 0.0) {
        errs.push(format!("--tol: must be a positive number, got {tol_scale}"));
    }
    if !errs.is_empty() {
        return Err(errs);
    }
    let tol = cfg.tolerances.scaled(tol_scale);
    let selected = cfg.selected();
    let start = Instant::now();
    let results: Vec<(SuiteLog, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = selected
            .iter()
            .map(|&suite| {
                let tol = &tol;
                s.spawn(move || {
                    let t = Instant::now();
                    let log = suites::run_suite(cfg, tol, suite);
                    (log, t.elapsed().as_secs_f64() * 1e3)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("suite thread panicked")).collect()
    });
    let total_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut suites_ms = BTreeMap::new();
    let mut checks_ms = BTreeMap::new();
    let mut logs = Vec::with_capacity(results.len());
    for (log, ms) in results {
        suites_ms.insert(log.name.clone(), ms);
        checks_ms.extend(log.check_ms.iter().cloned());
        logs.push(log);
    }
    logs.sort_by(|a, b| a.name.cmp(&b.name));

    let sections: Vec<SuiteSection> = logs
        .iter()
        .map(|l| SuiteSection { name: l.name.clone(), checks: l.checks.clone() })
        .collect();
    let all: Vec<_> = sections.iter().flat_map(|s| &s.checks).collect();
    let failing: Vec<String> = all.iter().filter(|c| !c.pass).map(|c| format!("{}: {}", c.name, c.anchor)).collect();
    let summary = Summary {
        total: all.len(),
        passed: all.len() - failing.len(),
        failed: failing.len(),
        failing,
    };
    let mut effective = cfg.clone();
    effective.tolerances = tol;
    let mut config_value = serde_json::to_value(&effective).expect("config serializes");
    if let Some(m) = config_value.as_object_mut() {
        m.remove("out");
    }
    let report = SuiteReport {
        tool: TOOL.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        rng: RNG_NAME.to_string(),
        seed: cfg.seed,
        rng_streams: selected.iter().map(|s| (s.as_str().to_string(), s.stream())).collect(),
        config_digest: digest(&config_value),
        suites: sections,
        summary,
    };
    Ok(RunOutput {
        report,
        logs,
        timing: Timing { suites_ms, checks_ms, total_ms },
    })
}

impl RunOutput {
    /// Writes `report.json`, `decay.csv`, `residuals.csv` and `timing.json`
    /// into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.report.to_json())?;
        let decay: Vec<_> = self.logs.iter().flat_map(|l| l.decay_rows.iter().cloned()).collect();
        if self.logs.iter().any(|l| l.name == "dynamics") {
            write_csv(&dir.join("decay.csv"), &decay)?;
        }
        let residuals: Vec<_> = self.logs.iter().flat_map(|l| l.residual_rows.iter().cloned()).collect();
        if !residuals.is_empty() {
            write_csv(&dir.join("residuals.csv"), &residuals)?;
        }
        let mut timing = serde_json::to_string_pretty(&self.timing).expect("timing serializes");
        timing.push('\n');
        std::fs::write(dir.join("timing.json"), timing)
    }
}
