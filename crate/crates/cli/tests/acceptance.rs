//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs with `harness = false`. The process fails when a criterion outside
//! `KNOWN_RED` fails, or when a `KNOWN_RED` criterion starts passing.

use std::process::ExitCode;

use opalg_cli::config::{SuiteConfig, SuiteName};
use opalg_cli::report::{CheckRecord, SuiteReport};
use opalg_cli::{run, RunOutput};

/// Criteria that fail on the scenario as stated. The J = 12 window is too
/// narrow for the witnesses: the j = -2 block of `V^n F` decays like
/// 2^(4-n), so both defects stay above 1e-3 until N = 12 > J - k, and the
/// cosine search needs J >= 2N + k = 26. The default config uses J = 26.
const KNOWN_RED: &[&str] = &["dynamics-j12"];

const RTOL: f64 = 1e-9;

struct Outcome {
    name: &'static str,
    failures: Vec<String>,
    detail: String,
}

impl Outcome {
    fn new(name: &'static str) -> Self {
        Self { name, failures: Vec::new(), detail: String::new() }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

fn exec(cfg: &SuiteConfig) -> RunOutput {
    match run(cfg, 1.0) {
        Ok(o) => o,
        Err(errs) => panic!("config rejected: {errs:?}"),
    }
}

fn only(suite: SuiteName) -> SuiteConfig {
    SuiteConfig { suites: vec![suite], ..SuiteConfig::default() }
}

fn with_prefix<'a>(r: &'a SuiteReport, prefix: &str) -> Vec<&'a CheckRecord> {
    r.checks().filter(|c| c.name.starts_with(prefix)).collect()
}

fn f(c: &CheckRecord, key: &str) -> f64 {
    c.measured.get(key).and_then(|v| v.as_f64()).unwrap_or(f64::NAN)
}

fn b(c: &CheckRecord, key: &str) -> bool {
    c.measured.get(key).and_then(|v| v.as_bool()).unwrap_or(false)
}

fn u(c: &CheckRecord, key: &str) -> u64 {
    c.measured.get(key).and_then(|v| v.as_u64()).unwrap_or(0)
}

fn get<'a>(o: &mut Outcome, r: &'a SuiteReport, name: &str) -> Option<&'a CheckRecord> {
    let c = r.check(name);
    o.require(c.is_some(), format!("{name} missing"));
    c
}

fn schwarz(out: &RunOutput) -> Outcome {
    let mut o = Outcome::new("schwarz");
    let checks = with_prefix(&out.report, "inequalities/schwarz/");
    o.require(!checks.is_empty(), "no Schwarz checks");
    let mut pairs = 0;
    let mut commutative = 0;
    for c in &checks {
        pairs += u(c, "pairs");
        o.require(c.pass, format!("{} failed", c.name));
        o.require(f(c, "min_rel_slack_constant_2") >= -RTOL, format!("{} constant 2 slack", c.name));
        o.require(u(c, "positivity_failures") == 0, format!("{} positivity", c.name));
        if b(c, "commutative") {
            commutative += 1;
            o.require(f(c, "min_rel_slack_constant_1") >= -RTOL, format!("{} constant 1 slack", c.name));
        }
    }
    o.require(pairs >= 10_000, format!("only {pairs} pairs"));
    o.require(commutative > 0, "no commutative codomain exercised");
    let ms: f64 = out
        .timing
        .checks_ms
        .iter()
        .filter(|(k, _)| k.starts_with("inequalities/schwarz/"))
        .map(|(_, v)| v)
        .sum();
    o.require(ms < 5000.0, format!("runtime {ms:.0} ms"));
    o.detail = format!("{} forms, {pairs} pairs, {commutative} commutative, {ms:.0} ms", checks.len());
    o
}

fn quasi_norm(out: &RunOutput) -> Outcome {
    let mut o = Outcome::new("quasi-norm");
    let checks = with_prefix(&out.report, "inequalities/quasi-norm/");
    o.require(!checks.is_empty(), "no quasi-norm checks");
    let mut worst_h = 0.0f64;
    for c in &checks {
        o.require(c.pass, format!("{} failed", c.name));
        o.require(u(c, "pairs") >= 10_000, format!("{} pairs", c.name));
        o.require(f(c, "min_rel_slack_sqrt2") >= -RTOL, format!("{} sqrt(2) slack", c.name));
        let h = f(c, "max_homogeneity_defect");
        o.require(h <= 1e-12, format!("{} homogeneity {h:e}", c.name));
        worst_h = worst_h.max(h);
    }
    o.detail = format!("{} forms, max homogeneity defect {worst_h:.1e}", checks.len());
    o
}

fn gns(out: &RunOutput) -> Outcome {
    let mut o = Outcome::new("gns");
    let r = &out.report;
    // W = diag(1, 0) on M_2 keeps the first column; W > 0 on M_6 keeps everything.
    for (fixture, dim) in [("m2", 2u64), ("schatten", 36)] {
        let p = format!("gns/{fixture}/");
        for c in with_prefix(r, &p) {
            o.require(c.pass, format!("{} failed", c.name));
        }
        if let Some(c) = get(&mut o, r, &format!("{p}quotient-dim")) {
            o.require(u(c, "quotient_dim") == dim, format!("{fixture} quotient dim {}", u(c, "quotient_dim")));
        }
        if let Some(c) = get(&mut o, r, &format!("{p}representation")) {
            for k in ["max_mult_defect", "max_core_mult_defect", "max_adjoint_defect"] {
                o.require(f(c, k) <= 1e-8, format!("{fixture} {k}"));
            }
        }
        if let Some(c) = get(&mut o, r, &format!("{p}epsilon-relations")) {
            o.require(f(c, "max_relation_defect") <= 1e-10, format!("{fixture} epsilon relations"));
        }
        for k in ["reconstruct-form", "reconstruct-linear-single", "reconstruct-linear-double"] {
            if let Some(c) = get(&mut o, r, &format!("{p}{k}")) {
                o.require(f(c, "max_top_defect") <= 1e-8, format!("{fixture} {k}"));
            }
        }
        if let Some(c) = get(&mut o, r, &format!("{p}double-limit")) {
            o.require(b(c, "tail_strictly_decreasing"), format!("{fixture} tail not strictly decreasing"));
        }
    }
    o.detail = format!("{} checks over m2 and schatten fixtures", with_prefix(r, "gns/m2/").len() + with_prefix(r, "gns/schatten/").len());
    o
}

fn norm_inequalities(out: &RunOutput) -> Outcome {
    let mut o = Outcome::new("norm-inequalities");
    let checks = with_prefix(&out.report, "inequalities/norm/");
    let operator = checks.iter().filter(|c| c.name.ends_with("/operator")).count();
    let schatten = checks.iter().filter(|c| c.name.contains("/schatten-")).count();
    o.require(operator > 0 && schatten > 0, "need operator and Schatten fixtures");
    for c in &checks {
        o.require(c.pass, format!("{} failed", c.name));
        o.require(u(c, "samples") >= 10_000, format!("{} samples", c.name));
        o.require(f(c, "min_rel_slack_constant_4") >= -RTOL, format!("{} constant 4", c.name));
        o.require(f(c, "min_rel_slack_constant_1") >= -RTOL, format!("{} constant 1", c.name));
        o.require(f(c, "max_star_defect") <= 1e-9, format!("{} star defect", c.name));
    }
    o.detail = format!("{operator} operator-norm and {schatten} Schatten fixtures");
    o
}

fn projectors(out: &RunOutput) -> Outcome {
    let mut o = Outcome::new("projectors");
    let r = &out.report;
    if let Some(c) = get(&mut o, r, "catalog/projectors") {
        o.require(c.pass, "random trials failed");
        o.require(u(c, "trials") == 100, format!("{} trials", u(c, "trials")));
        let trials = u(c, "trials");
        o.require(u(c, "monotone") == trials, "residuals not monotone in every trial");
        o.require(u(c, "final_within_bound") == trials, "final residual above bound");
    }
    if let Some(c) = get(&mut o, r, "catalog/projector-table") {
        o.require(c.pass, "diagonal table failed");
        o.require(f(c, "max_defect") <= 1e-12, format!("table defect {:e}", f(c, "max_defect")));
        let ranks = c.measured.get("ranks").cloned().unwrap_or_default();
        o.require(ranks == serde_json::json!([1, 2, 3]), format!("ranks {ranks}"));
    }
    o.detail = "100 random PSD W at n = 20, diagonal table".to_string();
    o
}

fn kernel(out: &RunOutput) -> Outcome {
    let mut o = Outcome::new("kernel");
    let r = &out.report;
    let mut detail = Vec::new();
    if let Some(c) = get(&mut o, r, "catalog/kernel-linear") {
        let d = f(c, "max_defect");
        o.require(c.pass && d <= 1e-6, format!("linear fixture defect {d:e}"));
        detail.push(format!("x/2 defect {d:.1e}"));
    }
    if let Some(c) = get(&mut o, r, "catalog/kernel-derivative") {
        let s = f(c, "richardson_slope");
        o.require(c.pass && (s - 2.0).abs() <= 0.2, format!("Richardson slope {s}"));
        detail.push(format!("Richardson slope {s:.3}"));
    }
    o.detail = detail.join(", ");
    o
}

fn dynamics_j12() -> Outcome {
    let mut o = Outcome::new("dynamics-j12");
    let mut cfg = only(SuiteName::Dynamics);
    cfg.dynamics.half_width = 12;
    cfg.dynamics.block_dim = 2;
    cfg.dynamics.support_radius = 2;
    cfg.dynamics.delta = 1e-3;
    let out = exec(&cfg);
    let r = &out.report;
    let j = 12u64;
    let delta = 1e-3;
    if let Some(c) = get(&mut o, r, "dynamics/power-formulas") {
        o.require(f(c, "max_defect") <= 1e-12, format!("power formulas {:e}", f(c, "max_defect")));
    }
    if let Some(c) = get(&mut o, r, "dynamics/power-decay") {
        o.require(b(c, "within_bound"), "decay bound violated");
    }
    let witness = |name: &str, reach: fn(u64) -> u64, o: &mut Outcome| {
        let Some(c) = get(o, r, &format!("dynamics/{name}")) else { return };
        if let Some(e) = c.measured.get("error") {
            o.require(false, format!("{name}: {}", e.as_str().unwrap_or_default()));
            return;
        }
        let n = u(c, "n_found");
        let (d1, d2) = (f(c, "defect_first"), f(c, "defect_second"));
        o.require(d1 < delta && d2 < delta, format!("{name}: defects {d1:.2e}, {d2:.2e} at N = {n}"));
        o.require(reach(n) <= j, format!("{name}: N = {n} outside window"));
        let s = f(c, "fitted_slope");
        o.require((s + 1.0).abs() <= 0.01, format!("{name}: slope {s}"));
    };
    witness("transitivity-witness", |n| n + 2, &mut o);
    witness("cosine-witness", |n| 2 * n + 2, &mut o);
    if let Some(c) = r.check("dynamics/transitivity-witness") {
        o.require(u(c, "n_found") <= 10, format!("transitivity N = {} > 10", u(c, "n_found")));
    }
    let ms = out.timing.suites_ms.get("dynamics").copied().unwrap_or(f64::INFINITY);
    o.require(ms < 10_000.0, format!("runtime {ms:.0} ms"));
    o.detail = format!("J = 12, d = 2, k = 2, delta = 1e-3, {ms:.0} ms");
    o
}

fn full_run() -> Outcome {
    let mut o = Outcome::new("full-run");
    let cfg = SuiteConfig::default();
    let first = exec(&cfg);
    let second = exec(&cfg);
    let s = &first.report.summary;
    o.require(first.report.all_pass(), format!("failing: {:?}", s.failing));
    let ms = first.timing.total_ms.max(second.timing.total_ms);
    o.require(ms < 60_000.0, format!("runtime {ms:.0} ms"));
    o.require(first.report.to_json() == second.report.to_json(), "report.json differs between runs");
    let dirs = [tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir")];
    first.write(dirs[0].path()).expect("write");
    second.write(dirs[1].path()).expect("write");
    for file in ["report.json", "decay.csv", "residuals.csv"] {
        let a = std::fs::read(dirs[0].path().join(file)).unwrap_or_default();
        let b = std::fs::read(dirs[1].path().join(file)).unwrap_or_default();
        o.require(!a.is_empty() && a == b, format!("{file} not byte-identical"));
    }
    o.detail = format!("{} checks, {} passed, slowest run {ms:.0} ms", s.total, s.passed);
    o
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let ineq = exec(&only(SuiteName::Inequalities));
    let gns_out = exec(&only(SuiteName::Gns));
    let cat = exec(&only(SuiteName::Catalog));
    let outcomes = [
        schwarz(&ineq),
        quasi_norm(&ineq),
        gns(&gns_out),
        norm_inequalities(&ineq),
        projectors(&cat),
        kernel(&cat),
        dynamics_j12(),
        full_run(),
    ];

    let mut ok = true;
    for o in &outcomes {
        let red = KNOWN_RED.contains(&o.name);
        if o.pass() {
            println!("PASS {}: {}", o.name, o.detail);
            if red {
                println!("  now passes; drop it from KNOWN_RED");
                ok = false;
            }
        } else {
            println!("FAIL {}: {}{}", o.name, o.detail, if red { " (known red)" } else { "" });
            for f in &o.failures {
                println!("  {f}");
            }
            ok &= red;
        }
    }
    let passed = outcomes.iter().filter(|o| o.pass()).count();
    println!("{passed}/{} criteria pass", outcomes.len());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
