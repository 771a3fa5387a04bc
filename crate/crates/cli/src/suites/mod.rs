//! The verification suites. Each suite draws from its own ChaCha stream and
//! appends check records to a [`SuiteLog`].

pub mod catalog;
pub mod dynamics;
pub mod gns;
pub mod inequalities;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::config::{SuiteConfig, SuiteName, Tolerances};
use crate::report::SuiteLog;

pub fn suite_rng(seed: u64, suite: SuiteName) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(suite.stream());
    rng
}

pub fn run_suite(cfg: &SuiteConfig, tol: &Tolerances, suite: SuiteName) -> SuiteLog {
    let mut log = SuiteLog::new(suite.as_str(), cfg.seed, suite.stream());
    let mut rng = suite_rng(cfg.seed, suite);
    match suite {
        SuiteName::Inequalities => inequalities::run(&cfg.inequalities, tol, &mut log, &mut rng),
        SuiteName::Gns => gns::run(&cfg.gns, tol, &mut log, &mut rng),
        SuiteName::Catalog => catalog::run(&cfg.catalog, tol, &mut log, &mut rng),
        SuiteName::Dynamics => dynamics::run(&cfg.dynamics, tol, &mut log, &mut rng),
        SuiteName::All => unreachable!("expanded by the caller"),
    }
    log
}

/// `(rhs - lhs) / max(lhs, rhs)`, in `[-1, 1]`; zero when both vanish.
pub fn rel_slack(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.max(rhs);
    if scale <= 1e-300 {
        0.0
    } else {
        (rhs - lhs) / scale
    }
}

/// Finite numbers as JSON numbers, anything else as a string.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::from(format!("{x}"))
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}
