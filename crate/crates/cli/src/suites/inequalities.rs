//! Schwarz and quasi-triangle inequalities over the catalog, and the norm
//! inequalities for trace functionals.

use opalg::catalog::standard_catalog;
use opalg::cstar::{CStarValue, Codomain, MapKind, PositiveMap};
use opalg::gns::{check_norm_inequality, map_norm, DomainNorm, NormMethod};
use opalg::linalg::{ComplexMatrix, HermitianMatrix};
use opalg::models::{random_matrix, SchattenModel};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{num, rel_slack};
use crate::config::{InequalitiesConfig, Tolerances, TraceFixture};
use crate::report::SuiteLog;

const SCHWARZ: &str = "||S(a,b)|| <= 2 ||S(a,a)||^(1/2) ||S(b,b)||^(1/2); constant 1 for commutative C";
const TRIANGLE: &str = "||a+b||_S <= sqrt(2) (||a||_S + ||b||_S); ||l a||_S = |l| ||a||_S";
const NORMS: &str =
    "||omega(a)||^2 <= 4 ||omega|| ||omega(a*a)||; constant 1 for commutative C; ||omega(a*)|| = ||omega(a)||";

pub fn run(cfg: &InequalitiesConfig, tol: &Tolerances, log: &mut SuiteLog, rng: &mut ChaCha8Rng) {
    let inputs = json!({ "pairs_per_form": cfg.pairs_per_form, "catalog": cfg.catalog });
    let cat = match standard_catalog::<f64>(&cfg.catalog) {
        Ok(c) => c,
        Err(e) => {
            log.record_error("schwarz", SCHWARZ, inputs.clone(), tol.inequality_rtol, &e);
            log.record_error("quasi-norm", TRIANGLE, inputs, tol.inequality_rtol, e);
            return;
        }
    };
    for probe in &cat.forms {
        let name = probe.name();
        let comm = probe.commutative();
        let mut slack_general = f64::INFINITY;
        let mut slack_cs = f64::INFINITY;
        let mut not_positive = 0usize;
        for _ in 0..cfg.pairs_per_form {
            let s = probe.schwarz(rng, tol.inequality_rtol);
            slack_general = slack_general.min(rel_slack(s.lhs, s.rhs_general));
            if comm {
                slack_cs = slack_cs.min(rel_slack(s.lhs, s.rhs_cs));
            }
            if !probe.positivity(rng) {
                not_positive += 1;
            }
        }
        let pass = slack_general >= -tol.inequality_rtol
            && (!comm || slack_cs >= -tol.inequality_rtol)
            && not_positive == 0;
        log.record(
            &format!("schwarz/{name}"),
            SCHWARZ,
            json!({ "form": name, "pairs": cfg.pairs_per_form, "catalog": cfg.catalog }),
            json!({
                "pairs": cfg.pairs_per_form,
                "commutative": comm,
                "min_rel_slack_constant_2": num(slack_general),
                "min_rel_slack_constant_1": if comm { num(slack_cs) } else { serde_json::Value::Null },
                "positivity_failures": not_positive,
            }),
            tol.inequality_rtol,
            pass,
        );

        let mut slack_quasi = f64::INFINITY;
        let mut slack_plain = f64::INFINITY;
        let mut homog = 0.0f64;
        for _ in 0..cfg.pairs_per_form {
            let t = probe.triangle(rng, tol.inequality_rtol);
            slack_quasi = slack_quasi.min(rel_slack(t.lhs, t.rhs_quasi));
            slack_plain = slack_plain.min(rel_slack(t.lhs, t.rhs_plain));
            homog = homog.max(probe.homogeneity(rng));
        }
        log.record(
            &format!("quasi-norm/{name}"),
            TRIANGLE,
            json!({ "form": name, "pairs": cfg.pairs_per_form, "catalog": cfg.catalog }),
            json!({
                "pairs": cfg.pairs_per_form,
                "min_rel_slack_sqrt2": num(slack_quasi),
                "min_rel_slack_plain": num(slack_plain),
                "max_homogeneity_defect": num(homog),
                "homogeneity_tolerance": tol.homogeneity,
            }),
            tol.inequality_rtol,
            slack_quasi >= -tol.inequality_rtol && homog <= tol.homogeneity,
        );
    }
    for (i, fx) in cfg.norm_fixtures.iter().enumerate() {
        norm_fixture(i, fx, cfg.norm_samples, tol, log, rng);
    }
}

fn norm_fixture(i: usize, fx: &TraceFixture, samples: usize, tol: &Tolerances, log: &mut SuiteLog, rng: &mut ChaCha8Rng) {
    let n = fx.weights.len();
    let domain = match fx.schatten_p {
        None => DomainNorm::Operator,
        Some(p) => DomainNorm::Schatten(p),
    };
    let label = match fx.schatten_p {
        None => format!("norm/{i}/operator"),
        Some(p) => format!("norm/{i}/schatten-{p}"),
    };
    let inputs = json!({ "weights": fx.weights, "schatten_p": fx.schatten_p, "samples": samples });
    let wh = HermitianMatrix::from_real_diag(&fx.weights);
    let wm = wh.as_matrix().clone();
    let omega = PositiveMap::new("tr(.W)", Codomain::Scalar, move |a: &ComplexMatrix<f64>| {
        CStarValue::Scalar(a.trace_product(&wm))
    })
    .with_kind(MapKind::TraceWeighted(wh));
    let model = match SchattenModel::new(n, fx.schatten_p.unwrap_or(2.0)) {
        Ok(m) => m,
        Err(e) => return log.record_error(&label, NORMS, inputs, tol.inequality_rtol, e),
    };
    let norm = match map_norm(&omega, domain, NormMethod::ExactFormula, rng) {
        Ok(v) => v,
        Err(e) => return log.record_error(&label, NORMS, inputs, tol.inequality_rtol, e),
    };
    let panel: Vec<ComplexMatrix<f64>> = (0..samples).map(|_| random_matrix(rng, n, n)).collect();
    let r = check_norm_inequality(&model, &omega, norm, true, &panel, tol.inequality_rtol);
    let pass = r.holds_4 && r.holds_1 == Some(true) && r.star_ok;
    log.record(
        &label,
        NORMS,
        inputs,
        json!({
            "norm": num(r.norm.value),
            "norm_kind": r.norm.kind,
            "cstar_domain": r.cstar_domain,
            "samples": r.samples,
            "min_rel_slack_constant_4": num(r.min_rel_slack_4),
            "min_rel_slack_constant_1": r.min_rel_slack_1.map(num),
            "max_star_defect": num(r.max_star_defect),
        }),
        tol.inequality_rtol,
        pass,
    );
}
