//! GNS fixtures on matrix models and approximate-identity residuals.

use opalg::catalog::weighted_form;
use opalg::cstar::{CStarValue, Codomain, MapKind, PositiveMap};
use opalg::gns::{
    build_gns, check_positive_decomposition, reconstruct_form, reconstruct_linear, verify_epsilon_relations,
    verify_representation, LimitMode,
};
use opalg::linalg::{operator_norm, ComplexMatrix, HermitianMatrix};
use opalg::models::{check_approximate_identity, AlgebraModel, GridL2Model, ResidualMode, SchattenModel};
use opalg::C;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{num, nums};
use crate::config::{GnsConfig, Tolerances};
use crate::report::SuiteLog;

const QUOTIENT: &str = "<a+N_S, b+N_S>_S := S(a,b); dim A/N_S = n * #{w_i > 0} for S(a,b) = tr(b*a W)";
const REPRESENTATION: &str = "pi(ax) = pi(a) pi(x); <pi(a) xi, eta>_S = <xi, pi(a*) eta>_S";
const EPSILON: &str = "pi(e_m) eps_k = eps_m for m <= k";
const DOUBLE_LIMIT: &str = "lim_m lim_k <pi(a)(eps_k - eps_m), pi(a)(eps_k - eps_m)> = 0";
const FORM: &str = "S(a,b) = lim_m <pi(a) eps_m, pi(b) eps_m>";
const LINEAR_SINGLE: &str = "omega(a) = lim_m <pi(a) eps_m, eps_m>; omega(b*a) = lim_m <pi(a) eps_m, pi(b) eps_m>";
const LINEAR_DOUBLE: &str = "omega(a) = lim_m lim_k <pi(a) eps_m, eps_k>";
const DECOMPOSITION: &str = "a = p1 - p2 + i(p3 - p4), p_j >= 0; omega(p) = <pi(p^(1/2)) eps, pi(p^(1/2)) eps>";
const CONTRACTIVE: &str = "omega(b*a*ab) <= ||a||^2 omega(b*b): ||pi(a)|| <= ||a||";
const APPROX_ID: &str = "a - a e_m -> 0; e_m e_n = e_m for m <= n";
const APPROX_FORM: &str = "S(a - a e_m, a - a e_m) -> 0; ||f||_S <= (sup v)^(1/2) ||f||_2";

pub fn run(cfg: &GnsConfig, tol: &Tolerances, log: &mut SuiteLog, rng: &mut ChaCha8Rng) {
    matrix_fixture("m2", &cfg.m2_weights, 2.0, cfg, tol, log, rng);
    matrix_fixture("schatten", &cfg.schatten_weights, cfg.schatten_p, cfg, tol, log, rng);
    schatten_identity(cfg, tol, log, rng);
    grid_identity(cfg, tol, log, rng);
}

fn trace_map(w: &[f64]) -> PositiveMap<f64, ComplexMatrix<f64>> {
    let wh = HermitianMatrix::from_real_diag(w);
    let wm = wh.as_matrix().clone();
    PositiveMap::new("tr(.W)", Codomain::Scalar, move |a: &ComplexMatrix<f64>| {
        CStarValue::Scalar(a.trace_product(&wm))
    })
    .with_bound(w.iter().sum())
    .with_kind(MapKind::TraceWeighted(wh))
}

fn matrix_fixture(
    label: &str,
    w: &[f64],
    p: f64,
    cfg: &GnsConfig,
    tol: &Tolerances,
    log: &mut SuiteLog,
    rng: &mut ChaCha8Rng,
) {
    let n = w.len();
    let inputs = json!({ "weights": w, "p": p, "samples": cfg.samples, "panel": cfg.panel });
    let name = |s: &str| format!("{label}/{s}");
    let model = match SchattenModel::new(n, p) {
        Ok(m) => m,
        Err(e) => return log.record_error(&name("quotient-dim"), QUOTIENT, inputs, 0.0, e),
    };
    let omega = trace_map(w);
    let form = omega.induced_form(&model);
    let g = match build_gns(&model, &form, rng) {
        Ok(g) => g,
        Err(e) => return log.record_error(&name("quotient-dim"), QUOTIENT, inputs, 0.0, e),
    };

    let expected = n * w.iter().filter(|&&x| x > 0.0).count();
    let s = g.summary();
    log.record(
        &name("quotient-dim"),
        QUOTIENT,
        inputs.clone(),
        json!({
            "quotient_dim": s.quotient_dim,
            "expected": expected,
            "null_dim": s.null_dim,
            "core_dim": s.core_dim,
            "invariance_defect": num(s.invariance_defect),
        }),
        0.0,
        s.quotient_dim == expected && s.null_dim + s.quotient_dim == s.core_dim,
    );

    let rep = verify_representation(&g, cfg.samples, rng);
    let worst = rep.max_mult_defect.max(rep.max_core_mult_defect).max(rep.max_adjoint_defect);
    log.record(
        &name("representation"),
        REPRESENTATION,
        inputs.clone(),
        json!({
            "samples": rep.samples,
            "max_mult_defect": num(rep.max_mult_defect),
            "max_core_mult_defect": num(rep.max_core_mult_defect),
            "max_adjoint_defect": num(rep.max_adjoint_defect),
        }),
        tol.representation,
        worst <= tol.representation,
    );

    let panel: Vec<ComplexMatrix<f64>> = (0..cfg.panel).map(|_| model.sample(rng)).collect();
    match verify_epsilon_relations(&g, &panel) {
        Ok(eps) => {
            log.record(
                &name("epsilon-relations"),
                EPSILON,
                inputs.clone(),
                json!({ "max_relation_defect": num(eps.max_relation_defect) }),
                tol.epsilon,
                eps.max_relation_defect <= tol.epsilon,
            );
            let decreasing = eps.tables.iter().all(|t| t.tail_strictly_decreasing);
            let final_tail = eps.tables.iter().fold(0.0f64, |m, t| m.max(t.final_tail));
            log.record(
                &name("double-limit"),
                DOUBLE_LIMIT,
                inputs.clone(),
                json!({
                    "tail_strictly_decreasing": decreasing,
                    "stabilized": eps.tables.iter().all(|t| t.stabilized),
                    "max_final_tail": num(final_tail),
                    "column_limits": eps.tables.iter().map(|t| nums(&t.column_limits)).collect::<Vec<_>>(),
                }),
                tol.reconstruction,
                decreasing && final_tail <= tol.reconstruction,
            );
            for (i, t) in eps.tables.iter().enumerate() {
                log.residuals(&name("double-limit"), i, &t.column_limits);
            }
        }
        Err(e) => {
            log.record_error(&name("epsilon-relations"), EPSILON, inputs.clone(), tol.epsilon, &e);
            log.record_error(&name("double-limit"), DOUBLE_LIMIT, inputs.clone(), tol.reconstruction, e);
        }
    }

    let mut top = 0.0f64;
    let mut traces = Vec::new();
    for pair in panel.windows(2) {
        let r = reconstruct_form(&g, &pair[0], &pair[1]);
        top = top.max(r.top_defect);
        traces.push(json!({ "defects": nums(&r.defects), "monotone_from": r.monotone_from }));
    }
    log.record(
        &name("reconstruct-form"),
        FORM,
        inputs.clone(),
        json!({ "max_top_defect": num(top), "traces": traces }),
        tol.reconstruction,
        top <= tol.reconstruction,
    );

    for (mode, label_mode, anchor) in [
        (LimitMode::Single, "reconstruct-linear-single", LINEAR_SINGLE),
        (LimitMode::Double, "reconstruct-linear-double", LINEAR_DOUBLE),
    ] {
        match reconstruct_linear(&g, &omega, mode, &panel) {
            Ok(r) => log.record(
                &name(label_mode),
                anchor,
                inputs.clone(),
                json!({
                    "form_mismatch": num(r.form_mismatch),
                    "max_top_defect": num(r.max_top_defect),
                    "max_pair_defect": num(r.max_pair_defect),
                }),
                tol.reconstruction,
                r.max_top_defect <= tol.reconstruction && r.max_pair_defect <= tol.reconstruction,
            ),
            Err(e) => log.record_error(&name(label_mode), anchor, inputs.clone(), tol.reconstruction, e),
        }
    }

    let mut split = 0.0f64;
    let mut positive = 0.0f64;
    let mut sqrt = 0.0f64;
    let mut linear = 0.0f64;
    let mut failure = None;
    for a in &panel {
        match check_positive_decomposition(&g, &omega, a) {
            Ok(d) => {
                split = split.max(d.split_defect);
                positive = positive.max(d.max_positive_defect);
                sqrt = sqrt.max(d.max_sqrt_defect);
                linear = linear.max(d.linear_defect);
            }
            Err(e) => failure = Some(e.to_string()),
        }
    }
    if let Some(e) = failure {
        log.record_error(&name("positive-decomposition"), DECOMPOSITION, inputs.clone(), tol.reconstruction, e);
    } else {
        log.record(
            &name("positive-decomposition"),
            DECOMPOSITION,
            inputs.clone(),
            json!({
                "max_split_defect": num(split),
                "max_positive_defect": num(positive),
                "max_sqrt_defect": num(sqrt),
                "max_linear_defect": num(linear),
            }),
            tol.reconstruction,
            split.max(positive).max(sqrt).max(linear) <= tol.reconstruction,
        );
    }

    let mut excess = f64::NEG_INFINITY;
    for a in &panel {
        excess = excess.max(g.pi_operator_norm(a) - operator_norm(a));
    }
    log.record(
        &name("pi-contractive"),
        CONTRACTIVE,
        inputs,
        json!({ "max_excess": num(excess) }),
        tol.representation,
        excess <= tol.representation,
    );
}

fn schatten_identity(cfg: &GnsConfig, tol: &Tolerances, log: &mut SuiteLog, rng: &mut ChaCha8Rng) {
    let n = cfg.schatten_weights.len();
    let inputs = json!({ "n": n, "p": cfg.schatten_p, "panel": cfg.panel });
    let model = match SchattenModel::new(n, cfg.schatten_p) {
        Ok(m) => m,
        Err(e) => return log.record_error("approximate-identity/schatten", APPROX_ID, inputs, tol.approximate_identity, e),
    };
    let panel: Vec<ComplexMatrix<f64>> = (0..cfg.panel).map(|_| model.sample(rng)).collect();
    identity_record("approximate-identity/schatten", &model, &panel, inputs, tol, log);
}

fn identity_record<M: AlgebraModel<f64>>(
    check: &str,
    model: &M,
    panel: &[M::Elem],
    inputs: serde_json::Value,
    tol: &Tolerances,
    log: &mut SuiteLog,
) {
    match check_approximate_identity(model, ResidualMode::Norm, panel, tol.approximate_identity) {
        Ok(r) => {
            let final_max = r.traces.iter().fold(0.0f64, |m, t| m.max(t.final_residual));
            for (i, t) in r.traces.iter().enumerate() {
                log.residuals(check, i, &t.residuals);
            }
            log.record(
                check,
                APPROX_ID,
                inputs,
                json!({
                    "model": r.model,
                    "mode": r.mode,
                    "levels": model.identity().len(),
                    "max_final_residual": num(final_max),
                    "monotone_from": r.traces.iter().map(|t| t.monotone_from).collect::<Vec<_>>(),
                    "max_idempotency_defect": num(r.max_idempotency_defect),
                    "right_mult_constant": num(r.right_mult_constant),
                }),
                tol.approximate_identity,
                final_max <= tol.approximate_identity && r.pass_idempotent,
            );
        }
        Err(e) => log.record_error(check, APPROX_ID, inputs, tol.approximate_identity, e),
    }
}

fn grid_identity(cfg: &GnsConfig, tol: &Tolerances, log: &mut SuiteLog, rng: &mut ChaCha8Rng) {
    let inputs = json!({ "x_max": cfg.grid_x_max, "points": cfg.grid_points, "panel": cfg.panel });
    let model = match GridL2Model::new(cfg.grid_x_max, cfg.grid_points) {
        Ok(m) => m,
        Err(e) => {
            log.record_error("approximate-identity/grid-l2", APPROX_ID, inputs.clone(), tol.approximate_identity, &e);
            log.record_error("approximate-identity/grid-l2-form", APPROX_FORM, inputs, tol.approximate_identity, e);
            return;
        }
    };
    // Gaussian bumps centred well inside the truncation.
    let panel: Vec<_> = (0..cfg.panel)
        .map(|_| {
            let c = C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let s: f64 = rng.random_range(-2.0..2.0);
            model.from_fn(|x| c * (-(x - s) * (x - s)).exp())
        })
        .collect();
    identity_record("approximate-identity/grid-l2", &model, &panel, inputs.clone(), tol, log);

    let v: Vec<f64> = model.grid().nodes().iter().map(|&x| 1.0 / (1.0 + x * x)).collect();
    let sup_v = v.iter().fold(0.0f64, |m, &x| m.max(x));
    let form = match weighted_form(&v, &model) {
        Ok(f) => f,
        Err(e) => return log.record_error("approximate-identity/grid-l2-form", APPROX_FORM, inputs, tol.approximate_identity, e),
    };
    let by_form = check_approximate_identity(&model, ResidualMode::Form(&form), &panel, tol.approximate_identity);
    let by_norm = check_approximate_identity(&model, ResidualMode::Norm, &panel, tol.approximate_identity);
    match (by_form, by_norm) {
        (Ok(f), Ok(nm)) => {
            let mut excess = f64::NEG_INFINITY;
            for (tf, tn) in f.traces.iter().zip(&nm.traces) {
                for (&rf, &rn) in tf.residuals.iter().zip(&tn.residuals) {
                    excess = excess.max(rf - sup_v.sqrt() * rn * (1.0 + 1e-12));
                }
            }
            let final_max = f.traces.iter().fold(0.0f64, |m, t| m.max(t.final_residual));
            for (i, t) in f.traces.iter().enumerate() {
                log.residuals("approximate-identity/grid-l2-form", i, &t.residuals);
            }
            log.record(
                "approximate-identity/grid-l2-form",
                APPROX_FORM,
                json!({ "x_max": cfg.grid_x_max, "points": cfg.grid_points, "panel": cfg.panel, "v": "1/(1+x^2)" }),
                json!({
                    "mode": f.mode,
                    "max_final_residual": num(final_max),
                    "max_bound_excess": num(excess),
                    "sup_v": num(sup_v),
                }),
                tol.approximate_identity,
                final_max <= tol.approximate_identity && excess <= 0.0,
            );
        }
        (Err(e), _) | (_, Err(e)) => {
            log.record_error("approximate-identity/grid-l2-form", APPROX_FORM, inputs, tol.approximate_identity, e)
        }
    }
}
