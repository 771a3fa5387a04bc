//! Weighted shift on the cyclic block space: power formulas, decay, the
//! seminorm `||.||_W` and the transitivity witnesses.

use opalg::dynamics::{
    build_shift, build_w, check_power_formulas, cosine_witness, default_lambda, power_decay, random_supported,
    right_multiplier, seminorm_w, transitivity_witness, BlockSpace, Shift, ShiftWeights, TransitivityReport,
    WeightOperator,
};
use opalg::linalg::{ComplexMatrix, HermitianMatrix};
use opalg::models::{random_complex, random_matrix};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::{num, nums};
use crate::config::{DynamicsConfig, Tolerances};
use crate::report::{DecayCsvRow, SuiteLog};

const INVERSE: &str = "V V^-1 = I";
const POWERS: &str = "||V^n P_j|| = 2^-n (j >= 0); ||V^n P_-j|| = 2^(2j-n) (n > j)";
const TAILS: &str = "W = sum lambda_j P_j W_j P_j; ||W(I - sum_{|j|<=n} P_j)|| <= sup_{|j|>n} lambda_j M";
const DECAY: &str = "||V^n (sum_{|j|<=k} P_j)|| <= 2k 2^(2k-n)";
const SEMINORM: &str = "S_W(X,Y) = rho(X W Y*) induces a seminorm: ||aX||_W = |a| ||X||_W, ||X+Y||_W <= ||X||_W + ||Y||_W";
const MULTIPLIER: &str = "R(A) = A V*; ||A V*||_2 <= ||A||_2 ||V*||; ||R(X)||_W <= ||X||_2 ||W||^(1/2) ||V||";
const TRANSITIVE: &str = "R_V* is topologically transitive: X_n = F_1 + R^-n(F_2)";
const COSINE: &str = "cosine sequence C^(n) = (R^n + R^-n)/2 is topologically transitive: X_n = F_1 + R^n(F_2) + R^-n(F_2)";

pub fn run(cfg: &DynamicsConfig, tol: &Tolerances, log: &mut SuiteLog, rng: &mut ChaCha8Rng) {
    let inputs = json!({ "J": cfg.half_width, "d": cfg.block_dim, "weights": cfg.weights });
    let setup = || -> Result<(Shift<f64>, WeightOperator<f64>), String> {
        let space = BlockSpace::new(cfg.half_width, cfg.block_dim).map_err(|e| e.to_string())?;
        let weights = ShiftWeights { nonneg: cfg.weights[0], neg: cfg.weights[1] };
        let shift = build_shift(space, weights).map_err(|e| e.to_string())?;
        let lambda = cfg.lambda.clone().unwrap_or_else(|| default_lambda(&space));
        let blocks = vec![HermitianMatrix::identity(cfg.block_dim); space.blocks()];
        let w = build_w(space, &lambda, &blocks).map_err(|e| e.to_string())?;
        Ok((shift, w))
    };
    let (shift, w) = match setup() {
        Ok(s) => s,
        Err(e) => return log.record_error("shift-inverse", INVERSE, inputs, tol.exact, e),
    };
    let space = *shift.space();
    let k = cfg.support_radius;

    log.record(
        "shift-inverse",
        INVERSE,
        inputs.clone(),
        json!({ "inverse_defect": num(shift.inverse_defect) }),
        tol.exact,
        shift.inverse_defect <= tol.exact,
    );

    // The closed forms and the decay bound are derived for the weights (1/2, 2) only.
    if shift.weights.is_default() {
        match check_power_formulas(&shift) {
            Ok(r) => log.record(
                "power-formulas",
                POWERS,
                inputs.clone(),
                json!({ "cases": r.cases, "max_defect": num(r.max_defect) }),
                tol.exact,
                r.max_defect <= tol.exact,
            ),
            Err(e) => log.record_error("power-formulas", POWERS, inputs.clone(), tol.exact, e),
        }
    }

    let tails_ok = w.tails.iter().all(|t| t.pass);
    let worst_tail = w.tails.iter().fold(f64::NEG_INFINITY, |m, t| m.max(t.tail_norm - t.bound));
    log.record(
        "w-tails",
        TAILS,
        json!({ "J": cfg.half_width, "d": cfg.block_dim, "lambda": cfg.lambda }),
        json!({
            "rows": w.tails.len(),
            "tail_norms": nums(&w.tails.iter().map(|t| t.tail_norm).collect::<Vec<_>>()),
            "max_excess": num(worst_tail),
            "w_norm": num(w.op_norm()),
        }),
        tol.exact,
        tails_ok,
    );

    let decay_inputs = json!({ "J": cfg.half_width, "d": cfg.block_dim, "k": k, "weights": cfg.weights });
    match power_decay(&shift, k, cfg.half_width - k) {
        Ok(t) => {
            log.decay_rows.extend(t.rows.iter().map(|r| DecayCsvRow {
                n: r.n,
                forward_norm: r.forward_norm,
                backward_norm: r.backward_norm,
                bound: r.bound,
            }));
            let slope_ok = (t.forward_slope + 1.0).abs() <= tol.slope && (t.backward_slope + 1.0).abs() <= tol.slope;
            log.record(
                "power-decay",
                DECAY,
                decay_inputs,
                json!({
                    "rows": t.rows.len(),
                    "within_bound": t.within_bound,
                    "forward_slope": num(t.forward_slope),
                    "backward_slope": num(t.backward_slope),
                    "bound_applies": shift.weights.is_default(),
                }),
                tol.slope,
                t.within_bound && (!shift.weights.is_default() || slope_ok),
            );
        }
        Err(e) => log.record_error("power-decay", DECAY, decay_inputs, tol.slope, e),
    }

    seminorm_checks(cfg, tol, &shift, &w, log, rng);

    let f1 = random_supported::<f64, _>(&space, k, rng);
    let f2 = random_supported::<f64, _>(&space, k, rng);
    let w_inputs = json!({ "J": cfg.half_width, "d": cfg.block_dim, "k": k, "delta": cfg.delta, "weights": cfg.weights, "lambda": cfg.lambda });
    witness_record(
        "transitivity-witness",
        TRANSITIVE,
        w_inputs.clone(),
        transitivity_witness(&w, &shift, &f1, &f2, k, cfg.delta),
        cfg,
        tol,
        log,
    );
    witness_record(
        "cosine-witness",
        COSINE,
        w_inputs,
        cosine_witness(&w, &shift, &f1, &f2, k, cfg.delta),
        cfg,
        tol,
        log,
    );
}

fn seminorm_checks(
    cfg: &DynamicsConfig,
    tol: &Tolerances,
    shift: &Shift<f64>,
    w: &WeightOperator<f64>,
    log: &mut SuiteLog,
    rng: &mut ChaCha8Rng,
) {
    let space = *shift.space();
    let n = space.dim();
    let inputs = json!({ "J": cfg.half_width, "d": cfg.block_dim, "pairs": cfg.seminorm_pairs });
    let mut homog = 0.0f64;
    let mut triangle = f64::INFINITY;
    let mut r_bound = f64::INFINITY;
    let mut mult_ok = true;
    let mut failure = None;
    let w_half = w.op_norm().sqrt();
    let v_norm = shift.v.op_norm();
    for _ in 0..cfg.seminorm_pairs {
        let x: ComplexMatrix<f64> = random_matrix(rng, n, n);
        let y: ComplexMatrix<f64> = random_matrix(rng, n, n);
        let a = random_complex::<f64, _>(rng);
        let step = || -> Result<(f64, f64, f64, bool), String> {
            let nx = seminorm_w(w, &x).map_err(|e| e.to_string())?;
            let ny = seminorm_w(w, &y).map_err(|e| e.to_string())?;
            let nax = seminorm_w(w, &x.scale(a)).map_err(|e| e.to_string())?;
            let nxy = seminorm_w(w, &(&x + &y)).map_err(|e| e.to_string())?;
            let rx = right_multiplier(shift, 1, &x);
            let nrx = seminorm_w(w, &rx.value).map_err(|e| e.to_string())?;
            let h = (nax - a.norm() * nx).abs() / nx.max(1.0);
            let t = super::rel_slack(nxy, nx + ny);
            let r = super::rel_slack(nrx, x.frobenius_norm() * w_half * v_norm);
            Ok((h, t, r, rx.bound_ok))
        };
        match step() {
            Ok((h, t, r, ok)) => {
                homog = homog.max(h);
                triangle = triangle.min(t);
                r_bound = r_bound.min(r);
                mult_ok &= ok;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    if let Some(e) = failure {
        log.record_error("seminorm", SEMINORM, inputs.clone(), tol.homogeneity, &e);
        log.record_error("right-multiplier", MULTIPLIER, inputs, tol.inequality_rtol, e);
        return;
    }
    log.record(
        "seminorm",
        SEMINORM,
        inputs.clone(),
        json!({ "max_homogeneity_defect": num(homog), "min_triangle_rel_slack": num(triangle), "inequality_rtol": tol.inequality_rtol }),
        tol.homogeneity,
        homog <= tol.homogeneity && triangle >= -tol.inequality_rtol,
    );

    let mut semigroup = 0.0f64;
    let window = (cfg.half_width - cfg.support_radius.min(cfg.half_width)) as i64;
    let half = (window / 2).max(1);
    let f = random_supported::<f64, _>(&space, cfg.support_radius, rng);
    for (p, q) in [(1, 1), (half, -1), (-half, half), (2, -3), (-1, -1)] {
        let lhs = right_multiplier(shift, p, &right_multiplier(shift, q, &f).value).value;
        let rhs = right_multiplier(shift, p + q, &f).value;
        semigroup = semigroup.max(lhs.max_abs_diff(&rhs));
    }
    log.record(
        "right-multiplier",
        MULTIPLIER,
        inputs,
        json!({
            "min_seminorm_bound_rel_slack": num(r_bound),
            "frobenius_bound_holds": mult_ok,
            "max_semigroup_defect": num(semigroup),
        }),
        tol.exact,
        mult_ok && r_bound >= -tol.inequality_rtol && semigroup <= tol.exact,
    );
}

fn witness_record(
    check: &str,
    anchor: &str,
    inputs: Value,
    result: Result<TransitivityReport<f64>, opalg::dynamics::DynamicsError>,
    cfg: &DynamicsConfig,
    tol: &Tolerances,
    log: &mut SuiteLog,
) {
    match result {
        Ok(r) => {
            let reach = match r.kind {
                opalg::dynamics::WitnessKind::Transitivity => r.n_found + r.k,
                opalg::dynamics::WitnessKind::Cosine => 2 * r.n_found + r.k,
            };
            let expansion_ok = r.expansion_defect.is_none_or(|d| d <= tol.exact);
            let slope_ok = (r.fitted_slope + 1.0).abs() <= tol.slope;
            let pass = r.defect_first < cfg.delta
                && r.defect_second < cfg.delta
                && reach <= cfg.half_width
                && slope_ok
                && expansion_ok;
            log.record(
                check,
                anchor,
                inputs,
                json!({
                    "n_found": r.n_found,
                    "window_max": r.window_max,
                    "defect_first": num(r.defect_first),
                    "defect_second": num(r.defect_second),
                    "fitted_slope": num(r.fitted_slope),
                    "seminorm_slope_forward": num(r.seminorm_slope_forward),
                    "seminorm_slope_backward": num(r.seminorm_slope_backward),
                    "projection_defects": nums(&r.projection_defects),
                    "expansion_defect": r.expansion_defect.map(num),
                    "forward_trace": nums(&r.forward_trace),
                    "backward_trace": nums(&r.backward_trace),
                }),
                cfg.delta,
                pass,
            );
        }
        Err(e) => log.record_error(check, anchor, inputs, cfg.delta, e),
    }
}
