//! Projector sequences, kernel forms and the shipped positive maps.

use opalg::catalog::{
    genint_consistency, kernel_form, ncl2_map, random_gridfn, random_matfn, richardson_slope, schatten_trace_map,
    standard_catalog, KernelSpec, OperatorKernel,
};
use opalg::element::{GridFn, SeqFn};
use opalg::linalg::{ComplexMatrix, HermitianMatrix};
use opalg::models::{default_cutoffs, projector_sequence, random_matrix, random_psd, SchattenModel};
use opalg::Grid;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{num, nums};
use crate::config::{CatalogConfig, Tolerances};
use crate::report::SuiteLog;

const PROJECTORS: &str = "P_n = E_W((1/n, inf)); ||W(I - P_n)||_p non-increasing and <= dim^(1/p) / n";
const PROJECTOR_TABLE: &str = "W = diag(1, 0.4, 0.05): ||W(I - P_n)||_2 = (0.4^2 + 0.05^2)^(1/2), 0.05, 0";
const KERNEL_LINEAR: &str = "S_k(f,g)(x) = int k(x,t) f(t) conj(g(t)) dt; k = xt, f = g = 1: S_k = x/2";
const DERIVATIVE: &str = "d/dx S_K(f,g)(x) = int d_x K(x,t) f(t) g(t)* dt";
const OMEGA_K: &str = "omega_K(ff*) >= 0; ||omega_K(ff*)(x)|| <= sup_t ||K(x,t)|| ||f||_2^2";
const INVARIANCE: &str = "omega(y*(ax)) = omega((a*y)*x)";
const BOUND: &str = "||omega(d*c)|| <= M ||d|| ||c||";
const GENINT: &str = "diagonal W, diagonal argument: rho(A f_x(W)) = int k(x,t) f(t) conj(g(t)) dt";
const SCHATTEN_TRACE: &str = "omega(A)(t) = tr(A W_t), W_t = sum lambda_j g_j(t) e_j e_j*; A = E_11, g = 1: omega = 1/2";
const NCL2: &str = "omega(A)(x) = rho(A((I - P)W + W_x)), W_x = f_x(WP)";
const TILDE: &str = "<theta~(X) f, g> = <f, theta~(X*) g>";

pub fn run(cfg: &CatalogConfig, tol: &Tolerances, log: &mut SuiteLog, rng: &mut ChaCha8Rng) {
    projectors(cfg, tol, log, rng);
    projector_table(tol, log);
    kernel_linear(cfg, tol, log);
    derivative(cfg, tol, log, rng);
    maps(cfg, tol, log, rng);
    fixtures(cfg, tol, log, rng);
}

fn projectors(cfg: &CatalogConfig, tol: &Tolerances, log: &mut SuiteLog, rng: &mut ChaCha8Rng) {
    let inputs = json!({
        "trials": cfg.projector_trials,
        "dim": cfg.projector_dim,
        "p": cfg.projector_p,
        "levels": cfg.projector_levels,
    });
    let cutoffs = default_cutoffs::<f64>(cfg.projector_levels);
    let mut monotone = 0usize;
    let mut within = 0usize;
    let mut worst_ratio = 0.0f64;
    let mut warnings = 0usize;
    for trial in 0..cfg.projector_trials {
        let w = random_psd::<f64, _>(rng, cfg.projector_dim);
        match projector_sequence(&w, cfg.projector_p, &cutoffs) {
            Ok(s) => {
                monotone += s.monotone as usize;
                within += s.final_within_bound as usize;
                warnings += s.warnings.len();
                let last = *s.residuals.last().unwrap();
                worst_ratio = worst_ratio.max(if s.final_bound > 0.0 { last / s.final_bound } else { 0.0 });
                log.residuals("projectors", trial, &s.residuals);
            }
            Err(e) => return log.record_error("projectors", PROJECTORS, inputs, tol.exact, e),
        }
    }
    log.record(
        "projectors",
        PROJECTORS,
        inputs,
        json!({
            "trials": cfg.projector_trials,
            "monotone": monotone,
            "final_within_bound": within,
            "max_final_over_bound": num(worst_ratio),
            "tie_warnings": warnings,
        }),
        tol.exact,
        monotone == cfg.projector_trials && within == cfg.projector_trials,
    );
}

fn projector_table(tol: &Tolerances, log: &mut SuiteLog) {
    let inputs = json!({ "w": [1.0, 0.4, 0.05], "cutoffs": [0.5, 1.0 / 3.0, 0.01], "p": 2.0 });
    let w = HermitianMatrix::from_real_diag(&[1.0, 0.4, 0.05]);
    let expected = [(0.4f64 * 0.4 + 0.05 * 0.05).sqrt(), 0.05, 0.0];
    match projector_sequence(&w, 2.0, &[0.5, 1.0 / 3.0, 0.01]) {
        Ok(s) => {
            let defect = s.residuals.iter().zip(expected).fold(0.0f64, |m, (r, e)| m.max((r - e).abs()));
            log.record(
                "projector-table",
                PROJECTOR_TABLE,
                inputs,
                json!({ "residuals": nums(&s.residuals), "expected": nums(&expected), "ranks": s.ranks, "max_defect": num(defect) }),
                tol.exact,
                defect <= tol.exact && s.ranks == [1, 2, 3],
            );
        }
        Err(e) => log.record_error("projector-table", PROJECTOR_TABLE, inputs, tol.exact, e),
    }
}

fn kernel_linear(cfg: &CatalogConfig, tol: &Tolerances, log: &mut SuiteLog) {
    let inputs = json!({ "points": cfg.kernel_points, "kernel": "x t" });
    let grid = match Grid::new(0.0, 1.0, cfg.kernel_points) {
        Ok(g) => g,
        Err(e) => return log.record_error("kernel-linear", KERNEL_LINEAR, inputs, tol.quadrature, e),
    };
    let spec = KernelSpec::scalar_from_fn(grid, grid, |x, t| x * t);
    let form = match kernel_form(&spec) {
        Ok(f) => f,
        Err(e) => return log.record_error("kernel-linear", KERNEL_LINEAR, inputs, tol.quadrature, e),
    };
    let one = GridFn::from_real(vec![1.0; cfg.kernel_points]);
    let v = form.eval(&one, &one);
    let defect = v
        .samples()
        .unwrap()
        .iter()
        .zip(grid.nodes())
        .fold(0.0f64, |m, (s, x)| m.max((s - opalg::C::new(x / 2.0, 0.0)).norm()));
    log.record(
        "kernel-linear",
        KERNEL_LINEAR,
        inputs,
        json!({ "max_defect": num(defect) }),
        tol.quadrature,
        defect <= tol.quadrature,
    );
}

fn gaussian_kernel(xpts: usize, tpts: usize, d: usize) -> Result<OperatorKernel<f64>, String> {
    let xg = Grid::new(0.0, 1.0, xpts).map_err(|e| e.to_string())?;
    let tg = Grid::new(0.0, 1.0, tpts).map_err(|e| e.to_string())?;
    let spec = KernelSpec::operator_from_fn(xg, tg, move |x, t| {
        ComplexMatrix::identity(d).scale_real((-(x - t) * (x - t)).exp())
    })
    .with_operator_dx(move |x, t| ComplexMatrix::identity(d).scale_real(-2.0 * (x - t) * (-(x - t) * (x - t)).exp()));
    OperatorKernel::new(spec, 1e-8).map_err(|e| e.to_string())
}

fn derivative(cfg: &CatalogConfig, tol: &Tolerances, log: &mut SuiteLog, rng: &mut ChaCha8Rng) {
    let d = cfg.sizes.kernel_dim;
    let coarse_pts = cfg.derivative_points;
    let fine_pts = 2 * coarse_pts - 1;
    let tpts = cfg.derivative_t_points;
    let inputs = json!({ "coarse": coarse_pts, "fine": fine_pts, "t_points": tpts, "d": d, "kernel": "exp(-(x-t)^2) I" });
    let f = random_matfn::<f64>(rng, tpts, d);
    let g = random_matfn::<f64>(rng, tpts, d);
    let run = || -> Result<_, String> {
        let coarse = gaussian_kernel(coarse_pts, tpts, d)?;
        let fine = gaussian_kernel(fine_pts, tpts, d)?;
        let a = coarse.derivative_check(&f, &g).map_err(|e| e.to_string())?;
        let b = fine.derivative_check(&f, &g).map_err(|e| e.to_string())?;
        let omega = fine.omega_bound_check(&f).map_err(|e| e.to_string())?;
        Ok((a, b, omega, fine.positivity_action))
    };
    match run() {
        Ok((a, b, omega, action)) => {
            let slope = richardson_slope(a.max_defect, b.max_defect);
            log.record(
                "kernel-derivative",
                DERIVATIVE,
                inputs.clone(),
                json!({
                    "coarse_spacing": num(a.spacing),
                    "coarse_defect": num(a.max_defect),
                    "fine_spacing": num(b.spacing),
                    "fine_defect": num(b.max_defect),
                    "richardson_slope": num(slope),
                }),
                tol.richardson,
                (slope - 2.0).abs() <= tol.richardson,
            );
            log.record(
                "omega-k",
                OMEGA_K,
                inputs,
                json!({ "max_excess": num(omega.max_excess), "positive": omega.positive, "positivity_action": action }),
                0.0,
                omega.pass,
            );
        }
        Err(e) => {
            log.record_error("kernel-derivative", DERIVATIVE, inputs.clone(), tol.richardson, &e);
            log.record_error("omega-k", OMEGA_K, inputs, 0.0, e);
        }
    }
}

fn maps(cfg: &CatalogConfig, tol: &Tolerances, log: &mut SuiteLog, rng: &mut ChaCha8Rng) {
    let inputs = json!({ "sizes": cfg.sizes, "samples": cfg.invariance_samples, "pairs": cfg.bound_pairs });
    let cat = match standard_catalog::<f64>(&cfg.sizes) {
        Ok(c) => c,
        Err(e) => {
            log.record_error("invariance", INVARIANCE, inputs.clone(), tol.invariance, &e);
            log.record_error("bound", BOUND, inputs, tol.inequality_rtol, e);
            return;
        }
    };
    for m in &cat.maps {
        let name = m.name();
        let inputs = json!({ "map": name, "sizes": cfg.sizes, "samples": cfg.invariance_samples });
        match m.invariance(cfg.invariance_samples, rng) {
            Ok(r) => log.record(
                &format!("invariance/{name}"),
                INVARIANCE,
                inputs,
                json!({ "samples": r.samples, "max_defect": num(r.max_defect) }),
                tol.invariance,
                r.max_defect <= tol.invariance,
            ),
            Err(e) => log.record_error(&format!("invariance/{name}"), INVARIANCE, inputs, tol.invariance, e),
        }
        let inputs = json!({ "map": name, "sizes": cfg.sizes, "pairs": cfg.bound_pairs });
        let Some(bound) = m.declared_bound() else {
            log.record_error(&format!("bound/{name}"), BOUND, inputs, tol.inequality_rtol, "no declared bound");
            continue;
        };
        let ratio = m.max_bound_ratio(cfg.bound_pairs, rng);
        log.record(
            &format!("bound/{name}"),
            BOUND,
            inputs,
            json!({ "declared_bound": num(bound), "max_ratio": num(ratio), "max_ratio_over_bound": num(ratio / bound) }),
            tol.inequality_rtol,
            ratio <= bound * (1.0 + tol.inequality_rtol),
        );
    }
}

fn fixtures(cfg: &CatalogConfig, tol: &Tolerances, log: &mut SuiteLog, rng: &mut ChaCha8Rng) {
    let pts = cfg.sizes.grid_points;
    let unit = Grid::new(0.0, 1.0, pts.max(2)).expect("validated size");

    let inputs = json!({ "points": pts, "kernel": "exp(-(x-t)^2)" });
    let spec = KernelSpec::scalar_from_fn(unit, unit, |x, t| (-(x - t) * (x - t)).exp());
    let f = random_gridfn::<f64>(rng, pts);
    let g = random_gridfn::<f64>(rng, pts);
    match genint_consistency(&spec, &f, &g) {
        Ok(d) => log.record("genint", GENINT, inputs, json!({ "defect": num(d) }), tol.fixture, d <= tol.fixture),
        Err(e) => log.record_error("genint", GENINT, inputs, tol.fixture, e),
    }

    let n = 4;
    let inputs = json!({ "n": n, "p": 3.0, "lambda": "2^-j", "g": "1", "points": pts });
    let lambda: Vec<f64> = (1..=n).map(|j| 0.5f64.powi(j as i32)).collect();
    let ones = vec![vec![1.0; pts]; n];
    let res = SchattenModel::new(n, 3.0)
        .map_err(|e| e.to_string())
        .and_then(|m| schatten_trace_map(&lambda, &ones, unit, &m).map_err(|e| e.to_string()));
    match res {
        Ok(m) => {
            let mut a = vec![0.0; n];
            a[0] = 1.0;
            let v = m.map.eval(&ComplexMatrix::from_real_diag(&a));
            let defect = v.samples().unwrap().iter().fold(0.0f64, |acc, s| acc.max((s.re - 0.5).abs() + s.im.abs()));
            log.record(
                "schatten-trace",
                SCHATTEN_TRACE,
                inputs,
                json!({ "max_defect": num(defect), "bound": num(m.bound) }),
                tol.fixture,
                defect <= tol.fixture,
            );
        }
        Err(e) => log.record_error("schatten-trace", SCHATTEN_TRACE, inputs, tol.fixture, e),
    }

    let inputs = json!({ "w": [0.9, 0.5, 0.1], "cutoff": 0.3, "kernel": "x + t", "points": pts });
    let w = HermitianMatrix::from_real_diag(&[0.9, 0.5, 0.1]);
    let xg = Grid::new(0.0, 0.9, pts.max(2)).expect("validated size");
    let k = KernelSpec::scalar_from_fn(xg, xg, |x, t| x + t);
    match ncl2_map(&w, 0.3, &k) {
        Ok(m) => {
            let e11 = m.map.eval(&ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0]));
            let eye = m.map.eval(&ComplexMatrix::identity(3));
            let mut defect = m.projection.max_abs_diff(&ComplexMatrix::from_real_diag(&[1.0, 1.0, 0.0]));
            for ((x, u), v) in xg.nodes().iter().zip(e11.samples().unwrap()).zip(eye.samples().unwrap()) {
                defect = defect.max((u - opalg::C::new(x + 0.9, 0.0)).norm());
                defect = defect.max((v - opalg::C::new(3.0 * x + 1.5, 0.0)).norm());
            }
            log.record(
                "ncl2-diagonal",
                NCL2,
                inputs.clone(),
                json!({ "max_defect": num(defect), "norm_wp": num(m.norm_wp), "bound": num(m.bound) }),
                tol.fixture,
                defect <= tol.fixture,
            );

            let mut adj = 0.0f64;
            for _ in 0..cfg.invariance_samples {
                let x = random_matrix::<f64, _>(rng, 3, 3);
                let len = cfg.sizes.seq_len;
                let f = SeqFn((0..len).map(|_| random_gridfn(rng, xg.points())).collect());
                let g = SeqFn((0..len).map(|_| random_gridfn(rng, xg.points())).collect());
                adj = adj.max(m.tilde_adjoint_defect(&x, &f, &g));
            }
            log.record(
                "tilde-adjoint",
                TILDE,
                json!({ "w": [0.9, 0.5, 0.1], "cutoff": 0.3, "samples": cfg.invariance_samples, "len": cfg.sizes.seq_len }),
                json!({ "max_defect": num(adj) }),
                tol.invariance,
                adj <= tol.invariance,
            );
        }
        Err(e) => {
            log.record_error("ncl2-diagonal", NCL2, inputs.clone(), tol.fixture, &e);
            log.record_error("tilde-adjoint", TILDE, inputs, tol.invariance, e);
        }
    }
}
