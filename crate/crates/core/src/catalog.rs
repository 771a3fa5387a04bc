//! Concrete positive maps and forms on the shipped models: weighted sums on
//! sequences of functions, weighted `L^2` forms, scalar and operator-valued
//! integral kernels, trace maps on Schatten classes, and the spectral
//! kernel map on noncommutative `L^2`.
//!
//! All integrals use the trapezoidal rule on the supplied grids.

use std::sync::Arc;

use num_traits::Zero;
use rand::RngCore;
use serde::Serialize;
use thiserror::Error;

use crate::cstar::{
    CStarError, CStarValue, Codomain, Grid, InvarianceReport, MapKind, PosSesqForm, PositiveMap, SchwarzReport, TriangleReport,
};
use crate::element::{Element, GridFn, MatFn, SeqFn};
use crate::linalg::{
    lp_norm, mat_fun, operator_norm, spectral_projection, ComplexMatrix, HermitianMatrix, LinalgError,
};
use crate::models::{random_complex, AlgebraModel, GridL2Model, ModelError, NcL2Model, SchattenModel, SeqFunModel};
use crate::scalar::{creal, Real, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    CStar(#[from] CStarError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Samples of a kernel on `x-grid x t-grid`, stored x-major.
#[derive(Clone, Debug)]
pub enum KernelValues<T: Real> {
    Scalar(Vec<T>),
    Operator(Vec<ComplexMatrix<T>>),
}

#[derive(Clone, Debug)]
pub struct KernelSpec<T: Real> {
    xgrid: Grid<T>,
    tgrid: Grid<T>,
    values: KernelValues<T>,
    dx: Option<KernelValues<T>>,
}

impl<T: Real> KernelSpec<T> {
    pub fn scalar_from_fn(xgrid: Grid<T>, tgrid: Grid<T>, k: impl Fn(T, T) -> T) -> Self {
        Self {
            values: KernelValues::Scalar(Self::tabulate(&xgrid, &tgrid, k)),
            xgrid,
            tgrid,
            dx: None,
        }
    }

    pub fn operator_from_fn(xgrid: Grid<T>, tgrid: Grid<T>, k: impl Fn(T, T) -> ComplexMatrix<T>) -> Self {
        Self {
            values: KernelValues::Operator(Self::tabulate(&xgrid, &tgrid, k)),
            xgrid,
            tgrid,
            dx: None,
        }
    }

    /// Scalar kernel from x-major samples.
    pub fn scalar_from_samples(xgrid: Grid<T>, tgrid: Grid<T>, samples: Vec<T>) -> Result<Self, CatalogError> {
        if samples.len() != xgrid.points() * tgrid.points() {
            return Err(CatalogError::Shape(format!(
                "expected {} kernel samples, got {}",
                xgrid.points() * tgrid.points(),
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(CatalogError::InvalidKernel("non-finite sample".into()));
        }
        Ok(Self {
            xgrid,
            tgrid,
            values: KernelValues::Scalar(samples),
            dx: None,
        })
    }

    /// Attaches analytic `d/dx` samples of a scalar kernel.
    pub fn with_scalar_dx(mut self, dk: impl Fn(T, T) -> T) -> Self {
        self.dx = Some(KernelValues::Scalar(Self::tabulate(&self.xgrid, &self.tgrid, dk)));
        self
    }

    /// Attaches analytic `d/dx` samples of an operator kernel.
    pub fn with_operator_dx(mut self, dk: impl Fn(T, T) -> ComplexMatrix<T>) -> Self {
        self.dx = Some(KernelValues::Operator(Self::tabulate(&self.xgrid, &self.tgrid, dk)));
        self
    }

    fn tabulate<V>(xgrid: &Grid<T>, tgrid: &Grid<T>, f: impl Fn(T, T) -> V) -> Vec<V> {
        let ts = tgrid.nodes();
        xgrid
            .nodes()
            .into_iter()
            .flat_map(|x| ts.iter().map(move |&t| (x, t)).collect::<Vec<_>>())
            .map(|(x, t)| f(x, t))
            .collect()
    }

    pub fn xgrid(&self) -> &Grid<T> {
        &self.xgrid
    }

    pub fn tgrid(&self) -> &Grid<T> {
        &self.tgrid
    }

    pub fn values(&self) -> &KernelValues<T> {
        &self.values
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.values, KernelValues::Scalar(_))
    }

    fn scalar_values(&self) -> Result<&[T], CatalogError> {
        match &self.values {
            KernelValues::Scalar(v) => Ok(v),
            KernelValues::Operator(_) => Err(CatalogError::InvalidKernel("expected a scalar kernel".into())),
        }
    }

    fn operator_values(&self) -> Result<&[ComplexMatrix<T>], CatalogError> {
        match &self.values {
            KernelValues::Operator(v) => Ok(v),
            KernelValues::Scalar(_) => Err(CatalogError::InvalidKernel("expected an operator kernel".into())),
        }
    }

    /// `min k` over all samples of a scalar kernel.
    pub fn min_scalar(&self) -> Result<T, CatalogError> {
        Ok(self.scalar_values()?.iter().fold(T::infinity(), |m, &v| m.min(v)))
    }

    /// Scalar kernel at `(x_i, t)` by linear interpolation in `t`; exact at nodes.
    pub fn interp_t(&self, i: usize, t: T) -> Result<T, CatalogError> {
        let v = self.scalar_values()?;
        let nt = self.tgrid.points();
        let (j, frac) = self.tgrid.locate(t);
        let row = &v[i * nt..(i + 1) * nt];
        Ok(row[j] * (T::one() - frac) + row[j + 1] * frac)
    }
}

fn check_nonneg<T: Real>(v: &[T], what: &str) -> Result<(), CatalogError> {
    match v.iter().position(|x| !(x.is_finite() && *x >= T::zero())) {
        Some(i) => Err(CatalogError::InvalidWeight(format!("{what}: sample {i} is {}", v[i]))),
        None => Ok(()),
    }
}

/// `omega(f_1, f_2, ...) = sum_n w_n f_n` on the sequence model, with
/// declared bound `M = ||{w_n}||_2 = sup_x (sum_n w_n(x)^2)^(1/2)`.
pub fn weighted_sum_map<T: Real>(
    weights: &[Vec<T>],
    model: &SeqFunModel<T>,
) -> Result<PositiveMap<T, SeqFn<T>>, CatalogError> {
    let grid = *model.grid();
    if weights.len() != model.len() {
        return Err(CatalogError::Shape(format!("expected {} weights, got {}", model.len(), weights.len())));
    }
    for (n, w) in weights.iter().enumerate() {
        if w.len() != grid.points() {
            return Err(CatalogError::Shape(format!("weight {n} has {} samples, grid has {}", w.len(), grid.points())));
        }
        check_nonneg(w, &format!("w_{}", n + 1))?;
    }
    let bound = (0..grid.points())
        .map(|x| weights.iter().map(|w| w[x] * w[x]).sum::<T>())
        .fold(T::zero(), T::max)
        .sqrt();
    let w: Vec<Vec<T>> = weights.to_vec();
    Ok(PositiveMap::new("weighted-sum", Codomain::Func(grid), move |f: &SeqFn<T>| {
        let samples = (0..grid.points())
            .map(|x| f.0.iter().zip(&w).fold(C::zero(), |s, (fn_, wn)| s + fn_.0[x] * creal(wn[x])))
            .collect();
        CStarValue::func(grid, samples)
    })
    .with_bound(bound))
}

/// `S(f, g) = int f conj(g) v` on the grid `L^2` model.
pub fn weighted_form<T: Real>(v: &[T], model: &GridL2Model<T>) -> Result<PosSesqForm<T, GridFn<T>>, CatalogError> {
    let grid = *model.grid();
    if v.len() != grid.points() {
        return Err(CatalogError::Shape(format!("weight has {} samples, grid has {}", v.len(), grid.points())));
    }
    check_nonneg(v, "v")?;
    let bound = v.iter().fold(T::zero(), |m, &x| m.max(x));
    let wv: Vec<T> = grid.trapezoid_weights().iter().zip(v).map(|(&q, &x)| q * x).collect();
    Ok(PosSesqForm::new("weighted-l2", Codomain::Scalar, move |f: &GridFn<T>, g: &GridFn<T>| {
        CStarValue::Scalar(
            f.0.iter()
                .zip(&g.0)
                .zip(&wv)
                .fold(C::zero(), |s, ((a, b), &w)| s + a * b.conj() * creal(w)),
        )
    })
    .with_bound(bound, model.norm_name()))
}

/// `S_k(f, g)(x) = int k(x, t) f(t) conj(g(t)) dt`, with values in functions
/// of `x`. Requires `k >= 0`. The declared bound `sup |k|` refers to the
/// trapezoidal `L^2` norm on the t-grid.
pub fn kernel_form<T: Real>(spec: &KernelSpec<T>) -> Result<PosSesqForm<T, GridFn<T>>, CatalogError> {
    let k = spec.scalar_values()?.to_vec();
    check_nonneg(&k, "k").map_err(|e| CatalogError::InvalidKernel(e.to_string()))?;
    let bound = k.iter().fold(T::zero(), |m, &v| m.max(v));
    let (xg, tg) = (spec.xgrid, spec.tgrid);
    let q = tg.trapezoid_weights();
    let nt = tg.points();
    Ok(PosSesqForm::new("kernel S_k", Codomain::Func(xg), move |f: &GridFn<T>, g: &GridFn<T>| {
        let prod: Vec<C<T>> = f.0.iter().zip(&g.0).zip(&q).map(|((a, b), &w)| a * b.conj() * creal(w)).collect();
        let samples = (0..xg.points())
            .map(|i| {
                k[i * nt..(i + 1) * nt]
                    .iter()
                    .zip(&prod)
                    .fold(C::zero(), |s, (&kv, &p)| s + p * creal(kv))
            })
            .collect();
        CStarValue::func(xg, samples)
    })
    .with_bound(bound, "l2-trapezoid(t)"))
}

/// `theta(f)(x) = int k(x, t) w(t) f(t) dt` with `w >= 0`. Declared bound
/// `sup |k| * sup w`.
pub fn theta_map<T: Real>(spec: &KernelSpec<T>, w: &[T]) -> Result<PositiveMap<T, GridFn<T>>, CatalogError> {
    let k = spec.scalar_values()?.to_vec();
    check_nonneg(&k, "k").map_err(|e| CatalogError::InvalidKernel(e.to_string()))?;
    let (xg, tg) = (spec.xgrid, spec.tgrid);
    if w.len() != tg.points() {
        return Err(CatalogError::Shape(format!("weight has {} samples, t-grid has {}", w.len(), tg.points())));
    }
    check_nonneg(w, "w")?;
    let bound = k.iter().fold(T::zero(), |m, &v| m.max(v)) * w.iter().fold(T::zero(), |m, &v| m.max(v));
    let qw: Vec<T> = tg.trapezoid_weights().iter().zip(w).map(|(&q, &x)| q * x).collect();
    let nt = tg.points();
    Ok(PositiveMap::new("kernel theta", Codomain::Func(xg), move |f: &GridFn<T>| {
        let samples = (0..xg.points())
            .map(|i| {
                k[i * nt..(i + 1) * nt]
                    .iter()
                    .zip(&qw)
                    .zip(&f.0)
                    .fold(C::zero(), |s, ((&kv, &q), &fv)| s + fv * creal(kv * q))
            })
            .collect();
        CStarValue::func(xg, samples)
    })
    .with_bound(bound))
}

/// Operator-valued kernel form `S_K(f, g)(x) = int K(x, t) f(t) g(t)* dt`,
/// with `K(x, t)` acting on `M_d` by left multiplication.
#[derive(Clone, Debug)]
pub struct OperatorKernel<T: Real> {
    spec: KernelSpec<T>,
    d: usize,
    form: PosSesqForm<T, MatFn<T>>,
    /// `sup_t ||K(x, t)||` per x-node.
    pub sup_norms: Vec<T>,
    /// Every `K(x, t)` is a nonnegative multiple of the identity, the exact
    /// condition for `K(x, t) P >= 0` whenever `P >= 0`.
    pub positivity_action: bool,
    /// `sup_t ||K(x, t)||` is below the tolerance at both x-grid ends.
    pub c0_range: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeReport<T: Real> {
    pub points: usize,
    pub spacing: T,
    /// `max_x ||(S(x+h) - S(x-h)) / 2h - int dK/dx f g*||` over interior nodes.
    pub max_defect: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaBoundReport<T: Real> {
    /// `max_x ||omega_K(f f*)(x)|| - sup_t ||K(x,t)|| int ||f||^2` (should be <= 0).
    pub max_excess: T,
    pub positive: bool,
    pub pass: bool,
}

impl<T: Real> OperatorKernel<T> {
    pub fn new(spec: KernelSpec<T>, c0_tol: T) -> Result<Self, CatalogError> {
        let vals = spec.operator_values()?.to_vec();
        let d = vals[0].rows();
        for (i, m) in vals.iter().enumerate() {
            if !m.is_square() || m.rows() != d {
                return Err(CatalogError::Shape(format!("kernel sample {i} is {}x{}, expected {d}x{d}", m.rows(), m.cols())));
            }
            if !m.is_finite() {
                return Err(CatalogError::InvalidKernel(format!("kernel sample {i} is not finite")));
            }
        }
        let (xg, tg) = (spec.xgrid, spec.tgrid);
        let nt = tg.points();
        let sup_norms: Vec<T> = (0..xg.points())
            .map(|i| vals[i * nt..(i + 1) * nt].iter().fold(T::zero(), |m, k| m.max(operator_norm(k))))
            .collect();
        let tol = T::lit(1e-12);
        let positivity_action = vals.iter().all(|k| {
            let c = k[(0, 0)];
            c.re >= -tol
                && c.im.abs() <= tol
                && k.max_abs_diff(&ComplexMatrix::identity(d).scale(creal(c.re))) <= tol * T::one().max(c.re)
        });
        let c0_range = sup_norms[0] <= c0_tol && *sup_norms.last().unwrap() <= c0_tol;
        let q = tg.trapezoid_weights();
        let kv = vals.clone();
        let form = PosSesqForm::new("operator kernel S_K", Codomain::MatFunc(xg, d), move |f: &MatFn<T>, g: &MatFn<T>| {
            let prod: Vec<ComplexMatrix<T>> = f
                .0
                .iter()
                .zip(&g.0)
                .zip(&q)
                .map(|((a, b), &w)| a.matmul(&b.adjoint()).scale_real(w))
                .collect();
            let samples = (0..xg.points())
                .map(|i| {
                    let mut acc = ComplexMatrix::zeros(d, d);
                    for (k, p) in kv[i * nt..(i + 1) * nt].iter().zip(&prod) {
                        acc = &acc + &k.matmul(p);
                    }
                    acc
                })
                .collect();
            CStarValue::MatFunc { grid: xg, samples }
        });
        let bound = sup_norms.iter().fold(T::zero(), |m, &v| m.max(v));
        Ok(Self {
            form: form.with_bound(bound, "l2-operator(t)"),
            spec,
            d,
            sup_norms,
            positivity_action,
            c0_range,
        })
    }

    pub fn form(&self) -> &PosSesqForm<T, MatFn<T>> {
        &self.form
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn spec(&self) -> &KernelSpec<T> {
        &self.spec
    }

    pub fn check_args(&self, f: &MatFn<T>) -> Result<(), CatalogError> {
        if f.0.len() != self.spec.tgrid.points() {
            return Err(CatalogError::Shape(format!(
                "argument has {} samples, t-grid has {}",
                f.0.len(),
                self.spec.tgrid.points()
            )));
        }
        if f.0.iter().any(|m| m.rows() != self.d || m.cols() != self.d) {
            return Err(CatalogError::Shape(format!("argument values must be {0}x{0}", self.d)));
        }
        Ok(())
    }

    /// `S_K(f, g)` with argument validation.
    pub fn eval(&self, f: &MatFn<T>, g: &MatFn<T>) -> Result<CStarValue<T>, CatalogError> {
        self.check_args(f)?;
        self.check_args(g)?;
        Ok(self.form.eval(f, g))
    }

    /// Central differences of `x -> S_K(f, g)(x)` against the quadrature of
    /// `dK/dx f g*`.
    pub fn derivative_check(&self, f: &MatFn<T>, g: &MatFn<T>) -> Result<DerivativeReport<T>, CatalogError> {
        let Some(KernelValues::Operator(dk)) = &self.spec.dx else {
            return Err(CatalogError::InvalidKernel("no operator dK/dx samples attached".into()));
        };
        let s = self.eval(f, g)?;
        let CStarValue::MatFunc { samples, .. } = &s else { unreachable!() };
        let (xg, tg) = (self.spec.xgrid, self.spec.tgrid);
        let nt = tg.points();
        let h = xg.spacing();
        let q = tg.trapezoid_weights();
        let prod: Vec<ComplexMatrix<T>> = f
            .0
            .iter()
            .zip(&g.0)
            .zip(&q)
            .map(|((a, b), &w)| a.matmul(&b.adjoint()).scale_real(w))
            .collect();
        let two_h = creal(T::one() / (h + h));
        let mut max_defect = T::zero();
        for i in 1..xg.points() - 1 {
            let fd = (&samples[i + 1] - &samples[i - 1]).scale(two_h);
            let mut exact = ComplexMatrix::zeros(self.d, self.d);
            for (k, p) in dk[i * nt..(i + 1) * nt].iter().zip(&prod) {
                exact = &exact + &k.matmul(p);
            }
            max_defect = max_defect.max(operator_norm(&(&fd - &exact)));
        }
        Ok(DerivativeReport {
            points: xg.points(),
            spacing: h,
            max_defect,
        })
    }

    /// `omega_K(c d)(x) = int K(x, t) c(t) d(t) dt`.
    pub fn omega_k(&self, c: &MatFn<T>, d: &MatFn<T>) -> Result<CStarValue<T>, CatalogError> {
        self.eval(c, &d.star())
    }

    /// `||omega_K(f f*)(x)|| <= sup_t ||K(x, t)|| int ||f(t)||^2 dt` per x,
    /// plus positivity of `omega_K(f f*)` when the positivity action holds.
    pub fn omega_bound_check(&self, f: &MatFn<T>) -> Result<OmegaBoundReport<T>, CatalogError> {
        let v = self.omega_k(f, &f.star())?;
        let CStarValue::MatFunc { samples, .. } = &v else { unreachable!() };
        let f_sq = self.spec.tgrid.integrate(&f.0.iter().map(|m| creal(operator_norm(m).powi(2))).collect::<Vec<_>>()).re;
        let mut max_excess = -T::infinity();
        for (s, &sup) in samples.iter().zip(&self.sup_norms) {
            let rhs = sup * f_sq;
            max_excess = max_excess.max(operator_norm(s) - rhs * (T::one() + T::lit(1e-12)));
        }
        let positive = !self.positivity_action || v.is_positive(T::lit(1e-10));
        Ok(OmegaBoundReport {
            pass: max_excess <= T::zero() && positive,
            max_excess,
            positive,
        })
    }
}

/// `log2(defect_coarse / defect_fine)`: the observed order under halving `h`.
pub fn richardson_slope<T: Real>(coarse: T, fine: T) -> T {
    (coarse / fine).log2()
}

/// `omega(A)(t) = tr(A W_t)`, `W_t = diag(lambda_j g_j(t))`, on a Schatten
/// model with `p > 2`.
#[derive(Clone, Debug)]
pub struct SchattenTraceMap<T: Real> {
    pub map: PositiveMap<T, ComplexMatrix<T>>,
    /// `sup_t ||(lambda_j g_j(t))_j||_{p/(p-2)}` from Hölder's inequality.
    pub bound: T,
    /// The infinite family needs `lambda` in `l_{p/(p-1)} ∩ l_{p/(p-2)}`;
    /// every finite truncation qualifies.
    pub note: String,
}

pub fn schatten_trace_map<T: Real>(
    lambda: &[T],
    g: &[Vec<T>],
    tgrid: Grid<T>,
    model: &SchattenModel<T>,
) -> Result<SchattenTraceMap<T>, CatalogError> {
    let n = model.dim();
    let p = model.p();
    if !(p > T::lit(2.0)) {
        return Err(CatalogError::InvalidParameter(format!("need p > 2, got {p}")));
    }
    if lambda.len() != n || g.len() != n {
        return Err(CatalogError::Shape(format!("need {n} weights and {n} functions")));
    }
    if lambda.iter().any(|&l| !(l > T::zero())) || lambda.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(CatalogError::InvalidParameter("lambda must be positive and strictly decreasing".into()));
    }
    let pts = tgrid.points();
    for (j, gj) in g.iter().enumerate() {
        if gj.len() != pts {
            return Err(CatalogError::Shape(format!("g_{} has {} samples, grid has {pts}", j + 1, gj.len())));
        }
        check_nonneg(gj, &format!("g_{}", j + 1)).map_err(|e| CatalogError::InvalidParameter(e.to_string()))?;
    }
    let tol = T::lit(1e-12);
    for j in 1..n {
        if (0..pts).any(|t| g[j][t] > g[j - 1][t] + tol) {
            return Err(CatalogError::InvalidParameter(format!("g_{} exceeds g_{} somewhere", j + 1, j)));
        }
    }
    let r = p / (p - T::lit(2.0));
    let diag: Vec<Vec<T>> = (0..pts).map(|t| (0..n).map(|j| lambda[j] * g[j][t]).collect()).collect();
    let bound = diag.iter().map(|v| lp_norm(v, r)).fold(T::zero(), T::max);
    let map = PositiveMap::new("schatten trace", Codomain::Func(tgrid), move |a: &ComplexMatrix<T>| {
        let samples = diag
            .iter()
            .map(|w| w.iter().enumerate().fold(C::zero(), |s, (j, &wj)| s + a[(j, j)] * creal(wj)))
            .collect();
        CStarValue::func(tgrid, samples)
    })
    .with_bound(bound);
    Ok(SchattenTraceMap {
        map,
        bound,
        note: format!(
            "finite truncation n={n}; weights lie in l_{} and l_{}",
            (p / (p - T::one())).to_f64_lossy(),
            r.to_f64_lossy()
        ),
    })
}

/// `omega(A)(x) = rho(A((I - P)W + W_x))` with `W_x = f_x(WP)`,
/// `f_x(t) = k(x, t)`, on noncommutative `L^2` with `rho` the trace.
#[derive(Clone, Debug)]
pub struct Ncl2Map<T: Real> {
    pub map: PositiveMap<T, ComplexMatrix<T>>,
    pub projection: ComplexMatrix<T>,
    pub wp: HermitianMatrix<T>,
    pub norm_wp: T,
    /// `(I - P) W + W_x` per x-node.
    pub weights: Vec<HermitianMatrix<T>>,
    pub xgrid: Grid<T>,
    /// `sup_x ||(I - P)W + W_x||`: the bound with respect to the Frobenius norm.
    pub bound: T,
    pub warning: Option<String>,
}

pub fn ncl2_map<T: Real>(w: &HermitianMatrix<T>, cutoff: T, k: &KernelSpec<T>) -> Result<Ncl2Map<T>, CatalogError> {
    let kmin = k.min_scalar()?;
    if kmin < T::zero() {
        return Err(CatalogError::InvalidKernel(format!("kernel has negative sample {kmin}")));
    }
    if w.min_eigenvalue() < -T::lit(1e-10) {
        return Err(LinalgError::Domain("W is not PSD".into()).into());
    }
    let n = w.dim();
    let sp = spectral_projection(w, cutoff);
    let p = sp.projection.clone();
    let wpm = w.as_matrix().matmul(&p);
    let wp = HermitianMatrix::with_tol(wpm, T::lit(1e-9))?;
    let norm_wp = operator_norm(wp.as_matrix());
    let tg = k.tgrid;
    let reach = T::lit(1e-9) * T::one().max(norm_wp);
    if tg.start() > reach || tg.end() < norm_wp - reach {
        return Err(CatalogError::InvalidKernel(format!(
            "t-grid [{}, {}] does not cover [0, {}]",
            tg.start(),
            tg.end(),
            norm_wp
        )));
    }
    let rest = (&ComplexMatrix::identity(n) - &p).matmul(w.as_matrix());
    let xg = k.xgrid;
    let mut weights = Vec::with_capacity(xg.points());
    for i in 0..xg.points() {
        let wx = mat_fun(&wp, |t| k.interp_t(i, t).expect("scalar kernel checked"))?;
        let sum = &rest + wx.as_matrix();
        weights.push(HermitianMatrix::with_tol(sum, T::lit(1e-9))?);
    }
    let bound = weights.iter().map(|m| operator_norm(m.as_matrix())).fold(T::zero(), T::max);
    let mats: Arc<Vec<ComplexMatrix<T>>> = Arc::new(weights.iter().map(|m| m.as_matrix().clone()).collect());
    let map = PositiveMap::new("ncl2 spectral kernel", Codomain::Func(xg), move |a: &ComplexMatrix<T>| {
        CStarValue::func(xg, mats.iter().map(|m| a.trace_product(m)).collect())
    })
    .with_bound(bound);
    Ok(Ncl2Map {
        map,
        projection: p,
        wp,
        norm_wp,
        weights,
        xgrid: xg,
        bound,
        warning: sp.warning,
    })
}

impl<T: Real> Ncl2Map<T> {
    /// `theta(X) = int rho(X((I - P)W + W_t)) A_t dt`, by quadrature over the
    /// x-grid against a panel `A_t` of matrices, one per node.
    pub fn theta_gp(&self, x: &ComplexMatrix<T>, panel: &[HermitianMatrix<T>]) -> Result<ComplexMatrix<T>, CatalogError> {
        if panel.len() != self.xgrid.points() {
            return Err(CatalogError::Shape(format!("panel has {} matrices, grid has {}", panel.len(), self.xgrid.points())));
        }
        let v = self.map.eval(x);
        let s = v.samples().expect("function codomain");
        let q = self.xgrid.trapezoid_weights();
        let d = panel[0].dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for ((a, &sv), &w) in panel.iter().zip(s).zip(&q) {
            acc = &acc + &a.as_matrix().scale(sv * creal(w));
        }
        Ok(acc)
    }

    /// `theta~(X)(f_1, f_2, ...) = (omega(X) f_1, omega(X) f_2, ...)`.
    pub fn tilde_theta(&self, x: &ComplexMatrix<T>, f: &SeqFn<T>) -> SeqFn<T> {
        let v = self.map.eval(x);
        let w = GridFn(v.samples().expect("function codomain").to_vec());
        SeqFn(f.0.iter().map(|fn_| w.mul(fn_)).collect())
    }

    /// `||<theta~(X) f, g> - <f, theta~(X*) g>||_inf` for the module inner
    /// product `<f, g> = sum_n f_n conj(g_n)`.
    pub fn tilde_adjoint_defect(&self, x: &ComplexMatrix<T>, f: &SeqFn<T>, g: &SeqFn<T>) -> T {
        let ip = |a: &SeqFn<T>, b: &SeqFn<T>| -> Vec<C<T>> {
            (0..a.0[0].len())
                .map(|i| a.0.iter().zip(&b.0).fold(C::zero(), |s, (u, v)| s + u.0[i] * v.0[i].conj()))
                .collect()
        };
        let lhs = ip(&self.tilde_theta(x, f), g);
        let rhs = ip(f, &self.tilde_theta(&x.adjoint(), g));
        lhs.iter().zip(&rhs).fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }
}

/// For `W = diag(t-nodes)` and the diagonal argument
/// `A = diag(q_j f(t_j) conj(g(t_j)))`, the spectral kernel map reproduces
/// the trapezoidal `S_k(f, g)`. Returns the sup-norm discrepancy.
pub fn genint_consistency<T: Real>(k: &KernelSpec<T>, f: &GridFn<T>, g: &GridFn<T>) -> Result<T, CatalogError> {
    let tg = k.tgrid;
    if tg.start() < T::zero() {
        return Err(CatalogError::InvalidParameter("t-grid must lie in [0, inf)".into()));
    }
    let w = HermitianMatrix::from_real_diag(&tg.nodes());
    let m = ncl2_map(&w, -T::one(), k)?;
    let q = tg.trapezoid_weights();
    let diag: Vec<C<T>> = f.0.iter().zip(&g.0).zip(&q).map(|((a, b), &w)| a * b.conj() * creal(w)).collect();
    let via_map = m.map.eval(&ComplexMatrix::from_diag(&diag));
    let via_form = kernel_form(k)?.eval(f, g);
    Ok(via_map.sub(&via_form).cnorm())
}

/// Type-erased sampler for one catalog form, used by the randomized suites.
pub trait FormProbe<T: Real>: Send + Sync {
    fn name(&self) -> String;
    fn commutative(&self) -> bool;
    fn schwarz(&self, rng: &mut dyn RngCore, rtol: T) -> SchwarzReport<T>;
    fn triangle(&self, rng: &mut dyn RngCore, rtol: T) -> TriangleReport<T>;
    /// `| ||alpha a||_S - |alpha| ||a||_S |` for random `alpha`, `a`.
    fn homogeneity(&self, rng: &mut dyn RngCore) -> T;
    /// Whether `S(a, a)` passes the positivity predicate.
    fn positivity(&self, rng: &mut dyn RngCore) -> bool;
}

pub struct Probe<T: Real, E, F> {
    pub form: PosSesqForm<T, E>,
    pub sampler: F,
}

impl<T, E, F> Probe<T, E, F>
where
    T: Real,
    E: Element<T>,
    F: Fn(&mut dyn RngCore) -> E + Send + Sync,
{
    pub fn new(form: PosSesqForm<T, E>, sampler: F) -> Self {
        Self { form, sampler }
    }
}

impl<T, E, F> FormProbe<T> for Probe<T, E, F>
where
    T: Real,
    E: Element<T>,
    F: Fn(&mut dyn RngCore) -> E + Send + Sync,
{
    fn name(&self) -> String {
        self.form.name().to_string()
    }
    fn commutative(&self) -> bool {
        self.form.is_commutative()
    }
    fn schwarz(&self, rng: &mut dyn RngCore, rtol: T) -> SchwarzReport<T> {
        let a = (self.sampler)(rng);
        let b = (self.sampler)(rng);
        self.form.check_schwarz(&a, &b, rtol)
    }
    fn triangle(&self, rng: &mut dyn RngCore, rtol: T) -> TriangleReport<T> {
        let a = (self.sampler)(rng);
        let b = (self.sampler)(rng);
        self.form.check_triangle(&a, &b, rtol)
    }
    fn homogeneity(&self, rng: &mut dyn RngCore) -> T {
        let a = (self.sampler)(rng);
        let alpha: C<T> = random_complex(rng);
        let lhs = self.form.eval(&a.scale(alpha), &a.scale(alpha)).cnorm().sqrt();
        let rhs = alpha.norm() * self.form.eval(&a, &a).cnorm().sqrt();
        (lhs - rhs).abs() / T::one().max(rhs)
    }
    fn positivity(&self, rng: &mut dyn RngCore) -> bool {
        let a = (self.sampler)(rng);
        self.form.eval(&a, &a).is_positive(T::lit(1e-10))
    }
}

/// Type-erased access to a positive map together with its domain model.
pub trait MapProbe<T: Real>: Send + Sync {
    fn name(&self) -> String;
    fn declared_bound(&self) -> Option<T>;
    /// `max ||omega(d* c)|| / (||d|| ||c||)` over random core pairs.
    fn max_bound_ratio(&self, samples: usize, rng: &mut dyn RngCore) -> T;
    fn invariance(&self, samples: usize, rng: &mut dyn RngCore) -> Result<InvarianceReport<T>, CStarError>;
}

pub struct ModelMap<T: Real, M: AlgebraModel<T>> {
    pub map: PositiveMap<T, M::Elem>,
    pub model: M,
}

impl<T: Real, M: AlgebraModel<T>> MapProbe<T> for ModelMap<T, M> {
    fn name(&self) -> String {
        self.map.name().to_string()
    }
    fn declared_bound(&self) -> Option<T> {
        self.map.declared_bound()
    }
    fn max_bound_ratio(&self, samples: usize, rng: &mut dyn RngCore) -> T {
        (0..samples).fold(T::zero(), |m, _| {
            let c = self.model.sample_core(rng);
            let d = self.model.sample_core(rng);
            m.max(self.map.bound_ratio(&self.model, &c, &d))
        })
    }
    fn invariance(&self, samples: usize, rng: &mut dyn RngCore) -> Result<InvarianceReport<T>, CStarError> {
        self.map.induced_form(&self.model).check_invariance(&self.model, samples, rng)
    }
}

/// Sizes of the shipped catalog instances.
#[derive(Clone, Copy, Debug, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSizes {
    pub grid_points: usize,
    pub seq_len: usize,
    pub matrix_dim: usize,
    pub kernel_dim: usize,
}

impl Default for CatalogSizes {
    fn default() -> Self {
        Self {
            grid_points: 21,
            seq_len: 4,
            matrix_dim: 4,
            kernel_dim: 2,
        }
    }
}

pub struct Catalog<T: Real> {
    pub forms: Vec<Box<dyn FormProbe<T>>>,
    pub maps: Vec<Box<dyn MapProbe<T>>>,
}

fn push_map<T: Real, M: AlgebraModel<T>>(cat: &mut Catalog<T>, map: PositiveMap<T, M::Elem>, model: M) {
    let sampler_model = model.clone();
    cat.forms.push(Box::new(Probe::new(map.induced_form(&model), move |rng: &mut dyn RngCore| {
        sampler_model.sample(rng)
    })));
    cat.maps.push(Box::new(ModelMap { map, model }));
}

/// Every shipped form: the weighted sum on sequences, the weighted `L^2`
/// form, `S_k`, `theta`, `S_K`, the Schatten and spectral-kernel trace maps,
/// `tr(. W)` and the module form `b* a`.
pub fn standard_catalog<T: Real>(sizes: &CatalogSizes) -> Result<Catalog<T>, CatalogError> {
    if sizes.grid_points < 3 || sizes.seq_len < 1 || sizes.matrix_dim < 2 || sizes.kernel_dim < 1 {
        return Err(CatalogError::InvalidParameter(format!("catalog sizes too small: {sizes:?}")));
    }
    let mut cat = Catalog { forms: Vec::new(), maps: Vec::new() };
    let pts = sizes.grid_points;
    let unit = Grid::new(T::zero(), T::one(), pts)?;

    let seq = SeqFunModel::new(unit, sizes.seq_len)?;
    let w: Vec<Vec<T>> = (1..=sizes.seq_len)
        .map(|n| unit.nodes().iter().map(|&x| T::lit(0.5).powi(n as i32) * (T::one() + x)).collect())
        .collect();
    push_map(&mut cat, weighted_sum_map(&w, &seq)?, seq);

    let l2 = GridL2Model::new(T::lit(3.0), 2 * pts + 1)?;
    let v: Vec<T> = l2.grid().nodes().iter().map(|&x| (-x * x).exp()).collect();
    let wf = weighted_form(&v, &l2)?;
    let l2s = l2.clone();
    cat.forms.push(Box::new(Probe::new(wf, move |rng: &mut dyn RngCore| l2s.sample(rng))));

    let gauss = KernelSpec::scalar_from_fn(unit, unit, |x, t| (-(x - t) * (x - t)).exp());
    cat.forms.push(Box::new(Probe::new(kernel_form(&gauss)?, move |rng: &mut dyn RngCore| {
        random_gridfn(rng, pts)
    })));

    let l2u = GridL2Model::new(T::one(), pts)?;
    let th_spec = KernelSpec::scalar_from_fn(unit, *l2u.grid(), |x, t| T::one() + x * t * t);
    let ones = vec![T::one(); pts];
    push_map(&mut cat, theta_map(&th_spec, &ones)?, l2u);

    let d = sizes.kernel_dim;
    let op_spec = KernelSpec::operator_from_fn(unit, unit, move |x, t| {
        ComplexMatrix::identity(d).scale_real(T::one() + x * t)
    });
    let ok = OperatorKernel::new(op_spec, T::lit(1e-8))?;
    cat.forms.push(Box::new(Probe::new(ok.form().clone(), move |rng: &mut dyn RngCore| {
        random_matfn(rng, pts, d)
    })));

    let n = sizes.matrix_dim;
    let sch = SchattenModel::new(n, T::lit(3.0))?;
    let lambda: Vec<T> = (1..=n).map(|j| T::lit(0.5).powi(j as i32)).collect();
    let g: Vec<Vec<T>> = (0..n)
        .map(|j| unit.nodes().iter().map(|&t| (-T::from_usize(j).unwrap() * t).exp()).collect())
        .collect();
    push_map(&mut cat, schatten_trace_map(&lambda, &g, unit, &sch)?.map, sch);

    let ncl2 = NcL2Model::new(n)?;
    let wdiag: Vec<T> = (0..n).map(|j| T::from_usize(j + 1).unwrap() / T::from_usize(n).unwrap()).collect();
    let wh = HermitianMatrix::from_real_diag(&wdiag);
    let tg = Grid::new(T::zero(), T::one(), pts)?;
    let nk = KernelSpec::scalar_from_fn(unit, tg, |x, t| x + t);
    push_map(&mut cat, ncl2_map(&wh, T::lit(0.3), &nk)?.map, ncl2.clone());

    let wm = wh.as_matrix().clone();
    let bound = wdiag.iter().copied().sum::<T>();
    let tr = PositiveMap::new("tr(.W)", Codomain::Scalar, move |a: &ComplexMatrix<T>| {
        CStarValue::Scalar(a.trace_product(&wm))
    })
    .with_bound(bound)
    .with_kind(MapKind::TraceWeighted(wh));
    push_map(&mut cat, tr, ncl2.clone());

    let module = PositiveMap::new("module b*a", Codomain::Mat(n), |a: &ComplexMatrix<T>| CStarValue::Mat(a.clone()))
        .with_bound(T::one());
    push_map(&mut cat, module, ncl2);

    Ok(cat)
}

/// Random matrix-valued grid function with complex Gaussian entries.
pub fn random_matfn<T: Real>(rng: &mut dyn RngCore, points: usize, d: usize) -> MatFn<T> {
    MatFn((0..points).map(|_| ComplexMatrix::from_fn(d, d, |_, _| random_complex(rng))).collect())
}

/// Random grid function with complex Gaussian samples.
pub fn random_gridfn<T: Real>(rng: &mut dyn RngCore, points: usize) -> GridFn<T> {
    GridFn((0..points).map(|_| random_complex(rng)).collect())
}

/// Zero test for values expected to vanish identically.
pub fn is_zero_value<T: Real>(v: &CStarValue<T>) -> bool {
    v.cnorm().is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::SeqFunModel;

    fn unit() -> Grid<f64> {
        Grid::new(0.0, 1.0, 11).unwrap()
    }

    #[test]
    fn weighted_sum_geometric() {
        let g = unit();
        let n = 6;
        let model = SeqFunModel::new(g, n).unwrap();
        let w: Vec<Vec<f64>> = (1..=n).map(|k| vec![0.5f64.powi(k as i32); g.points()]).collect();
        let omega = weighted_sum_map(&w, &model).unwrap();
        let f = model.constants(&vec![creal(1.0); n]);
        let v = omega.eval(&f);
        for s in v.samples().unwrap() {
            assert!((s.re - (1.0 - 0.5f64.powi(n as i32))).abs() < 1e-15);
        }
        let mut bad = w.clone();
        bad[2][3] = -1e-3;
        assert!(matches!(weighted_sum_map(&bad, &model), Err(CatalogError::InvalidWeight(_))));
    }

    #[test]
    fn weighted_form_indicator() {
        let model = GridL2Model::<f64>::new(2.0, 401).unwrap();
        let v: Vec<f64> = model.grid().nodes().iter().map(|&x| if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 }).collect();
        let s = weighted_form(&v, &model).unwrap();
        let one = GridFn::from_real(vec![1.0; 401]);
        // Two jumps, each contributing at most h/2 of trapezoid error.
        assert!((s.eval(&one, &one).as_scalar().unwrap().re - 1.0).abs() <= model.grid().spacing() + 1e-12);
    }

    #[test]
    fn kernel_form_linear_fixture() {
        let g = Grid::<f64>::new(0.0, 1.0, 2001).unwrap();
        let spec = KernelSpec::scalar_from_fn(g, g, |x, t| x * t);
        let s = kernel_form(&spec).unwrap();
        let one = GridFn::from_real(vec![1.0; 2001]);
        let v = s.eval(&one, &one);
        for (x, z) in g.nodes().iter().zip(v.samples().unwrap()) {
            assert!((z.re - x / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_kernel_linear_fixture() {
        let g = unit();
        let d = 2;
        let spec = KernelSpec::operator_from_fn(g, g, |x, _| ComplexMatrix::identity(d).scale_real(x))
            .with_operator_dx(|_, _| ComplexMatrix::identity(d));
        let ok = OperatorKernel::new(spec, 1e-8).unwrap();
        assert!(ok.positivity_action);
        let f = MatFn::constant(g.points(), &ComplexMatrix::identity(d));
        let v = ok.eval(&f, &f).unwrap();
        let CStarValue::MatFunc { samples, .. } = v else { panic!() };
        for (x, m) in g.nodes().iter().zip(&samples) {
            assert!(m.max_abs_diff(&ComplexMatrix::identity(d).scale_real(*x)) < 1e-14);
        }
        let dr = ok.derivative_check(&f, &f).unwrap();
        assert!(dr.max_defect < 1e-12);
        let bad = MatFn(vec![ComplexMatrix::zeros(2, 3); g.points()]);
        assert!(matches!(ok.eval(&bad, &f), Err(CatalogError::Shape(_))));
    }

    #[test]
    fn schatten_trace_single_term() {
        let model = SchattenModel::new(4, 3.0).unwrap();
        let g = unit();
        let lambda: Vec<f64> = (1..=4).map(|j| 0.5f64.powi(j)).collect();
        let ones = vec![vec![1.0; g.points()]; 4];
        let m = schatten_trace_map(&lambda, &ones, g, &model).unwrap();
        let a = ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0, 0.0]);
        for s in m.map.eval(&a).samples().unwrap() {
            assert!((s.re - 0.5).abs() < 1e-15);
        }
        assert!(schatten_trace_map(&[0.5, 0.5, 0.2, 0.1], &ones, g, &model).is_err());
    }

    #[test]
    fn ncl2_diagonal_fixture() {
        let w = HermitianMatrix::<f64>::from_real_diag(&[0.9, 0.5, 0.1]);
        let xg = Grid::new(0.0, 0.9, 10).unwrap();
        let k = KernelSpec::scalar_from_fn(xg, xg, |x, t| x + t);
        let m = ncl2_map(&w, 0.3, &k).unwrap();
        assert!(m.projection.max_abs_diff(&ComplexMatrix::from_real_diag(&[1.0, 1.0, 0.0])) < 1e-14);
        let e11 = ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0]);
        let eye = ComplexMatrix::identity(3);
        let a = m.map.eval(&e11);
        let b = m.map.eval(&eye);
        for ((x, u), v) in xg.nodes().iter().zip(a.samples().unwrap()).zip(b.samples().unwrap()) {
            assert!((u.re - (x + 0.9)).abs() < 1e-12);
            assert!((v.re - (3.0 * x + 1.5)).abs() < 1e-12);
        }
        let neg = KernelSpec::scalar_from_fn(xg, xg, |x, t| x - t);
        assert!(matches!(ncl2_map(&w, 0.3, &neg), Err(CatalogError::InvalidKernel(_))));
    }

    #[test]
    fn genint_matches_kernel_form() {
        let g = Grid::<f64>::new(0.0, 1.0, 21).unwrap();
        let k = KernelSpec::scalar_from_fn(g, g, |x, t| (-(x - t) * (x - t)).exp());
        let f = GridFn::from_real(g.nodes().iter().map(|t| 1.0 + t));
        let h = GridFn::from_real(g.nodes().iter().map(|t| (3.0 * t).cos()));
        assert!(genint_consistency(&k, &f, &h).unwrap() < 1e-12);
    }
}
