//! Finite truncations of the quasi *-algebras `(A, A_0)`, each with its
//! norm, core predicate and nested right approximate identity.
//!
//! Every finite matrix algebra is unital, so non-unitality is modeled by
//! truncation: the top element of the identity schedule is the truncation
//! horizon and residuals are measured across levels.

use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::cstar::{CStarError, Grid, PosSesqForm};
use crate::element::{Element, GridFn, SeqFn};
use crate::linalg::{
    schatten_norm, spectral_projection, ComplexMatrix, HermitianMatrix, LinalgError,
};
use crate::scalar::{cplx, creal, Real, C};

/// Tolerance for the strong idempotency defects `||e_m e_n - e_m||`.
pub const IDEMPOTENCY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid approximate identity: {0}")]
    InvalidIdentity(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    CStar(#[from] CStarError),
}

/// A finite model of a quasi *-algebra `(A, A_0)`.
///
/// `product_unchecked` is the truncated product, always computable; the
/// checked products only return a value when one factor lies in the core.
pub trait AlgebraModel<T: Real>: Clone + Send + Sync + 'static {
    type Elem: Element<T>;

    fn name(&self) -> String;
    fn norm_name(&self) -> String;
    fn norm(&self, a: &Self::Elem) -> T;
    fn in_core(&self, a: &Self::Elem) -> bool;
    fn product_unchecked(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// Nested approximate identity `e_1 <= e_2 <= ...`.
    fn identity(&self) -> &[Self::Elem];
    /// Basis of the truncated `A`.
    fn basis(&self) -> Vec<Self::Elem>;
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;
    fn sample_core<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;
    /// Truncation parameters for reports.
    fn params(&self) -> Vec<(String, f64)>;

    fn product(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Self::Elem> {
        (self.in_core(a) || self.in_core(b)).then(|| self.product_unchecked(a, b))
    }

    /// `a x` for `x` in the core.
    fn left_mul(&self, a: &Self::Elem, x: &Self::Elem) -> Option<Self::Elem> {
        self.in_core(x).then(|| self.product_unchecked(a, x))
    }

    /// `x a` for `x` in the core.
    fn right_mul(&self, x: &Self::Elem, a: &Self::Elem) -> Option<Self::Elem> {
        self.in_core(x).then(|| self.product_unchecked(x, a))
    }

    /// Basis elements lying in `A_0`.
    fn core_basis(&self) -> Vec<Self::Elem> {
        self.basis().into_iter().filter(|b| self.in_core(b)).collect()
    }

    fn top_identity(&self) -> &Self::Elem {
        self.identity().last().expect("identity schedule is never empty")
    }
}

fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Complex Gaussian with independent standard normal parts.
pub fn random_complex<T: Real, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    cplx(normal(rng), normal(rng))
}

pub fn random_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(rows, cols, |_, _| random_complex(rng))
}

/// `G G*` for a Gaussian `G`.
pub fn random_psd<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix<T> {
    HermitianMatrix::gram(&random_matrix(rng, n, n).adjoint())
}

/// Haar-like unitary from Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix<T> {
    let g = random_matrix::<T, _>(rng, n, n);
    let mut cols: Vec<Vec<C<T>>> = Vec::with_capacity(n);
    for c in 0..n {
        let mut v = g.col_vec(c);
        for _ in 0..2 {
            for q in &cols {
                let dot = q.iter().zip(&v).fold(C::<T>::zero(), |s, (a, b)| s + a.conj() * b);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi = *vi - dot * qi;
                }
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        cols.push(v.into_iter().map(|z| z / creal(nrm)).collect());
    }
    ComplexMatrix::from_fn(n, n, |r, c| cols[c][r])
}

/// Diagonal projection onto the first `m` of `n` basis vectors.
pub fn diagonal_projection<T: Real>(n: usize, m: usize) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(n, n, |r, c| if r == c && r < m { C::from(T::one()) } else { C::zero() })
}

fn matrix_units<T: Real>(n: usize) -> Vec<ComplexMatrix<T>> {
    (0..n * n).map(|k| ComplexMatrix::unit(n, k / n, k % n)).collect()
}

/// `B_p` truncated to `n x n` matrices with the Schatten `p`-norm; `A = A_0`.
#[derive(Clone, Debug)]
pub struct SchattenModel<T: Real> {
    n: usize,
    p: T,
    identity: Vec<ComplexMatrix<T>>,
}

impl<T: Real> SchattenModel<T> {
    pub fn new(n: usize, p: T) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(p >= T::one()) || p.is_infinite() {
            return Err(ModelError::InvalidParameter(format!("Schatten exponent must lie in [1, inf), got {p}")));
        }
        let identity = (1..=n).map(|m| diagonal_projection(n, m)).collect();
        Ok(Self { n, p, identity })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> T {
        self.p
    }
}

impl<T: Real> AlgebraModel<T> for SchattenModel<T> {
    type Elem = ComplexMatrix<T>;

    fn name(&self) -> String {
        format!("schatten(n={}, p={})", self.n, self.p)
    }
    fn norm_name(&self) -> String {
        format!("schatten-{}", self.p)
    }
    fn norm(&self, a: &ComplexMatrix<T>) -> T {
        schatten_norm(a, self.p).expect("exponent validated")
    }
    fn in_core(&self, _: &ComplexMatrix<T>) -> bool {
        true
    }
    fn product_unchecked(&self, a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        a.matmul(b)
    }
    fn identity(&self) -> &[ComplexMatrix<T>] {
        &self.identity
    }
    fn basis(&self) -> Vec<ComplexMatrix<T>> {
        matrix_units(self.n)
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix<T> {
        random_matrix(rng, self.n, self.n)
    }
    fn sample_core<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix<T> {
        self.sample(rng)
    }
    fn params(&self) -> Vec<(String, f64)> {
        vec![("n".into(), self.n as f64), ("p".into(), self.p.to_f64_lossy())]
    }
}

/// Noncommutative `L^2(rho)` with `rho` the trace, truncated to `n x n`
/// matrices with the Frobenius norm. The core is the same carrier flagged
/// as `L^2 ∩ L^inf`.
#[derive(Clone, Debug)]
pub struct NcL2Model<T: Real> {
    n: usize,
    identity: Vec<ComplexMatrix<T>>,
}

impl<T: Real> NcL2Model<T> {
    /// Diagonal projection family `P_1 <= ... <= P_n`.
    pub fn new(n: usize) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::InvalidParameter("dimension must be >= 1".into()));
        }
        Self::with_projections(n, (1..=n).map(|m| diagonal_projection(n, m)).collect())
    }

    /// Caller-supplied nested family; checks that each member is an
    /// orthogonal projection and that `P_m P_k = P_m` for `m <= k`.
    pub fn with_projections(n: usize, identity: Vec<ComplexMatrix<T>>) -> Result<Self, ModelError> {
        if n == 0 || identity.is_empty() {
            return Err(ModelError::InvalidParameter("need n >= 1 and a non-empty family".into()));
        }
        let tol = T::lit(1e-10);
        for (m, p) in identity.iter().enumerate() {
            if p.rows() != n || p.cols() != n {
                return Err(ModelError::InvalidIdentity(format!("member {m} is not {n}x{n}")));
            }
            if p.hermitian_defect() > tol || p.matmul(p).max_abs_diff(p) > tol {
                return Err(ModelError::InvalidIdentity(format!("member {m} is not an orthogonal projection")));
            }
        }
        for m in 0..identity.len() {
            for k in m..identity.len() {
                let defect = identity[m].matmul(&identity[k]).max_abs_diff(&identity[m]);
                if defect > tol {
                    return Err(ModelError::InvalidIdentity(format!(
                        "P_{} P_{} != P_{} (defect {defect:e})",
                        m + 1,
                        k + 1,
                        m + 1
                    )));
                }
            }
        }
        Ok(Self { n, identity })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

impl<T: Real> AlgebraModel<T> for NcL2Model<T> {
    type Elem = ComplexMatrix<T>;

    fn name(&self) -> String {
        format!("ncl2(n={})", self.n)
    }
    fn norm_name(&self) -> String {
        "frobenius".into()
    }
    fn norm(&self, a: &ComplexMatrix<T>) -> T {
        a.frobenius_norm()
    }
    fn in_core(&self, _: &ComplexMatrix<T>) -> bool {
        true
    }
    fn product_unchecked(&self, a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        a.matmul(b)
    }
    fn identity(&self) -> &[ComplexMatrix<T>] {
        &self.identity
    }
    fn basis(&self) -> Vec<ComplexMatrix<T>> {
        matrix_units(self.n)
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix<T> {
        random_matrix(rng, self.n, self.n)
    }
    fn sample_core<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix<T> {
        self.sample(rng)
    }
    fn params(&self) -> Vec<(String, f64)> {
        vec![("n".into(), self.n as f64)]
    }
}

/// `L^2` grid functions on `[-x_max, x_max]` with the trapezoidal norm.
///
/// The core consists of grid functions vanishing at both end nodes, i.e.
/// supported on a strict subinterval. The identity is `e_n = 1` on
/// `[-c_n, c_n]`, `c_n = n x_max / (N + 1)`, so that `e_N` stays in the
/// core; `N` is chosen so that consecutive cutoffs are one node apart.
#[derive(Clone, Debug)]
pub struct GridL2Model<T: Real> {
    grid: Grid<T>,
    weights: Vec<T>,
    cutoffs: Vec<T>,
    identity: Vec<GridFn<T>>,
}

impl<T: Real> GridL2Model<T> {
    pub fn new(x_max: T, points: usize) -> Result<Self, ModelError> {
        if !(x_max > T::zero()) || !x_max.is_finite() {
            return Err(ModelError::InvalidParameter(format!("x_max must be positive, got {x_max}")));
        }
        if points < 3 {
            return Err(ModelError::InvalidParameter(format!("need at least 3 grid points, got {points}")));
        }
        let grid = Grid::new(-x_max, x_max, points)?;
        let levels = (points - 1).div_ceil(2).saturating_sub(1).max(1);
        let h = grid.spacing();
        let slack = h * T::lit(1e-9);
        let nodes = grid.nodes();
        let mut cutoffs = Vec::with_capacity(levels);
        let mut identity = Vec::with_capacity(levels);
        for n in 1..=levels {
            let c = x_max * T::from_usize(n).unwrap() / T::from_usize(levels + 1).unwrap();
            let mut e = GridFn::from_real(nodes.iter().map(|&x| if x.abs() <= c + slack { T::one() } else { T::zero() }));
            e.0[0] = C::zero();
            e.0[points - 1] = C::zero();
            cutoffs.push(c);
            identity.push(e);
        }
        Ok(Self {
            weights: grid.trapezoid_weights(),
            grid,
            cutoffs,
            identity,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn cutoffs(&self) -> &[T] {
        &self.cutoffs
    }

    /// Trapezoidal `int |f|^2`.
    pub fn l2_sq(&self, f: &GridFn<T>) -> T {
        f.0.iter().zip(&self.weights).map(|(z, &w)| z.norm_sqr() * w).sum()
    }

    pub fn from_fn(&self, f: impl Fn(T) -> C<T>) -> GridFn<T> {
        GridFn(self.grid.nodes().into_iter().map(f).collect())
    }
}

impl<T: Real> AlgebraModel<T> for GridL2Model<T> {
    type Elem = GridFn<T>;

    fn name(&self) -> String {
        format!("grid-l2(x_max={}, points={})", self.grid.end(), self.grid.points())
    }
    fn norm_name(&self) -> String {
        "l2-trapezoid".into()
    }
    fn norm(&self, a: &GridFn<T>) -> T {
        self.l2_sq(a).sqrt()
    }
    fn in_core(&self, a: &GridFn<T>) -> bool {
        a.0[0].is_zero() && a.0[a.len() - 1].is_zero()
    }
    fn product_unchecked(&self, a: &GridFn<T>, b: &GridFn<T>) -> GridFn<T> {
        a.mul(b)
    }
    fn identity(&self) -> &[GridFn<T>] {
        &self.identity
    }
    fn basis(&self) -> Vec<GridFn<T>> {
        let n = self.grid.points();
        (0..n)
            .map(|i| GridFn::from_real((0..n).map(|j| if i == j { T::one() } else { T::zero() })))
            .collect()
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GridFn<T> {
        GridFn((0..self.grid.points()).map(|_| random_complex(rng)).collect())
    }
    fn sample_core<R: Rng + ?Sized>(&self, rng: &mut R) -> GridFn<T> {
        let mut f = self.sample(rng);
        let n = f.len();
        f.0[0] = C::zero();
        f.0[n - 1] = C::zero();
        f
    }
    fn params(&self) -> Vec<(String, f64)> {
        vec![
            ("x_max".into(), self.grid.end().to_f64_lossy()),
            ("points".into(), self.grid.points() as f64),
            ("levels".into(), self.identity.len() as f64),
        ]
    }
}

/// Length-`N` sequences of grid functions, the truncated standard module
/// over `C(Omega)`. The norm takes the supremum outside the sum:
/// `||f||_2 = sup_x (sum_n |f_n(x)|^2)^(1/2)`. `A = A_0`.
#[derive(Clone, Debug)]
pub struct SeqFunModel<T: Real> {
    grid: Grid<T>,
    len: usize,
    identity: Vec<SeqFn<T>>,
}

impl<T: Real> SeqFunModel<T> {
    pub fn new(grid: Grid<T>, len: usize) -> Result<Self, ModelError> {
        if len == 0 {
            return Err(ModelError::InvalidParameter("sequence length must be >= 1".into()));
        }
        let pts = grid.points();
        let identity = (1..=len)
            .map(|m| {
                SeqFn(
                    (0..len)
                        .map(|n| GridFn::constant(pts, if n < m { C::from(T::one()) } else { C::zero() }))
                        .collect(),
                )
            })
            .collect();
        Ok(Self { grid, len, identity })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sequence of constant functions.
    pub fn constants(&self, c: &[C<T>]) -> SeqFn<T> {
        assert_eq!(c.len(), self.len, "constant count does not match sequence length");
        SeqFn(c.iter().map(|&v| GridFn::constant(self.grid.points(), v)).collect())
    }
}

impl<T: Real> AlgebraModel<T> for SeqFunModel<T> {
    type Elem = SeqFn<T>;

    fn name(&self) -> String {
        format!("seqfun(N={}, points={})", self.len, self.grid.points())
    }
    fn norm_name(&self) -> String {
        "module-l2-sup".into()
    }
    fn norm(&self, a: &SeqFn<T>) -> T {
        (0..self.grid.points())
            .map(|x| a.0.iter().map(|f| f.0[x].norm_sqr()).sum::<T>())
            .fold(T::zero(), T::max)
            .sqrt()
    }
    fn in_core(&self, _: &SeqFn<T>) -> bool {
        true
    }
    fn product_unchecked(&self, a: &SeqFn<T>, b: &SeqFn<T>) -> SeqFn<T> {
        a.mul(b)
    }
    fn identity(&self) -> &[SeqFn<T>] {
        &self.identity
    }
    fn basis(&self) -> Vec<SeqFn<T>> {
        let pts = self.grid.points();
        let mut out = Vec::with_capacity(pts * self.len);
        for n in 0..self.len {
            for x in 0..pts {
                let mut s = SeqFn(vec![GridFn::constant(pts, C::zero()); self.len]);
                s.0[n].0[x] = C::from(T::one());
                out.push(s);
            }
        }
        out
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SeqFn<T> {
        let pts = self.grid.points();
        SeqFn((0..self.len).map(|_| GridFn((0..pts).map(|_| random_complex(rng)).collect())).collect())
    }
    fn sample_core<R: Rng + ?Sized>(&self, rng: &mut R) -> SeqFn<T> {
        self.sample(rng)
    }
    fn params(&self) -> Vec<(String, f64)> {
        vec![("N".into(), self.len as f64), ("points".into(), self.grid.points() as f64)]
    }
}

/// `P_n = E_W((cutoff_n, inf))` and the residuals `||W (I - P_n)||_p`.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectorSequence<T: Real> {
    pub cutoffs: Vec<T>,
    #[serde(skip)]
    pub projections: Vec<ComplexMatrix<T>>,
    pub ranks: Vec<usize>,
    pub residuals: Vec<T>,
    pub monotone: bool,
    /// `dim^(1/p) * last cutoff`, bounding the final residual.
    pub final_bound: T,
    pub final_within_bound: bool,
    pub warnings: Vec<String>,
}

/// Default cutoff schedule `1, 1/2, ..., 1/count`.
pub fn default_cutoffs<T: Real>(count: usize) -> Vec<T> {
    (1..=count).map(|n| T::one() / T::from_usize(n).unwrap()).collect()
}

pub fn projector_sequence<T: Real>(
    w: &HermitianMatrix<T>,
    p: T,
    cutoffs: &[T],
) -> Result<ProjectorSequence<T>, ModelError> {
    if cutoffs.is_empty() {
        return Err(ModelError::InvalidParameter("empty cutoff list".into()));
    }
    if cutoffs.iter().any(|&c| !(c > T::zero())) || cutoffs.windows(2).any(|s| !(s[1] < s[0])) {
        return Err(ModelError::InvalidParameter("cutoffs must be positive and strictly decreasing".into()));
    }
    if !(p >= T::one()) {
        return Err(ModelError::InvalidParameter(format!("Schatten exponent must lie in [1, inf], got {p}")));
    }
    if w.min_eigenvalue() < -T::lit(1e-10) {
        return Err(LinalgError::Domain("W is not PSD".into()).into());
    }
    let n = w.dim();
    let eye = ComplexMatrix::identity(n);
    let mut projections = Vec::with_capacity(cutoffs.len());
    let mut ranks = Vec::with_capacity(cutoffs.len());
    let mut residuals = Vec::with_capacity(cutoffs.len());
    let mut warnings = Vec::new();
    for &c in cutoffs {
        let sp = spectral_projection(w, c);
        if let Some(msg) = sp.warning {
            warnings.push(msg);
        }
        let tail = w.as_matrix().matmul(&(&eye - &sp.projection));
        residuals.push(schatten_norm(&tail, p)?);
        ranks.push(sp.rank);
        projections.push(sp.projection);
    }
    let slack = T::lit(1e-12);
    let monotone = residuals.windows(2).all(|s| s[1] <= s[0] + slack);
    let last = *cutoffs.last().unwrap();
    let final_bound = if p.is_infinite() {
        last
    } else {
        T::from_usize(n).unwrap().powf(T::one() / p) * last
    };
    let final_within_bound = *residuals.last().unwrap() <= final_bound + slack;
    Ok(ProjectorSequence {
        cutoffs: cutoffs.to_vec(),
        projections,
        ranks,
        residuals,
        monotone,
        final_bound,
        final_within_bound,
        warnings,
    })
}

/// How residuals `a - a e_m` are measured.
pub enum ResidualMode<'a, T: Real, E> {
    Norm,
    Form(&'a PosSesqForm<T, E>),
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualTrace<T: Real> {
    pub residuals: Vec<T>,
    /// Residuals are non-increasing from this (0-based) level on.
    pub monotone_from: usize,
    pub final_residual: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproximateIdentityReport<T: Real> {
    pub model: String,
    pub mode: String,
    pub traces: Vec<ResidualTrace<T>>,
    /// Largest `||e_m e_n - e_m||` over `m <= n` in the model norm.
    pub max_idempotency_defect: T,
    /// Largest `||a e_m|| / ||a||`; the continuity constant of right
    /// multiplication by the identity.
    pub right_mult_constant: T,
    pub tol: T,
    pub pass_final: bool,
    pub pass_idempotent: bool,
    pub pass: bool,
}

fn monotone_from<T: Real>(r: &[T]) -> usize {
    let slack = T::lit(1e-12);
    let mut start = r.len().saturating_sub(1);
    while start > 0 && r[start] <= r[start - 1] * (T::one() + slack) + slack {
        start -= 1;
    }
    start
}

pub fn check_approximate_identity<T: Real, M: AlgebraModel<T>>(
    model: &M,
    mode: ResidualMode<'_, T, M::Elem>,
    panel: &[M::Elem],
    tol: T,
) -> Result<ApproximateIdentityReport<T>, ModelError> {
    let ids = model.identity();
    let measure = |x: &M::Elem| -> Result<T, ModelError> {
        Ok(match &mode {
            ResidualMode::Norm => model.norm(x),
            ResidualMode::Form(s) => s.quasi_norm(x)?,
        })
    };
    let mut traces = Vec::with_capacity(panel.len());
    let mut right_mult_constant = T::zero();
    for a in panel {
        let na = model.norm(a);
        let mut residuals = Vec::with_capacity(ids.len());
        for e in ids {
            let ae = model
                .product(a, e)
                .ok_or_else(|| ModelError::InvalidIdentity("identity element outside the core".into()))?;
            if na > T::zero() {
                right_mult_constant = right_mult_constant.max(model.norm(&ae) / na);
            }
            residuals.push(measure(&a.sub(&ae))?);
        }
        traces.push(ResidualTrace {
            monotone_from: monotone_from(&residuals),
            final_residual: *residuals.last().unwrap(),
            residuals,
        });
    }
    let mut max_idempotency_defect = T::zero();
    for m in 0..ids.len() {
        for n in m..ids.len() {
            let d = model.product_unchecked(&ids[m], &ids[n]).sub(&ids[m]);
            max_idempotency_defect = max_idempotency_defect.max(model.norm(&d));
        }
    }
    let pass_final = traces.iter().all(|t| t.final_residual <= tol);
    let pass_idempotent = max_idempotency_defect <= T::lit(IDEMPOTENCY_TOL);
    Ok(ApproximateIdentityReport {
        model: model.name(),
        mode: match &mode {
            ResidualMode::Norm => format!("norm:{}", model.norm_name()),
            ResidualMode::Form(s) => format!("form:{}", s.name()),
        },
        traces,
        max_idempotency_defect,
        right_mult_constant,
        tol,
        pass_final,
        pass_idempotent,
        pass: pass_final && pass_idempotent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schatten_identity_residuals() {
        let m = SchattenModel::new(4, 3.0).unwrap();
        let t = ComplexMatrix::identity(4);
        let r = check_approximate_identity(&m, ResidualMode::Norm, &[t], 1e-12).unwrap();
        for (i, &res) in r.traces[0].residuals.iter().enumerate() {
            let expect = ((4 - (i + 1)) as f64).powf(1.0 / 3.0);
            assert!((res - expect).abs() < 1e-12, "m={} {res} vs {expect}", i + 1);
        }
        assert!(r.pass);
        assert_eq!(r.max_idempotency_defect, 0.0);
    }

    #[test]
    fn grid_model_levels_and_core() {
        let m = GridL2Model::new(4.0, 41).unwrap();
        assert_eq!(m.identity().len(), 19);
        assert!(m.in_core(m.top_identity()));
        // Each level adds exactly one node on each side.
        for (k, e) in m.identity().iter().enumerate() {
            let ones = e.0.iter().filter(|z| z.re == 1.0).count();
            assert_eq!(ones, 2 * (k + 1) + 1);
        }
    }

    #[test]
    fn seqfun_constant_tail() {
        let g = Grid::new(0.0, 1.0, 5).unwrap();
        let m = SeqFunModel::new(g, 4).unwrap();
        let c = [1.0, 0.5, -0.25, 2.0].map(creal);
        let f = m.constants(&c);
        let r = check_approximate_identity(&m, ResidualMode::Norm, &[f], 1e-12).unwrap();
        for (i, &res) in r.traces[0].residuals.iter().enumerate() {
            let tail: f64 = c[i + 1..].iter().map(|z| z.norm_sqr()).sum();
            assert!((res * res - tail).abs() < 1e-12);
        }
    }

    #[test]
    fn ncl2_rejects_non_nested_family() {
        let p1 = ComplexMatrix::<f64>::from_real_diag(&[1.0, 0.0]);
        let p2 = ComplexMatrix::<f64>::from_real_diag(&[0.0, 1.0]);
        assert!(matches!(
            NcL2Model::with_projections(2, vec![p1, p2]),
            Err(ModelError::InvalidIdentity(_))
        ));
    }

    #[test]
    fn projector_sequence_diagonal_table() {
        let w = HermitianMatrix::from_real_diag(&[1.0, 0.4, 0.05]);
        let s = projector_sequence(&w, 2.0, &[0.5, 1.0 / 3.0, 0.01]).unwrap();
        assert_eq!(s.ranks, vec![1, 2, 3]);
        let expect = [(0.4f64 * 0.4 + 0.05 * 0.05).sqrt(), 0.05, 0.0];
        for (r, e) in s.residuals.iter().zip(expect) {
            assert!((r - e).abs() < 1e-12);
        }
        assert!(s.monotone && s.final_within_bound);
    }

    #[test]
    fn projector_sequence_rejects_bad_cutoffs() {
        let w = HermitianMatrix::<f64>::identity(2);
        assert!(projector_sequence(&w, 2.0, &[0.1, 0.5]).is_err());
        let neg = HermitianMatrix::from_real_diag(&[1.0, -1.0]);
        assert!(projector_sequence(&neg, 2.0, &[0.5]).is_err());
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary::<f64, _>(&mut rng, 5);
        let uu = u.adjoint().matmul(&u);
        assert!(uu.max_abs_diff(&ComplexMatrix::identity(5)) < 1e-12);
    }
}
