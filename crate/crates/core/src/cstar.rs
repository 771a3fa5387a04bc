//! Values of the codomain C*-algebra and positive sesquilinear maps into it.
//!
//! A codomain is one of: complex scalars, continuous functions sampled on a
//! uniform [`Grid`], square matrices, or matrix-valued functions sampled on a
//! grid. Function-valued norms are grid maxima and positivity is checked
//! sample by sample.

use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::element::{lin_comb, Element};
use crate::linalg::{operator_norm, ComplexMatrix, HermitianMatrix, LinalgError};
use crate::models::AlgebraModel;
use crate::scalar::{creal, Real, C};

/// Relative singular-value threshold used to decide rank.
pub const RANK_RTOL: f64 = 1e-10;
/// Bound on `||S(v, v)||` for vectors reported as null.
pub const NULL_DEFECT_TOL: f64 = 1e-8;
/// Pass threshold of the invariance check.
pub const INVARIANCE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CStarError {
    #[error("form is not positive: {0}")]
    NotPositive(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Uniform grid `start = x_0 < x_1 < ... < x_{points-1} = end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid<T: Real> {
    start: T,
    end: T,
    points: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(start: T, end: T, points: usize) -> Result<Self, CStarError> {
        if !(start.is_finite() && end.is_finite()) || !(start < end) {
            return Err(CStarError::InvalidGrid(format!(
                "need finite start < end, got [{start}, {end}]"
            )));
        }
        if points < 2 {
            return Err(CStarError::InvalidGrid(format!("need at least 2 points, got {points}")));
        }
        Ok(Self { start, end, points })
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn end(&self) -> T {
        self.end
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> T {
        (self.end - self.start) / T::from_usize(self.points - 1).unwrap()
    }

    pub fn node(&self, i: usize) -> T {
        if i + 1 == self.points {
            return self.end;
        }
        self.start + self.spacing() * T::from_usize(i).unwrap()
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.points).map(|i| self.node(i)).collect()
    }

    /// Trapezoidal weights `h/2, h, ..., h, h/2`.
    pub fn trapezoid_weights(&self) -> Vec<T> {
        let h = self.spacing();
        let half = h * T::lit(0.5);
        (0..self.points)
            .map(|i| if i == 0 || i + 1 == self.points { half } else { h })
            .collect()
    }

    /// Trapezoidal rule applied to samples on this grid.
    pub fn integrate(&self, samples: &[C<T>]) -> C<T> {
        assert_eq!(samples.len(), self.points, "sample count does not match grid");
        let h = self.spacing();
        let half = T::lit(0.5);
        let n = self.points;
        let inner = samples[1..n - 1].iter().fold(C::<T>::zero(), |acc, &z| acc + z);
        (inner + (samples[0] + samples[n - 1]).scale(half)).scale(h)
    }

    /// Index of the interval containing `x` and the barycentric weight of
    /// its right end; `x` is clamped into `[start, end]`.
    pub fn locate(&self, x: T) -> (usize, T) {
        let h = self.spacing();
        let u = ((x - self.start) / h).max(T::zero());
        let i = u.floor().to_usize().unwrap_or(0).min(self.points - 2);
        let frac = (u - T::from_usize(i).unwrap()).max(T::zero()).min(T::one());
        (i, frac)
    }
}

/// Shape of the codomain algebra.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Codomain<T: Real> {
    Scalar,
    Func(Grid<T>),
    Mat(usize),
    MatFunc(Grid<T>, usize),
}

impl<T: Real> Codomain<T> {
    pub fn is_commutative(&self) -> bool {
        match self {
            Codomain::Scalar | Codomain::Func(_) => true,
            Codomain::Mat(d) | Codomain::MatFunc(_, d) => *d == 1,
        }
    }

    pub fn zero(&self) -> CStarValue<T> {
        match self {
            Codomain::Scalar => CStarValue::Scalar(C::zero()),
            Codomain::Func(g) => CStarValue::Func {
                grid: *g,
                samples: vec![C::zero(); g.points()],
            },
            Codomain::Mat(d) => CStarValue::Mat(ComplexMatrix::zeros(*d, *d)),
            Codomain::MatFunc(g, d) => CStarValue::MatFunc {
                grid: *g,
                samples: vec![ComplexMatrix::zeros(*d, *d); g.points()],
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            Codomain::Scalar => "scalar".into(),
            Codomain::Func(g) => format!("C(grid[{}])", g.points()),
            Codomain::Mat(d) => format!("M_{d}"),
            Codomain::MatFunc(g, d) => format!("C(grid[{}], M_{d})", g.points()),
        }
    }
}

/// An element of the codomain C*-algebra.
#[derive(Clone, Debug, PartialEq)]
pub enum CStarValue<T: Real> {
    Scalar(C<T>),
    Func { grid: Grid<T>, samples: Vec<C<T>> },
    Mat(ComplexMatrix<T>),
    MatFunc { grid: Grid<T>, samples: Vec<ComplexMatrix<T>> },
}

impl<T: Real> CStarValue<T> {
    pub fn func(grid: Grid<T>, samples: Vec<C<T>>) -> Self {
        assert_eq!(grid.points(), samples.len(), "sample count does not match grid");
        CStarValue::Func { grid, samples }
    }

    pub fn codomain(&self) -> Codomain<T> {
        match self {
            CStarValue::Scalar(_) => Codomain::Scalar,
            CStarValue::Func { grid, .. } => Codomain::Func(*grid),
            CStarValue::Mat(m) => Codomain::Mat(m.rows()),
            CStarValue::MatFunc { grid, samples } => Codomain::MatFunc(*grid, samples[0].rows()),
        }
    }

    /// The C*-norm: modulus, grid supremum, operator norm, or supremum of
    /// operator norms.
    pub fn cnorm(&self) -> T {
        match self {
            CStarValue::Scalar(z) => z.norm(),
            CStarValue::Func { samples, .. } => samples.iter().fold(T::zero(), |m, z| m.max(z.norm())),
            CStarValue::Mat(m) => mat_norm(m),
            CStarValue::MatFunc { samples, .. } => samples.iter().fold(T::zero(), |acc, m| acc.max(mat_norm(m))),
        }
    }

    /// The involution of the codomain.
    pub fn star(&self) -> Self {
        match self {
            CStarValue::Scalar(z) => CStarValue::Scalar(z.conj()),
            CStarValue::Func { grid, samples } => CStarValue::Func {
                grid: *grid,
                samples: samples.iter().map(|z| z.conj()).collect(),
            },
            CStarValue::Mat(m) => CStarValue::Mat(m.adjoint()),
            CStarValue::MatFunc { grid, samples } => CStarValue::MatFunc {
                grid: *grid,
                samples: samples.iter().map(|m| m.adjoint()).collect(),
            },
        }
    }

    /// Product in the codomain algebra.
    pub fn mul(&self, other: &Self) -> Self {
        match (self, other) {
            (CStarValue::Scalar(a), CStarValue::Scalar(b)) => CStarValue::Scalar(a * b),
            (CStarValue::Func { grid, samples: a }, CStarValue::Func { samples: b, .. }) => CStarValue::Func {
                grid: *grid,
                samples: a.iter().zip(b).map(|(x, y)| x * y).collect(),
            },
            (CStarValue::Mat(a), CStarValue::Mat(b)) => CStarValue::Mat(a.matmul(b)),
            (CStarValue::MatFunc { grid, samples: a }, CStarValue::MatFunc { samples: b, .. }) => {
                CStarValue::MatFunc {
                    grid: *grid,
                    samples: a.iter().zip(b).map(|(x, y)| x.matmul(y)).collect(),
                }
            }
            _ => panic!("codomain mismatch in product"),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b, |a, b| a - b)
    }

    pub fn scale(&self, alpha: C<T>) -> Self {
        match self {
            CStarValue::Scalar(z) => CStarValue::Scalar(z * alpha),
            CStarValue::Func { grid, samples } => CStarValue::Func {
                grid: *grid,
                samples: samples.iter().map(|z| z * alpha).collect(),
            },
            CStarValue::Mat(m) => CStarValue::Mat(m.scale(alpha)),
            CStarValue::MatFunc { grid, samples } => CStarValue::MatFunc {
                grid: *grid,
                samples: samples.iter().map(|m| m.scale(alpha)).collect(),
            },
        }
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(C<T>, C<T>) -> C<T>,
        g: impl Fn(&ComplexMatrix<T>, &ComplexMatrix<T>) -> ComplexMatrix<T>,
    ) -> Self {
        match (self, other) {
            (CStarValue::Scalar(a), CStarValue::Scalar(b)) => CStarValue::Scalar(f(*a, *b)),
            (CStarValue::Func { grid, samples: a }, CStarValue::Func { samples: b, .. }) => {
                assert_eq!(a.len(), b.len(), "grid mismatch");
                CStarValue::Func {
                    grid: *grid,
                    samples: a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect(),
                }
            }
            (CStarValue::Mat(a), CStarValue::Mat(b)) => CStarValue::Mat(g(a, b)),
            (CStarValue::MatFunc { grid, samples: a }, CStarValue::MatFunc { samples: b, .. }) => {
                assert_eq!(a.len(), b.len(), "grid mismatch");
                CStarValue::MatFunc {
                    grid: *grid,
                    samples: a.iter().zip(b).map(|(x, y)| g(x, y)).collect(),
                }
            }
            (a, b) => panic!(
                "codomain mismatch: {} vs {}",
                a.codomain().label(),
                b.codomain().label()
            ),
        }
    }

    /// Membership in the positive cone, up to `tol * max(1, ||v||)`.
    pub fn is_positive(&self, tol: T) -> bool {
        let tol = tol * T::one().max(self.cnorm());
        let scalar_ok = |z: &C<T>| z.re >= -tol && z.im.abs() <= tol;
        match self {
            CStarValue::Scalar(z) => scalar_ok(z),
            CStarValue::Func { samples, .. } => samples.iter().all(scalar_ok),
            CStarValue::Mat(m) => mat_positive(m, tol),
            CStarValue::MatFunc { samples, .. } => samples.iter().all(|m| mat_positive(m, tol)),
        }
    }

    /// Faithful positive functional used to scalarize Gram matrices: the
    /// identity, the sum of samples, the trace, or the sum of traces.
    pub fn tau(&self) -> C<T> {
        match self {
            CStarValue::Scalar(z) => *z,
            CStarValue::Func { samples, .. } => samples.iter().fold(C::zero(), |a, z| a + z),
            CStarValue::Mat(m) => m.trace(),
            CStarValue::MatFunc { samples, .. } => samples.iter().fold(C::zero(), |a, m| a + m.trace()),
        }
    }

    /// Smallest real part (scalar/function) or smallest eigenvalue (matrix).
    pub fn min_spectrum(&self) -> T {
        match self {
            CStarValue::Scalar(z) => z.re,
            CStarValue::Func { samples, .. } => samples.iter().fold(T::infinity(), |m, z| m.min(z.re)),
            CStarValue::Mat(m) => herm_min_eig(m),
            CStarValue::MatFunc { samples, .. } => samples.iter().fold(T::infinity(), |acc, m| acc.min(herm_min_eig(m))),
        }
    }

    pub fn as_scalar(&self) -> Option<C<T>> {
        match self {
            CStarValue::Scalar(z) => Some(*z),
            _ => None,
        }
    }

    pub fn samples(&self) -> Option<&[C<T>]> {
        match self {
            CStarValue::Func { samples, .. } => Some(samples),
            _ => None,
        }
    }
}

fn mat_norm<T: Real>(m: &ComplexMatrix<T>) -> T {
    if m.rows() == 1 && m.cols() == 1 {
        return m[(0, 0)].norm();
    }
    operator_norm(m)
}

fn herm_min_eig<T: Real>(m: &ComplexMatrix<T>) -> T {
    match HermitianMatrix::with_tol(m.clone(), T::infinity()) {
        Ok(h) => h.min_eigenvalue(),
        Err(_) => T::nan(),
    }
}

fn mat_positive<T: Real>(m: &ComplexMatrix<T>, tol: T) -> bool {
    if m.hermitian_defect() > tol {
        return false;
    }
    herm_min_eig(m) >= -tol
}

type SesqFn<T, E> = dyn Fn(&E, &E) -> CStarValue<T> + Send + Sync;
type LinFn<T, E> = dyn Fn(&E) -> CStarValue<T> + Send + Sync;

/// A positive sesquilinear map `S: A x A -> C`, linear in the first slot.
pub struct PosSesqForm<T: Real, E> {
    name: String,
    eval: Arc<SesqFn<T, E>>,
    codomain: Codomain<T>,
    commutative: bool,
    declared_bound: Option<T>,
    bound_norm: Option<String>,
}

impl<T: Real, E> Clone for PosSesqForm<T, E> {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            eval: Arc::clone(&self.eval),
            codomain: self.codomain.clone(),
            commutative: self.commutative,
            declared_bound: self.declared_bound,
            bound_norm: self.bound_norm.clone(),
        }
    }
}

impl<T: Real, E> fmt::Debug for PosSesqForm<T, E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PosSesqForm")
            .field("name", &self.name)
            .field("codomain", &self.codomain.label())
            .field("commutative", &self.commutative)
            .field("declared_bound", &self.declared_bound)
            .finish()
    }
}

/// Outcome of the constant-2 and Cauchy-Schwarz bounds for one pair.
#[derive(Clone, Debug, Serialize)]
pub struct SchwarzReport<T: Real> {
    pub lhs: T,
    pub rhs_general: T,
    pub rhs_cs: T,
    pub pass_general: bool,
    /// Evaluated only for commutative codomains.
    pub pass_cs: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TriangleReport<T: Real> {
    pub lhs: T,
    pub rhs_quasi: T,
    pub rhs_plain: T,
    pub pass_quasi: bool,
    /// Evaluated only for commutative codomains.
    pub pass_plain: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport<T: Real> {
    pub samples: usize,
    pub max_defect: T,
    pub pass: bool,
}

/// Basis of `N_S` in coordinates of the supplied algebra basis.
#[derive(Clone, Debug)]
pub struct NullSpace<T: Real> {
    pub coords: Vec<Vec<C<T>>>,
    /// Scalarized Gram matrix, `G[j][i] = tau(S(b_i, b_j))`.
    pub gram: ComplexMatrix<T>,
    pub gram_eigenvalues: Vec<T>,
    pub rank: usize,
    /// `max ||S(v, v)||` over returned vectors.
    pub max_defect: T,
}

impl<T: Real> NullSpace<T> {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl<T: Real, E: Element<T>> PosSesqForm<T, E> {
    pub fn new(
        name: impl Into<String>,
        codomain: Codomain<T>,
        eval: impl Fn(&E, &E) -> CStarValue<T> + Send + Sync + 'static,
    ) -> Self {
        let commutative = codomain.is_commutative();
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            codomain,
            commutative,
            declared_bound: None,
            bound_norm: None,
        }
    }

    /// Declares `||S(a, b)|| <= M ||a|| ||b||` with respect to the named norm.
    pub fn with_bound(mut self, bound: T, norm: impl Into<String>) -> Self {
        self.declared_bound = Some(bound);
        self.bound_norm = Some(norm.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn codomain(&self) -> &Codomain<T> {
        &self.codomain
    }

    pub fn is_commutative(&self) -> bool {
        self.commutative
    }

    pub fn declared_bound(&self) -> Option<T> {
        self.declared_bound
    }

    pub fn bound_norm(&self) -> Option<&str> {
        self.bound_norm.as_deref()
    }

    pub fn eval(&self, a: &E, b: &E) -> CStarValue<T> {
        (self.eval)(a, b)
    }

    /// `sqrt(||S(a, a)||)`; errors when `S(a, a)` is not positive.
    pub fn quasi_norm(&self, a: &E) -> Result<T, CStarError> {
        let v = self.eval(a, a);
        if !v.is_positive(T::lit(1e-10)) {
            return Err(CStarError::NotPositive(format!(
                "{}: S(a, a) has spectrum down to {:e}",
                self.name,
                v.min_spectrum()
            )));
        }
        Ok(v.cnorm().sqrt())
    }

    fn unchecked_norm(&self, a: &E) -> T {
        self.eval(a, a).cnorm().sqrt()
    }

    /// Constant-2 bound `||S(a,b)|| <= 2 ||a||_S ||b||_S`, and the plain
    /// Cauchy-Schwarz bound when the codomain is commutative.
    pub fn check_schwarz(&self, a: &E, b: &E, rtol: T) -> SchwarzReport<T> {
        let lhs = self.eval(a, b).cnorm();
        let rhs_cs = self.unchecked_norm(a) * self.unchecked_norm(b);
        let rhs_general = T::lit(2.0) * rhs_cs;
        let slack = |rhs: T| lhs <= rhs * (T::one() + rtol) + T::lit(1e-14);
        SchwarzReport {
            lhs,
            rhs_general,
            rhs_cs,
            pass_general: slack(rhs_general),
            pass_cs: self.commutative.then(|| slack(rhs_cs)),
        }
    }

    /// Quasi-triangle bound `||a+b||_S <= sqrt(2)(||a||_S + ||b||_S)`, and the
    /// plain triangle inequality when the codomain is commutative.
    pub fn check_triangle(&self, a: &E, b: &E, rtol: T) -> TriangleReport<T> {
        let lhs = self.unchecked_norm(&a.add(b));
        let rhs_plain = self.unchecked_norm(a) + self.unchecked_norm(b);
        let rhs_quasi = T::SQRT_2() * rhs_plain;
        let slack = |rhs: T| lhs <= rhs * (T::one() + rtol) + T::lit(1e-14);
        TriangleReport {
            lhs,
            rhs_quasi,
            rhs_plain,
            pass_quasi: slack(rhs_quasi),
            pass_plain: self.commutative.then(|| slack(rhs_plain)),
        }
    }

    /// Defect of `S(alpha a + beta b, gamma c) = conj(gamma)(alpha S(a,c) + beta S(b,c))`
    /// together with the Hermitian symmetry defect `||S(b,a) - S(a,b)*||`.
    pub fn sesquilinearity_defect(
        &self,
        (a, b, c): (&E, &E, &E),
        (alpha, beta, gamma): (C<T>, C<T>, C<T>),
    ) -> (T, T) {
        let lhs = self.eval(&a.scale(alpha).add(&b.scale(beta)), &c.scale(gamma));
        let rhs = self
            .eval(a, c)
            .scale(alpha)
            .add(&self.eval(b, c).scale(beta))
            .scale(gamma.conj());
        let herm = self.eval(b, a).sub(&self.eval(a, b).star()).cnorm();
        (lhs.sub(&rhs).cnorm(), herm)
    }

    /// `||S(ax, y) - S(x, a* y)||` for one triple.
    pub fn invariance_defect<M>(&self, model: &M, a: &E, x: &E, y: &E) -> Result<T, CStarError>
    where
        M: AlgebraModel<T, Elem = E>,
    {
        let ax = model
            .left_mul(a, x)
            .ok_or_else(|| CStarError::Sampling(format!("{}: product a x undefined", model.name())))?;
        let ay = model
            .left_mul(&a.star(), y)
            .ok_or_else(|| CStarError::Sampling(format!("{}: product a* y undefined", model.name())))?;
        Ok(self.eval(&ax, y).sub(&self.eval(x, &ay)).cnorm())
    }

    /// Samples `a` from `A` and `x, y` from the core `A_0`, and reports the
    /// largest invariance defect.
    pub fn check_invariance<M, R>(&self, model: &M, samples: usize, rng: &mut R) -> Result<InvarianceReport<T>, CStarError>
    where
        M: AlgebraModel<T, Elem = E>,
        R: Rng + ?Sized,
    {
        let mut max_defect = T::zero();
        for _ in 0..samples {
            let a = model.sample(rng);
            let x = model.sample_core(rng);
            let y = model.sample_core(rng);
            max_defect = max_defect.max(self.invariance_defect(model, &a, &x, &y)?);
        }
        Ok(InvarianceReport {
            samples,
            max_defect,
            pass: max_defect <= T::lit(INVARIANCE_TOL),
        })
    }

    /// Scalarized Gram matrix `G[j][i] = tau(S(b_i, b_j))` of a basis.
    pub fn gram(&self, basis: &[E]) -> ComplexMatrix<T> {
        let n = basis.len();
        let mut g = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.eval(&basis[i], &basis[j]).tau();
                g[(j, i)] = v;
                g[(i, j)] = v.conj();
            }
        }
        g
    }

    /// Basis of `N_S = {a : S(a, a) = 0}` inside `span(basis)`, computed as
    /// the kernel of the scalarized Gram matrix.
    pub fn null_space(&self, basis: &[E]) -> Result<NullSpace<T>, CStarError> {
        if basis.is_empty() {
            return Err(CStarError::Sampling("empty basis".into()));
        }
        let gram = self.gram(basis);
        let herm = HermitianMatrix::with_tol(gram.clone(), T::infinity())?;
        let eig = herm.eigh();
        let top = eig.values.iter().fold(T::zero(), |m, &l| m.max(l.abs()));
        let floor = eig.values[0];
        if floor < -T::lit(1e-9) * T::one().max(top) {
            return Err(CStarError::NotPositive(format!(
                "{}: Gram matrix has eigenvalue {floor:e}",
                self.name
            )));
        }
        let cut = T::lit(RANK_RTOL) * top;
        let n = basis.len();
        let mut coords = Vec::new();
        for (k, &l) in eig.values.iter().enumerate() {
            if l <= cut {
                coords.push(eig.vectors.col_vec(k));
            }
        }
        let mut max_defect = T::zero();
        for v in &coords {
            let elem = lin_comb(v, basis);
            max_defect = max_defect.max(self.eval(&elem, &elem).cnorm());
        }
        Ok(NullSpace {
            rank: n - coords.len(),
            coords,
            gram,
            gram_eigenvalues: eig.values,
            max_defect,
        })
    }
}

/// Structural description of a positive map, used where closed forms exist.
#[derive(Clone, Debug)]
pub enum MapKind<T: Real> {
    General,
    /// `a -> tr(a W)` with `W >= 0`.
    TraceWeighted(HermitianMatrix<T>),
}

/// A positive linear map `omega: A -> C`.
pub struct PositiveMap<T: Real, E> {
    name: String,
    eval: Arc<LinFn<T, E>>,
    codomain: Codomain<T>,
    declared_bound: Option<T>,
    kind: MapKind<T>,
}

impl<T: Real, E> Clone for PositiveMap<T, E> {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            eval: Arc::clone(&self.eval),
            codomain: self.codomain.clone(),
            declared_bound: self.declared_bound,
            kind: self.kind.clone(),
        }
    }
}

impl<T: Real, E> fmt::Debug for PositiveMap<T, E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PositiveMap")
            .field("name", &self.name)
            .field("codomain", &self.codomain.label())
            .field("declared_bound", &self.declared_bound)
            .finish()
    }
}

impl<T: Real, E: Element<T>> PositiveMap<T, E> {
    pub fn new(
        name: impl Into<String>,
        codomain: Codomain<T>,
        eval: impl Fn(&E) -> CStarValue<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            codomain,
            declared_bound: None,
            kind: MapKind::General,
        }
    }

    /// Declares `||omega(d* c)|| <= M ||d|| ||c||` on the core.
    pub fn with_bound(mut self, bound: T) -> Self {
        self.declared_bound = Some(bound);
        self
    }

    pub fn with_kind(mut self, kind: MapKind<T>) -> Self {
        self.kind = kind;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn codomain(&self) -> &Codomain<T> {
        &self.codomain
    }

    pub fn declared_bound(&self) -> Option<T> {
        self.declared_bound
    }

    pub fn kind(&self) -> &MapKind<T> {
        &self.kind
    }

    pub fn eval(&self, a: &E) -> CStarValue<T> {
        (self.eval)(a)
    }

    /// Pointwise sum `omega_1 + omega_2`, with bound `M_1 + M_2` when both
    /// are declared.
    pub fn sum(&self, other: &Self) -> Self {
        let (f, g) = (Arc::clone(&self.eval), Arc::clone(&other.eval));
        let declared_bound = match (self.declared_bound, other.declared_bound) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Self {
            name: format!("{} + {}", self.name, other.name),
            eval: Arc::new(move |a| f(a).add(&g(a))),
            codomain: self.codomain.clone(),
            declared_bound,
            kind: MapKind::General,
        }
    }

    /// The induced form `S(a, b) = omega(b* a)`.
    pub fn induced_form<M>(&self, model: &M) -> PosSesqForm<T, E>
    where
        M: AlgebraModel<T, Elem = E>,
    {
        let f = Arc::clone(&self.eval);
        let m = model.clone();
        let mut form = PosSesqForm::new(
            format!("{} (induced)", self.name),
            self.codomain.clone(),
            move |a: &E, b: &E| f(&m.product_unchecked(&b.star(), a)),
        );
        if let Some(bound) = self.declared_bound {
            form = form.with_bound(bound, model.norm_name());
        }
        form
    }

    /// `||omega(d* c)|| / (||d|| ||c||)` for one pair; the quantity bounded
    /// by the declared constant.
    pub fn bound_ratio<M>(&self, model: &M, c: &E, d: &E) -> T
    where
        M: AlgebraModel<T, Elem = E>,
    {
        let denom = model.norm(c) * model.norm(d);
        if denom.is_zero() {
            return T::zero();
        }
        self.eval(&model.product_unchecked(&d.star(), c)).cnorm() / denom
    }
}

/// Scalar value helper.
pub fn scalar<T: Real>(re: T) -> CStarValue<T> {
    CStarValue::Scalar(creal(re))
}
