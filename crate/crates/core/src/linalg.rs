//! Dense complex linear algebra: the carrier for every truncated algebra.
//!
//! Factorizations are deterministic (cyclic Jacobi sweeps, no random
//! starts), so two runs on the same input produce bit-identical output.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::{abs2, creal, Real, C};

/// Default absolute tolerance for positivity and idempotency checks.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Absolute tolerance for the Hermitian invariant of [`HermitianMatrix`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues this close to a spectral cut are treated as ties.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Real> ComplexMatrix<T> {
    /// Builds a matrix from row-major data, validating shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Shape(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(LinalgError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let m = Self { rows, cols, data };
        if let Some((r, c)) = m.first_non_finite() {
            return Err(LinalgError::NonFinite(r, c));
        }
        Ok(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(diag: &[C<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        let d: Vec<C<T>> = diag.iter().map(|&x| creal(x)).collect();
        Self::from_diag(&d)
    }

    /// Real matrix from nested rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[T]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self::from_fn(rows.len(), cols, |r, c| creal(rows[r][c]))
    }

    pub fn from_rows(rows: &[Vec<C<T>>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self::from_fn(rows.len(), cols, |r, c| rows[r][c])
    }

    /// Column vector.
    pub fn column(v: &[C<T>]) -> Self {
        Self::from_fn(v.len(), 1, |r, _| v[r])
    }

    /// Matrix unit `E_{rc}` in an `n x n` algebra.
    pub fn unit(n: usize, r: usize, c: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(r, c)] = C::one();
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C<T>] {
        &self.data
    }

    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
            .map(|i| (i / self.cols, i % self.cols))
    }

    pub fn is_finite(&self) -> bool {
        self.first_non_finite().is_none()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    pub fn scale(&self, alpha: C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * alpha).collect(),
        }
    }

    pub fn scale_real(&self, alpha: T) -> Self {
        self.scale(creal(alpha))
    }

    pub fn trace(&self) -> C<T> {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).fold(C::zero(), |acc, i| acc + self[(i, i)])
    }

    /// `tr(self * rhs)` without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> C<T> {
        assert!(self.cols == rhs.rows && self.rows == rhs.cols, "trace_product shape mismatch");
        let mut acc = C::zero();
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc = acc + self[(i, k)] * rhs[(k, i)];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&z| abs2(z)).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }

    /// `max |M - M*|` entrywise.
    pub fn hermitian_defect(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut d = T::zero();
        for r in 0..self.rows {
            for c in r..self.cols {
                d = d.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        d
    }

    /// `(M + M*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()).scale(half)
        })
    }

    /// Copies the rectangular block with top-left corner `(r0, c0)`.
    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |r, c| self[(r0 + r, c0 + c)])
    }

    /// Writes `block` with its top-left corner at `(r0, c0)`.
    pub fn set_submatrix(&mut self, r0: usize, c0: usize, block: &Self) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                self[(r0 + r, c0 + c)] = block[(r, c)];
            }
        }
    }

    pub fn col_vec(&self, c: usize) -> Vec<C<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn mat_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, v.len(), "mat_vec shape mismatch");
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .fold(C::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = C<T>;
    fn index(&self, (r, c): (usize, usize)) -> &C<T> {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C<T> {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Real> Neg for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn neg(self) -> ComplexMatrix<T> {
        self.scale_real(-T::one())
    }
}

/// Square matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix<T: Real> {
    base: ComplexMatrix<T>,
}

impl<T: Real> HermitianMatrix<T> {
    /// Accepts `m` when `max |m - m*| <= 1e-12`; the stored value is the
    /// exact Hermitian part.
    pub fn new(m: ComplexMatrix<T>) -> Result<Self, LinalgError> {
        Self::with_tol(m, T::lit(HERMITIAN_TOL))
    }

    pub fn with_tol(m: ComplexMatrix<T>, tol: T) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::Shape(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let defect = m.hermitian_defect();
        if !(defect <= tol) {
            return Err(LinalgError::Domain(format!(
                "matrix is not Hermitian (defect {defect:e} > {tol:e})"
            )));
        }
        Ok(Self {
            base: m.hermitian_part(),
        })
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        Self {
            base: ComplexMatrix::from_real_diag(diag),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            base: ComplexMatrix::identity(n),
        }
    }

    /// `A* A`, PSD by construction.
    pub fn gram(a: &ComplexMatrix<T>) -> Self {
        Self {
            base: a.adjoint().matmul(a).hermitian_part(),
        }
    }

    pub fn dim(&self) -> usize {
        self.base.rows
    }

    pub fn as_matrix(&self) -> &ComplexMatrix<T> {
        &self.base
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.base
    }

    pub fn eigh(&self) -> Eigh<T> {
        jacobi_eigh(&self.base)
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigh().values[0]
    }
}

/// Eigendecomposition `H = Q diag(values) Q*`, values ascending.
#[derive(Clone, Debug)]
pub struct Eigh<T: Real> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> Eigh<T> {
    /// `Q diag(f(values)) Q*`.
    pub fn compose(&self, mut f: impl FnMut(T) -> T) -> ComplexMatrix<T> {
        let n = self.values.len();
        let fv: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        let q = &self.vectors;
        ComplexMatrix::from_fn(n, n, |r, c| {
            (0..n).fold(C::zero(), |acc, k| {
                acc + q[(r, k)] * q[(c, k)].conj() * creal(fv[k])
            })
        })
    }
}

fn jacobi_eigh<T: Real>(h: &ComplexMatrix<T>) -> Eigh<T> {
    let n = h.rows;
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);
    let eps = T::epsilon();
    let scale = a.frobenius_norm();

    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + abs2(a[(p, q)]);
            }
        }
        if off.sqrt() <= eps * scale || scale.is_zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= T::min_positive_value() {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Negligible relative to both diagonal entries: drop it.
                if r <= eps * T::lit(0.01) * (app.abs() + aqq.abs()) {
                    a[(p, q)] = C::zero();
                    a[(q, p)] = C::zero();
                    continue;
                }
                let d = (apq / creal(r)).conj();
                let tau = (aqq - app) / (T::lit(2.0) * r);
                let t = if tau.is_zero() {
                    T::one()
                } else {
                    tau.signum() / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                let (cc, sc) = (creal(c), creal(s));
                // A <- A U with U = [[c, s], [-s d, c d]] on (p, q).
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * cc - akq * sc * d;
                    a[(k, q)] = akp * sc + akq * cc * d;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * cc - vkq * sc * d;
                    v[(k, q)] = vkp * sc + vkq * cc * d;
                }
                // A <- U* A.
                let dc = d.conj();
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * cc - aqk * sc * dc;
                    a[(q, k)] = apk * sc + aqk * cc * dc;
                }
                a[(p, q)] = C::zero();
                a[(q, p)] = C::zero();
                a[(p, p)] = creal(a[(p, p)].re);
                a[(q, q)] = creal(a[(q, q)].re);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Eigh { values, vectors }
}

/// Conjugate transpose; `adjoint(adjoint(m)) == m`.
pub fn adjoint<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    m.adjoint()
}

/// Singular values in descending order, by one-sided Jacobi on the rows or
/// columns of `m`, whichever are fewer.
pub fn singular_values<T: Real>(m: &ComplexMatrix<T>) -> Vec<T> {
    let (r, c) = (m.rows, m.cols);
    let mut b: Vec<Vec<C<T>>> = if r <= c {
        (0..r).map(|i| m.data[i * c..(i + 1) * c].to_vec()).collect()
    } else {
        (0..c).map(|j| (0..r).map(|i| m.data[i * c + j]).collect()).collect()
    };
    let k = b.len();
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (lo, hi) = b.split_at_mut(q);
                let (bp, bq) = (&mut lo[p], &mut hi[0]);
                let mut app = T::zero();
                let mut aqq = T::zero();
                let mut apq = C::<T>::zero();
                for (x, y) in bp.iter().zip(bq.iter()) {
                    app = app + abs2(*x);
                    aqq = aqq + abs2(*y);
                    apq = apq + x.conj() * y;
                }
                let rr = apq.norm();
                if rr <= T::min_positive_value() || rr <= eps * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let d = (apq / creal(rr)).conj();
                let tau = (aqq - app) / (T::lit(2.0) * rr);
                let t = if tau.is_zero() {
                    T::one()
                } else {
                    tau.signum() / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let cs = T::one() / (T::one() + t * t).sqrt();
                let (cc, sc) = (creal(cs), creal(t * cs));
                for (x, y) in bp.iter_mut().zip(bq.iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = xp * cc - yq * sc * d;
                    *y = xp * sc + yq * cc * d;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = b.iter().map(|v| v.iter().fold(T::zero(), |s, z| s + abs2(*z)).sqrt()).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Operator (spectral) norm.
pub fn operator_norm<T: Real>(m: &ComplexMatrix<T>) -> T {
    singular_values(m)[0]
}

/// Schatten `p`-norm: the `l_p` norm of the singular values. `p = inf`
/// gives the operator norm.
pub fn schatten_norm<T: Real>(m: &ComplexMatrix<T>, p: T) -> Result<T, LinalgError> {
    if p.is_nan() || p < T::one() {
        return Err(LinalgError::InvalidParameter(format!(
            "Schatten exponent must lie in [1, inf], got {p}"
        )));
    }
    let sv = singular_values(m);
    Ok(lp_norm(&sv, p))
}

/// `l_p` norm of a nonnegative vector, `p` in `[1, inf]`.
pub fn lp_norm<T: Real>(v: &[T], p: T) -> T {
    if p.is_infinite() {
        return v.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    }
    let top = v.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if top.is_zero() {
        return T::zero();
    }
    // Scaled to avoid overflow for large p.
    let s: T = v.iter().map(|&x| (x.abs() / top).powf(p)).sum();
    top * s.powf(T::one() / p)
}

/// `true` iff the smallest eigenvalue is `>= -tol`.
pub fn is_psd<T: Real>(h: &HermitianMatrix<T>, tol: T) -> bool {
    h.min_eigenvalue() >= -tol
}

/// Continuous functional calculus on a PSD matrix, `Q f(L) Q*`.
///
/// Eigenvalues in `[-tol, 0)` are clamped to zero before `f` is applied.
pub fn mat_fun<T: Real>(
    h: &HermitianMatrix<T>,
    f: impl FnMut(T) -> T,
) -> Result<HermitianMatrix<T>, LinalgError> {
    mat_fun_with_tol(h, f, T::lit(DEFAULT_TOL))
}

pub fn mat_fun_with_tol<T: Real>(
    h: &HermitianMatrix<T>,
    mut f: impl FnMut(T) -> T,
    tol: T,
) -> Result<HermitianMatrix<T>, LinalgError> {
    let eig = h.eigh();
    if eig.values[0] < -tol {
        return Err(LinalgError::Domain(format!(
            "matrix is not PSD: smallest eigenvalue {:e}",
            eig.values[0]
        )));
    }
    let out = eig.compose(|l| f(l.max(T::zero())));
    Ok(HermitianMatrix {
        base: out.hermitian_part(),
    })
}

/// Functional calculus for an arbitrary Hermitian matrix (no clamping).
pub fn hermitian_fun<T: Real>(h: &HermitianMatrix<T>, f: impl FnMut(T) -> T) -> HermitianMatrix<T> {
    HermitianMatrix {
        base: h.eigh().compose(f).hermitian_part(),
    }
}

/// Orthogonal projection onto the eigenvectors with eigenvalue `> cut`.
#[derive(Clone, Debug)]
pub struct SpectralProjection<T: Real> {
    pub projection: ComplexMatrix<T>,
    pub rank: usize,
    /// Eigenvalues within [`TIE_TOL`] of the cut; these are excluded.
    pub ties: usize,
    pub warning: Option<String>,
}

pub fn spectral_projection<T: Real>(h: &HermitianMatrix<T>, cut: T) -> SpectralProjection<T> {
    let eig = h.eigh();
    let tie = T::lit(TIE_TOL);
    let n = h.dim();
    let keep: Vec<bool> = eig.values.iter().map(|&l| l > cut + tie).collect();
    let ties = eig.values.iter().filter(|&&l| (l - cut).abs() <= tie).count();
    let q = &eig.vectors;
    let proj = ComplexMatrix::from_fn(n, n, |r, c| {
        (0..n)
            .filter(|&k| keep[k])
            .fold(C::zero(), |acc, k| acc + q[(r, k)] * q[(c, k)].conj())
    });
    let warning = (ties > 0).then(|| {
        format!("{ties} eigenvalue(s) within {TIE_TOL:e} of the cut {cut}; excluded from the projection")
    });
    SpectralProjection {
        projection: proj.hermitian_part(),
        rank: keep.iter().filter(|&&k| k).count(),
        ties,
        warning,
    }
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky<T: Real>(h: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>, LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::Shape("Cholesky of a non-square matrix".into()));
    }
    let n = h.rows;
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = h[(j, j)].re;
        for k in 0..j {
            d = d - abs2(l[(j, k)]);
        }
        if !(d > T::zero()) {
            return Err(LinalgError::Domain(format!(
                "matrix is not positive definite (pivot {j} = {d:e})"
            )));
        }
        let ljj = d.sqrt();
        l[(j, j)] = creal(ljj);
        for i in (j + 1)..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / creal(ljj);
        }
    }
    Ok(l)
}

/// Solves `L L* x = b` given the Cholesky factor `L`.
pub fn cholesky_solve<T: Real>(l: &ComplexMatrix<T>, b: &[C<T>]) -> Vec<C<T>> {
    let n = l.rows;
    assert_eq!(b.len(), n, "cholesky_solve shape mismatch");
    let mut y = vec![C::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![C::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s = s - l[(k, i)].conj() * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Pivot order of a diagonally pivoted Cholesky factorization of a PSD
/// matrix, stopped once the largest remaining pivot drops below
/// `rel_tol * max_diag`. The returned indices select a maximal
/// well-conditioned set of columns.
pub fn pivoted_cholesky_pivots<T: Real>(h: &ComplexMatrix<T>, rel_tol: T) -> Vec<usize> {
    let n = h.rows;
    let max_diag = (0..n).fold(T::zero(), |m, i| m.max(h[(i, i)].re));
    if !(max_diag > T::zero()) {
        return Vec::new();
    }
    let threshold = rel_tol * max_diag;
    let mut resid: Vec<T> = (0..n).map(|i| h[(i, i)].re).collect();
    let mut used = vec![false; n];
    // Columns of the partial factor, indexed by pivot step.
    let mut factor: Vec<Vec<C<T>>> = Vec::new();
    let mut pivots = Vec::new();
    loop {
        let mut best = None;
        for i in 0..n {
            if !used[i] && best.is_none_or(|b: usize| resid[i] > resid[b]) {
                best = Some(i);
            }
        }
        let Some(p) = best else { break };
        if !(resid[p] > threshold) {
            break;
        }
        let piv = resid[p].sqrt();
        let col: Vec<C<T>> = (0..n)
            .map(|i| {
                if used[i] || i == p {
                    return C::zero();
                }
                let mut s = h[(i, p)];
                for f in &factor {
                    s = s - f[i] * f[p].conj();
                }
                s / creal(piv)
            })
            .collect();
        let mut col = col;
        col[p] = creal(piv);
        for i in 0..n {
            if !used[i] && i != p {
                resid[i] = resid[i] - abs2(col[i]);
            }
        }
        used[p] = true;
        factor.push(col);
        pivots.push(p);
    }
    pivots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix<f64> {
        ComplexMatrix::from_fn(r, c, |_, _| cplx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn adjoint_examples() {
        let i2 = ComplexMatrix::<f64>::identity(2);
        assert_eq!(adjoint(&i2), i2);
        let e = ComplexMatrix::<f64>::unit(2, 0, 1);
        assert_eq!(adjoint(&e), ComplexMatrix::unit(2, 1, 0));
        let m = ComplexMatrix::from_diag(&[cplx(0.0, 1.0), C::zero()]);
        assert_eq!(adjoint(&m), ComplexMatrix::from_diag(&[cplx(0.0, -1.0), C::zero()]));
    }

    #[test]
    fn new_rejects_bad_input() {
        assert!(matches!(
            ComplexMatrix::<f64>::new(0, 1, vec![]),
            Err(LinalgError::Shape(_))
        ));
        assert!(matches!(
            ComplexMatrix::new(1, 2, vec![C::zero(), cplx(f64::NAN, 0.0)]),
            Err(LinalgError::NonFinite(0, 1))
        ));
        let not_herm = ComplexMatrix::<f64>::unit(2, 0, 1);
        assert!(HermitianMatrix::new(not_herm).is_err());
    }

    #[test]
    fn schatten_examples() {
        let i3 = ComplexMatrix::<f64>::identity(3);
        assert!((schatten_norm(&i3, 1.0).unwrap() - 3.0).abs() < 1e-12);
        let d = ComplexMatrix::<f64>::from_real_diag(&[3.0, 4.0]);
        assert!((schatten_norm(&d, 2.0).unwrap() - 5.0).abs() < 1e-12);
        let u = [cplx(0.6, 0.0), cplx(0.0, 0.8)];
        let col = ComplexMatrix::column(&u);
        let proj = col.matmul(&col.adjoint());
        for p in [1.0, 1.5, 2.0, 7.0, f64::INFINITY] {
            assert!((schatten_norm(&proj, p).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(schatten_norm(&proj, 0.5), Err(LinalgError::InvalidParameter(_))));
    }

    #[test]
    fn singular_values_of_rectangular_matrix() {
        // [[3, 0], [0, 0], [0, 4]] has singular values {4, 3}.
        let m = ComplexMatrix::<f64>::from_real_rows(&[&[3.0, 0.0], &[0.0, 0.0], &[0.0, 4.0]]);
        let sv = singular_values(&m);
        assert_eq!(sv.len(), 2);
        assert!((sv[0] - 4.0).abs() < 1e-12 && (sv[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 5, 12] {
            let a = random_matrix(&mut rng, n, n);
            let h = HermitianMatrix::new((&a + &a.adjoint()).scale_real(0.5)).unwrap();
            let eig = h.eigh();
            let back = eig.compose(|l| l);
            assert!(back.max_abs_diff(h.as_matrix()) < 1e-12, "n = {n}");
            let qq = eig.vectors.adjoint().matmul(&eig.vectors);
            assert!(qq.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn psd_examples() {
        assert!(is_psd(&HermitianMatrix::from_real_diag(&[1.0, 0.0]), 1e-10));
        assert!(!is_psd(&HermitianMatrix::from_real_diag(&[1.0, -1e-3]), 1e-9));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 6, 4);
        assert!(is_psd(&HermitianMatrix::gram(&a), 1e-10));
    }

    #[test]
    fn mat_fun_examples() {
        let h = HermitianMatrix::from_real_diag(&[4.0, 1.0]);
        let same = mat_fun(&h, |t| t).unwrap();
        assert!(same.as_matrix().max_abs_diff(h.as_matrix()) < 1e-14);
        let root = mat_fun(&h, f64::sqrt).unwrap();
        assert!(root.as_matrix().max_abs_diff(&ComplexMatrix::from_real_diag(&[2.0, 1.0])) < 1e-14);
        let h = HermitianMatrix::from_real_diag(&[0.9, 0.5, 0.0]);
        let shifted = mat_fun(&h, |t| 0.2 + t).unwrap();
        let want = ComplexMatrix::from_real_diag(&[1.1, 0.7, 0.2]);
        assert!(shifted.as_matrix().max_abs_diff(&want) < 1e-14);
        let neg = HermitianMatrix::from_real_diag(&[1.0, -0.5]);
        assert!(matches!(mat_fun(&neg, |t| t), Err(LinalgError::Domain(_))));
    }

    #[test]
    fn spectral_projection_examples() {
        let h = HermitianMatrix::from_real_diag(&[1.0, 0.4, 0.05]);
        let p = spectral_projection(&h, 0.5);
        assert!(p.projection.max_abs_diff(&ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0])) < 1e-14);
        let p = spectral_projection(&h, 1.0 / 3.0);
        assert!(p.projection.max_abs_diff(&ComplexMatrix::from_real_diag(&[1.0, 1.0, 0.0])) < 1e-14);
        let p = spectral_projection(&h, 0.0);
        assert!(p.projection.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-14);
        assert!(p.warning.is_none());
    }

    #[test]
    fn spectral_projection_tie_is_excluded_with_warning() {
        let h = HermitianMatrix::from_real_diag(&[1.0, 0.5, 0.1]);
        let p = spectral_projection(&h, 0.5);
        assert_eq!(p.rank, 1);
        assert_eq!(p.ties, 1);
        assert!(p.warning.is_some());
    }

    #[test]
    fn cholesky_solves_and_pivots() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 5, 5);
        let h = HermitianMatrix::gram(&a);
        let l = cholesky(h.as_matrix()).unwrap();
        let b: Vec<C<f64>> = (0..5).map(|i| cplx(i as f64, 1.0)).collect();
        let x = cholesky_solve(&l, &b);
        let hb = h.as_matrix().mat_vec(&x);
        for (u, v) in hb.iter().zip(&b) {
            assert!((u - v).norm() < 1e-10);
        }
        // Rank-2 PSD matrix in 4 dimensions.
        let r = random_matrix(&mut rng, 2, 4);
        let g = HermitianMatrix::gram(&r);
        assert_eq!(pivoted_cholesky_pivots(g.as_matrix(), 1e-10).len(), 2);
        assert!(pivoted_cholesky_pivots(&ComplexMatrix::<f64>::zeros(3, 3), 1e-10).is_empty());
    }

    #[test]
    fn f32_instantiation() {
        let d = ComplexMatrix::<f32>::from_real_diag(&[3.0, 4.0]);
        assert!((schatten_norm(&d, 2.0f32).unwrap() - 5.0).abs() < 1e-5);
        let h = HermitianMatrix::<f32>::from_real_diag(&[4.0, 1.0]);
        let r = mat_fun_with_tol(&h, f32::sqrt, 1e-5).unwrap();
        assert!((r.as_matrix()[(0, 0)].re - 2.0).abs() < 1e-5);
    }
}
