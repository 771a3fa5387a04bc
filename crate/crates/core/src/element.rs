//! Vector-space elements of the truncated algebras.

use std::fmt::Debug;

use num_traits::Zero;
use serde::Serialize;

use crate::linalg::ComplexMatrix;
use crate::scalar::{creal, Real, C};

/// An element of a finite-dimensional complex vector space with involution.
pub trait Element<T: Real>: Clone + Debug + Send + Sync + 'static {
    fn zero_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn scale(&self, alpha: C<T>) -> Self;
    /// The involution `a -> a*`.
    fn star(&self) -> Self;
    /// Largest entry modulus; used for exact-zero tests.
    fn max_abs(&self) -> T;

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(creal(-T::one())))
    }
}

/// `sum_i coeffs[i] * elems[i]`. Panics on an empty list.
pub fn lin_comb<T: Real, E: Element<T>>(coeffs: &[C<T>], elems: &[E]) -> E {
    assert_eq!(coeffs.len(), elems.len(), "lin_comb length mismatch");
    let mut acc = elems[0].zero_like();
    for (c, e) in coeffs.iter().zip(elems) {
        if !c.is_zero() {
            acc = acc.add(&e.scale(*c));
        }
    }
    acc
}

impl<T: Real> Element<T> for ComplexMatrix<T> {
    fn zero_like(&self) -> Self {
        ComplexMatrix::zeros(self.rows(), self.cols())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn scale(&self, alpha: C<T>) -> Self {
        ComplexMatrix::scale(self, alpha)
    }
    fn star(&self) -> Self {
        self.adjoint()
    }
    fn max_abs(&self) -> T {
        ComplexMatrix::max_abs(self)
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
}

/// Samples of a complex function on the nodes of a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridFn<T: Real>(pub Vec<C<T>>);

impl<T: Real> GridFn<T> {
    pub fn constant(len: usize, value: C<T>) -> Self {
        Self(vec![value; len])
    }

    pub fn from_real(values: impl IntoIterator<Item = T>) -> Self {
        Self(values.into_iter().map(creal).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "grid function length mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }
}

impl<T: Real> Element<T> for GridFn<T> {
    fn zero_like(&self) -> Self {
        Self(vec![C::zero(); self.len()])
    }
    fn add(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "grid function length mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
    fn scale(&self, alpha: C<T>) -> Self {
        Self(self.0.iter().map(|a| a * alpha).collect())
    }
    fn star(&self) -> Self {
        Self(self.0.iter().map(|a| a.conj()).collect())
    }
    fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }
}

/// A finite sequence `(f_1, ..., f_N)` of grid functions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeqFn<T: Real>(pub Vec<GridFn<T>>);

impl<T: Real> SeqFn<T> {
    /// Componentwise pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.0.len(), other.0.len(), "sequence length mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a.mul(b)).collect())
    }
}

impl<T: Real> Element<T> for SeqFn<T> {
    fn zero_like(&self) -> Self {
        Self(self.0.iter().map(|f| f.zero_like()).collect())
    }
    fn add(&self, other: &Self) -> Self {
        assert_eq!(self.0.len(), other.0.len(), "sequence length mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a.add(b)).collect())
    }
    fn scale(&self, alpha: C<T>) -> Self {
        Self(self.0.iter().map(|f| f.scale(alpha)).collect())
    }
    fn star(&self) -> Self {
        Self(self.0.iter().map(|f| f.star()).collect())
    }
    fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, f| m.max(f.max_abs()))
    }
}

/// Matrix-valued samples on the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MatFn<T: Real>(pub Vec<ComplexMatrix<T>>);

impl<T: Real> MatFn<T> {
    pub fn constant(len: usize, value: &ComplexMatrix<T>) -> Self {
        Self(vec![value.clone(); len])
    }
}

impl<T: Real> Element<T> for MatFn<T> {
    fn zero_like(&self) -> Self {
        Self(self.0.iter().map(|m| m.zero_like()).collect())
    }
    fn add(&self, other: &Self) -> Self {
        assert_eq!(self.0.len(), other.0.len(), "grid length mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
    fn scale(&self, alpha: C<T>) -> Self {
        Self(self.0.iter().map(|m| ComplexMatrix::scale(m, alpha)).collect())
    }
    fn star(&self) -> Self {
        Self(self.0.iter().map(|m| m.adjoint()).collect())
    }
    fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, a| m.max(ComplexMatrix::max_abs(a)))
    }
}
