//! GNS-type construction for an invariant positive form on a finite model:
//! the quotient by `N_S`, representation matrices `pi(a)`, the vectors
//! `eps_m = e_m + N_S`, and the reconstruction identities.
//!
//! Quotient coordinates use a pivoted subset of the core basis. A coset
//! `x + N_S` has coordinates `xi` solving `H xi = h`, where `H` is the
//! scalarized Gram matrix of the pivot elements and `h_k = tau(S(x, q_k))`.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cstar::{CStarError, CStarValue, InvarianceReport, MapKind, NullSpace, PosSesqForm, PositiveMap};
use crate::element::{lin_comb, Element};
use crate::linalg::{
    cholesky, cholesky_solve, mat_fun, operator_norm, schatten_norm, ComplexMatrix, HermitianMatrix,
    LinalgError,
};
use crate::models::{random_matrix, random_unitary, AlgebraModel};
use crate::scalar::{cplx, creal, Real, C};

/// Invariance defects above this abort the construction.
pub const NOT_INVARIANT_TOL: f64 = 1e-6;
/// Form and map disagreeing by more than this is inconsistent input.
pub const INCONSISTENT_TOL: f64 = 1e-6;
pub const REPRESENTATION_TOL: f64 = 1e-8;
pub const EPSILON_TOL: f64 = 1e-10;
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
/// Number of random triples drawn by [`build_gns`] for the invariance check.
pub const INVARIANCE_SAMPLES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GnsError {
    #[error("form is not invariant: defect {0:e}")]
    NotInvariant(f64),
    #[error("degenerate form: {0}")]
    Degenerate(String),
    #[error("inconsistent input: {0}")]
    InconsistentInput(String),
    #[error("invalid approximate identity: {0}")]
    InvalidIdentity(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    CStar(#[from] CStarError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Output of [`build_gns`].
#[derive(Clone, Debug)]
pub struct GnsData<T: Real, M: AlgebraModel<T>> {
    model: M,
    form: PosSesqForm<T, M::Elem>,
    core_basis: Vec<M::Elem>,
    null_space: NullSpace<T>,
    pivots: Vec<usize>,
    quotient: Vec<M::Elem>,
    gram: ComplexMatrix<T>,
    chol: ComplexMatrix<T>,
    inner: Vec<CStarValue<T>>,
    epsilons: Vec<Vec<C<T>>>,
    invariance: InvarianceReport<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GnsSummary {
    pub model: String,
    pub form: String,
    pub core_dim: usize,
    pub null_dim: usize,
    pub quotient_dim: usize,
    pub identity_len: usize,
    pub invariance_defect: f64,
}

pub fn build_gns<T, M, R>(model: &M, form: &PosSesqForm<T, M::Elem>, rng: &mut R) -> Result<GnsData<T, M>, GnsError>
where
    T: Real,
    M: AlgebraModel<T>,
    R: Rng + ?Sized,
{
    let invariance = form.check_invariance(model, INVARIANCE_SAMPLES, rng)?;
    if invariance.max_defect > T::lit(NOT_INVARIANT_TOL) {
        return Err(GnsError::NotInvariant(invariance.max_defect.to_f64_lossy()));
    }
    let core_basis = model.core_basis();
    let null_space = form.null_space(&core_basis)?;
    let g = &null_space.gram;
    let pivots = crate::linalg::pivoted_cholesky_pivots(g, T::lit(crate::cstar::RANK_RTOL));
    if pivots.is_empty() {
        return Err(GnsError::Degenerate(format!("{} vanishes on the core", form.name())));
    }
    let r = pivots.len();
    let gram = ComplexMatrix::from_fn(r, r, |k, i| g[(pivots[k], pivots[i])]);
    let chol = cholesky(&gram).map_err(|e| GnsError::Degenerate(format!("quotient Gram is singular: {e}")))?;
    let quotient: Vec<M::Elem> = pivots.iter().map(|&i| core_basis[i].clone()).collect();
    let mut inner = Vec::with_capacity(r * r);
    for qi in &quotient {
        for qj in &quotient {
            inner.push(form.eval(qi, qj));
        }
    }
    let mut data = GnsData {
        model: model.clone(),
        form: form.clone(),
        core_basis,
        null_space,
        pivots,
        quotient,
        gram,
        chol,
        inner,
        epsilons: Vec::new(),
        invariance,
    };
    data.epsilons = model.identity().iter().map(|e| data.coords(e)).collect();
    Ok(data)
}

impl<T: Real, M: AlgebraModel<T>> GnsData<T, M> {
    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn form(&self) -> &PosSesqForm<T, M::Elem> {
        &self.form
    }

    pub fn dim(&self) -> usize {
        self.quotient.len()
    }

    pub fn null_space(&self) -> &NullSpace<T> {
        &self.null_space
    }

    pub fn core_basis(&self) -> &[M::Elem] {
        &self.core_basis
    }

    /// Indices into the core basis of the coset representatives.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn quotient_basis(&self) -> &[M::Elem] {
        &self.quotient
    }

    /// Scalarized Gram matrix of the quotient basis, `H[k][i] = tau(S(q_i, q_k))`.
    pub fn gram(&self) -> &ComplexMatrix<T> {
        &self.gram
    }

    /// `S(q_i, q_j)`.
    pub fn inner_table(&self, i: usize, j: usize) -> &CStarValue<T> {
        &self.inner[i * self.dim() + j]
    }

    pub fn epsilons(&self) -> &[Vec<C<T>>] {
        &self.epsilons
    }

    pub fn invariance(&self) -> &InvarianceReport<T> {
        &self.invariance
    }

    pub fn summary(&self) -> GnsSummary {
        GnsSummary {
            model: self.model.name(),
            form: self.form.name().to_string(),
            core_dim: self.core_basis.len(),
            null_dim: self.null_space.dim(),
            quotient_dim: self.dim(),
            identity_len: self.epsilons.len(),
            invariance_defect: self.invariance.max_defect.to_f64_lossy(),
        }
    }

    /// Quotient coordinates of `x + N_S` for `x` in the core.
    pub fn coords(&self, x: &M::Elem) -> Vec<C<T>> {
        let h: Vec<C<T>> = self.quotient.iter().map(|q| self.form.eval(x, q).tau()).collect();
        cholesky_solve(&self.chol, &h)
    }

    /// Coset representative `sum_k xi_k q_k`.
    pub fn lift(&self, xi: &[C<T>]) -> M::Elem {
        lin_comb(xi, &self.quotient)
    }

    /// `<xi, eta>_S`, linear in the first slot.
    pub fn inner(&self, xi: &[C<T>], eta: &[C<T>]) -> CStarValue<T> {
        self.form.eval(&self.lift(xi), &self.lift(eta))
    }

    pub fn quasi_norm(&self, xi: &[C<T>]) -> T {
        self.inner(xi, xi).cnorm().sqrt()
    }

    /// `pi(a) xi`, i.e. the coordinates of `a . lift(xi) + N_S`.
    pub fn apply(&self, a: &M::Elem, xi: &[C<T>]) -> Vec<C<T>> {
        let ax = self.model.product_unchecked(a, &self.lift(xi));
        self.coords(&ax)
    }

    /// Matrix of `pi(a)` in quotient coordinates, column `k` = `pi(a) q_k`.
    pub fn represent(&self, a: &M::Elem) -> ComplexMatrix<T> {
        let r = self.dim();
        let mut m = ComplexMatrix::zeros(r, r);
        for (k, q) in self.quotient.iter().enumerate() {
            let ax = self
                .model
                .left_mul(a, q)
                .expect("coset representatives lie in the core");
            for (i, v) in self.coords(&ax).into_iter().enumerate() {
                m[(i, k)] = v;
            }
        }
        m
    }

    /// Operator norm of `pi(a)` for the scalarized inner product; equals the
    /// GNS operator norm when the codomain is scalar.
    pub fn pi_operator_norm(&self, a: &M::Elem) -> T {
        let pi = self.represent(a);
        let r = self.dim();
        // L* pi L^{-*}, with H = L L*.
        let lstar = self.chol.adjoint();
        let mut inv = ComplexMatrix::zeros(r, r);
        for c in 0..r {
            for i in (0..r).rev() {
                let mut s = if i == c { C::from(T::one()) } else { C::new(T::zero(), T::zero()) };
                for k in (i + 1)..r {
                    s = s - lstar[(i, k)] * inv[(k, c)];
                }
                inv[(i, c)] = s / lstar[(i, i)];
            }
        }
        operator_norm(&lstar.matmul(&pi).matmul(&inv))
    }

    fn top(&self) -> &[C<T>] {
        self.epsilons.last().expect("identity schedule is never empty")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RepresentationReport<T: Real> {
    pub samples: usize,
    /// `max ||pi(a x) - pi(a) pi(x)||` (entrywise max) over `a` in `A`, `x` in `A_0`.
    pub max_mult_defect: T,
    /// `max ||pi(x y) - pi(x) pi(y)||` over `x, y` in `A_0`.
    pub max_core_mult_defect: T,
    /// `max ||<pi(a) u_i, u_j> - <u_i, pi(a*) u_j>||` over quotient basis vectors.
    pub max_adjoint_defect: T,
    pub tol: T,
    pub pass: bool,
}

pub fn verify_representation<T, M, R>(g: &GnsData<T, M>, samples: usize, rng: &mut R) -> RepresentationReport<T>
where
    T: Real,
    M: AlgebraModel<T>,
    R: Rng + ?Sized,
{
    let model = &g.model;
    let r = g.dim();
    let units: Vec<Vec<C<T>>> = (0..r)
        .map(|i| (0..r).map(|j| if i == j { C::from(T::one()) } else { C::new(T::zero(), T::zero()) }).collect())
        .collect();
    let mut mult = T::zero();
    let mut core = T::zero();
    let mut adj = T::zero();
    for _ in 0..samples {
        let a = model.sample(rng);
        let x = model.sample_core(rng);
        let y = model.sample_core(rng);
        let pa = g.represent(&a);
        let px = g.represent(&x);
        if let Some(ax) = model.left_mul(&a, &x) {
            mult = mult.max(g.represent(&ax).max_abs_diff(&pa.matmul(&px)));
        }
        let xy = model.product_unchecked(&x, &y);
        core = core.max(g.represent(&xy).max_abs_diff(&px.matmul(&g.represent(&y))));
        let pas = g.represent(&a.star());
        for i in 0..r {
            let lhs_vec = pa.col_vec(i);
            for j in 0..r {
                let lhs = g.inner(&lhs_vec, &units[j]);
                let rhs = g.inner(&units[i], &pas.col_vec(j));
                adj = adj.max(lhs.sub(&rhs).cnorm());
            }
        }
    }
    let tol = T::lit(REPRESENTATION_TOL);
    RepresentationReport {
        samples,
        max_mult_defect: mult,
        max_core_mult_defect: core,
        max_adjoint_defect: adj,
        tol,
        pass: mult <= tol && core <= tol && adj <= tol,
    }
}

/// `T(m, k) = ||<pi(a)(eps_k - eps_m), pi(a)(eps_k - eps_m)>||` for one panel element.
#[derive(Clone, Debug, Serialize)]
pub struct DoubleLimitTable<T: Real> {
    pub values: Vec<Vec<T>>,
    /// `T(m, top)`: the inner limit at the truncation horizon.
    pub column_limits: Vec<T>,
    /// Inner limits agree between the last two truncation levels.
    pub stabilized: bool,
    /// Strictly decreasing in `m` until it reaches zero.
    pub tail_strictly_decreasing: bool,
    pub final_tail: T,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonReport<T: Real> {
    /// `max ||pi(e_m) eps_k - eps_m||_S` over `m <= k`.
    pub max_relation_defect: T,
    pub pass_relations: bool,
    pub tables: Vec<DoubleLimitTable<T>>,
    pub pass: bool,
}

pub fn verify_epsilon_relations<T: Real, M: AlgebraModel<T>>(
    g: &GnsData<T, M>,
    panel: &[M::Elem],
) -> Result<EpsilonReport<T>, GnsError> {
    let ids = g.model.identity();
    if ids.len() < 2 {
        return Err(GnsError::InvalidIdentity("need at least two identity elements".into()));
    }
    let nest_tol = T::lit(1e-12);
    for m in 0..ids.len() {
        for k in m..ids.len() {
            if g.model.product_unchecked(&ids[m], &ids[k]).sub(&ids[m]).max_abs() > nest_tol {
                return Err(GnsError::InvalidIdentity(format!("e_{} e_{} != e_{}", m + 1, k + 1, m + 1)));
            }
        }
    }
    let eps = &g.epsilons;
    let mut rel = T::zero();
    for m in 0..ids.len() {
        for k in m..ids.len() {
            let lhs = g.apply(&ids[m], &eps[k]);
            let diff: Vec<C<T>> = lhs.iter().zip(&eps[m]).map(|(a, b)| a - b).collect();
            rel = rel.max(g.quasi_norm(&diff));
        }
    }
    let zero_tol = T::lit(1e-12);
    let n = ids.len();
    let mut tables = Vec::with_capacity(panel.len());
    for a in panel {
        let mut values = vec![vec![T::zero(); n]; n];
        for m in 0..n {
            for k in 0..n {
                if m == k {
                    continue;
                }
                let d: Vec<C<T>> = eps[k].iter().zip(&eps[m]).map(|(x, y)| x - y).collect();
                let v = g.apply(a, &d);
                values[m][k] = g.inner(&v, &v).cnorm();
            }
        }
        let column_limits: Vec<T> = (0..n).map(|m| values[m][n - 1]).collect();
        let stabilized = (0..n.saturating_sub(2)).all(|m| {
            let (u, v) = (values[m][n - 2], values[m][n - 1]);
            (u - v).abs() <= T::lit(1e-8) * T::one().max(v) || u >= v
        });
        let tail_strictly_decreasing = column_limits.windows(2).all(|w| w[1] < w[0] || (w[0] <= zero_tol && w[1] <= zero_tol));
        let final_tail = column_limits[n - 1];
        tables.push(DoubleLimitTable {
            values,
            stabilized,
            tail_strictly_decreasing,
            converged: final_tail <= T::lit(RECONSTRUCTION_TOL),
            final_tail,
            column_limits,
        });
    }
    let pass_relations = rel <= T::lit(EPSILON_TOL);
    let pass = pass_relations && tables.iter().all(|t| t.converged && t.tail_strictly_decreasing);
    Ok(EpsilonReport {
        max_relation_defect: rel,
        pass_relations,
        tables,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FormReconstruction<T: Real> {
    #[serde(skip)]
    pub values: Vec<CStarValue<T>>,
    /// `||v_m - S(a, b)||` per truncation level.
    pub defects: Vec<T>,
    pub top_defect: T,
    /// Defects are non-increasing from this level on.
    pub monotone_from: usize,
    pub pass: bool,
}

fn monotone_from<T: Real>(r: &[T]) -> usize {
    let slack = T::lit(1e-12);
    let mut start = r.len().saturating_sub(1);
    while start > 0 && r[start] <= r[start - 1] + slack {
        start -= 1;
    }
    start
}

/// The sequence `v_m = <pi(a) eps_m, pi(b) eps_m>_S` against `S(a, b)`.
pub fn reconstruct_form<T: Real, M: AlgebraModel<T>>(g: &GnsData<T, M>, a: &M::Elem, b: &M::Elem) -> FormReconstruction<T> {
    let target = g.form.eval(a, b);
    let values: Vec<CStarValue<T>> = g
        .epsilons
        .iter()
        .map(|e| g.inner(&g.apply(a, e), &g.apply(b, e)))
        .collect();
    let defects: Vec<T> = values.iter().map(|v| v.sub(&target).cnorm()).collect();
    let top_defect = *defects.last().unwrap();
    FormReconstruction {
        monotone_from: monotone_from(&defects),
        pass: top_defect <= T::lit(RECONSTRUCTION_TOL),
        values,
        defects,
        top_defect,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LimitMode {
    Single,
    Double,
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearReconstruction<T: Real> {
    pub mode: LimitMode,
    /// `max ||omega(q_j* q_i) - S(q_i, q_j)||` over the quotient basis.
    pub form_mismatch: T,
    /// Per panel element, `||omega(a) - <pi(a) eps_m, eps_m>||` (single) or
    /// `||omega(a) - <pi(a) eps_m, eps_k>||` flattened row-major (double).
    pub traces: Vec<Vec<T>>,
    pub max_top_defect: T,
    /// `max ||omega(b* a) - <pi(a) eps_top, pi(b) eps_top>||` over consecutive panel pairs.
    pub max_pair_defect: T,
    pub pass: bool,
}

/// Recovers `omega(a)` from the representation built on the induced form
/// `S(a, b) = omega(b* a)`.
pub fn reconstruct_linear<T: Real, M: AlgebraModel<T>>(
    g: &GnsData<T, M>,
    omega: &PositiveMap<T, M::Elem>,
    mode: LimitMode,
    panel: &[M::Elem],
) -> Result<LinearReconstruction<T>, GnsError> {
    let model = &g.model;
    let mut mismatch = T::zero();
    for qi in &g.quotient {
        for qj in &g.quotient {
            let w = omega.eval(&model.product_unchecked(&qj.star(), qi));
            mismatch = mismatch.max(w.sub(&g.form.eval(qi, qj)).cnorm());
        }
    }
    if mismatch > T::lit(INCONSISTENT_TOL) {
        return Err(GnsError::InconsistentInput(format!(
            "omega(b* a) differs from S(a, b) by {mismatch:e}"
        )));
    }
    let eps = &g.epsilons;
    let top = g.top();
    let mut traces = Vec::with_capacity(panel.len());
    let mut max_top = T::zero();
    for a in panel {
        let target = omega.eval(a);
        let trace: Vec<T> = match mode {
            LimitMode::Single => eps
                .iter()
                .map(|e| g.inner(&g.apply(a, e), e).sub(&target).cnorm())
                .collect(),
            LimitMode::Double => {
                let images: Vec<Vec<C<T>>> = eps.iter().map(|e| g.apply(a, e)).collect();
                let mut t = Vec::with_capacity(eps.len() * eps.len());
                for img in &images {
                    for e in eps {
                        t.push(g.inner(img, e).sub(&target).cnorm());
                    }
                }
                t
            }
        };
        max_top = max_top.max(*trace.last().unwrap());
        traces.push(trace);
    }
    let mut max_pair = T::zero();
    for w in panel.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let target = omega.eval(&model.product_unchecked(&b.star(), a));
        let v = g.inner(&g.apply(a, top), &g.apply(b, top));
        max_pair = max_pair.max(v.sub(&target).cnorm());
    }
    let tol = T::lit(RECONSTRUCTION_TOL);
    Ok(LinearReconstruction {
        mode,
        form_mismatch: mismatch,
        traces,
        pass: max_top <= tol && max_pair <= tol,
        max_top_defect: max_top,
        max_pair_defect: max_pair,
    })
}

/// `a = p_1 - p_2 + i (p_3 - p_4)` with every `p_j >= 0`.
pub fn positive_decomposition<T: Real>(a: &ComplexMatrix<T>) -> Result<[HermitianMatrix<T>; 4], LinalgError> {
    let half = creal(T::lit(0.5));
    let re = (a + &a.adjoint()).scale(half);
    let im = (a - &a.adjoint()).scale(cplx(T::zero(), -T::lit(0.5)));
    let split = |h: ComplexMatrix<T>| -> Result<(HermitianMatrix<T>, HermitianMatrix<T>), LinalgError> {
        let h = HermitianMatrix::with_tol(h, T::lit(1e-9))?;
        let pos = crate::linalg::hermitian_fun(&h, |l| l.max(T::zero()));
        let neg = crate::linalg::hermitian_fun(&h, |l| (-l).max(T::zero()));
        Ok((pos, neg))
    };
    let (p1, p2) = split(re)?;
    let (p3, p4) = split(im)?;
    Ok([p1, p2, p3, p4])
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport<T: Real> {
    /// `||a - (p_1 - p_2 + i p_3 - i p_4)||` entrywise.
    pub split_defect: T,
    /// `max_j ||omega(p_j) - <pi(p_j) eps_top, eps_top>||`.
    pub max_positive_defect: T,
    /// `max_j ||omega(p_j) - <pi(p_j^(1/2)) eps_top, pi(p_j^(1/2)) eps_top>||`.
    pub max_sqrt_defect: T,
    /// `||omega(a) - sum_j c_j omega(p_j)||`.
    pub linear_defect: T,
    pub pass: bool,
}

/// Single-limit reconstruction through the four-positive decomposition and
/// the square-root factorization `p = p^(1/2) p^(1/2)`.
pub fn check_positive_decomposition<T, M>(
    g: &GnsData<T, M>,
    omega: &PositiveMap<T, ComplexMatrix<T>>,
    a: &ComplexMatrix<T>,
) -> Result<DecompositionReport<T>, GnsError>
where
    T: Real,
    M: AlgebraModel<T, Elem = ComplexMatrix<T>>,
{
    let parts = positive_decomposition(a)?;
    let coeffs = [creal(T::one()), creal(-T::one()), cplx(T::zero(), T::one()), cplx(T::zero(), -T::one())];
    let mut rebuilt = ComplexMatrix::zeros(a.rows(), a.cols());
    let mut sum = omega.eval(a).codomain().zero();
    let mut pos = T::zero();
    let mut sq = T::zero();
    let top = g.top();
    for (p, c) in parts.iter().zip(coeffs) {
        let pm = p.as_matrix();
        rebuilt = &rebuilt + &pm.scale(c);
        let wp = omega.eval(pm);
        sum = sum.add(&wp.scale(c));
        pos = pos.max(g.inner(&g.apply(pm, top), top).sub(&wp).cnorm());
        let root = mat_fun(p, |l| l.sqrt())?.into_matrix();
        let img = g.apply(&root, top);
        sq = sq.max(g.inner(&img, &img).sub(&wp).cnorm());
    }
    let split_defect = rebuilt.max_abs_diff(a);
    let linear_defect = omega.eval(a).sub(&sum).cnorm();
    let tol = T::lit(RECONSTRUCTION_TOL);
    Ok(DecompositionReport {
        pass: split_defect <= tol && pos <= tol && sq <= tol && linear_defect <= tol,
        split_defect,
        max_positive_defect: pos,
        max_sqrt_defect: sq,
        linear_defect,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Exact,
    UpperBound,
    Estimate,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MapNorm<T: Real> {
    pub value: T,
    pub kind: NormKind,
    /// Domain norm the value refers to.
    pub domain: DomainNorm<T>,
}

/// Norm on the domain of `omega`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainNorm<T: Real> {
    Operator,
    Schatten(T),
}

impl<T: Real> DomainNorm<T> {
    pub fn eval(&self, a: &ComplexMatrix<T>) -> T {
        match self {
            DomainNorm::Operator => operator_norm(a),
            DomainNorm::Schatten(p) => schatten_norm(a, *p).expect("validated exponent"),
        }
    }

    /// `true` for the C*-norm.
    pub fn is_cstar(&self) -> bool {
        matches!(self, DomainNorm::Operator) || matches!(self, DomainNorm::Schatten(p) if p.is_infinite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormMethod<T: Real> {
    /// `tr W` (operator domain) or `||W||_q` (Schatten-`p` domain) for `omega = tr(. W)`.
    ExactFormula,
    /// `max ||omega(U)||` over random unitaries; operator domain only.
    UnitarySampling { samples: usize, dim: usize },
    /// `max ||omega(a)|| / ||a||` over random `a`.
    RandomBall { samples: usize, dim: usize },
    /// Caller-certified upper bound.
    Certified(T),
}

pub fn map_norm<T: Real, R: Rng + ?Sized>(
    omega: &PositiveMap<T, ComplexMatrix<T>>,
    domain: DomainNorm<T>,
    method: NormMethod<T>,
    rng: &mut R,
) -> Result<MapNorm<T>, GnsError> {
    if let DomainNorm::Schatten(p) = domain {
        if !(p >= T::one()) {
            return Err(GnsError::Unsupported(format!("Schatten exponent {p} < 1")));
        }
    }
    let (value, kind) = match method {
        NormMethod::ExactFormula => {
            let MapKind::TraceWeighted(w) = omega.kind() else {
                return Err(GnsError::Unsupported(format!("no closed form for {}", omega.name())));
            };
            let value = match domain {
                DomainNorm::Operator => w.as_matrix().trace().re,
                DomainNorm::Schatten(p) => {
                    let q = if p == T::one() {
                        T::infinity()
                    } else if p.is_infinite() {
                        T::one()
                    } else {
                        p / (p - T::one())
                    };
                    schatten_norm(w.as_matrix(), q)?
                }
            };
            (value, NormKind::Exact)
        }
        NormMethod::UnitarySampling { samples, dim } => {
            if domain != DomainNorm::Operator {
                return Err(GnsError::Unsupported("unitary sampling needs the operator-norm domain".into()));
            }
            let mut best = T::zero();
            for _ in 0..samples {
                let u = random_unitary(rng, dim);
                best = best.max(omega.eval(&u).cnorm());
            }
            (best, NormKind::Estimate)
        }
        NormMethod::RandomBall { samples, dim } => {
            let mut best = T::zero();
            for _ in 0..samples {
                let a = random_matrix::<T, _>(rng, dim, dim);
                let n = domain.eval(&a);
                if n > T::zero() {
                    best = best.max(omega.eval(&a).cnorm() / n);
                }
            }
            (best, NormKind::Estimate)
        }
        NormMethod::Certified(v) => (v, NormKind::UpperBound),
    };
    Ok(MapNorm { value, kind, domain })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormInequalityReport<T: Real> {
    pub samples: usize,
    pub norm: MapNorm<T>,
    /// `min (4 ||omega|| ||omega(a*a)|| - ||omega(a)||^2) / max(1, ||omega(a)||^2)`.
    pub min_rel_slack_4: T,
    pub min_rel_slack_1: Option<T>,
    /// `max | ||omega(a*)|| - ||omega(a)|| |`.
    pub max_star_defect: T,
    pub holds_4: bool,
    pub holds_1: Option<bool>,
    pub star_ok: bool,
    /// Violations count as failures only when the norm is exact.
    pub conclusive: bool,
    /// The domain norm is the C*-norm, the setting in which the bounds are proved.
    pub cstar_domain: bool,
    pub pass: bool,
}

/// `4 ||omega|| ||omega(a*a)|| >= ||omega(a)||^2 = ||omega(a*)|| ||omega(a)||`,
/// with the constant-1 version when the codomain is commutative.
pub fn check_norm_inequality<T: Real, M: AlgebraModel<T>>(
    model: &M,
    omega: &PositiveMap<T, M::Elem>,
    norm: MapNorm<T>,
    commutative: bool,
    panel: &[M::Elem],
    rtol: T,
) -> NormInequalityReport<T> {
    let mut s4 = T::infinity();
    let mut s1 = T::infinity();
    let mut star = T::zero();
    let four = T::lit(4.0);
    for a in panel {
        let wa = omega.eval(a).cnorm();
        let was = omega.eval(&a.star()).cnorm();
        let waa = omega.eval(&model.product_unchecked(&a.star(), a)).cnorm();
        let sq = wa * wa;
        let scale = T::one().max(sq);
        s4 = s4.min((four * norm.value * waa - sq) / scale);
        s1 = s1.min((norm.value * waa - sq) / scale);
        star = star.max((was - wa).abs());
    }
    if panel.is_empty() {
        s4 = T::zero();
        s1 = T::zero();
    }
    let holds_4 = s4 >= -rtol;
    let holds_1 = commutative.then_some(s1 >= -rtol);
    let star_ok = star <= T::lit(1e-8);
    let conclusive = norm.kind == NormKind::Exact;
    let violated = !holds_4 || holds_1 == Some(false);
    NormInequalityReport {
        samples: panel.len(),
        norm,
        min_rel_slack_4: s4,
        min_rel_slack_1: commutative.then_some(s1),
        max_star_defect: star,
        holds_4,
        holds_1,
        star_ok,
        conclusive,
        cstar_domain: norm.domain.is_cstar(),
        pass: star_ok && !(conclusive && violated),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cstar::Codomain;
    use crate::models::{NcL2Model, SchattenModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trace_map(w: &[f64]) -> PositiveMap<f64, ComplexMatrix<f64>> {
        let wm = HermitianMatrix::from_real_diag(w);
        let m = wm.as_matrix().clone();
        PositiveMap::new("tr(.W)", Codomain::Scalar, move |a: &ComplexMatrix<f64>| {
            CStarValue::Scalar(a.trace_product(&m))
        })
        .with_kind(MapKind::TraceWeighted(wm))
    }

    #[test]
    fn m2_first_column_fixture() {
        let model = SchattenModel::new(2, 2.0).unwrap();
        let omega = trace_map(&[1.0, 0.0]);
        let form = omega.induced_form(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = build_gns(&model, &form, &mut rng).unwrap();
        assert_eq!(g.dim(), 2);
        assert_eq!(g.null_space().dim(), 2);
        // Representatives are the units with a nonzero first column.
        let mut piv: Vec<usize> = g.pivots().to_vec();
        piv.sort();
        assert_eq!(piv, vec![0, 2]);
        let rep = verify_representation(&g, 5, &mut rng);
        assert!(rep.pass, "{rep:?}");
        let a = model.sample(&mut rng);
        let b = model.sample(&mut rng);
        let rec = reconstruct_form(&g, &a, &b);
        let direct = b.adjoint().matmul(&a)[(0, 0)];
        assert!((rec.values.last().unwrap().as_scalar().unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn zero_form_is_degenerate() {
        let model = NcL2Model::<f64>::new(2).unwrap();
        let form = PosSesqForm::new("zero", Codomain::Scalar, |_: &ComplexMatrix<f64>, _: &ComplexMatrix<f64>| {
            CStarValue::Scalar(C::new(0.0, 0.0))
        });
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(build_gns(&model, &form, &mut rng), Err(GnsError::Degenerate(_))));
    }

    #[test]
    fn non_invariant_form_rejected() {
        let model = NcL2Model::<f64>::new(2).unwrap();
        // tr(a b*) is not invariant under left multiplication.
        let form = PosSesqForm::new("left", Codomain::Scalar, |a: &ComplexMatrix<f64>, b: &ComplexMatrix<f64>| {
            CStarValue::Scalar(a.matmul(&b.adjoint()).matmul(&ComplexMatrix::from_real_diag(&[1.0, 0.0])).trace())
        });
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(build_gns(&model, &form, &mut rng), Err(GnsError::NotInvariant(_))));
    }

    #[test]
    fn two_by_two_linear_reconstruction() {
        let model = SchattenModel::new(2, 2.0).unwrap();
        let omega = trace_map(&[0.7, 0.2]);
        let form = omega.induced_form(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = build_gns(&model, &form, &mut rng).unwrap();
        let p1 = model.identity()[0].clone();
        let lhs = g.apply(&p1, &g.epsilons()[1]);
        let d: Vec<_> = lhs.iter().zip(&g.epsilons()[0]).map(|(a, b)| a - b).collect();
        assert!(g.quasi_norm(&d) < 1e-12);
        let panel: Vec<_> = (0..4).map(|_| model.sample(&mut rng)).collect();
        for mode in [LimitMode::Single, LimitMode::Double] {
            let r = reconstruct_linear(&g, &omega, mode, &panel).unwrap();
            assert!(r.pass, "{r:?}");
        }
        let dec = check_positive_decomposition(&g, &omega, &panel[0]).unwrap();
        assert!(dec.pass, "{dec:?}");
    }

    #[test]
    fn map_norm_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let omega = trace_map(&[1.0, 2.0]);
        let n = map_norm(&omega, DomainNorm::Operator, NormMethod::ExactFormula, &mut rng).unwrap();
        assert!((n.value - 3.0).abs() < 1e-14 && n.kind == NormKind::Exact);
        let n = map_norm(&omega, DomainNorm::Schatten(2.0), NormMethod::ExactFormula, &mut rng).unwrap();
        assert!((n.value - 5f64.sqrt()).abs() < 1e-12);
        let zero = trace_map(&[0.0, 0.0]);
        let n = map_norm(&zero, DomainNorm::Operator, NormMethod::ExactFormula, &mut rng).unwrap();
        assert_eq!(n.value, 0.0);
        let general = PositiveMap::new("g", Codomain::Scalar, |a: &ComplexMatrix<f64>| CStarValue::Scalar(a.trace()));
        assert!(matches!(
            map_norm(&general, DomainNorm::Operator, NormMethod::ExactFormula, &mut rng),
            Err(GnsError::Unsupported(_))
        ));
        let est = map_norm(&omega, DomainNorm::Operator, NormMethod::UnitarySampling { samples: 50, dim: 2 }, &mut rng).unwrap();
        assert_eq!(est.kind, NormKind::Estimate);
        assert!(est.value <= 3.0 + 1e-12);
    }

    #[test]
    fn norm_inequality_hand_example() {
        let model = SchattenModel::new(2, 2.0).unwrap();
        let omega = trace_map(&[1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let norm = map_norm(&omega, DomainNorm::Operator, NormMethod::ExactFormula, &mut rng).unwrap();
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(omega.eval(&a).cnorm(), 1.0);
        assert_eq!(omega.eval(&a.adjoint().matmul(&a)).cnorm(), 2.0);
        let r = check_norm_inequality(&model, &omega, norm, true, &[a], 1e-9);
        assert!(r.pass && r.holds_1 == Some(true));
        assert!((r.min_rel_slack_1.unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_one_bound_needs_cstar_domain() {
        // On the Schatten-2 domain ||tr(. I_2)|| = sqrt(2), and a = I gives
        // sqrt(2) * 2 < 4: the constant-1 bound fails while constant 4 holds.
        let model = SchattenModel::new(2, 2.0).unwrap();
        let omega = trace_map(&[1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let norm = map_norm(&omega, DomainNorm::Schatten(2.0), NormMethod::ExactFormula, &mut rng).unwrap();
        let r = check_norm_inequality(&model, &omega, norm, true, &[ComplexMatrix::identity(2)], 1e-9);
        assert!(r.holds_4);
        assert_eq!(r.holds_1, Some(false));
        assert!(!r.cstar_domain && r.conclusive && !r.pass);
    }
}
