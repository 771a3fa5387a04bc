//! Weighted shift dynamics on a cyclically truncated block space
//! `H = ⊕_{j=-J..J} H_j`, `dim H_j = d`.
//!
//! `V` maps block `j` to `j + 1` with weight `1/2` for `j >= 0` and `2` for
//! `j <= -1`; the wrap edge `J -> -J` has weight `1`, which makes `V`
//! exactly invertible. Decay statements hold inside the window where
//! supports never cross the wrap edge.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{operator_norm, ComplexMatrix, HermitianMatrix, LinalgError};
use crate::models::random_matrix;
use crate::scalar::{creal, Real, C};
use num_traits::Zero;

/// Inverse and power-formula checks.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("window error: {0}")]
    Window(String),
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Blocks `j = -J..J` of dimension `d`, with cyclic index arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockSpace {
    half_width: usize,
    d: usize,
}

impl BlockSpace {
    pub fn new(half_width: usize, d: usize) -> Result<Self, DynamicsError> {
        if half_width < 1 || d < 1 {
            return Err(DynamicsError::InvalidParameter(format!(
                "need J >= 1 and d >= 1, got J={half_width}, d={d}"
            )));
        }
        Ok(Self { half_width, d })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn block_dim(&self) -> usize {
        self.d
    }

    /// `L = 2J + 1`.
    pub fn blocks(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn dim(&self) -> usize {
        self.blocks() * self.d
    }

    pub fn j_max(&self) -> i64 {
        self.half_width as i64
    }

    /// Block indices `-J..=J`.
    pub fn indices(&self) -> impl Iterator<Item = i64> {
        let j = self.j_max();
        -j..=j
    }

    /// Storage position of block `j`, reduced cyclically.
    pub fn pos(&self, j: i64) -> usize {
        let l = self.blocks() as i64;
        (j + self.j_max()).rem_euclid(l) as usize
    }

    /// Cyclic representative of `j` in `-J..=J`.
    pub fn wrap(&self, j: i64) -> i64 {
        self.pos(j) as i64 - self.j_max()
    }

    /// `P_j` as a dense matrix.
    pub fn projection<T: Real>(&self, j: i64) -> ComplexMatrix<T> {
        self.support_projection_where(|i| i == self.wrap(j))
    }

    /// `sum_{|j| <= k} P_j`.
    pub fn support_projection<T: Real>(&self, k: usize) -> ComplexMatrix<T> {
        self.support_projection_where(|i| i.unsigned_abs() as usize <= k)
    }

    fn support_projection_where<T: Real>(&self, keep: impl Fn(i64) -> bool) -> ComplexMatrix<T> {
        let n = self.dim();
        let mut m = ComplexMatrix::zeros(n, n);
        for j in self.indices().filter(|&j| keep(j)) {
            let p = self.pos(j) * self.d;
            for r in 0..self.d {
                m[(p + r, p + r)] = creal(T::one());
            }
        }
        m
    }
}

/// Operator given by one `d x d` block per source: source `j` maps to a
/// single target block.
#[derive(Clone, Debug)]
pub struct BlockOperator<T: Real> {
    space: BlockSpace,
    blocks: BTreeMap<i64, (i64, ComplexMatrix<T>)>,
}

impl<T: Real> BlockOperator<T> {
    pub fn new(space: BlockSpace) -> Self {
        Self {
            space,
            blocks: BTreeMap::new(),
        }
    }

    pub fn identity(space: BlockSpace) -> Self {
        let mut op = Self::new(space);
        for j in space.indices() {
            op.set(j, j, ComplexMatrix::identity(space.d));
        }
        op
    }

    pub fn set(&mut self, source: i64, target: i64, m: ComplexMatrix<T>) {
        assert_eq!((m.rows(), m.cols()), (self.space.d, self.space.d), "block must be d x d");
        self.blocks.insert(self.space.wrap(source), (self.space.wrap(target), m));
    }

    pub fn space(&self) -> &BlockSpace {
        &self.space
    }

    pub fn block(&self, source: i64) -> Option<&(i64, ComplexMatrix<T>)> {
        self.blocks.get(&self.space.wrap(source))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut out = Self::new(self.space);
        for (&s, (mid, m)) in &other.blocks {
            if let Some((t, a)) = self.blocks.get(mid) {
                out.set(s, *t, a.matmul(m));
            }
        }
        out
    }

    /// Restriction to the sources `|j| <= k`, i.e. `B (sum_{|j|<=k} P_j)`.
    pub fn restrict(&self, k: usize) -> Self {
        let mut out = Self::new(self.space);
        for (&s, (t, m)) in &self.blocks {
            if s.unsigned_abs() as usize <= k {
                out.set(s, *t, m.clone());
            }
        }
        out
    }

    pub fn to_dense(&self) -> ComplexMatrix<T> {
        let n = self.space.dim();
        let d = self.space.d;
        let mut out = ComplexMatrix::zeros(n, n);
        for (&s, (t, m)) in &self.blocks {
            out.set_submatrix(self.space.pos(*t) * d, self.space.pos(s) * d, m);
        }
        out
    }

    /// Operator norm; blockwise when targets are distinct.
    pub fn op_norm(&self) -> T {
        let mut targets: Vec<i64> = self.blocks.values().map(|(t, _)| *t).collect();
        targets.sort_unstable();
        let distinct = targets.windows(2).all(|w| w[0] != w[1]);
        if distinct {
            self.blocks.values().map(|(_, m)| block_norm(m)).fold(T::zero(), T::max)
        } else {
            operator_norm(&self.to_dense())
        }
    }
}

/// `sqrt(lambda_max(M* M))`; exact on scalar multiples of unitaries.
fn block_norm<T: Real>(m: &ComplexMatrix<T>) -> T {
    let e = HermitianMatrix::gram(m).eigh();
    e.values.last().copied().unwrap_or_else(T::zero).max(T::zero()).sqrt()
}

/// Expansion and contraction factors of the shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShiftWeights<T: Real> {
    /// Weight on edges with source `j >= 0`.
    pub nonneg: T,
    /// Weight on edges with source `j <= -1`.
    pub neg: T,
}

impl<T: Real> Default for ShiftWeights<T> {
    fn default() -> Self {
        Self {
            nonneg: T::lit(0.5),
            neg: T::lit(2.0),
        }
    }
}

impl<T: Real> ShiftWeights<T> {
    pub fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

/// `V`, `V^{-1}` and `||V V^{-1} - I||`.
#[derive(Clone, Debug)]
pub struct Shift<T: Real> {
    pub v: BlockOperator<T>,
    pub v_inv: BlockOperator<T>,
    pub weights: ShiftWeights<T>,
    pub inverse_defect: T,
}

pub fn build_shift<T: Real>(space: BlockSpace, weights: ShiftWeights<T>) -> Result<Shift<T>, DynamicsError> {
    if !(weights.nonneg > T::zero() && weights.neg > T::zero()) || !weights.nonneg.is_finite() || !weights.neg.is_finite() {
        return Err(DynamicsError::InvalidParameter("shift weights must be positive and finite".into()));
    }
    let jm = space.j_max();
    let eye = ComplexMatrix::<T>::identity(space.d);
    let edge = |s: i64| if s >= 0 { weights.nonneg } else { weights.neg };
    let mut v = BlockOperator::new(space);
    let mut v_inv = BlockOperator::new(space);
    for s in -jm..jm {
        v.set(s, s + 1, eye.scale_real(edge(s)));
        v_inv.set(s + 1, s, eye.scale_real(T::one() / edge(s)));
    }
    v.set(jm, -jm, eye.clone());
    v_inv.set(-jm, jm, eye);
    let prod = v.compose(&v_inv).to_dense();
    let inverse_defect = prod.max_abs_diff(&ComplexMatrix::identity(space.dim()));
    Ok(Shift {
        v,
        v_inv,
        weights,
        inverse_defect,
    })
}

impl<T: Real> Shift<T> {
    pub fn space(&self) -> &BlockSpace {
        self.v.space()
    }

    /// `V^n` for signed `n`.
    pub fn power(&self, n: i64) -> BlockOperator<T> {
        let base = if n >= 0 { &self.v } else { &self.v_inv };
        let mut out = BlockOperator::identity(*self.space());
        for _ in 0..n.unsigned_abs() {
            out = base.compose(&out);
        }
        out
    }
}

/// Closed forms `||V^n P_j|| = 2^{-n}` (`j >= 0`, `n <= J - j`) and
/// `||V^n P_{-j}|| = 2^{2j-n}` (`0 < j < n`, `n - j <= J`), with the mirror
/// images for `V^{-n}`. `None` outside the window.
pub fn closed_form_norm<T: Real>(space: &BlockSpace, j: i64, n: i64) -> Option<T> {
    let jm = space.j_max();
    let (j, n) = if n >= 0 { (j, n) } else { (-j, -n) };
    if j >= 0 {
        (j + n <= jm).then(|| T::lit(2.0).powi(-(n as i32)))
    } else {
        let m = -j;
        (n > m && n - m <= jm).then(|| T::lit(2.0).powi((2 * m - n) as i32))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerFormulaReport<T: Real> {
    pub cases: usize,
    pub max_defect: T,
    pub pass: bool,
}

/// Compares `||V^{+-n} P_j||` with [`closed_form_norm`] at every in-window `(j, n)`.
pub fn check_power_formulas<T: Real>(shift: &Shift<T>) -> Result<PowerFormulaReport<T>, DynamicsError> {
    if !shift.weights.is_default() {
        return Err(DynamicsError::InvalidParameter("closed forms hold for the weights (1/2, 2) only".into()));
    }
    let space = *shift.space();
    let jm = space.j_max();
    let mut cases = 0;
    let mut max_defect = T::zero();
    for n in (-2 * jm)..=(2 * jm) {
        let pw = shift.power(n);
        for j in space.indices() {
            if let Some(expect) = closed_form_norm::<T>(&space, j, n) {
                let (_, m) = pw.block(j).expect("shift powers are total");
                max_defect = max_defect.max((block_norm(m) - expect).abs());
                cases += 1;
            }
        }
    }
    Ok(PowerFormulaReport {
        cases,
        max_defect,
        pass: max_defect <= T::lit(EXACT_TOL),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow<T: Real> {
    pub n: usize,
    pub forward_norm: T,
    pub backward_norm: T,
    pub bound: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayTable<T: Real> {
    pub k: usize,
    pub rows: Vec<DecayRow<T>>,
    /// Least-squares slope of `log2 ||V^n Pi_k||` over `k < n <= n_max`.
    pub forward_slope: T,
    pub backward_slope: T,
    pub within_bound: bool,
}

impl<T: Real> DecayTable<T> {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,forward_norm,backward_norm,bound\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{:e},{:e}\n", r.n, r.forward_norm, r.backward_norm, r.bound));
        }
        s
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope<T: Real>(xs: &[T], ys: &[T]) -> T {
    let n = T::from_usize(xs.len()).unwrap();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxy: T = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn log2_slope<T: Real>(ns: impl Iterator<Item = usize>, vals: impl Fn(usize) -> T) -> T {
    let (xs, ys): (Vec<T>, Vec<T>) = ns
        .filter_map(|n| {
            let v = vals(n);
            (v > T::zero()).then(|| (T::from_usize(n).unwrap(), v.log2()))
        })
        .unzip();
    if xs.len() < 2 {
        return T::nan();
    }
    fit_slope(&xs, &ys)
}

/// `||V^{+-n} (sum_{|j|<=k} P_j)||` for `n = 0..=n_max` against the bound
/// `max(1, 2k) 2^{2k-n}`.
pub fn power_decay<T: Real>(shift: &Shift<T>, k: usize, n_max: usize) -> Result<DecayTable<T>, DynamicsError> {
    let jm = shift.space().half_width();
    if k > jm || n_max + k > jm {
        return Err(DynamicsError::Window(format!("need n_max + k <= J, got {n_max} + {k} > {jm}")));
    }
    let mut rows = Vec::with_capacity(n_max + 1);
    let two = T::lit(2.0);
    let lead = T::from_usize((2 * k).max(1)).unwrap();
    for n in 0..=n_max {
        let f = shift.power(n as i64).restrict(k).op_norm();
        let b = shift.power(-(n as i64)).restrict(k).op_norm();
        rows.push(DecayRow {
            n,
            forward_norm: f,
            backward_norm: b,
            bound: lead * two.powi(2 * k as i32 - n as i32),
        });
    }
    let within_bound = !shift.weights.is_default()
        || rows
            .iter()
            .all(|r| r.forward_norm <= r.bound + T::lit(EXACT_TOL) && r.backward_norm <= r.bound + T::lit(EXACT_TOL));
    let forward_slope = log2_slope(k + 1..=n_max, |n| rows[n].forward_norm);
    let backward_slope = log2_slope(k + 1..=n_max, |n| rows[n].backward_norm);
    Ok(DecayTable {
        k,
        rows,
        forward_slope,
        backward_slope,
        within_bound,
    })
}

/// `W = sum_j lambda_j P_j W_j P_j` with its tail report.
#[derive(Clone, Debug)]
pub struct WeightOperator<T: Real> {
    pub op: BlockOperator<T>,
    pub dense: ComplexMatrix<T>,
    pub lambda: Vec<T>,
    pub tails: Vec<TailRow<T>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow<T: Real> {
    pub n: usize,
    /// `||W (I - sum_{|j|<=n} P_j)||`.
    pub tail_norm: T,
    /// `sup_{|j|>n} lambda_j * sup_j ||W_j||`.
    pub bound: T,
    pub pass: bool,
}

/// Default schedule `lambda_j = 1/(1+|j|)`, indexed by block position.
pub fn default_lambda<T: Real>(space: &BlockSpace) -> Vec<T> {
    space
        .indices()
        .map(|j| T::one() / T::from_u64(1 + j.unsigned_abs()).unwrap())
        .collect()
}

/// `lambda` and `w_blocks` are indexed by block position (`j + J`).
pub fn build_w<T: Real>(
    space: BlockSpace,
    lambda: &[T],
    w_blocks: &[HermitianMatrix<T>],
) -> Result<WeightOperator<T>, DynamicsError> {
    let l = space.blocks();
    if lambda.len() != l || w_blocks.len() != l {
        return Err(DynamicsError::InvalidParameter(format!("need {l} weights and {l} blocks")));
    }
    if let Some(i) = lambda.iter().position(|&x| !(x >= T::zero() && x.is_finite())) {
        return Err(DynamicsError::InvalidParameter(format!("lambda[{i}] = {} is not a nonnegative number", lambda[i])));
    }
    for (i, w) in w_blocks.iter().enumerate() {
        if w.dim() != space.d {
            return Err(DynamicsError::InvalidParameter(format!("W_j block {i} is not {0}x{0}", space.d)));
        }
        if w.min_eigenvalue() < -T::lit(1e-10) {
            return Err(DynamicsError::InvalidParameter(format!("W_j block {i} is not PSD")));
        }
    }
    let mut op = BlockOperator::new(space);
    for (i, j) in space.indices().enumerate() {
        op.set(j, j, w_blocks[i].as_matrix().scale_real(lambda[i]));
    }
    let big_m = w_blocks.iter().map(|w| operator_norm(w.as_matrix())).fold(T::zero(), T::max);
    let mut tails = Vec::with_capacity(space.half_width());
    for n in 0..space.half_width() {
        let mut tail = BlockOperator::new(space);
        let mut sup_l = T::zero();
        for (i, j) in space.indices().enumerate() {
            if j.unsigned_abs() as usize > n {
                let (t, m) = op.block(j).unwrap();
                tail.set(j, *t, m.clone());
                sup_l = sup_l.max(lambda[i]);
            }
        }
        let tail_norm = tail.op_norm();
        let bound = sup_l * big_m;
        tails.push(TailRow {
            n,
            tail_norm,
            bound,
            pass: tail_norm <= bound * (T::one() + T::lit(1e-12)) + T::lit(1e-15),
        });
    }
    Ok(WeightOperator {
        dense: op.to_dense(),
        op,
        lambda: lambda.to_vec(),
        tails,
    })
}

impl<T: Real> WeightOperator<T> {
    pub fn op_norm(&self) -> T {
        self.op.op_norm()
    }
}

/// `||X||_W = sqrt(tr(X W X*))`, summed block by block.
pub fn seminorm_w<T: Real>(w: &WeightOperator<T>, x: &ComplexMatrix<T>) -> Result<T, DynamicsError> {
    let space = w.op.space();
    let d = space.block_dim();
    let n = space.dim();
    if x.cols() != n {
        return Err(DynamicsError::InvalidParameter(format!("X has {} columns, need {n}", x.cols())));
    }
    let mut sq = T::zero();
    for (&s, (t, m)) in &w.op.blocks {
        let (cs, ct) = (space.pos(s) * d, space.pos(*t) * d);
        for r in 0..x.rows() {
            // x_t W_b x_s* for the row r, restricted to the block.
            let mut acc = C::<T>::zero();
            for a in 0..d {
                let xa = x[(r, ct + a)];
                if xa.is_zero() {
                    continue;
                }
                let mut row = C::<T>::zero();
                for b in 0..d {
                    row = row + m[(a, b)] * x[(r, cs + b)].conj();
                }
                acc = acc + xa * row;
            }
            sq = sq + acc.re;
        }
    }
    if sq < -T::lit(1e-10) {
        return Err(DynamicsError::Numerical(format!("tr(X W X*) = {sq:e} < 0")));
    }
    Ok(sq.max(T::zero()).sqrt())
}

/// `R^n(X) = X (V^n)*`, plus the check `||R^n X||_2 <= ||X||_2 ||(V^n)*||`.
#[derive(Clone, Debug)]
pub struct RightMultiple<T: Real> {
    pub value: ComplexMatrix<T>,
    pub bound_ok: bool,
}

pub fn right_multiplier<T: Real>(shift: &Shift<T>, n: i64, x: &ComplexMatrix<T>) -> RightMultiple<T> {
    let p = shift.power(n);
    let value = right_apply(&p, x);
    let bound = x.frobenius_norm() * p.op_norm();
    RightMultiple {
        bound_ok: value.frobenius_norm() <= bound * (T::one() + T::lit(1e-12)) + T::lit(1e-15),
        value,
    }
}

/// `X B*` for a block operator `B`: block `j -> t` with matrix `M` sends
/// column block `j` of `X` to column block `t` of the result, times `M*`.
fn right_apply<T: Real>(b: &BlockOperator<T>, x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let space = b.space();
    let d = space.block_dim();
    let mut out = ComplexMatrix::zeros(x.rows(), space.dim());
    for (&s, (t, m)) in &b.blocks {
        let (cs, ct) = (space.pos(s) * d, space.pos(*t) * d);
        for r in 0..x.rows() {
            for a in 0..d {
                let mut acc = C::<T>::zero();
                for c in 0..d {
                    acc = acc + x[(r, cs + c)] * m[(a, c)].conj();
                }
                out[(r, ct + a)] = out[(r, ct + a)] + acc;
            }
        }
    }
    out
}

/// Complex Gaussian `F` projected to `F (sum_{|j|<=k} P_j)` and scaled to
/// `||F||_2 = 1`.
pub fn random_supported<T: Real, R: Rng + ?Sized>(space: &BlockSpace, k: usize, rng: &mut R) -> ComplexMatrix<T> {
    let n = space.dim();
    let f = random_matrix::<T, _>(rng, n, n).matmul(&space.support_projection(k));
    let nrm = f.frobenius_norm();
    f.scale_real(T::one() / nrm)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    Transitivity,
    Cosine,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransitivityReport<T: Real> {
    pub kind: WitnessKind,
    pub n_found: usize,
    pub delta: T,
    pub k: usize,
    /// Largest `N` admitted by the window.
    pub window_max: usize,
    /// `||R^n F_1||_W` for `n = 0..=window_max`.
    pub forward_trace: Vec<T>,
    /// `||R^{-n} F_2||_W` for `n = 0..=window_max`.
    pub backward_trace: Vec<T>,
    /// `||X_N - F_1||_W`, recomputed from `X_N`.
    pub defect_first: T,
    /// `||R^N X_N - F_2||_W` (or `||C^(N) X_N - F_2||_W`), recomputed.
    pub defect_second: T,
    /// Fitted `log2` slope of `||V^{+-n} Pi_k||` over `k < n <= window_max`,
    /// the rate that drives both defects.
    pub fitted_slope: T,
    /// Fitted `log2` slopes of the seminorm traces over the same range.
    pub seminorm_slope_forward: T,
    pub seminorm_slope_backward: T,
    /// `||F_i - F_i Pi_k||_2` before projection.
    pub projection_defects: [T; 2],
    /// Cosine only: `||(C^(N) X_N - F_2) - (R^N F_1 + R^{-N} F_1 + R^{2N} F_2 + R^{-2N} F_2)/2||_2`.
    pub expansion_defect: Option<T>,
}

fn project<T: Real>(space: &BlockSpace, k: usize, f: &ComplexMatrix<T>) -> (ComplexMatrix<T>, T) {
    let p = f.matmul(&space.support_projection(k));
    let defect = (f - &p).frobenius_norm();
    (p, defect)
}

struct WitnessSetup<T: Real> {
    f1: ComplexMatrix<T>,
    f2: ComplexMatrix<T>,
    proj: [T; 2],
    slope: T,
}

fn setup<T: Real>(
    shift: &Shift<T>,
    f1: &ComplexMatrix<T>,
    f2: &ComplexMatrix<T>,
    k: usize,
    window_max: usize,
) -> Result<WitnessSetup<T>, DynamicsError> {
    let space = *shift.space();
    let n = space.dim();
    for f in [f1, f2] {
        if f.rows() != n || f.cols() != n {
            return Err(DynamicsError::InvalidParameter(format!("F must be {n}x{n}")));
        }
    }
    if k > space.half_width() {
        return Err(DynamicsError::Window(format!("support radius {k} exceeds J = {}", space.half_width())));
    }
    let (f1, d1) = project(&space, k, f1);
    let (f2, d2) = project(&space, k, f2);
    let slope = log2_slope(k + 1..=window_max, |m| {
        let a = shift.power(m as i64).restrict(k).op_norm();
        let b = shift.power(-(m as i64)).restrict(k).op_norm();
        a.max(b)
    });
    Ok(WitnessSetup {
        f1,
        f2,
        proj: [d1, d2],
        slope,
    })
}

/// Smallest `N` with `||X_N - F_1||_W < delta` and `||R^N X_N - F_2||_W < delta`
/// for `X_N = F_1 + R^{-N} F_2`, searched over `N + k <= J`.
pub fn transitivity_witness<T: Real>(
    w: &WeightOperator<T>,
    shift: &Shift<T>,
    f1: &ComplexMatrix<T>,
    f2: &ComplexMatrix<T>,
    k: usize,
    delta: T,
) -> Result<TransitivityReport<T>, DynamicsError> {
    let jm = shift.space().half_width();
    let window_max = jm.saturating_sub(k);
    let s = setup(shift, f1, f2, k, window_max)?;
    let mut fwd = Vec::with_capacity(window_max + 1);
    let mut bwd = Vec::with_capacity(window_max + 1);
    for n in 0..=window_max as i64 {
        fwd.push(seminorm_w(w, &right_multiplier(shift, n, &s.f1).value)?);
        bwd.push(seminorm_w(w, &right_multiplier(shift, -n, &s.f2).value)?);
    }
    let found = (0..=window_max).find(|&n| fwd[n] < delta && bwd[n] < delta).ok_or_else(|| {
        DynamicsError::WindowTooSmall(format!(
            "no N <= {window_max} reaches delta = {delta:e} (best defects {:e}, {:e}); increase J",
            fwd[window_max], bwd[window_max]
        ))
    })?;
    let nn = found as i64;
    let x = &s.f1 + &right_multiplier(shift, -nn, &s.f2).value;
    let defect_first = seminorm_w(w, &(&x - &s.f1))?;
    let defect_second = seminorm_w(w, &(&right_multiplier(shift, nn, &x).value - &s.f2))?;
    Ok(TransitivityReport {
        kind: WitnessKind::Transitivity,
        n_found: found,
        delta,
        k,
        window_max,
        seminorm_slope_forward: log2_slope(k + 1..=window_max, |n| fwd[n]),
        seminorm_slope_backward: log2_slope(k + 1..=window_max, |n| bwd[n]),
        forward_trace: fwd,
        backward_trace: bwd,
        defect_first,
        defect_second,
        fitted_slope: s.slope,
        projection_defects: s.proj,
        expansion_defect: None,
    })
}

/// Smallest `N` with `||X_N - F_1||_W < delta` and `||C^(N) X_N - F_2||_W < delta`
/// for `X_N = F_1 + R^N F_2 + R^{-N} F_2`, `C^(n) = (R^n + R^{-n})/2`,
/// searched over `2N + k <= J`.
pub fn cosine_witness<T: Real>(
    w: &WeightOperator<T>,
    shift: &Shift<T>,
    f1: &ComplexMatrix<T>,
    f2: &ComplexMatrix<T>,
    k: usize,
    delta: T,
) -> Result<TransitivityReport<T>, DynamicsError> {
    let jm = shift.space().half_width();
    let window_max = jm.saturating_sub(k) / 2;
    let s = setup(shift, f1, f2, k, window_max)?;
    let r = |n: i64, x: &ComplexMatrix<T>| right_multiplier(shift, n, x).value;
    let half = creal(T::lit(0.5));
    let mut fwd = Vec::with_capacity(window_max + 1);
    let mut bwd = Vec::with_capacity(window_max + 1);
    let mut first = Vec::with_capacity(window_max + 1);
    let mut second = Vec::with_capacity(window_max + 1);
    for n in 0..=window_max as i64 {
        fwd.push(seminorm_w(w, &r(n, &s.f1))?);
        bwd.push(seminorm_w(w, &r(-n, &s.f2))?);
        let x = &(&s.f1 + &r(n, &s.f2)) + &r(-n, &s.f2);
        first.push(seminorm_w(w, &(&x - &s.f1))?);
        let c = (&r(n, &x) + &r(-n, &x)).scale(half);
        second.push(seminorm_w(w, &(&c - &s.f2))?);
    }
    let found = (0..=window_max).find(|&n| first[n] < delta && second[n] < delta).ok_or_else(|| {
        DynamicsError::WindowTooSmall(format!(
            "no N <= {window_max} with 2N + k <= J reaches delta = {delta:e} (best defects {:e}, {:e}); increase J",
            first[window_max], second[window_max]
        ))
    })?;
    let nn = found as i64;
    let x = &(&s.f1 + &r(nn, &s.f2)) + &r(-nn, &s.f2);
    let c = (&r(nn, &x) + &r(-nn, &x)).scale(half);
    let lhs = &c - &s.f2;
    let rhs = (&(&(&r(nn, &s.f1) + &r(-nn, &s.f1)) + &r(2 * nn, &s.f2)) + &r(-2 * nn, &s.f2)).scale(half);
    Ok(TransitivityReport {
        kind: WitnessKind::Cosine,
        n_found: found,
        delta,
        k,
        window_max,
        seminorm_slope_forward: log2_slope(k + 1..=window_max, |n| fwd[n]),
        seminorm_slope_backward: log2_slope(k + 1..=window_max, |n| bwd[n]),
        forward_trace: fwd,
        backward_trace: bwd,
        defect_first: seminorm_w(w, &(&x - &s.f1))?,
        defect_second: seminorm_w(w, &lhs)?,
        fitted_slope: s.slope,
        projection_defects: s.proj,
        expansion_defect: Some((&lhs - &rhs).frobenius_norm()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_blocks(space: &BlockSpace) -> Vec<HermitianMatrix<f64>> {
        vec![HermitianMatrix::identity(space.block_dim()); space.blocks()]
    }

    #[test]
    fn shift_inverse_exact() {
        let space = BlockSpace::new(5, 2).unwrap();
        let s = build_shift::<f64>(space, ShiftWeights::default()).unwrap();
        assert_eq!(s.inverse_defect, 0.0);
        assert!(s.v_inv.compose(&s.v).to_dense().max_abs_diff(&ComplexMatrix::identity(space.dim())) == 0.0);
    }

    #[test]
    fn power_formulas_exact() {
        let space = BlockSpace::new(12, 2).unwrap();
        let s = build_shift::<f64>(space, ShiftWeights::default()).unwrap();
        let r = check_power_formulas(&s).unwrap();
        assert!(r.cases > 100);
        assert_eq!(r.max_defect, 0.0);
    }

    #[test]
    fn decay_k0_and_k1() {
        let space = BlockSpace::new(12, 1).unwrap();
        let s = build_shift::<f64>(space, ShiftWeights::default()).unwrap();
        let t = power_decay(&s, 0, 12).unwrap();
        for r in &t.rows {
            assert_eq!(r.forward_norm, 0.5f64.powi(r.n as i32));
            assert_eq!(r.backward_norm, 0.5f64.powi(r.n as i32));
        }
        let t = power_decay(&s, 1, 11).unwrap();
        for r in t.rows.iter().filter(|r| r.n > 1) {
            assert_eq!(r.forward_norm, 2f64.powi(2 - r.n as i32));
        }
        assert!(t.within_bound);
        assert!((t.forward_slope + 1.0).abs() < 1e-12);
        assert!(matches!(power_decay(&s, 2, 11), Err(DynamicsError::Window(_))));
    }

    #[test]
    fn w_tail_closed_form() {
        let space = BlockSpace::new(6, 1).unwrap();
        let w = build_w(space, &default_lambda::<f64>(&space), &unit_blocks(&space)).unwrap();
        for t in &w.tails {
            assert!((t.tail_norm - 1.0 / (2.0 + t.n as f64)).abs() < 1e-15);
            assert!(t.pass);
        }
        let mut bad = default_lambda::<f64>(&space);
        bad[0] = -1.0;
        assert!(build_w(space, &bad, &unit_blocks(&space)).is_err());
    }

    #[test]
    fn seminorm_examples() {
        let space = BlockSpace::new(3, 1).unwrap();
        let mut lambda = vec![0.0; space.blocks()];
        lambda[space.pos(0)] = 1.0;
        let w = build_w(space, &lambda, &unit_blocks(&space)).unwrap();
        assert_eq!(seminorm_w(&w, &space.projection(0)).unwrap(), 1.0);
        assert_eq!(seminorm_w(&w, &space.projection(2)).unwrap(), 0.0);
        assert_eq!(seminorm_w(&w, &ComplexMatrix::zeros(7, 7)).unwrap(), 0.0);
    }

    #[test]
    fn right_multiplier_single_block() {
        let space = BlockSpace::new(3, 1).unwrap();
        let s = build_shift::<f64>(space, ShiftWeights::default()).unwrap();
        let p0 = space.projection::<f64>(0);
        let r = right_multiplier(&s, 1, &p0);
        assert!(r.bound_ok);
        let nz: Vec<_> = r.value.data().iter().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nz.len(), 1);
        assert_eq!(nz[0].re, 0.5);
        assert_eq!(right_multiplier(&s, 0, &p0).value, p0);
    }

    #[test]
    fn single_block_witness() {
        let space = BlockSpace::new(20, 1).unwrap();
        let s = build_shift::<f64>(space, ShiftWeights::default()).unwrap();
        let w = build_w(space, &vec![1.0; space.blocks()], &unit_blocks(&space)).unwrap();
        let p0 = space.projection::<f64>(0);
        let delta = 1e-3;
        let r = transitivity_witness(&w, &s, &p0, &p0, 0, delta).unwrap();
        assert_eq!(r.n_found, (1.0f64 / delta).log2().ceil() as usize);
        assert!(r.defect_first < delta && r.defect_second < delta);
        let zero = ComplexMatrix::zeros(space.dim(), space.dim());
        let c = cosine_witness(&w, &s, &zero, &zero, 0, delta).unwrap();
        assert_eq!(c.n_found, 0);
    }
}
