//! Scenario configuration. One JSON document; every field has a default and
//! unknown keys are rejected.

use std::path::{Path, PathBuf};

use opalg::catalog::CatalogSizes;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Inequalities,
    Gns,
    Catalog,
    Dynamics,
    All,
}

impl SuiteName {
    pub const CONCRETE: [SuiteName; 4] = [SuiteName::Catalog, SuiteName::Dynamics, SuiteName::Gns, SuiteName::Inequalities];

    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteName::Inequalities => "inequalities",
            SuiteName::Gns => "gns",
            SuiteName::Catalog => "catalog",
            SuiteName::Dynamics => "dynamics",
            SuiteName::All => "all",
        }
    }

    /// Fixed ChaCha stream per suite, so a suite's samples do not depend on
    /// which other suites run.
    pub fn stream(&self) -> u64 {
        match self {
            SuiteName::Inequalities => 1,
            SuiteName::Gns => 2,
            SuiteName::Catalog => 3,
            SuiteName::Dynamics => 4,
            SuiteName::All => 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub suites: Vec<SuiteName>,
    pub seed: u64,
    pub out: PathBuf,
    pub tolerances: Tolerances,
    pub inequalities: InequalitiesConfig,
    pub gns: GnsConfig,
    pub catalog: CatalogConfig,
    pub dynamics: DynamicsConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            suites: vec![SuiteName::All],
            seed: 7,
            out: PathBuf::from("opalg-out"),
            tolerances: Tolerances::default(),
            inequalities: InequalitiesConfig::default(),
            gns: GnsConfig::default(),
            catalog: CatalogConfig::default(),
            dynamics: DynamicsConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative slack allowed in the Schwarz and triangle inequalities.
    pub inequality_rtol: f64,
    pub homogeneity: f64,
    pub invariance: f64,
    pub representation: f64,
    pub epsilon: f64,
    pub reconstruction: f64,
    pub approximate_identity: f64,
    /// Closed forms evaluated in exact block arithmetic.
    pub exact: f64,
    pub quadrature: f64,
    pub slope: f64,
    pub richardson: f64,
    /// Hand-computed fixtures that go through floating-point linear algebra.
    pub fixture: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            inequality_rtol: 1e-9,
            homogeneity: 1e-12,
            invariance: 1e-8,
            representation: 1e-8,
            epsilon: 1e-10,
            reconstruction: 1e-8,
            approximate_identity: 1e-8,
            exact: 1e-12,
            quadrature: 1e-6,
            slope: 0.01,
            richardson: 0.2,
            fixture: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            inequality_rtol: self.inequality_rtol * s,
            homogeneity: self.homogeneity * s,
            invariance: self.invariance * s,
            representation: self.representation * s,
            epsilon: self.epsilon * s,
            reconstruction: self.reconstruction * s,
            approximate_identity: self.approximate_identity * s,
            exact: self.exact * s,
            quadrature: self.quadrature * s,
            slope: self.slope * s,
            richardson: self.richardson * s,
            fixture: self.fixture * s,
        }
    }

    fn fields(&self) -> [(&'static str, f64); 12] {
        [
            ("inequality_rtol", self.inequality_rtol),
            ("homogeneity", self.homogeneity),
            ("invariance", self.invariance),
            ("representation", self.representation),
            ("epsilon", self.epsilon),
            ("reconstruction", self.reconstruction),
            ("approximate_identity", self.approximate_identity),
            ("exact", self.exact),
            ("quadrature", self.quadrature),
            ("slope", self.slope),
            ("richardson", self.richardson),
            ("fixture", self.fixture),
        ]
    }
}

/// A functional `tr(. W)` with diagonal `W`, on the operator-norm domain
/// (`schatten_p` absent) or a Schatten-`p` domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFixture {
    pub weights: Vec<f64>,
    #[serde(default)]
    pub schatten_p: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InequalitiesConfig {
    pub pairs_per_form: usize,
    pub catalog: CatalogSizes,
    pub norm_samples: usize,
    pub norm_fixtures: Vec<TraceFixture>,
}

impl Default for InequalitiesConfig {
    fn default() -> Self {
        let w4 = vec![1.0, 0.5, 0.25, 0.125];
        Self {
            pairs_per_form: 10_000,
            catalog: CatalogSizes::default(),
            norm_samples: 10_000,
            norm_fixtures: vec![
                TraceFixture { weights: vec![1.0, 2.0], schatten_p: None },
                TraceFixture { weights: w4.clone(), schatten_p: None },
                TraceFixture { weights: w4.clone(), schatten_p: Some(1.0) },
                TraceFixture { weights: w4.clone(), schatten_p: Some(2.0) },
                TraceFixture { weights: w4, schatten_p: Some(3.0) },
            ],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnsConfig {
    /// Diagonal of `W` for the `M_2` fixture.
    pub m2_weights: Vec<f64>,
    /// Diagonal of `W` for the Schatten fixture; its length is `n`.
    pub schatten_weights: Vec<f64>,
    pub schatten_p: f64,
    pub samples: usize,
    pub panel: usize,
    pub grid_x_max: f64,
    pub grid_points: usize,
}

impl Default for GnsConfig {
    fn default() -> Self {
        Self {
            m2_weights: vec![1.0, 0.0],
            schatten_weights: (0..6).map(|j| 0.5f64.powi(j)).collect(),
            schatten_p: 2.0,
            samples: 100,
            panel: 8,
            grid_x_max: 8.0,
            grid_points: 161,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatalogConfig {
    pub projector_trials: usize,
    pub projector_dim: usize,
    pub projector_p: f64,
    pub projector_levels: usize,
    pub kernel_points: usize,
    /// Coarse x-grid size for the derivative check; the fine grid halves the spacing.
    pub derivative_points: usize,
    pub derivative_t_points: usize,
    pub sizes: CatalogSizes,
    pub invariance_samples: usize,
    pub bound_pairs: usize,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        Self {
            projector_trials: 100,
            projector_dim: 20,
            projector_p: 2.0,
            projector_levels: 20,
            kernel_points: 2001,
            derivative_points: 41,
            derivative_t_points: 101,
            sizes: CatalogSizes::default(),
            invariance_samples: 100,
            bound_pairs: 1000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    /// `J`: blocks run over `-J..=J`.
    pub half_width: usize,
    pub block_dim: usize,
    /// `k`: support radius of `F_1`, `F_2`.
    pub support_radius: usize,
    pub delta: f64,
    /// Shift weights on sources `j >= 0` and `j <= -1`.
    pub weights: [f64; 2],
    /// `lambda_j` by position `j + J`; default `1/(1+|j|)`.
    pub lambda: Option<Vec<f64>>,
    pub seminorm_pairs: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            half_width: 26,
            block_dim: 2,
            support_radius: 2,
            delta: 1e-3,
            weights: [0.5, 2.0],
            lambda: None,
            seminorm_pairs: 1000,
        }
    }
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self, Vec<String>> {
        let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, Vec<String>> {
        serde_json::from_str(text).map_err(|e| vec![format!("config: {e}")])
    }

    /// Concrete suites in report order.
    pub fn selected(&self) -> Vec<SuiteName> {
        let mut out: Vec<SuiteName> = if self.suites.contains(&SuiteName::All) {
            SuiteName::CONCRETE.to_vec()
        } else {
            self.suites.clone()
        };
        out.sort_by_key(|s| s.as_str());
        out.dedup();
        out
    }

    /// Every problem found, one line each.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.suites.is_empty() {
            errs.push("suites: empty suite list".to_string());
        }
        for (name, v) in self.tolerances.fields() {
            if !(v.is_finite() && v >= 0.0) {
                errs.push(format!("tolerances.{name}: must be a finite nonnegative number, got {v}"));
            }
        }
        let ineq = &self.inequalities;
        if ineq.pairs_per_form == 0 {
            errs.push("inequalities.pairs_per_form: must be positive".into());
        }
        if ineq.norm_samples == 0 {
            errs.push("inequalities.norm_samples: must be positive".into());
        }
        for (i, f) in ineq.norm_fixtures.iter().enumerate() {
            if f.weights.is_empty() || f.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                errs.push(format!("inequalities.norm_fixtures[{i}].weights: need a nonempty list of nonnegative numbers"));
            }
            if let Some(p) = f.schatten_p {
                if !(p >= 1.0) {
                    errs.push(format!("inequalities.norm_fixtures[{i}].schatten_p: need p >= 1, got {p}"));
                }
            }
        }
        let g = &self.gns;
        for (name, w) in [("m2_weights", &g.m2_weights), ("schatten_weights", &g.schatten_weights)] {
            if w.len() < 2 || w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                errs.push(format!("gns.{name}: need at least two nonnegative numbers"));
            } else if w.iter().all(|x| *x == 0.0) {
                errs.push(format!("gns.{name}: all weights are zero"));
            }
        }
        if g.m2_weights.len() != 2 {
            errs.push(format!("gns.m2_weights: need exactly 2 entries, got {}", g.m2_weights.len()));
        }
        if !(g.schatten_p >= 1.0 && g.schatten_p.is_finite()) {
            errs.push(format!("gns.schatten_p: need finite p >= 1, got {}", g.schatten_p));
        }
        if g.samples == 0 || g.panel < 2 {
            errs.push("gns.samples must be positive and gns.panel at least 2".into());
        }
        if !(g.grid_x_max > 0.0) || g.grid_points < 5 {
            errs.push("gns.grid_x_max must be positive and gns.grid_points at least 5".into());
        }
        let c = &self.catalog;
        if c.projector_dim < 1 || c.projector_levels < 1 || c.projector_trials < 1 {
            errs.push("catalog.projector_*: dimension, levels and trials must be positive".into());
        }
        if !(c.projector_p >= 1.0) {
            errs.push(format!("catalog.projector_p: need p >= 1, got {}", c.projector_p));
        }
        if c.kernel_points < 2 || c.derivative_points < 5 || c.derivative_t_points < 2 {
            errs.push("catalog: kernel_points >= 2, derivative_points >= 5, derivative_t_points >= 2".into());
        }
        let d = &self.dynamics;
        if d.half_width < 1 || d.block_dim < 1 {
            errs.push("dynamics: half_width and block_dim must be at least 1".into());
        }
        if d.support_radius > d.half_width {
            errs.push(format!(
                "dynamics.support_radius: {} exceeds half_width {}",
                d.support_radius, d.half_width
            ));
        }
        if !(d.delta > 0.0) {
            errs.push(format!("dynamics.delta: must be positive, got {}", d.delta));
        }
        if d.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            errs.push("dynamics.weights: need two positive numbers".into());
        }
        if let Some(l) = &d.lambda {
            if l.len() != 2 * d.half_width + 1 {
                errs.push(format!("dynamics.lambda: need {} entries, got {}", 2 * d.half_width + 1, l.len()));
            }
            if l.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                errs.push("dynamics.lambda: entries must be nonnegative".into());
            }
        }
        errs
    }
}
