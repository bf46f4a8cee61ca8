//! Batch runner for the identity checks over sampled points of one metric.

mod checks;

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::Matrix4;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use checks::{classify_gauge, gauge_expectation_met, GAUGE_ZERO_TOLERANCE};
use checks::{evaluate, PointContext, Sample};

use crate::error::{Error, Result};
use crate::geometry::{curvature, eta, eval_metric, sample_points, MetricSpec, Stencil};
use crate::rs_operator::fixtures::{bispinor_catalog, vector_catalog};
use crate::rs_operator::{Background, EmField, MassParam};
use crate::spacetimes::{load_preset, spec_from_config, MetricConfig, PresetId};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceClass {
    /// Pure matrix algebra at a point.
    Algebraic,
    /// One finite-difference derivative of a field.
    FirstOrder,
    /// Nested finite differences.
    SecondOrder,
    /// Curvature from metric derivatives; tighter when they are analytic.
    Curvature,
}

impl ToleranceClass {
    pub const ALL: [ToleranceClass; 4] = [
        ToleranceClass::Algebraic,
        ToleranceClass::FirstOrder,
        ToleranceClass::SecondOrder,
        ToleranceClass::Curvature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ToleranceClass::Algebraic => "algebraic",
            ToleranceClass::FirstOrder => "first_order",
            ToleranceClass::SecondOrder => "second_order",
            ToleranceClass::Curvature => "curvature",
        }
    }

    pub fn default_tolerance(self, spec: &MetricSpec) -> f64 {
        match self {
            ToleranceClass::Algebraic => 1e-10,
            ToleranceClass::FirstOrder => 1e-6,
            ToleranceClass::SecondOrder => 1e-4,
            ToleranceClass::Curvature if spec.has_analytic_derivatives() => 1e-8,
            ToleranceClass::Curvature => 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Applicability {
    All,
    /// Only where the metric is `diag(1, -1, -1, -1)` at every sampled point.
    FlatCartesian,
    /// Only where `R_ab = (R/4) g_ab` with nonzero `R`.
    EinsteinSpace,
    /// Einstein space with no electromagnetic coupling.
    NeutralEinsteinSpace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Residual below tolerance.
    Vanishes,
    /// Zero where the Einstein tensor vanishes, otherwise nonzero and equal
    /// to the Einstein-tensor prediction.
    GaugeDichotomy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeClass {
    Zero,
    CriterionNonzero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckDescriptor {
    pub id: &'static str,
    /// The relation this check establishes.
    pub relation: &'static str,
    pub description: &'static str,
    pub class: ToleranceClass,
    pub applicability: Applicability,
    pub expectation: Expectation,
}

/// Every relation the suite must cover.
pub const REQUIRED_RELATIONS: [&str; 24] = [
    "gamma-hermiticity",
    "connection-hermiticity",
    "gamma-covariant-constancy",
    "clifford-anticommutator",
    "gamma-trace",
    "triple-gamma-expansion",
    "sigma-commutator",
    "connection-commutator-curvature",
    "spinor-curvature-ricci-contraction",
    "covariant-commutator-decomposition",
    "gamma-contraction-constraint",
    "ricci-bridge",
    "divergence-chain-constraint",
    "operator-matrix-form",
    "flat-dirac-reduction",
    "einstein-space-ricci",
    "einstein-space-factor",
    "similarity-inverse",
    "transformation-match",
    "transformation-expansion",
    "transformed-mass-dual-forms",
    "gauge-einstein-criterion",
    "epsilon-determinant",
    "massless-form-equivalence",
];

macro_rules! check {
    ($id:literal, $rel:literal, $class:ident, $app:ident, $exp:ident, $desc:literal) => {
        CheckDescriptor {
            id: $id,
            relation: $rel,
            description: $desc,
            class: ToleranceClass::$class,
            applicability: Applicability::$app,
            expectation: Expectation::$exp,
        }
    };
}

pub const CHECKS: [CheckDescriptor; 24] = [
    check!(
        "gamma_hermiticity",
        "gamma-hermiticity",
        Algebraic,
        All,
        Vanishes,
        "(gamma^a)^dagger = gamma^0 gamma^a gamma^0"
    ),
    check!(
        "connection_hermiticity",
        "connection-hermiticity",
        Algebraic,
        All,
        Vanishes,
        "Gamma_a^dagger gamma^0 = -gamma^0 Gamma_a and tr Gamma_a = 0"
    ),
    check!(
        "gamma_covariant_constancy",
        "gamma-covariant-constancy",
        SecondOrder,
        All,
        Vanishes,
        "d_s gamma^r + [Gamma_s, gamma^r] + Christoffel^r_{sl} gamma^l = 0"
    ),
    check!(
        "clifford_anticommutator",
        "clifford-anticommutator",
        Algebraic,
        All,
        Vanishes,
        "{gamma^a, gamma^b} = 2 g^{ab}"
    ),
    check!(
        "gamma_trace",
        "gamma-trace",
        Algebraic,
        All,
        Vanishes,
        "gamma^a gamma_a = 4"
    ),
    check!(
        "triple_gamma_expansion",
        "triple-gamma-expansion",
        Algebraic,
        All,
        Vanishes,
        "gamma^a gamma^b gamma^r in terms of single gammas and i gamma5 epsilon gamma"
    ),
    check!(
        "sigma_commutator",
        "sigma-commutator",
        Algebraic,
        All,
        Vanishes,
        "[sigma^ab, sigma^mn] closes on sigma with metric coefficients"
    ),
    check!(
        "spinor_curvature",
        "connection-commutator-curvature",
        Curvature,
        All,
        Vanishes,
        "curvature of the spin connection equals sigma^mn R_mnab / 2"
    ),
    check!(
        "spinor_curvature_ricci_contraction",
        "spinor-curvature-ricci-contraction",
        Curvature,
        All,
        Vanishes,
        "gamma^a Omega_ab = gamma^n R_nb / 2"
    ),
    check!(
        "covariant_commutator_decomposition",
        "covariant-commutator-decomposition",
        SecondOrder,
        All,
        Vanishes,
        "[D_a, D_b] Psi_n splits into Riemann, spinor curvature and field strength terms"
    ),
    check!(
        "gamma_contraction_constraint",
        "gamma-contraction-constraint",
        FirstOrder,
        All,
        Vanishes,
        "gamma^r E_r = 2/3 (D^b Psi_b - kappa/2 gamma^b Psi_b)"
    ),
    check!(
        "ricci_bridge",
        "ricci-bridge",
        SecondOrder,
        All,
        Vanishes,
        "-gamma^a [nabla_a, nabla_b] Psi^b = gamma^a R_na Psi^n"
    ),
    check!(
        "divergence_chain_constraint",
        "divergence-chain-constraint",
        SecondOrder,
        All,
        Vanishes,
        "divergence of the wave residual minus derivatives of the first constraint is algebraic"
    ),
    check!(
        "operator_matrix_form",
        "operator-matrix-form",
        Algebraic,
        All,
        Vanishes,
        "block-matrix operator form reproduces the wave residual"
    ),
    check!(
        "massless_form_equivalence",
        "massless-form-equivalence",
        FirstOrder,
        All,
        Vanishes,
        "massless residual of S Psi equals S C applied to the original residual"
    ),
    check!(
        "flat_dirac_reduction",
        "flat-dirac-reduction",
        FirstOrder,
        FlatCartesian,
        Vanishes,
        "constrained plane waves solve both the wave equation and four Dirac equations"
    ),
    check!(
        "einstein_space_ricci",
        "einstein-space-ricci",
        Curvature,
        EinsteinSpace,
        Vanishes,
        "R_ab = (R/4) g_ab"
    ),
    check!(
        "einstein_space_factor",
        "einstein-space-factor",
        SecondOrder,
        NeutralEinsteinSpace,
        Vanishes,
        "algebraic constraint reduces to (R/12 + kappa^2)/2 gamma^r Psi_r"
    ),
    check!(
        "similarity_inverse",
        "similarity-inverse",
        Algebraic,
        All,
        Vanishes,
        "S S^-1 = 1 whenever a + b + 4ab = 0"
    ),
    check!(
        "transformation_closed_form",
        "transformation-match",
        Algebraic,
        All,
        Vanishes,
        "transformed operator at (-1/3, -1, 2) equals its closed form"
    ),
    check!(
        "transformation_expansion",
        "transformation-expansion",
        Algebraic,
        All,
        Vanishes,
        "transformed operator equals its expansion for general (a, b, c)"
    ),
    check!(
        "transformed_mass_dual_forms",
        "transformed-mass-dual-forms",
        Algebraic,
        All,
        Vanishes,
        "transformed mass block in gamma-gamma, sigma and epsilon forms agree"
    ),
    check!(
        "gauge_einstein_criterion",
        "gauge-einstein-criterion",
        SecondOrder,
        All,
        GaugeDichotomy,
        "massless residual of a gradient field is G_rb gamma^b psi / 2"
    ),
    check!(
        "epsilon_determinant",
        "epsilon-determinant",
        Curvature,
        All,
        Vanishes,
        "epsilon epsilon contraction of Riemann equals 4 G"
    ),
];

pub fn descriptor(id: &str) -> Option<&'static CheckDescriptor> {
    CHECKS.iter().find(|c| c.id == id)
}

/// Where the metric comes from, plus what identifies it in reports.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricSource {
    Preset(PresetId),
    Config(MetricConfig),
}

impl MetricSource {
    pub fn spec(&self) -> Result<MetricSpec> {
        match self {
            MetricSource::Preset(id) => load_preset(id),
            MetricSource::Config(cfg) => spec_from_config(cfg),
        }
    }

    pub fn name(&self) -> String {
        match self {
            MetricSource::Preset(id) => id.name().to_string(),
            MetricSource::Config(cfg) => cfg.display_name(),
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        match self {
            MetricSource::Preset(id) => id.params(),
            MetricSource::Config(cfg) => cfg.params.clone(),
        }
    }

    pub fn origin(&self) -> &'static str {
        match self {
            MetricSource::Preset(_) => "preset",
            MetricSource::Config(_) => "config",
        }
    }

    pub fn info(&self, spec: &MetricSpec) -> MetricInfo {
        MetricInfo {
            name: self.name(),
            origin: self.origin(),
            params: self.params(),
            content_hash: self.content_hash(),
            analytic_derivatives: spec.has_analytic_derivatives(),
        }
    }

    pub fn content_hash(&self) -> String {
        match self {
            MetricSource::Preset(id) => {
                let mut text = format!("preset:{}", id.name());
                for (k, v) in id.params() {
                    text.push_str(&format!(";{k}={v:?}"));
                }
                hex::encode(Sha256::digest(text.as_bytes()))
            }
            MetricSource::Config(cfg) => cfg.content_hash(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub points: usize,
    pub seed: u64,
    /// Random fields per field-level check.
    pub fixtures: usize,
    pub mass: f64,
    /// Nonzero couples a fixed uniform field strength.
    pub charge: f64,
    /// Keyed by check id or tolerance class name.
    pub tolerances: BTreeMap<String, f64>,
    /// Check ids to run; empty runs all.
    pub checks: Vec<String>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            points: 20,
            seed: 42,
            fixtures: 5,
            mass: 0.7,
            charge: 0.0,
            tolerances: BTreeMap::new(),
            checks: Vec::new(),
        }
    }
}

/// Uniform field strength used when a charge is given.
pub fn suite_field_strength() -> Matrix4<f64> {
    let upper = [
        (0, 1, 0.3),
        (0, 2, -0.2),
        (0, 3, 0.1),
        (2, 3, -0.15),
        (1, 3, 0.25),
        (1, 2, 0.05),
    ];
    let mut f = Matrix4::zeros();
    for (a, b, v) in upper {
        f[(a, b)] = v;
        f[(b, a)] = -v;
    }
    f
}

impl SuiteConfig {
    fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(invalid("points", 0.0, "at least one point is required"));
        }
        if self.fixtures == 0 {
            return Err(invalid(
                "fixtures",
                0.0,
                "at least one fixture field is required",
            ));
        }
        if let Some(id) = self.checks.iter().find(|id| descriptor(id).is_none()) {
            return Err(Error::InvalidParameter {
                name: id.clone(),
                value: f64::NAN,
                reason: "not a registered check id",
            });
        }
        for (key, &tol) in &self.tolerances {
            if descriptor(key).is_none() && !ToleranceClass::ALL.iter().any(|c| c.name() == key) {
                return Err(Error::InvalidParameter {
                    name: key.clone(),
                    value: tol,
                    reason: "not a check id or tolerance class",
                });
            }
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(invalid(key, tol, "tolerance must be positive"));
            }
        }
        Ok(())
    }

    pub fn tolerance(&self, check: &CheckDescriptor, spec: &MetricSpec) -> f64 {
        self.tolerances
            .get(check.id)
            .or_else(|| self.tolerances.get(check.class.name()))
            .copied()
            .unwrap_or_else(|| check.class.default_tolerance(spec))
    }
}

fn invalid(name: &str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        value,
        reason,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricInfo {
    pub name: String,
    pub origin: &'static str,
    pub params: BTreeMap<String, f64>,
    pub content_hash: String,
    pub analytic_derivatives: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StencilPolicy {
    pub first: Stencil,
    pub second: Stencil,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: &'static str,
    pub relation: &'static str,
    pub description: &'static str,
    pub class: ToleranceClass,
    pub expectation: Expectation,
    pub tolerance: f64,
    pub status: CheckStatus,
    /// Points at which the check carried information.
    pub points_tested: usize,
    pub max_relative_error: f64,
    /// Gauge classification per point for the dichotomy check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Vec<GaugeClass>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub metric: MetricInfo,
    pub seed: u64,
    pub points: usize,
    pub fixtures: usize,
    pub mass: f64,
    pub charge: f64,
    pub stencils: StencilPolicy,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<CheckResult>,
    pub summary: Summary,
    pub runtime_ms: f64,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn check(&self, id: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// Whether the sampled region is an Einstein space with nonzero curvature.
pub fn is_einstein_space(spec: &MetricSpec, points: &[crate::geometry::Point]) -> Result<bool> {
    for x in points {
        let b = curvature(spec, x)?;
        let scale = b.max_riemann().max(f64::MIN_POSITIVE);
        let r = b.scalar;
        if r.abs() <= 1e-6 * scale {
            return Ok(false);
        }
        let dev = (b.ricci - b.metric.g_lower * (r / 4.0)).abs().max();
        if dev > 1e-6 * scale {
            return Ok(false);
        }
    }
    Ok(true)
}

/// What the sampled region is, as far as applicability filters care.
#[derive(Debug, Clone, Copy)]
struct Region {
    flat_cartesian: bool,
    einstein: bool,
    charged: bool,
}

impl Region {
    fn classify(
        spec: &MetricSpec,
        points: &[crate::geometry::Point],
        charge: f64,
    ) -> Result<Region> {
        let mut flat_cartesian = true;
        for x in points {
            let g = eval_metric(spec, x)?.g_lower;
            flat_cartesian &= (g - eta()).abs().max() <= 1e-14;
        }
        Ok(Region {
            flat_cartesian,
            einstein: is_einstein_space(spec, points)?,
            charged: charge != 0.0,
        })
    }

    fn admits(&self, app: Applicability) -> bool {
        match app {
            Applicability::All => true,
            Applicability::FlatCartesian => self.flat_cartesian,
            Applicability::EinsteinSpace => self.einstein,
            Applicability::NeutralEinsteinSpace => self.einstein && !self.charged,
        }
    }
}

/// Runs every registered check at `config.points` sampled points.
pub fn run_suite(source: &MetricSource, config: &SuiteConfig) -> Result<SuiteReport> {
    let start = Instant::now();
    config.validate()?;
    let spec = source.spec()?;
    let mass = MassParam::new(config.mass)?;
    let mut bg = Background::new(spec.clone());
    if config.charge != 0.0 {
        bg = bg.with_em(EmField::uniform(suite_field_strength()), config.charge);
    }
    let points = sample_points(&spec, config.points, config.seed)?;
    let vectors = vector_catalog(config.fixtures, config.seed);
    let bispinors = bispinor_catalog(config.fixtures, config.seed);
    let region = Region::classify(&spec, &points, config.charge)?;

    let contexts = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let seed = config.seed.wrapping_mul(7919).wrapping_add(i as u64);
            PointContext::new(&bg, mass, *x, &vectors, &bispinors, seed)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut checks = Vec::with_capacity(CHECKS.len());
    let mut tolerances = BTreeMap::new();
    let selected = CHECKS
        .iter()
        .filter(|d| config.checks.is_empty() || config.checks.iter().any(|id| id == d.id));
    for desc in selected {
        let tol = config.tolerance(desc, &spec);
        tolerances.insert(desc.id.to_string(), tol);
        checks.push(run_check(
            desc,
            tol,
            region.admits(desc.applicability),
            &contexts,
        ));
    }
    let summary = Summary {
        passed: checks
            .iter()
            .filter(|c| c.status == CheckStatus::Pass)
            .count(),
        failed: checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .count(),
        skipped: checks
            .iter()
            .filter(|c| c.status == CheckStatus::Skipped)
            .count(),
    };
    Ok(SuiteReport {
        schema_version: SCHEMA_VERSION,
        metric: source.info(&spec),
        seed: config.seed,
        points: config.points,
        fixtures: config.fixtures,
        mass: config.mass,
        charge: config.charge,
        stencils: StencilPolicy {
            first: Stencil::FIRST,
            second: Stencil::SECOND,
        },
        tolerances,
        checks,
        summary,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn run_check(
    desc: &'static CheckDescriptor,
    tol: f64,
    applies: bool,
    contexts: &[PointContext],
) -> CheckResult {
    let start = Instant::now();
    let mut result = CheckResult {
        id: desc.id,
        relation: desc.relation,
        description: desc.description,
        class: desc.class,
        expectation: desc.expectation,
        tolerance: tol,
        status: CheckStatus::Skipped,
        points_tested: 0,
        max_relative_error: 0.0,
        classification: None,
        failure: None,
        runtime_ms: 0.0,
    };
    if !applies {
        return result;
    }
    let samples: Vec<Result<Sample>> = contexts
        .par_iter()
        .map(|cx| evaluate(desc.id, cx, tol))
        .collect();

    let mut classes = Vec::new();
    let mut failed = false;
    for (i, s) in samples.into_iter().enumerate() {
        match s {
            Ok(s) => {
                if let Some(g) = s.gauge {
                    classes.push(g);
                }
                if !s.informative {
                    continue;
                }
                result.points_tested += 1;
                // NaN propagates into the maximum
                if s.error.is_nan() || s.error > result.max_relative_error {
                    result.max_relative_error = s.error;
                }
                if !s.pass && !failed {
                    failed = true;
                    result.failure = Some(format!(
                        "point {i}: relative error {:e} exceeds {tol:e}",
                        s.error
                    ));
                }
            }
            Err(e) => {
                if !failed {
                    failed = true;
                    result.failure = Some(format!("point {i}: {e}"));
                }
            }
        }
    }
    if desc.expectation == Expectation::GaugeDichotomy {
        result.classification = Some(classes);
    }
    result.status = if failed {
        CheckStatus::Fail
    } else if result.points_tested == 0 {
        CheckStatus::Skipped
    } else {
        CheckStatus::Pass
    };
    result.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    result
}
