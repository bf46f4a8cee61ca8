//! The three subcommands. Each returns a text rendering, a JSON rendering
//! and whether every expectation was met.

use std::time::Instant;

use curved_rs::gauge::gauge_criterion;
use curved_rs::geometry::{curvature, sample_points, MetricSpec, Point};
use curved_rs::identity_suite::{
    classify_gauge, descriptor, gauge_expectation_met, is_einstein_space, run_suite,
    suite_field_strength, GaugeClass, MetricInfo, SuiteConfig, GAUGE_ZERO_TOLERANCE,
    SCHEMA_VERSION,
};
use curved_rs::rs_operator::fixtures::{bispinor_catalog, vector_catalog, PolyTrigField};
use curved_rs::rs_operator::{
    constraint_two_residual, contraction_identity, derivative_chain_check, einstein_space_factor,
    find_mass_root, vector_bispinor_max_abs, Background, EmField, LocalField, MassParam,
};
use curved_rs::spinor::bispinor_max_abs;
use serde::Serialize;

use crate::render;
use crate::{CliError, Common};

pub struct Output {
    pub text: String,
    pub json: String,
    pub passed: bool,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'static str,
    passed: bool,
    report: &'a T,
}

fn envelope<T: Serialize>(
    command: &'static str,
    passed: bool,
    report: &T,
) -> Result<String, CliError> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        passed,
        report,
    };
    serde_json::to_string_pretty(&env)
        .map_err(|e| CliError::Infrastructure(curved_rs::Error::Eval(e.to_string())))
}

fn suite_config(common: &Common) -> SuiteConfig {
    SuiteConfig {
        points: common.points as usize,
        seed: common.seed,
        fixtures: common.fixtures as usize,
        mass: common.mass,
        charge: common.charge,
        tolerances: common.tolerance_map(),
        checks: common.checks.clone(),
    }
}

fn tolerance(cfg: &SuiteConfig, id: &str, spec: &MetricSpec) -> f64 {
    cfg.tolerance(descriptor(id).expect("registered check"), spec)
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn identities(common: &Common) -> Result<Output, CliError> {
    let source = common.source()?;
    let report = run_suite(&source, &suite_config(common)).map_err(CliError::from_run)?;
    let passed = report.all_passed();
    Ok(Output {
        text: render::identities(&report),
        json: envelope("identities", passed, &report)?,
        passed,
    })
}

#[derive(Debug, Serialize)]
pub struct GaugePoint {
    pub coords: [f64; 4],
    /// Largest component of `G_ab`.
    pub einstein_norm: f64,
    pub classification: GaugeClass,
    /// Largest massless residual over fixtures, relative to the field scale.
    pub residual_norm: f64,
    pub predicted_norm: f64,
    /// Largest relative difference between residual and prediction; only
    /// meaningful where the prediction is nonzero.
    pub mismatch: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct GaugeReport {
    pub metric: MetricInfo,
    pub seed: u64,
    pub points: usize,
    pub fixtures: usize,
    pub zero_tolerance: f64,
    pub mismatch_tolerance: f64,
    pub verdict: String,
    pub rows: Vec<GaugePoint>,
    pub runtime_ms: f64,
}

pub const GAUGE_SYMMETRIC: &str = "gauge-symmetric region";
pub const NO_GAUGE_SYMMETRY: &str = "no gauge symmetry (G≠0)";
pub const GAUGE_MIXED: &str = "gauge symmetry only where G=0";

pub fn gauge(common: &Common) -> Result<Output, CliError> {
    let start = Instant::now();
    let source = common.source()?;
    let spec = source.spec().map_err(CliError::Config)?;
    let cfg = suite_config(common);
    if cfg.charge != 0.0 {
        eprintln!("note: the gauge criterion is evaluated without electromagnetic coupling; --charge is ignored");
    }
    let tol = tolerance(&cfg, "gauge_einstein_criterion", &spec);
    let bg = Background::new(spec.clone());
    let points = sample_points(&spec, cfg.points, cfg.seed).map_err(CliError::from_run)?;
    let fields = bispinor_catalog(cfg.fixtures, cfg.seed);
    let rows = par_rows(&points, |x| gauge_row(&bg, &fields, x, tol))?;

    let verdict = if rows.iter().all(|r| r.classification == GaugeClass::Zero) {
        GAUGE_SYMMETRIC
    } else if rows
        .iter()
        .all(|r| r.classification == GaugeClass::CriterionNonzero)
    {
        NO_GAUGE_SYMMETRY
    } else {
        GAUGE_MIXED
    };
    let report = GaugeReport {
        metric: source.info(&spec),
        seed: cfg.seed,
        points: cfg.points,
        fixtures: cfg.fixtures,
        zero_tolerance: GAUGE_ZERO_TOLERANCE,
        mismatch_tolerance: tol,
        verdict: verdict.to_string(),
        rows,
        runtime_ms: elapsed_ms(start),
    };
    let passed = report.rows.iter().all(|r| r.passed);
    Ok(Output {
        text: render::gauge(&report),
        json: envelope("gauge", passed, &report)?,
        passed,
    })
}

fn par_rows<T: Send>(
    points: &[Point],
    f: impl Fn(&Point) -> curved_rs::Result<T> + Sync + Send,
) -> Result<Vec<T>, CliError> {
    use rayon::prelude::*;
    points
        .par_iter()
        .map(f)
        .collect::<curved_rs::Result<Vec<T>>>()
        .map_err(CliError::from_run)
}

fn gauge_row(
    bg: &Background,
    fields: &[PolyTrigField],
    x: &Point,
    tol: f64,
) -> curved_rs::Result<GaugePoint> {
    let bundle = curvature(&bg.spec, x)?;
    let class = classify_gauge(&bundle);
    let mut row = GaugePoint {
        coords: x.coords,
        einstein_norm: bundle.einstein.abs().max(),
        classification: class,
        residual_norm: 0.0,
        predicted_norm: 0.0,
        mismatch: None,
        passed: true,
    };
    for psi in fields {
        let check = gauge_criterion(psi, bg, x)?;
        row.residual_norm = row.residual_norm.max(check.relative_direct());
        row.predicted_norm = row
            .predicted_norm
            .max(check.predicted_norm / check.scale.max(f64::MIN_POSITIVE));
        if class == GaugeClass::CriterionNonzero {
            row.mismatch = Some(row.mismatch.unwrap_or(0.0).max(check.mismatch()));
        }
        row.passed &= gauge_expectation_met(class, &check, tol);
    }
    Ok(row)
}

#[derive(Debug, Serialize)]
pub struct ConstraintPoint {
    pub coords: [f64; 4],
    /// `gamma^r E_r` against its first-constraint form, relative.
    pub contraction_error: f64,
    /// Divergence chain against the algebraic constraint, relative.
    pub chain_error: f64,
    /// Largest `|D^b Psi_b - (kappa/2) gamma^b Psi_b| / |Psi|`.
    pub first_constraint_norm: f64,
    /// Largest `|K| / |Psi|` for the algebraic constraint `K`.
    pub algebraic_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct ScanPoint {
    pub mass: f64,
    /// Fitted `K / gamma^r Psi_r`, real and imaginary parts.
    pub measured: [f64; 2],
    /// `(R/12 - m^2) / 2`.
    pub predicted: f64,
}

#[derive(Debug, Serialize)]
pub struct EinsteinScan {
    pub scalar_curvature: f64,
    /// `sqrt(R/12)` when `R > 0`.
    pub predicted_root: Option<f64>,
    /// Sign change of the measured factor within the scan range.
    pub root: Option<f64>,
    /// Largest misfit of the factor, relative to `max(|R|/12, m^2)`.
    pub max_misfit: f64,
    pub scan: Vec<ScanPoint>,
}

#[derive(Debug, Serialize)]
pub struct ConstraintsReport {
    pub metric: MetricInfo,
    pub seed: u64,
    pub points: usize,
    pub fixtures: usize,
    pub mass: f64,
    pub charge: f64,
    pub contraction_tolerance: f64,
    pub chain_tolerance: f64,
    pub factor_tolerance: f64,
    pub rows: Vec<ConstraintPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub einstein_space: Option<EinsteinScan>,
    pub runtime_ms: f64,
}

pub fn constraints(common: &Common, range: (f64, f64), steps: usize) -> Result<Output, CliError> {
    let start = Instant::now();
    let source = common.source()?;
    let spec = source.spec().map_err(CliError::Config)?;
    let cfg = suite_config(common);
    let mass = MassParam::new(cfg.mass).map_err(CliError::Config)?;
    let mut bg = Background::new(spec.clone());
    if cfg.charge != 0.0 {
        bg = bg.with_em(EmField::uniform(suite_field_strength()), cfg.charge);
    }
    let tols = (
        tolerance(&cfg, "gamma_contraction_constraint", &spec),
        tolerance(&cfg, "divergence_chain_constraint", &spec),
        tolerance(&cfg, "einstein_space_factor", &spec),
    );
    let points = sample_points(&spec, cfg.points, cfg.seed).map_err(CliError::from_run)?;
    let fields = vector_catalog(cfg.fixtures, cfg.seed);
    let rows = par_rows(&points, |x| {
        constraint_row(&bg, &mass, &fields, x, tols.0, tols.1)
    })?;

    let einstein = is_einstein_space(&spec, &points).map_err(CliError::from_run)?;
    let einstein_space = if einstein && cfg.charge == 0.0 {
        Some(
            einstein_scan(&bg, &mass, &fields, &points, range, steps)
                .map_err(CliError::from_run)?,
        )
    } else {
        None
    };
    let passed = rows.iter().all(|r| r.passed)
        && einstein_space
            .as_ref()
            .is_none_or(|s| s.max_misfit <= tols.2);
    let report = ConstraintsReport {
        metric: source.info(&spec),
        seed: cfg.seed,
        points: cfg.points,
        fixtures: cfg.fixtures,
        mass: cfg.mass,
        charge: cfg.charge,
        contraction_tolerance: tols.0,
        chain_tolerance: tols.1,
        factor_tolerance: tols.2,
        rows,
        einstein_space,
        runtime_ms: elapsed_ms(start),
    };
    Ok(Output {
        text: render::constraints(&report),
        json: envelope("constraints", passed, &report)?,
        passed,
    })
}

fn constraint_row(
    bg: &Background,
    mass: &MassParam,
    fields: &[PolyTrigField],
    x: &Point,
    contraction_tol: f64,
    chain_tol: f64,
) -> curved_rs::Result<ConstraintPoint> {
    let mut row = ConstraintPoint {
        coords: x.coords,
        contraction_error: 0.0,
        chain_error: 0.0,
        first_constraint_norm: 0.0,
        algebraic_norm: 0.0,
        failure: None,
        passed: true,
    };
    for f in fields {
        let local = LocalField::at(f, bg, x)?;
        let psi = vector_bispinor_max_abs(&local.psi).max(f64::MIN_POSITIVE);
        let (lhs, rhs) = contraction_identity(f, bg, mass, x)?;
        let err = bispinor_max_abs(&(lhs - rhs)) / bispinor_max_abs(&rhs).max(f64::MIN_POSITIVE);
        row.contraction_error = row.contraction_error.max(err);
        row.first_constraint_norm = row
            .first_constraint_norm
            .max(bispinor_max_abs(&local.first_constraint(mass)) / psi);
        row.algebraic_norm = row
            .algebraic_norm
            .max(bispinor_max_abs(&constraint_two_residual(f, bg, mass, x)?) / psi);
        match derivative_chain_check(f, bg, mass, x, chain_tol) {
            Ok(c) => row.chain_error = row.chain_error.max(c.relative_error()),
            Err(e @ curved_rs::Error::StencilTooCoarse { .. }) => {
                row.failure.get_or_insert_with(|| e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    row.passed = row.failure.is_none()
        && row.contraction_error <= contraction_tol
        && row.chain_error <= chain_tol;
    Ok(row)
}

fn einstein_scan(
    bg: &Background,
    mass: &MassParam,
    fields: &[PolyTrigField],
    points: &[Point],
    (lo, hi): (f64, f64),
    steps: usize,
) -> curved_rs::Result<EinsteinScan> {
    let scalar = curvature(&bg.spec, &points[0])?.scalar;
    let misfit_scale = |m: f64| (scalar / 12.0).abs().max(m * m);
    let mut max_misfit = 0.0f64;
    for x in points {
        for f in fields {
            let e = einstein_space_factor(f, bg, mass, x)?;
            if !e.vacuous {
                max_misfit = max_misfit.max(e.misfit / misfit_scale(mass.m));
            }
        }
    }
    let (field, x) = (&fields[0], &points[0]);
    let mut scan = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let m = lo + (hi - lo) * i as f64 / steps as f64;
        let e = einstein_space_factor(field, bg, &MassParam::new(m)?, x)?;
        if !e.vacuous {
            max_misfit = max_misfit.max(e.misfit / misfit_scale(m));
        }
        scan.push(ScanPoint {
            mass: m,
            measured: [e.ratio.re, e.ratio.im],
            predicted: e.predicted.re,
        });
    }
    Ok(EinsteinScan {
        scalar_curvature: scalar,
        predicted_root: (scalar > 0.0).then(|| (scalar / 12.0).sqrt()),
        root: find_mass_root(field, bg, x, lo, hi, steps)?,
        max_misfit,
        scan,
    })
}
