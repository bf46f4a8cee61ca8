//! Preset metrics and user metrics read from configuration documents.

pub mod config;
pub mod expr;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};

pub use config::{parse_metric_config, spec_from_config, MetricConfig};

use crate::error::{Error, Result};
use crate::geometry::{ChartId, Family, MetricSpec, Rank3};

/// Distance kept from horizons, poles and singularities by the preset guards.
pub const DEFAULT_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PresetId {
    MinkowskiCartesian,
    MinkowskiSpherical,
    Schwarzschild {
        mass: f64,
    },
    DeSitterStatic {
        alpha: f64,
    },
    AntiDeSitterStatic {
        alpha: f64,
    },
    /// Spatially flat dust universe, `a(t) = a0 t^(2/3)`.
    FrwDust {
        a0: f64,
    },
}

impl PresetId {
    pub const NAMES: [&'static str; 6] = [
        "minkowski_cartesian",
        "minkowski_spherical",
        "schwarzschild",
        "de_sitter_static",
        "anti_de_sitter_static",
        "frw_dust",
    ];

    /// Resolves a preset by name. Missing parameters default to 1.
    pub fn from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<PresetId> {
        let get = |key: &str| params.get(key).copied().unwrap_or(1.0);
        let allowed: &[&str] = match name {
            "minkowski_cartesian" | "minkowski_spherical" => &[],
            "schwarzschild" => &["M"],
            "de_sitter_static" | "anti_de_sitter_static" => &["alpha"],
            "frw_dust" => &["a0"],
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        if let Some(extra) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidParameter {
                name: extra.clone(),
                value: params[extra],
                reason: "not a parameter of this preset",
            });
        }
        Ok(match name {
            "minkowski_cartesian" => PresetId::MinkowskiCartesian,
            "minkowski_spherical" => PresetId::MinkowskiSpherical,
            "schwarzschild" => PresetId::Schwarzschild { mass: get("M") },
            "de_sitter_static" => PresetId::DeSitterStatic {
                alpha: get("alpha"),
            },
            "anti_de_sitter_static" => PresetId::AntiDeSitterStatic {
                alpha: get("alpha"),
            },
            _ => PresetId::FrwDust { a0: get("a0") },
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PresetId::MinkowskiCartesian => "minkowski_cartesian",
            PresetId::MinkowskiSpherical => "minkowski_spherical",
            PresetId::Schwarzschild { .. } => "schwarzschild",
            PresetId::DeSitterStatic { .. } => "de_sitter_static",
            PresetId::AntiDeSitterStatic { .. } => "anti_de_sitter_static",
            PresetId::FrwDust { .. } => "frw_dust",
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut p = BTreeMap::new();
        match *self {
            PresetId::Schwarzschild { mass } => {
                p.insert("M".to_string(), mass);
            }
            PresetId::DeSitterStatic { alpha } | PresetId::AntiDeSitterStatic { alpha } => {
                p.insert("alpha".to_string(), alpha);
            }
            PresetId::FrwDust { a0 } => {
                p.insert("a0".to_string(), a0);
            }
            _ => {}
        }
        p
    }
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name: name.to_string(),
            value,
            reason: "must be positive",
        })
    }
}

fn diag(a: f64, b: f64, c: f64, d: f64) -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(a, b, c, d))
}

fn angular_ok(theta: f64, margin: f64) -> bool {
    theta > margin && theta < PI - margin
}

const ANGULAR_BOX: (f64, f64) = (0.5, PI - 0.5);
const AZIMUTH_BOX: (f64, f64) = (0.0, 2.0 * PI);

/// Static spherically symmetric metric `f dt^2 - dr^2/f - r^2 dOmega^2`
/// given `f(r)` and `f'(r)`.
fn static_spherical<F, D>(
    f: F,
    df: D,
) -> (
    impl Fn(&[f64; 4]) -> Matrix4<f64>,
    impl Fn(&[f64; 4]) -> Rank3,
)
where
    F: Fn(f64) -> f64 + Copy + Send + Sync + 'static,
    D: Fn(f64) -> f64 + Copy + Send + Sync + 'static,
{
    let g = move |x: &[f64; 4]| {
        let (r, th) = (x[1], x[2]);
        let s = th.sin();
        let fr = f(r);
        diag(fr, -1.0 / fr, -r * r, -r * r * s * s)
    };
    let dg = move |x: &[f64; 4]| {
        let (r, th) = (x[1], x[2]);
        let (s, c) = th.sin_cos();
        let fr = f(r);
        let dfr = df(r);
        let mut out = [Matrix4::zeros(); 4];
        out[1] = diag(dfr, dfr / (fr * fr), -2.0 * r, -2.0 * r * s * s);
        out[2][(3, 3)] = -2.0 * r * r * s * c;
        out
    };
    (g, dg)
}

/// Builds the metric for a preset with the default guard margin.
pub fn load_preset(id: &PresetId) -> Result<MetricSpec> {
    load_preset_with_margin(id, DEFAULT_MARGIN)
}

pub fn load_preset_with_margin(id: &PresetId, margin: f64) -> Result<MetricSpec> {
    let margin = positive("margin", margin)?;
    let spec = match *id {
        PresetId::MinkowskiCartesian => MetricSpec::new(
            id.name(),
            ChartId::CARTESIAN,
            |_| diag(1.0, -1.0, -1.0, -1.0),
            |_| true,
        )
        .with_derivatives(|_| [Matrix4::zeros(); 4])
        .with_family(Family::Flat),

        PresetId::MinkowskiSpherical => {
            let (g, dg) = static_spherical(|_| 1.0, |_| 0.0);
            MetricSpec::new(id.name(), ChartId::SPHERICAL, g, move |x| {
                x[1] > margin && angular_ok(x[2], margin)
            })
            .with_derivatives(dg)
            .with_family(Family::Flat)
            .with_sample_box([(-1.0, 1.0), (0.5, 3.0), ANGULAR_BOX, AZIMUTH_BOX])
        }

        PresetId::Schwarzschild { mass } => {
            let m = positive("M", mass)?;
            let (g, dg) = static_spherical(move |r| 1.0 - 2.0 * m / r, move |r| 2.0 * m / (r * r));
            MetricSpec::new(id.name(), ChartId::SPHERICAL, g, move |x| {
                x[1] > 2.0 * m + margin && angular_ok(x[2], margin)
            })
            .with_derivatives(dg)
            .with_family(Family::RicciFlat)
            .with_sample_box([
                (-1.0, 1.0),
                (3.0 * m, 10.0 * m),
                ANGULAR_BOX,
                AZIMUTH_BOX,
            ])
        }

        PresetId::DeSitterStatic { alpha } => {
            let a = positive("alpha", alpha)?;
            let (g, dg) =
                static_spherical(move |r| 1.0 - r * r / (a * a), move |r| -2.0 * r / (a * a));
            MetricSpec::new(id.name(), ChartId::SPHERICAL, g, move |x| {
                x[1] > margin && x[1] < a - margin && angular_ok(x[2], margin)
            })
            .with_derivatives(dg)
            .with_family(Family::EinsteinSpace)
            .with_sample_box([
                (-1.0, 1.0),
                (0.1 * a, 0.8 * a),
                ANGULAR_BOX,
                AZIMUTH_BOX,
            ])
        }

        PresetId::AntiDeSitterStatic { alpha } => {
            let a = positive("alpha", alpha)?;
            let (g, dg) =
                static_spherical(move |r| 1.0 + r * r / (a * a), move |r| 2.0 * r / (a * a));
            MetricSpec::new(id.name(), ChartId::SPHERICAL, g, move |x| {
                x[1] > margin && angular_ok(x[2], margin)
            })
            .with_derivatives(dg)
            .with_family(Family::EinsteinSpace)
            .with_sample_box([
                (-1.0, 1.0),
                (0.1 * a, 2.0 * a),
                ANGULAR_BOX,
                AZIMUTH_BOX,
            ])
        }

        PresetId::FrwDust { a0 } => {
            let a0 = positive("a0", a0)?;
            let scale = move |t: f64| a0 * t.powf(2.0 / 3.0);
            let g = move |x: &[f64; 4]| {
                let a = scale(x[0]);
                diag(1.0, -a * a, -a * a, -a * a)
            };
            let dg = move |x: &[f64; 4]| {
                // d(a^2)/dt = (4/3) a0^2 t^(1/3)
                let d = -(4.0 / 3.0) * a0 * a0 * x[0].cbrt();
                let mut out = [Matrix4::zeros(); 4];
                out[0] = diag(0.0, d, d, d);
                out
            };
            MetricSpec::new(id.name(), ChartId::CARTESIAN, g, move |x| x[0] > margin)
                .with_derivatives(dg)
                .with_family(Family::General)
                .with_sample_box([(1.0, 3.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)])
        }
    };
    Ok(spec.with_diagonal(true))
}
