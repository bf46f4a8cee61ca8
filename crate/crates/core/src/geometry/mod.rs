//! Metric evaluation and the curvature objects derived from it.
//!
//! Signature is fixed to (+,-,-,-). Tensors are stored with plain array
//! nesting in the order their indices are written, e.g. `riemann[r][s][m][n]`
//! is `R_{rsmn}` with all indices lowered.

pub mod fd;

mod curvature;
mod levi_civita;
mod sampling;

use std::sync::Arc;

use nalgebra::{Matrix4, SymmetricEigen};

pub use curvature::{
    christoffel, christoffel_from, curvature, curvature_from_parts, metric_second_derivatives,
    CurvatureBundle,
};
pub use fd::Stencil;
pub use levi_civita::{levi_civita, permutation_sign, LeviCivita, EPSILON_UPPER_0123_FLAT};
pub use sampling::sample_points;

use crate::error::{Error, Result};

pub type Rank3 = [Matrix4<f64>; 4];
pub type Rank4 = [[[[f64; 4]; 4]; 4]; 4];

pub fn zero_rank4() -> Rank4 {
    [[[[0.0; 4]; 4]; 4]; 4]
}

/// Minkowski metric `eta_{ab}`.
pub fn eta() -> Matrix4<f64> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, -1.0, -1.0))
}

/// Identifier of a coordinate chart, derived from its coordinate names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChartId(u64);

impl ChartId {
    pub const CARTESIAN: ChartId = ChartId::named(["t", "x", "y", "z"]);
    pub const SPHERICAL: ChartId = ChartId::named(["t", "r", "theta", "phi"]);

    /// FNV-1a over the comma-joined names.
    pub const fn named(names: [&str; 4]) -> ChartId {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut i = 0;
        while i < 4 {
            let bytes = names[i].as_bytes();
            let mut j = 0;
            while j < bytes.len() {
                hash ^= bytes[j] as u64;
                hash = hash.wrapping_mul(0x0100_0000_01b3);
                j += 1;
            }
            hash ^= b',' as u64;
            hash = hash.wrapping_mul(0x0100_0000_01b3);
            i += 1;
        }
        ChartId(hash)
    }

    pub fn from_names(names: &[String; 4]) -> ChartId {
        ChartId::named([&names[0], &names[1], &names[2], &names[3]])
    }
}

/// A spacetime event in a given chart (geometric units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub coords: [f64; 4],
    pub chart: ChartId,
}

impl Point {
    pub fn new(coords: [f64; 4], chart: ChartId) -> Point {
        Point { coords, chart }
    }
}

pub type ComponentFn = dyn Fn(&[f64; 4]) -> Matrix4<f64> + Send + Sync;
pub type DerivativeFn = dyn Fn(&[f64; 4]) -> Rank3 + Send + Sync;
pub type GuardFn = dyn Fn(&[f64; 4]) -> bool + Send + Sync;

/// Broad curvature class of a metric, used to decide which checks apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Flat,
    RicciFlat,
    EinsteinSpace,
    General,
}

/// A four-dimensional Lorentzian metric on one chart.
#[derive(Clone)]
pub struct MetricSpec {
    name: String,
    chart: ChartId,
    components: Arc<ComponentFn>,
    derivatives: Option<Arc<DerivativeFn>>,
    guard: Arc<GuardFn>,
    diagonal: bool,
    family: Family,
    sample_box: [(f64, f64); 4],
}

impl std::fmt::Debug for MetricSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricSpec")
            .field("name", &self.name)
            .field("chart", &self.chart)
            .field("analytic_derivatives", &self.derivatives.is_some())
            .field("diagonal", &self.diagonal)
            .field("family", &self.family)
            .finish()
    }
}

impl MetricSpec {
    pub fn new<F, G>(name: impl Into<String>, chart: ChartId, components: F, guard: G) -> MetricSpec
    where
        F: Fn(&[f64; 4]) -> Matrix4<f64> + Send + Sync + 'static,
        G: Fn(&[f64; 4]) -> bool + Send + Sync + 'static,
    {
        MetricSpec {
            name: name.into(),
            chart,
            components: Arc::new(components),
            derivatives: None,
            guard: Arc::new(guard),
            diagonal: false,
            family: Family::General,
            sample_box: [(-1.0, 1.0); 4],
        }
    }

    /// Attaches the closed-form `d_mu g_{ab}`, indexed `[mu][(a, b)]`.
    pub fn with_derivatives<D>(mut self, derivatives: D) -> MetricSpec
    where
        D: Fn(&[f64; 4]) -> Rank3 + Send + Sync + 'static,
    {
        self.derivatives = Some(Arc::new(derivatives));
        self
    }

    pub fn with_diagonal(mut self, diagonal: bool) -> MetricSpec {
        self.diagonal = diagonal;
        self
    }

    pub fn with_family(mut self, family: Family) -> MetricSpec {
        self.family = family;
        self
    }

    pub fn with_sample_box(mut self, sample_box: [(f64, f64); 4]) -> MetricSpec {
        self.sample_box = sample_box;
        self
    }

    /// Same metric with the closed-form derivative dropped, forcing the
    /// finite-difference path.
    pub fn without_derivatives(&self) -> MetricSpec {
        MetricSpec {
            name: format!("{} (fd)", self.name),
            derivatives: None,
            ..self.clone()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> ChartId {
        self.chart
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.derivatives.is_some()
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn sample_box(&self) -> [(f64, f64); 4] {
        self.sample_box
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.chart == self.chart && x.coords.iter().all(|c| c.is_finite()) && (self.guard)(&x.coords)
    }

    fn check(&self, x: &Point) -> Result<()> {
        if x.chart != self.chart {
            return Err(Error::ChartMismatch {
                metric: self.name.clone(),
            });
        }
        if !self.contains(x) {
            return Err(Error::OutOfDomain {
                metric: self.name.clone(),
                coords: x.coords,
            });
        }
        Ok(())
    }

    /// Raw components `g_{ab}` after the domain check.
    pub fn components(&self, x: &Point) -> Result<Matrix4<f64>> {
        self.check(x)?;
        Ok((self.components)(&x.coords))
    }

    pub fn eval(&self, x: &Point) -> Result<MetricAtPoint> {
        eval_metric(self, x)
    }

    pub fn derivatives(&self, x: &Point) -> Result<Rank3> {
        metric_derivatives(self, x)
    }

    /// Closed-form derivative, if the metric provides one.
    pub fn analytic_derivatives(&self, x: &Point) -> Option<Result<Rank3>> {
        let d = self.derivatives.as_ref()?;
        Some(self.check(x).map(|_| d(&x.coords)))
    }
}

/// Metric, inverse metric and determinant at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricAtPoint {
    pub g_lower: Matrix4<f64>,
    pub g_upper: Matrix4<f64>,
    pub det_g: f64,
}

impl MetricAtPoint {
    pub fn from_lower(g_lower: Matrix4<f64>) -> Result<MetricAtPoint> {
        let det_g = g_lower.determinant();
        if !det_g.is_finite() || det_g.abs() < 1e-14 {
            return Err(Error::SingularMetric { det: det_g });
        }
        let g_upper = g_lower
            .try_inverse()
            .ok_or(Error::SingularMetric { det: det_g })?;
        Ok(MetricAtPoint {
            g_lower,
            g_upper,
            det_g,
        })
    }

    pub fn minkowski() -> MetricAtPoint {
        MetricAtPoint {
            g_lower: eta(),
            g_upper: eta(),
            det_g: -1.0,
        }
    }

    /// Eigenvalues of `g_{ab}` sorted in descending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let eig = SymmetricEigen::new(self.g_lower).eigenvalues;
        let mut v = [eig[0], eig[1], eig[2], eig[3]];
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn is_lorentzian(&self) -> bool {
        let e = self.eigenvalues();
        e[0] > 0.0 && e[1] < 0.0
    }
}

/// Evaluates `g_{ab}`, `g^{ab}` and `det g`.
pub fn eval_metric(spec: &MetricSpec, x: &Point) -> Result<MetricAtPoint> {
    let g = spec.components(x)?;
    MetricAtPoint::from_lower(g)
}

/// `d_mu g_{ab}`, indexed `[mu][(a, b)]`; closed form when available.
pub fn metric_derivatives(spec: &MetricSpec, x: &Point) -> Result<Rank3> {
    metric_derivatives_with(spec, x, &Stencil::FIRST)
}

pub fn metric_derivatives_with(spec: &MetricSpec, x: &Point, stencil: &Stencil) -> Result<Rank3> {
    if let Some(d) = spec.analytic_derivatives(x) {
        return d;
    }
    spec.check(x)?;
    let f = |p: &Point| spec.components(p);
    let mut d = fd::gradient(&f, x, stencil)?;
    for m in d.iter_mut() {
        *m = (*m + m.transpose()) * 0.5;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetimes::{load_preset, PresetId};

    #[test]
    fn minkowski_metric_is_eta() {
        let spec = load_preset(&PresetId::MinkowskiCartesian).unwrap();
        let m = eval_metric(
            &spec,
            &Point::new([3.0, -1.0, 2.0, 0.5], ChartId::CARTESIAN),
        )
        .unwrap();
        assert_eq!(m.g_lower, eta());
        assert_eq!(m.det_g, -1.0);
        assert!(
            metric_derivatives(&spec, &Point::new([0.0; 4], ChartId::CARTESIAN))
                .unwrap()
                .iter()
                .all(|d| d.iter().all(|v| *v == 0.0))
        );
    }

    #[test]
    fn schwarzschild_components_and_guard() {
        let spec = load_preset(&PresetId::Schwarzschild { mass: 1.0 }).unwrap();
        let x = Point::new(
            [0.0, 4.0, std::f64::consts::FRAC_PI_2, 0.0],
            ChartId::SPHERICAL,
        );
        let m = eval_metric(&spec, &x).unwrap();
        assert!((m.g_lower[(0, 0)] - 0.5).abs() < 1e-15);
        let prod = m.g_lower * m.g_upper;
        assert!((prod - Matrix4::identity()).abs().max() < 1e-12);
        assert!(m.det_g < 0.0);

        let horizon = Point::new([0.0, 2.0, 1.0, 0.0], ChartId::SPHERICAL);
        assert!(matches!(
            eval_metric(&spec, &horizon),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn chart_mismatch_is_rejected() {
        let spec = load_preset(&PresetId::Schwarzschild { mass: 1.0 }).unwrap();
        let x = Point::new([0.0, 4.0, 1.0, 0.0], ChartId::CARTESIAN);
        assert!(matches!(
            eval_metric(&spec, &x),
            Err(Error::ChartMismatch { .. })
        ));
    }

    #[test]
    fn singular_metric_is_rejected() {
        let spec = MetricSpec::new(
            "degenerate",
            ChartId::CARTESIAN,
            |_| Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, -1.0, 0.0)),
            |_| true,
        );
        assert!(matches!(
            eval_metric(&spec, &Point::new([0.0; 4], ChartId::CARTESIAN)),
            Err(Error::SingularMetric { .. })
        ));
    }

    #[test]
    fn analytic_and_fd_derivatives_agree_for_de_sitter() {
        let spec = load_preset(&PresetId::DeSitterStatic { alpha: 1.0 }).unwrap();
        let fd_spec = spec.without_derivatives();
        let x = Point::new([0.3, 0.55, 1.1, 2.0], ChartId::SPHERICAL);
        let a = metric_derivatives(&spec, &x).unwrap();
        let b = metric_derivatives(&fd_spec, &x).unwrap();
        for mu in 0..4 {
            let scale = a[mu].abs().max().max(1.0);
            assert!((a[mu] - b[mu]).abs().max() / scale < 1e-6, "mu = {mu}");
        }
    }

    #[test]
    fn frw_time_derivative_matches_scale_factor() {
        let a0 = 1.3;
        let spec = load_preset(&PresetId::FrwDust { a0 }).unwrap();
        let t: f64 = 1.7;
        let x = Point::new([t, 0.1, -0.2, 0.3], ChartId::CARTESIAN);
        let a = a0 * t.powf(2.0 / 3.0);
        let adot = a0 * (2.0 / 3.0) * t.powf(-1.0 / 3.0);
        let expected = -2.0 * a * adot;
        for s in [spec.clone(), spec.without_derivatives()] {
            let d = metric_derivatives(&s, &x).unwrap();
            assert!((d[0][(1, 1)] - expected).abs() < 1e-6 * expected.abs());
        }
    }
}
