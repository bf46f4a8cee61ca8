//! Gradient-type solutions of the massless equation in its Levi-Civita form
//! and the Einstein-tensor criterion for when they exist.

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::geometry::fd::Stencil;
use crate::geometry::{curvature, eval_metric, MetricSpec, Point};
use crate::rs_operator::{
    covariant_derivative_in, tilde_closed_form, vector_bispinor_max_abs, Background,
    DerivativeField, SpinorField, SpinorTensor, Transport, VectorBispinor,
};
use crate::spin_frame::{build_tetrad, curved_gammas, GammaRep, GammaSet, SpinFrame};
use crate::spinor::{bispinor_max_abs, bscale, Bispinor, C64};

/// Ratio between the massless residual of a gradient field and
/// `G_{rb} gamma^b psi`, fixed by [`fit_proportionality`] on the dust
/// universe.
pub const GAUGE_PROPORTIONALITY: f64 = 0.5;

/// The gauge checks run without an electromagnetic field.
fn neutral(bg: &Background) -> Background {
    Background {
        em: None,
        charge: 0.0,
        ..bg.clone()
    }
}

/// `(d_b + Gamma_b) psi` for a bispinor field `psi`.
pub fn gradient_field<F: SpinorField + ?Sized>(
    psi: &F,
    bg: &Background,
    x: &Point,
) -> Result<VectorBispinor> {
    let bg = neutral(bg);
    psi.value(x)?.expect_rank(0)?;
    let frame = bg.frame(x)?;
    covariant_derivative_in(psi, &bg, &frame, Transport::Full, &bg.stencil)?.as_vector()
}

fn massless_residual_in<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    frame: &SpinFrame,
    stencil: &Stencil,
) -> Result<(VectorBispinor, f64)> {
    let d = covariant_derivative_in(field, bg, frame, Transport::Full, stencil)?.as_matrix()?;
    let alpha = tilde_closed_form(&frame.gammas).alpha;
    let mut out = [Bispinor::zeros(); 4];
    for (n, alpha_n) in alpha.iter().enumerate() {
        let term = alpha_n.apply(&d[n]);
        for r in 0..4 {
            out[r] += term[r];
        }
    }
    let scale = d.iter().map(vector_bispinor_max_abs).fold(0.0, f64::max);
    Ok((out, scale))
}

/// `i gamma^5 eps_r^{nsm} gamma_m (nabla_n + Gamma_n) Psi_s`.
pub fn massless_residual<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    x: &Point,
) -> Result<VectorBispinor> {
    let bg = neutral(bg);
    let frame = bg.frame(x)?;
    Ok(massless_residual_in(field, &bg, &frame, &bg.stencil)?.0)
}

/// `G_{rb} gamma^b psi`.
fn einstein_gamma(einstein: &Matrix4<f64>, gs: &GammaSet, psi: &Bispinor) -> VectorBispinor {
    std::array::from_fn(|r| {
        (0..4).fold(Bispinor::zeros(), |acc, b| {
            acc + bscale(&(gs.gamma_up[b] * psi), einstein[(r, b)])
        })
    })
}

/// Massless residual of the gradient of `psi` next to its Einstein-tensor
/// prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeCheck {
    pub direct: VectorBispinor,
    pub predicted: VectorBispinor,
    pub direct_norm: f64,
    pub predicted_norm: f64,
    /// Largest component of `G_{ab}`.
    pub einstein_norm: f64,
    /// Field scale: largest of `psi`, its gradient and second derivatives.
    pub scale: f64,
}

impl GaugeCheck {
    fn difference(&self) -> f64 {
        let diff: VectorBispinor = std::array::from_fn(|r| self.direct[r] - self.predicted[r]);
        vector_bispinor_max_abs(&diff)
    }

    /// `|direct - predicted|` relative to the larger of the two.
    pub fn mismatch(&self) -> f64 {
        self.difference()
            / self
                .direct_norm
                .max(self.predicted_norm)
                .max(f64::MIN_POSITIVE)
    }

    /// Direct and predicted agree: both below `zero_tol` times the field
    /// scale, or within `rel_tol` of each other.
    pub fn agrees(&self, zero_tol: f64, rel_tol: f64) -> bool {
        self.difference() <= zero_tol * self.scale || self.mismatch() <= rel_tol
    }

    pub fn relative_direct(&self) -> f64 {
        self.direct_norm / self.scale.max(f64::MIN_POSITIVE)
    }
}

fn gauge_parts<F: SpinorField + ?Sized>(
    psi: &F,
    bg: &Background,
    x: &Point,
) -> Result<(VectorBispinor, VectorBispinor, f64, f64)> {
    let bg = neutral(bg);
    let frame = bg.frame(x)?;
    let bundle = curvature(&bg.spec, x)?;
    let value = psi.value(x)?.as_bispinor()?;
    let grad = DerivativeField::new(psi, bg.clone(), Transport::Full);
    let (direct, second) = massless_residual_in(&grad, &bg, &frame, &Stencil::SECOND)?;
    let first = vector_bispinor_max_abs(&grad.value(x)?.as_vector()?);
    let scale = bispinor_max_abs(&value).max(first).max(second);
    let unit = einstein_gamma(&bundle.einstein, &frame.gammas, &value);
    Ok((direct, unit, scale, bundle.einstein.abs().max()))
}

pub fn gauge_criterion<F: SpinorField + ?Sized>(
    psi: &F,
    bg: &Background,
    x: &Point,
) -> Result<GaugeCheck> {
    let (direct, unit, scale, einstein_norm) = gauge_parts(psi, bg, x)?;
    let predicted = unit.map(|b| bscale(&b, GAUGE_PROPORTIONALITY));
    Ok(GaugeCheck {
        direct_norm: vector_bispinor_max_abs(&direct),
        predicted_norm: vector_bispinor_max_abs(&predicted),
        direct,
        predicted,
        einstein_norm,
        scale,
    })
}

/// Least-squares constant `c` with `direct ~ c G_{rb} gamma^b psi` at one
/// point.
pub fn fit_proportionality<F: SpinorField + ?Sized>(
    psi: &F,
    bg: &Background,
    x: &Point,
) -> Result<C64> {
    let (direct, unit, scale, _) = gauge_parts(psi, bg, x)?;
    let norm2: f64 = unit.iter().map(|b| b.norm_squared()).sum();
    if norm2.sqrt() <= 1e-8 * scale {
        return Err(Error::FitDegenerate);
    }
    let dot: C64 = unit.iter().zip(&direct).map(|(u, d)| u.dotc(d)).sum();
    Ok(dot / norm2)
}

/// Double Levi-Civita contraction of the Riemann tensor, evaluated directly
/// and through the determinant formula.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonContraction {
    /// `R_{abns} eps_r^{nsm} eps^{abs'}_m`, indexed `(r, s')`.
    pub raw: Matrix4<f64>,
    /// The same with the epsilon product replaced by minus the 3x3
    /// determinant of deltas and inverse metrics.
    pub expanded: Matrix4<f64>,
    /// `4 G_r^s`.
    pub einstein: Matrix4<f64>,
    pub riemann_scale: f64,
}

impl EpsilonContraction {
    pub fn expansion_error(&self) -> f64 {
        (self.raw - self.expanded).abs().max() / self.riemann_scale.max(f64::MIN_POSITIVE)
    }

    pub fn einstein_error(&self) -> f64 {
        (self.raw - self.einstein).abs().max() / self.riemann_scale.max(f64::MIN_POSITIVE)
    }
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn epsilon_contraction_check(spec: &MetricSpec, x: &Point) -> Result<EpsilonContraction> {
    let bundle = curvature(spec, x)?;
    let metric = &bundle.metric;
    let eps = crate::geometry::levi_civita(metric)?;
    let first = eps.first_lowered(metric);
    let last = eps.last_lowered(metric);
    let gu = &metric.g_upper;
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let r = &bundle.riemann;
    let mut raw = Matrix4::zeros();
    let mut expanded = Matrix4::zeros();
    for rho in 0..4 {
        for s in 0..4 {
            let (mut acc_raw, mut acc_exp) = (0.0, 0.0);
            for a in 0..4 {
                for b in 0..4 {
                    for n in 0..4 {
                        for sg in 0..4 {
                            let riem = r[a][b][n][sg];
                            if riem == 0.0 {
                                continue;
                            }
                            let prod: f64 = (0..4)
                                .map(|m| first[rho][n][sg][m] * last[a][b][s][m])
                                .sum();
                            acc_raw += riem * prod;
                            let d = det3([
                                [delta(rho, a), delta(rho, b), delta(rho, s)],
                                [gu[(n, a)], gu[(n, b)], gu[(n, s)]],
                                [gu[(sg, a)], gu[(sg, b)], gu[(sg, s)]],
                            ]);
                            acc_exp -= riem * d;
                        }
                    }
                }
            }
            raw[(rho, s)] = acc_raw;
            expanded[(rho, s)] = acc_exp;
        }
    }
    Ok(EpsilonContraction {
        raw,
        expanded,
        einstein: bundle.einstein_mixed() * 4.0,
        riemann_scale: bundle.max_riemann() * gu.abs().max().powi(2),
    })
}

/// `S_r^s Psi_s` with `S = 1 - gamma gamma / 3`: the field in the
/// representation where the massless equation takes Levi-Civita form.
pub struct SimilarityField<F> {
    inner: F,
    spec: MetricSpec,
    rep: GammaRep,
}

impl<F: SpinorField> SimilarityField<F> {
    pub fn new(inner: F, spec: MetricSpec, rep: GammaRep) -> Self {
        SimilarityField { inner, spec, rep }
    }
}

impl<F: SpinorField> SpinorField for SimilarityField<F> {
    fn rank(&self) -> usize {
        1
    }

    fn value(&self, x: &Point) -> Result<SpinorTensor> {
        let psi = self.inner.value(x)?.as_vector()?;
        let m = eval_metric(&self.spec, x)?;
        let gs = curved_gammas(&self.rep, &build_tetrad(&m)?, &m)?;
        let trace = (0..4).fold(Bispinor::zeros(), |acc, s| acc + gs.gamma_up[s] * psi[s]);
        let out: VectorBispinor =
            std::array::from_fn(|r| psi[r] - bscale(&(gs.gamma_down[r] * trace), 1.0 / 3.0));
        Ok(SpinorTensor::from_vector(&out))
    }
}
