use nalgebra::Matrix4;

use super::{build_tetrad, curved_gammas, GammaRep, GammaSet, Tetrad};
use crate::error::Result;
use crate::geometry::fd::{self, Stencil};
use crate::geometry::{
    christoffel_from, curvature, eta, eval_metric, metric_derivatives, CurvatureBundle,
    MetricAtPoint, MetricSpec, Point, Rank3,
};
use crate::spinor::{commutator, spin_zero, SpinMatrix};

/// `Omega[a][b]`: a spinor matrix per ordered coordinate pair.
pub type SpinorCurvature = [[SpinMatrix; 4]; 4];

/// Bispinor connection `Gamma_m(x)` in coordinate components.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConnection {
    pub gamma: [SpinMatrix; 4],
}

/// Everything local needed to differentiate spinor fields at one point.
#[derive(Debug, Clone)]
pub struct SpinFrame {
    pub point: Point,
    pub metric: MetricAtPoint,
    /// `christoffel[s][(a, b)] = Gamma^s_{ab}`.
    pub christoffel: Rank3,
    pub tetrad: Tetrad,
    pub gammas: GammaSet,
    pub connection: SpinConnection,
}

/// `d_m e^{(a)}_n`, indexed `[m][(a, n)]`.
fn tetrad_derivatives(
    spec: &MetricSpec,
    x: &Point,
    metric: &MetricAtPoint,
    t: &Tetrad,
    dg: &Rank3,
) -> Result<Rank3> {
    let g = &metric.g_lower;
    let diagonal = (0..4).all(|i| (0..4).all(|j| i == j || g[(i, j)] == 0.0));
    if spec.is_diagonal() && diagonal {
        // e = sqrt|g_aa|  =>  de = sign(g_aa) dg_aa / (2 e)
        return Ok(std::array::from_fn(|m| {
            Matrix4::from_fn(|a, n| {
                if a == n {
                    g[(a, a)].signum() * dg[m][(a, a)] / (2.0 * t.e_lower[(a, a)])
                } else {
                    0.0
                }
            })
        }));
    }
    let f = |p: &Point| Ok(build_tetrad(&eval_metric(spec, p)?)?.e_lower);
    fd::gradient(&f, x, &Stencil::FIRST)
}

/// `Gamma_m = 1/2 sigma^{ab} e_{(a)}^n (d_m e_{(b)n} - Gamma^l_{mn} e_{(b)l})`.
pub fn spin_connection_from(
    gammas: &GammaSet,
    tetrad: &Tetrad,
    christoffel: &Rank3,
    dtetrad: &Rank3,
) -> SpinConnection {
    let eta = eta();
    let gamma = std::array::from_fn(|m| {
        // nabla_m e_{(b)n} with the frame index lowered by eta
        let nabla = Matrix4::from_fn(|b, n| {
            let mut v = dtetrad[m][(b, n)];
            for l in 0..4 {
                v -= christoffel[l][(m, n)] * tetrad.e_lower[(b, l)];
            }
            eta[(b, b)] * v
        });
        // w[a][b] = e_{(a)}^n nabla_m e_{(b)n}
        let w = tetrad.e_upper * nabla.transpose();
        let mut out = spin_zero();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    out += gammas.sigma_flat[a][b].map(|z| z * (0.5 * w[(a, b)]));
                }
            }
        }
        out
    });
    SpinConnection { gamma }
}

pub fn spin_frame(spec: &MetricSpec, x: &Point, rep: &GammaRep) -> Result<SpinFrame> {
    let metric = eval_metric(spec, x)?;
    let dg = metric_derivatives(spec, x)?;
    let christoffel = christoffel_from(&metric, &dg);
    let tetrad = build_tetrad(&metric)?;
    let dtetrad = tetrad_derivatives(spec, x, &metric, &tetrad, &dg)?;
    let gammas = curved_gammas(rep, &tetrad, &metric)?;
    let connection = spin_connection_from(&gammas, &tetrad, &christoffel, &dtetrad);
    Ok(SpinFrame {
        point: *x,
        metric,
        christoffel,
        tetrad,
        gammas,
        connection,
    })
}

pub fn spin_connection(spec: &MetricSpec, x: &Point, rep: &GammaRep) -> Result<SpinConnection> {
    Ok(spin_frame(spec, x, rep)?.connection)
}

/// `Omega_{ab} = 1/2 sigma^{mn}(x) R_{mnab}(x)`.
pub fn spinor_curvature_from(gammas: &GammaSet, bundle: &CurvatureBundle) -> SpinorCurvature {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let mut out = spin_zero();
            for m in 0..4 {
                for n in 0..4 {
                    let r = bundle.riemann[m][n][a][b];
                    if r != 0.0 {
                        out += gammas.sigma_curved[m][n].map(|z| z * (0.5 * r));
                    }
                }
            }
            out
        })
    })
}

/// Spinor curvature from the Riemann tensor.
pub fn spinor_commutator_curvature(
    spec: &MetricSpec,
    x: &Point,
    rep: &GammaRep,
) -> Result<SpinorCurvature> {
    let frame = spin_frame(spec, x, rep)?;
    let bundle = curvature(spec, x)?;
    Ok(spinor_curvature_from(&frame.gammas, &bundle))
}

/// Spinor curvature from the connection alone:
/// `d_a Gamma_b - d_b Gamma_a + [Gamma_a, Gamma_b]`, with the derivatives
/// taken by finite differences of the connection field.
pub fn connection_curvature(
    spec: &MetricSpec,
    x: &Point,
    rep: &GammaRep,
) -> Result<SpinorCurvature> {
    let f = |p: &Point| Ok(spin_connection(spec, p, rep)?.gamma);
    let d: [[SpinMatrix; 4]; 4] = fd::gradient(&f, x, &Stencil::SECOND)?;
    let g = spin_connection(spec, x, rep)?.gamma;
    Ok(std::array::from_fn(|a| {
        std::array::from_fn(|b| d[a][b] - d[b][a] + commutator(&g[a], &g[b]))
    }))
}
