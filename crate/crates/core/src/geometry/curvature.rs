use nalgebra::Matrix4;

use super::fd::{self, Stencil};
use super::{
    eval_metric, metric_derivatives, zero_rank4, MetricAtPoint, MetricSpec, Point, Rank3, Rank4,
};
use crate::error::Result;

/// Curvature data at one point. Riemann is stored fully lowered as
/// `riemann[r][s][m][n] = R_{rsmn}` with `[nabla_m, nabla_n] V^r = R^r_{smn} V^s`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureBundle {
    pub metric: MetricAtPoint,
    pub metric_derivatives: Rank3,
    /// `christoffel[s][(a, b)] = Gamma^s_{ab}`.
    pub christoffel: Rank3,
    pub riemann: Rank4,
    pub ricci: Matrix4<f64>,
    pub scalar: f64,
    pub einstein: Matrix4<f64>,
}

impl CurvatureBundle {
    /// `R^r_{smn}`.
    pub fn riemann_mixed(&self, r: usize, s: usize, m: usize, n: usize) -> f64 {
        (0..4)
            .map(|l| self.metric.g_upper[(r, l)] * self.riemann[l][s][m][n])
            .sum()
    }

    pub fn max_riemann(&self) -> f64 {
        self.riemann
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// `R_{abcd} R^{abcd}`.
    pub fn kretschmann(&self) -> f64 {
        let gu = &self.metric.g_upper;
        let mut raised = zero_rank4();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let mut acc = 0.0;
                        for p in 0..4 {
                            for q in 0..4 {
                                for r in 0..4 {
                                    for s in 0..4 {
                                        acc += gu[(a, p)]
                                            * gu[(b, q)]
                                            * gu[(c, r)]
                                            * gu[(d, s)]
                                            * self.riemann[p][q][r][s];
                                    }
                                }
                            }
                        }
                        raised[a][b][c][d] = acc;
                    }
                }
            }
        }
        let mut k = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        k += raised[a][b][c][d] * self.riemann[a][b][c][d];
                    }
                }
            }
        }
        k
    }

    /// Mixed Einstein tensor `G_r^s`.
    pub fn einstein_mixed(&self) -> Matrix4<f64> {
        self.einstein * self.metric.g_upper
    }
}

/// `Gamma^s_{ab} = 1/2 g^{sl} (d_a g_{lb} + d_b g_{la} - d_l g_{ab})`.
pub fn christoffel_from(metric: &MetricAtPoint, dg: &Rank3) -> Rank3 {
    let mut out = [Matrix4::zeros(); 4];
    for (s, gamma_s) in out.iter_mut().enumerate() {
        for a in 0..4 {
            for b in a..4 {
                let mut acc = 0.0;
                for l in 0..4 {
                    acc += metric.g_upper[(s, l)] * (dg[a][(l, b)] + dg[b][(l, a)] - dg[l][(a, b)]);
                }
                gamma_s[(a, b)] = 0.5 * acc;
                gamma_s[(b, a)] = 0.5 * acc;
            }
        }
    }
    out
}

pub fn christoffel(spec: &MetricSpec, x: &Point) -> Result<Rank3> {
    let metric = eval_metric(spec, x)?;
    let dg = metric_derivatives(spec, x)?;
    Ok(christoffel_from(&metric, &dg))
}

/// `d_m d_n g_{ab}`, indexed `[m][n][(a, b)]`, symmetric in `m, n`.
///
/// With a closed-form first derivative this differentiates it once more;
/// otherwise it uses the value Hessian. Both use [`Stencil::SECOND`].
pub fn metric_second_derivatives(spec: &MetricSpec, x: &Point) -> Result<[Rank3; 4]> {
    let stencil = Stencil::SECOND;
    let mut out: [Rank3; 4] = if spec.has_analytic_derivatives() {
        let f = |p: &Point| spec.analytic_derivatives(p).expect("checked above");
        fd::gradient(&f, x, &stencil)?
    } else {
        let f = |p: &Point| spec.components(p);
        fd::hessian(&f, x, &stencil)?
    };
    for m in 0..4 {
        for n in (m + 1)..4 {
            let avg = (out[m][n] + out[n][m]) * 0.5;
            out[m][n] = avg;
            out[n][m] = avg;
        }
        for d in out[m].iter_mut() {
            *d = (*d + d.transpose()) * 0.5;
        }
    }
    Ok(out)
}

/// Assembles all curvature objects from `g`, `dg` and `ddg`.
pub fn curvature_from_parts(metric: MetricAtPoint, dg: Rank3, ddg: &[Rank3; 4]) -> CurvatureBundle {
    let gamma = christoffel_from(&metric, &dg);
    let g = &metric.g_lower;

    // Gamma_{l, ab} = g_{lk} Gamma^k_{ab}
    let mut gamma_low = [Matrix4::zeros(); 4];
    for (l, gl) in gamma_low.iter_mut().enumerate() {
        for k in 0..4 {
            *gl += gamma[k] * g[(l, k)];
        }
    }

    let mut riemann = zero_rank4();
    for r in 0..4 {
        for s in 0..4 {
            for m in 0..4 {
                for n in 0..4 {
                    let second = 0.5
                        * (ddg[s][m][(r, n)] + ddg[r][n][(s, m)]
                            - ddg[s][n][(r, m)]
                            - ddg[r][m][(s, n)]);
                    let mut quad = 0.0;
                    for l in 0..4 {
                        quad += gamma_low[l][(r, n)] * gamma[l][(s, m)]
                            - gamma_low[l][(r, m)] * gamma[l][(s, n)];
                    }
                    riemann[r][s][m][n] = second + quad;
                }
            }
        }
    }

    let mut ricci = Matrix4::zeros();
    for s in 0..4 {
        for n in 0..4 {
            let mut acc = 0.0;
            for r in 0..4 {
                for m in 0..4 {
                    acc += metric.g_upper[(r, m)] * riemann[r][s][m][n];
                }
            }
            ricci[(s, n)] = acc;
        }
    }
    ricci = (ricci + ricci.transpose()) * 0.5;
    let scalar = (metric.g_upper.component_mul(&ricci)).sum();
    let einstein = ricci - metric.g_lower * (0.5 * scalar);

    CurvatureBundle {
        metric,
        metric_derivatives: dg,
        christoffel: gamma,
        riemann,
        ricci,
        scalar,
        einstein,
    }
}

pub fn curvature(spec: &MetricSpec, x: &Point) -> Result<CurvatureBundle> {
    let metric = eval_metric(spec, x)?;
    let dg = metric_derivatives(spec, x)?;
    let ddg = metric_second_derivatives(spec, x)?;
    Ok(curvature_from_parts(metric, dg, &ddg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChartId;
    use crate::spacetimes::{load_preset, PresetId};

    fn sph(r: f64, th: f64) -> Point {
        Point::new([0.4, r, th, 1.3], ChartId::SPHERICAL)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn flat_charts_have_zero_curvature() {
        for (id, x) in [
            (
                PresetId::MinkowskiCartesian,
                Point::new([0.1, 0.2, -0.3, 0.4], ChartId::CARTESIAN),
            ),
            (PresetId::MinkowskiSpherical, sph(1.7, 0.9)),
        ] {
            let c = curvature(&load_preset(&id).unwrap(), &x).unwrap();
            assert!(c.max_riemann() < 1e-9, "{id:?}: {}", c.max_riemann());
            assert!(c.einstein.abs().max() < 1e-9);
        }
    }

    #[test]
    fn schwarzschild_kretschmann_and_vacuum() {
        let m = 1.0;
        let spec = load_preset(&PresetId::Schwarzschild { mass: m }).unwrap();
        for r in [3.0, 4.5, 8.0] {
            let c = curvature(&spec, &sph(r, 1.2)).unwrap();
            let k = 48.0 * m * m / r.powi(6);
            assert!(rel(c.kretschmann(), k) < 1e-8, "r = {r}");
            assert!(c.ricci.abs().max() < 1e-8 * c.max_riemann());
        }
    }

    #[test]
    fn de_sitter_sign_and_einstein_space() {
        let spec = load_preset(&PresetId::DeSitterStatic { alpha: 1.0 }).unwrap();
        let c = curvature(&spec, &sph(0.5, 1.0)).unwrap();
        // With [nabla, nabla] V = R V and signature (+,-,-,-) de Sitter has R < 0.
        assert!(rel(c.scalar, -12.0) < 1e-9, "R = {}", c.scalar);
        let diff = c.ricci - c.metric.g_lower * (c.scalar / 4.0);
        assert!(diff.abs().max() < 1e-9);

        let ads = load_preset(&PresetId::AntiDeSitterStatic { alpha: 2.0 }).unwrap();
        let c = curvature(&ads, &sph(0.7, 2.0)).unwrap();
        assert!(rel(c.scalar, 12.0 / 4.0) < 1e-9);
    }

    #[test]
    fn riemann_symmetries_hold() {
        let spec = load_preset(&PresetId::FrwDust { a0: 1.0 }).unwrap();
        let c = curvature(
            &spec,
            &Point::new([1.5, 0.2, 0.1, -0.4], ChartId::CARTESIAN),
        )
        .unwrap();
        let r = &c.riemann;
        let scale = c.max_riemann();
        for a in 0..4 {
            for b in 0..4 {
                for m in 0..4 {
                    for n in 0..4 {
                        assert!((r[a][b][m][n] + r[b][a][m][n]).abs() < 1e-12 * scale);
                        assert!((r[a][b][m][n] + r[a][b][n][m]).abs() < 1e-12 * scale);
                        assert!((r[a][b][m][n] - r[m][n][a][b]).abs() < 1e-12 * scale);
                        let bianchi = r[a][b][m][n] + r[a][m][n][b] + r[a][n][b][m];
                        assert!(bianchi.abs() < 1e-12 * scale);
                    }
                }
            }
        }
        assert!(c.einstein.abs().max() > 1e-3);
    }

    #[test]
    fn riemann_matches_christoffel_route() {
        // Independent route: R^r_{smn} = d_m G^r_{ns} - d_n G^r_{ms} + G^r_{ml} G^l_{ns} - G^r_{nl} G^l_{ms}
        let spec = load_preset(&PresetId::Schwarzschild { mass: 1.0 }).unwrap();
        let x = sph(3.7, 0.8);
        let c = curvature(&spec, &x).unwrap();
        let f = |p: &Point| christoffel(&spec, p);
        let dgam = fd::gradient(&f, &x, &Stencil::SECOND).unwrap();
        let gam = &c.christoffel;
        for r in 0..4 {
            for s in 0..4 {
                for m in 0..4 {
                    for n in 0..4 {
                        let mut v = dgam[m][r][(n, s)] - dgam[n][r][(m, s)];
                        for l in 0..4 {
                            v += gam[r][(m, l)] * gam[l][(n, s)] - gam[r][(n, l)] * gam[l][(m, s)];
                        }
                        assert!((v - c.riemann_mixed(r, s, m, n)).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn commutator_of_covariant_derivatives_gives_riemann() {
        // [nabla_m, nabla_n] V^r = R^r_{smn} V^s for a concrete vector field.
        let spec = load_preset(&PresetId::Schwarzschild { mass: 1.0 }).unwrap();
        let x = sph(4.2, 1.1);
        let v = |p: &Point| -> [f64; 4] {
            let [t, r, th, ph] = p.coords;
            [t * r + 1.0, th.sin() * r, ph.cos() + t, r * r * 0.1]
        };
        // nabla_n V^r as a field of matrices [(n, r)]
        let nabla = |p: &Point| -> Result<Matrix4<f64>> {
            let gam = christoffel(&spec, p)?;
            let f = |q: &Point| -> Result<[f64; 4]> { Ok(v(q)) };
            let dv = fd::gradient(&f, p, &Stencil::FIRST)?;
            let val = v(p);
            let mut out = Matrix4::zeros();
            for n in 0..4 {
                for r in 0..4 {
                    let mut acc = dv[n][r];
                    for s in 0..4 {
                        acc += gam[r][(n, s)] * val[s];
                    }
                    out[(n, r)] = acc;
                }
            }
            Ok(out)
        };
        let d_nabla = fd::gradient(&nabla, &x, &Stencil::SECOND).unwrap();
        let gam = christoffel(&spec, &x).unwrap();
        let t = nabla(&x).unwrap();
        // nabla_m T_n^r = d_m T_n^r - G^l_{mn} T_l^r + G^r_{ml} T_n^l
        let nn = |m: usize, n: usize, r: usize| {
            let mut acc = d_nabla[m][(n, r)];
            for l in 0..4 {
                acc += -gam[l][(m, n)] * t[(l, r)] + gam[r][(m, l)] * t[(n, l)];
            }
            acc
        };
        let c = curvature(&spec, &x).unwrap();
        let val = v(&x);
        for m in 0..4 {
            for n in 0..4 {
                for r in 0..4 {
                    let lhs = nn(m, n, r) - nn(n, m, r);
                    let rhs: f64 = (0..4).map(|s| c.riemann_mixed(r, s, m, n) * val[s]).sum();
                    assert!((lhs - rhs).abs() < 1e-6, "{m}{n}{r}: {lhs} vs {rhs}");
                }
            }
        }
    }

    #[test]
    fn fd_only_metric_reproduces_analytic_curvature() {
        let spec = load_preset(&PresetId::Schwarzschild { mass: 1.0 }).unwrap();
        let x = sph(5.0, 1.4);
        let a = curvature(&spec, &x).unwrap();
        let b = curvature(&spec.without_derivatives(), &x).unwrap();
        let scale = a.max_riemann();
        for r in 0..4 {
            for s in 0..4 {
                for m in 0..4 {
                    for n in 0..4 {
                        assert!(
                            (a.riemann[r][s][m][n] - b.riemann[r][s][m][n]).abs() < 1e-6 * scale
                        );
                    }
                }
            }
        }
    }
}
