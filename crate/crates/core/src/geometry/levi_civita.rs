use super::{zero_rank4, MetricAtPoint, Rank4};
use crate::error::{Error, Result};

/// Sign of the flat `epsilon^{0123}`.
///
/// Fixed against the chiral representation with `gamma^5 = i g0 g1 g2 g3`:
/// only this sign makes the triple-product expansion
/// `g^a g^b g^r = g^a g^{br} - g^b g^{ar} + g^r g^{ab} + i g5 eps^{abrs} g_s`
/// hold.
pub const EPSILON_UPPER_0123_FLAT: f64 = -1.0;

/// Sign of the permutation `(a, b, c, d)` of `(0, 1, 2, 3)`, zero on repeats.
pub fn permutation_sign(idx: [usize; 4]) -> f64 {
    let mut sign = 1.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if idx[i] == idx[j] {
                return 0.0;
            }
            if idx[i] > idx[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// The Levi-Civita tensor (not density) at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct LeviCivita {
    /// `eps^{abcd}`
    pub upper: Rank4,
    /// `eps_{abcd}`
    pub lower: Rank4,
}

impl LeviCivita {
    /// `eps_r^{nsm} = g_{rl} eps^{lnsm}`.
    pub fn first_lowered(&self, metric: &MetricAtPoint) -> Rank4 {
        let mut out = zero_rank4();
        for r in 0..4 {
            for n in 0..4 {
                for s in 0..4 {
                    for m in 0..4 {
                        out[r][n][s][m] = (0..4)
                            .map(|l| metric.g_lower[(r, l)] * self.upper[l][n][s][m])
                            .sum();
                    }
                }
            }
        }
        out
    }

    /// `eps^{abs}_m = eps^{absl} g_{lm}`.
    pub fn last_lowered(&self, metric: &MetricAtPoint) -> Rank4 {
        let mut out = zero_rank4();
        for a in 0..4 {
            for b in 0..4 {
                for s in 0..4 {
                    for m in 0..4 {
                        out[a][b][s][m] = (0..4)
                            .map(|l| self.upper[a][b][s][l] * metric.g_lower[(l, m)])
                            .sum();
                    }
                }
            }
        }
        out
    }
}

/// `eps^{abcd} = s [abcd] / sqrt(-g)`, `eps_{abcd} = -s sqrt(-g) [abcd]`
/// with `s` = [`EPSILON_UPPER_0123_FLAT`].
pub fn levi_civita(metric: &MetricAtPoint) -> Result<LeviCivita> {
    let det = metric.det_g;
    if !det.is_finite() || det.abs() < 1e-14 {
        return Err(Error::SingularMetric { det });
    }
    let root = (-det).abs().sqrt();
    let mut upper = zero_rank4();
    let mut lower = zero_rank4();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = permutation_sign([a, b, c, d]);
                    upper[a][b][c][d] = EPSILON_UPPER_0123_FLAT * p / root;
                    lower[a][b][c][d] = -EPSILON_UPPER_0123_FLAT * p * root;
                }
            }
        }
    }
    Ok(LeviCivita { upper, lower })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{eval_metric, ChartId, Point};
    use crate::spacetimes::{load_preset, PresetId};

    #[test]
    fn minkowski_components() {
        let e = levi_civita(&MetricAtPoint::minkowski()).unwrap();
        assert_eq!(e.upper[0][1][2][3], -1.0);
        assert_eq!(e.lower[0][1][2][3], 1.0);
        assert_eq!(e.upper[1][0][2][3], 1.0);
        assert_eq!(e.upper[0][0][2][3], 0.0);
        assert_eq!(e.upper[3][3][3][3], 0.0);
    }

    #[test]
    fn lowering_all_indices_reproduces_lower() {
        let spec = load_preset(&PresetId::Schwarzschild { mass: 1.0 }).unwrap();
        let m = eval_metric(
            &spec,
            &Point::new(
                [0.0, 4.0, std::f64::consts::FRAC_PI_2, 0.0],
                ChartId::SPHERICAL,
            ),
        )
        .unwrap();
        let e = levi_civita(&m).unwrap();
        let root = (-m.det_g).sqrt();
        assert!((e.upper[0][1][2][3] + 1.0 / root).abs() < 1e-15);
        // Diagonal metric: lowering multiplies by the diagonal entries.
        let g = m.g_lower;
        let lowered = e.upper[0][1][2][3] * g[(0, 0)] * g[(1, 1)] * g[(2, 2)] * g[(3, 3)];
        assert!((lowered - e.lower[0][1][2][3]).abs() < 1e-12 * root);
    }

    #[test]
    fn double_contraction_is_minus_24() {
        let m = MetricAtPoint::minkowski();
        let e = levi_civita(&m).unwrap();
        let mut acc = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        acc += e.upper[a][b][c][d] * e.lower[a][b][c][d];
                    }
                }
            }
        }
        assert_eq!(acc, -24.0);
    }
}
