//! Tetrads, Dirac matrices on curved backgrounds and the bispinor connection.

mod connection;

use nalgebra::Matrix4;

pub use connection::{
    connection_curvature, spin_connection, spin_connection_from, spin_frame,
    spinor_commutator_curvature, spinor_curvature_from, SpinConnection, SpinFrame, SpinorCurvature,
};

use crate::error::{Error, Result};
use crate::geometry::{eta, levi_civita, LeviCivita, MetricAtPoint};
use crate::spinor::{c, commutator, max_abs, spin_identity, spin_zero, SpinMatrix, C64, I};

/// Flat Dirac matrices `gamma^a` together with `gamma^5 = i g0 g1 g2 g3`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaRep {
    flat: [SpinMatrix; 4],
    gamma5: SpinMatrix,
}

impl Default for GammaRep {
    fn default() -> Self {
        GammaRep::chiral()
    }
}

fn block(tl: [[C64; 2]; 2], tr: [[C64; 2]; 2], bl: [[C64; 2]; 2], br: [[C64; 2]; 2]) -> SpinMatrix {
    SpinMatrix::from_fn(|i, j| {
        let b = match (i < 2, j < 2) {
            (true, true) => &tl,
            (true, false) => &tr,
            (false, true) => &bl,
            (false, false) => &br,
        };
        b[i % 2][j % 2]
    })
}

impl GammaRep {
    /// Chiral (Weyl) representation: `gamma^0` has identity off-diagonal
    /// blocks, `gamma^k` has `sigma_k` above and `-sigma_k` below the
    /// diagonal, and `gamma^5 = diag(-1, -1, 1, 1)`.
    pub fn chiral() -> GammaRep {
        let o = c(0.0);
        let l = c(1.0);
        let zero = [[o, o], [o, o]];
        let id = [[l, o], [o, l]];
        let pauli = [[[o, l], [l, o]], [[o, -I], [I, o]], [[l, o], [o, -l]]];
        let neg = |m: [[C64; 2]; 2]| m.map(|r| r.map(|z| -z));
        let flat = [
            block(zero, id, id, zero),
            block(zero, pauli[0], neg(pauli[0]), zero),
            block(zero, pauli[1], neg(pauli[1]), zero),
            block(zero, pauli[2], neg(pauli[2]), zero),
        ];
        GammaRep::from_flat(flat)
    }

    fn from_flat(flat: [SpinMatrix; 4]) -> GammaRep {
        let gamma5 = (flat[0] * flat[1] * flat[2] * flat[3]).map(|z| z * I);
        GammaRep { flat, gamma5 }
    }

    /// The representation `U gamma^a U^dagger` for a unitary `U`.
    pub fn transformed(&self, u: &SpinMatrix) -> Result<GammaRep> {
        let defect = max_abs(&(u * u.adjoint() - spin_identity()));
        if defect > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "U".to_string(),
                value: defect,
                reason: "representation change must be unitary",
            });
        }
        Ok(GammaRep::from_flat(self.flat.map(|g| u * g * u.adjoint())))
    }

    pub fn flat(&self) -> &[SpinMatrix; 4] {
        &self.flat
    }

    /// `gamma_a = eta_{ab} gamma^b`.
    pub fn flat_lower(&self) -> [SpinMatrix; 4] {
        let e = eta();
        std::array::from_fn(|a| self.flat[a].map(|z| z * e[(a, a)]))
    }

    pub fn gamma5(&self) -> &SpinMatrix {
        &self.gamma5
    }

    /// `sigma^{ab} = [gamma^a, gamma^b] / 4`.
    pub fn sigma(&self) -> [[SpinMatrix; 4]; 4] {
        std::array::from_fn(|a| {
            std::array::from_fn(|b| commutator(&self.flat[a], &self.flat[b]).map(|z| z * 0.25))
        })
    }
}

/// Orthonormal frame. `e_lower[(a, m)] = e^{(a)}_m`, `e_upper[(a, m)] = e_{(a)}^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tetrad {
    pub e_lower: Matrix4<f64>,
    pub e_upper: Matrix4<f64>,
}

impl Tetrad {
    /// `e^T eta e`, which must reproduce `g_{ab}`.
    pub fn metric(&self) -> Matrix4<f64> {
        self.e_lower.transpose() * eta() * self.e_lower
    }
}

/// Builds the frame for a Lorentzian metric.
///
/// Diagonal metrics get `e^{(a)}_a = sqrt|g_aa|`. Otherwise the frame comes
/// from `g = L D L^T` with pivots taken in coordinate order, which requires
/// `g_00 > 0` and the remaining pivots negative.
pub fn build_tetrad(m: &MetricAtPoint) -> Result<Tetrad> {
    if !m.is_lorentzian() {
        return Err(Error::Signature {
            eigenvalues: m.eigenvalues(),
        });
    }
    let g = &m.g_lower;
    let diagonal = (0..4).all(|i| (0..4).all(|j| i == j || g[(i, j)] == 0.0));
    let e_lower = if diagonal {
        if g[(0, 0)] <= 0.0 || (1..4).any(|i| g[(i, i)] >= 0.0) {
            return Err(Error::Signature {
                eigenvalues: m.eigenvalues(),
            });
        }
        Matrix4::from_diagonal(&g.diagonal().map(f64::abs).map(f64::sqrt))
    } else {
        let (l, d) = ldl(g);
        let signs_ok = d[0] > 0.0 && d[1] < 0.0 && d[2] < 0.0 && d[3] < 0.0;
        if !signs_ok {
            return Err(Error::Signature {
                eigenvalues: m.eigenvalues(),
            });
        }
        let root = Matrix4::from_diagonal(&nalgebra::Vector4::from_fn(|i, _| d[i].abs().sqrt()));
        root * l.transpose()
    };
    // e_{(a)}^m = eta_{ab} g^{mn} e^{(b)}_n
    let e_upper = eta() * e_lower * m.g_upper;
    Ok(Tetrad { e_lower, e_upper })
}

/// Unpivoted `g = L D L^T` with unit lower-triangular `L`.
fn ldl(g: &Matrix4<f64>) -> (Matrix4<f64>, [f64; 4]) {
    let mut l = Matrix4::identity();
    let mut d = [0.0; 4];
    for j in 0..4 {
        let mut dj = g[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        d[j] = dj;
        for i in (j + 1)..4 {
            let mut v = g[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = v / dj;
        }
    }
    (l, d)
}

/// Dirac matrices at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSet {
    pub gamma_flat: [SpinMatrix; 4],
    pub gamma5: SpinMatrix,
    /// `sigma^{ab}` with frame indices.
    pub sigma_flat: [[SpinMatrix; 4]; 4],
    /// `gamma^m(x) = e_{(a)}^m gamma^a`.
    pub gamma_up: [SpinMatrix; 4],
    /// `gamma_m(x) = g_{mn} gamma^n(x)`.
    pub gamma_down: [SpinMatrix; 4],
    /// `sigma^{mn}(x) = [gamma^m(x), gamma^n(x)] / 4`.
    pub sigma_curved: [[SpinMatrix; 4]; 4],
    pub eps: LeviCivita,
    pub metric: MetricAtPoint,
}

pub fn curved_gammas(rep: &GammaRep, t: &Tetrad, m: &MetricAtPoint) -> Result<GammaSet> {
    let gamma_up: [SpinMatrix; 4] = std::array::from_fn(|mu| {
        (0..4).fold(spin_zero(), |acc, a| {
            acc + rep.flat[a].map(|z| z * t.e_upper[(a, mu)])
        })
    });
    let gamma_down: [SpinMatrix; 4] = std::array::from_fn(|mu| {
        (0..4).fold(spin_zero(), |acc, n| {
            acc + gamma_up[n].map(|z| z * m.g_lower[(mu, n)])
        })
    });
    let sigma_curved = std::array::from_fn(|a| {
        std::array::from_fn(|b| commutator(&gamma_up[a], &gamma_up[b]).map(|z| z * 0.25))
    });
    Ok(GammaSet {
        gamma_flat: rep.flat,
        gamma5: rep.gamma5,
        sigma_flat: rep.sigma(),
        gamma_up,
        gamma_down,
        sigma_curved,
        eps: levi_civita(m)?,
        metric: *m,
    })
}

impl GammaSet {
    /// `sigma_r^s = g_{rl} sigma^{ls}`.
    pub fn sigma_mixed(&self, r: usize, s: usize) -> SpinMatrix {
        (0..4).fold(spin_zero(), |acc, l| {
            acc + self.sigma_curved[l][s].map(|z| z * self.metric.g_lower[(r, l)])
        })
    }

    /// `sum_m v_m gamma^m` for real coefficients.
    pub fn slash_up(&self, v: &[f64; 4]) -> SpinMatrix {
        (0..4).fold(spin_zero(), |acc, m| {
            acc + self.gamma_up[m].map(|z| z * v[m])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{eval_metric, permutation_sign, sample_points, ChartId, Point};
    use crate::spacetimes::{load_preset, PresetId};

    fn presets() -> Vec<PresetId> {
        vec![
            PresetId::MinkowskiCartesian,
            PresetId::MinkowskiSpherical,
            PresetId::Schwarzschild { mass: 1.0 },
            PresetId::DeSitterStatic { alpha: 1.0 },
            PresetId::AntiDeSitterStatic { alpha: 1.0 },
            PresetId::FrwDust { a0: 1.0 },
        ]
    }

    fn gamma_sets(n: usize) -> Vec<GammaSet> {
        let rep = GammaRep::chiral();
        let mut out = Vec::new();
        for id in presets() {
            let spec = load_preset(&id).unwrap();
            for p in sample_points(&spec, n, 7).unwrap() {
                let m = eval_metric(&spec, &p).unwrap();
                out.push(curved_gammas(&rep, &build_tetrad(&m).unwrap(), &m).unwrap());
            }
        }
        out
    }

    #[test]
    fn chiral_representation() {
        let rep = GammaRep::chiral();
        let e = eta();
        for a in 0..4 {
            for b in 0..4 {
                let ac = rep.flat[a] * rep.flat[b] + rep.flat[b] * rep.flat[a];
                assert!(max_abs(&(ac - spin_identity() * c(2.0 * e[(a, b)]))) < 1e-15);
            }
            assert!(max_abs(&(rep.gamma5 * rep.flat[a] + rep.flat[a] * rep.gamma5)) < 1e-15);
        }
        let expected =
            SpinMatrix::from_diagonal(&nalgebra::Vector4::new(c(-1.0), c(-1.0), c(1.0), c(1.0)));
        assert!(max_abs(&(rep.gamma5 - expected)) < 1e-15);
        assert!(max_abs(&(rep.gamma5 * rep.gamma5 - spin_identity())) < 1e-15);
    }

    #[test]
    fn tetrad_examples() {
        let flat = build_tetrad(&MetricAtPoint::minkowski()).unwrap();
        assert_eq!(flat.e_lower, Matrix4::identity());
        let spec = load_preset(&PresetId::Schwarzschild { mass: 1.0 }).unwrap();
        let m = eval_metric(&spec, &Point::new([0.0, 4.0, 1.0, 0.0], ChartId::SPHERICAL)).unwrap();
        let t = build_tetrad(&m).unwrap();
        assert_eq!(t.e_lower[(0, 0)], 0.5f64.sqrt());
        let euclid = MetricAtPoint::from_lower(Matrix4::identity()).unwrap();
        assert!(matches!(
            build_tetrad(&euclid),
            Err(Error::Signature { .. })
        ));
    }

    #[test]
    fn tetrad_invariants_including_off_diagonal() {
        let mut g = eta();
        g[(0, 1)] = 0.3;
        g[(1, 0)] = 0.3;
        g[(2, 3)] = -0.2;
        g[(3, 2)] = -0.2;
        g[(1, 1)] = -1.4;
        let metrics = [
            MetricAtPoint::from_lower(g).unwrap(),
            MetricAtPoint::minkowski(),
        ];
        for m in metrics {
            let t = build_tetrad(&m).unwrap();
            let rel = (t.metric() - m.g_lower).abs().max() / m.g_lower.abs().max();
            assert!(rel < 1e-10);
            // e^{(a)}_m e_{(b)}^m = delta_ab and e_{(a)}^m e^{(a)}_n = delta^m_n
            assert!(
                (t.e_lower * t.e_upper.transpose() - Matrix4::identity())
                    .abs()
                    .max()
                    < 1e-12
            );
            assert!(
                (t.e_upper.transpose() * t.e_lower - Matrix4::identity())
                    .abs()
                    .max()
                    < 1e-12
            );
        }
    }

    #[test]
    fn clifford_relations_at_preset_points() {
        for gs in gamma_sets(5) {
            let gu = &gs.metric.g_upper;
            let scale = gu.abs().max();
            for a in 0..4 {
                for b in 0..4 {
                    let ac = gs.gamma_up[a] * gs.gamma_up[b] + gs.gamma_up[b] * gs.gamma_up[a];
                    assert!(max_abs(&(ac - spin_identity() * c(2.0 * gu[(a, b)]))) < 1e-10 * scale);
                    let split = spin_identity() * c(gu[(a, b)]) + gs.sigma_curved[a][b] * c(2.0);
                    assert!(max_abs(&(gs.gamma_up[a] * gs.gamma_up[b] - split)) < 1e-10 * scale);
                }
            }
            let trace = (0..4).fold(spin_zero(), |acc, a| {
                acc + gs.gamma_up[a] * gs.gamma_down[a]
            });
            assert!(max_abs(&(trace - spin_identity() * c(4.0))) < 1e-12);
        }
    }

    #[test]
    fn triple_product_expansion() {
        for gs in gamma_sets(3) {
            let gu = &gs.metric.g_upper;
            let mut worst = 0.0f64;
            let mut scale = 0.0f64;
            for a in 0..4 {
                for b in 0..4 {
                    for r in 0..4 {
                        let lhs = gs.gamma_up[a] * gs.gamma_up[b] * gs.gamma_up[r];
                        let mut rhs = gs.gamma_up[a] * c(gu[(b, r)])
                            - gs.gamma_up[b] * c(gu[(a, r)])
                            + gs.gamma_up[r] * c(gu[(a, b)]);
                        for s in 0..4 {
                            rhs += gs.gamma5 * gs.gamma_down[s] * (I * gs.eps.upper[a][b][r][s]);
                        }
                        worst = worst.max(max_abs(&(lhs - rhs)));
                        scale = scale.max(max_abs(&lhs));
                    }
                }
            }
            assert!(worst < 1e-10 * scale, "{worst} vs {scale}");
        }
    }

    #[test]
    fn sigma_commutator_relation() {
        let rep = GammaRep::chiral();
        let s = rep.sigma();
        let g = eta();
        for a in 0..4 {
            for b in 0..4 {
                for m in 0..4 {
                    for n in 0..4 {
                        let lhs = commutator(&s[a][b], &s[m][n]);
                        let rhs = (s[n][b] * c(g[(m, a)]) - s[n][a] * c(g[(m, b)]))
                            - (s[m][b] * c(g[(n, a)]) - s[m][a] * c(g[(n, b)]));
                        assert!(max_abs(&(lhs - rhs)) < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_hermiticity() {
        for gs in gamma_sets(3) {
            let g0 = gs.gamma_flat[0];
            for b in 0..4 {
                let lhs = gs.gamma_up[b].adjoint();
                let rhs = g0 * gs.gamma_up[b] * g0;
                assert!(max_abs(&(lhs - rhs)) < 1e-10 * max_abs(&lhs).max(1.0));
            }
        }
    }

    #[test]
    fn levi_civita_consistent_with_gamma5() {
        // gamma^5 = (i/4!) eps_{abcd} gamma^a gamma^b gamma^c gamma^d in flat space
        let rep = GammaRep::chiral();
        let mut acc = spin_zero();
        for a in 0..4 {
            for b in 0..4 {
                for cc in 0..4 {
                    for d in 0..4 {
                        let p = permutation_sign([a, b, cc, d]);
                        if p != 0.0 {
                            let eps_lower = -crate::geometry::EPSILON_UPPER_0123_FLAT * p;
                            acc += rep.flat[a]
                                * rep.flat[b]
                                * rep.flat[cc]
                                * rep.flat[d]
                                * c(eps_lower);
                        }
                    }
                }
            }
        }
        let g5 = acc * (I / 24.0);
        assert!(max_abs(&(g5 - rep.gamma5)) < 1e-14);
    }

    #[test]
    fn transformed_representation_keeps_algebra() {
        let h = SpinMatrix::from_fn(|i, j| {
            C64::new(0.1 * (i + 2 * j) as f64, 0.05 * (i as f64 - j as f64))
        });
        let herm = (h + h.adjoint()) * c(0.5);
        let u = (herm * I).exp();
        let rep = GammaRep::chiral().transformed(&u).unwrap();
        let e = eta();
        for a in 0..4 {
            for b in 0..4 {
                let ac = rep.flat[a] * rep.flat[b] + rep.flat[b] * rep.flat[a];
                assert!(max_abs(&(ac - spin_identity() * c(2.0 * e[(a, b)]))) < 1e-13);
            }
        }
        assert!(GammaRep::chiral()
            .transformed(&(spin_identity() * c(2.0)))
            .is_err());
    }
}
