//! Block-matrix form of the wave operator and the similarity transformation
//! that brings the derivative term to pure Levi-Civita form.

use std::ops::{Add, Mul, Sub};

use nalgebra::SMatrix;

use super::VectorBispinor;
use crate::error::{Error, Result};
use crate::spin_frame::GammaSet;
use crate::spinor::{scale, spin_identity, spin_zero, Bispinor, SpinMatrix, C64, I};

/// Sixteen 4x4 blocks `M_r^s`, acting as `(M Psi)_r = sum_s M_r^s Psi_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix16 {
    blocks: [[SpinMatrix; 4]; 4],
}

impl BlockMatrix16 {
    pub fn zeros() -> BlockMatrix16 {
        BlockMatrix16 {
            blocks: [[spin_zero(); 4]; 4],
        }
    }

    /// `delta_r^s` times the spinor identity.
    pub fn identity() -> BlockMatrix16 {
        BlockMatrix16::from_fn(|r, s| if r == s { spin_identity() } else { spin_zero() })
    }

    pub fn from_fn(f: impl Fn(usize, usize) -> SpinMatrix) -> BlockMatrix16 {
        BlockMatrix16 {
            blocks: std::array::from_fn(|r| std::array::from_fn(|s| f(r, s))),
        }
    }

    pub fn block(&self, r: usize, s: usize) -> &SpinMatrix {
        &self.blocks[r][s]
    }

    pub fn scale(&self, z: C64) -> BlockMatrix16 {
        BlockMatrix16::from_fn(|r, s| self.blocks[r][s] * z)
    }

    pub fn apply(&self, psi: &VectorBispinor) -> VectorBispinor {
        std::array::from_fn(|r| {
            (0..4).fold(Bispinor::zeros(), |acc, s| acc + self.blocks[r][s] * psi[s])
        })
    }

    /// Dense form with row `4 r + i`, column `4 s + j`.
    pub fn to_dense(&self) -> SMatrix<C64, 16, 16> {
        SMatrix::from_fn(|row, col| self.blocks[row / 4][col / 4][(row % 4, col % 4)])
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .flat_map(|b| b.iter())
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }
}

impl Mul for &BlockMatrix16 {
    type Output = BlockMatrix16;
    fn mul(self, rhs: &BlockMatrix16) -> BlockMatrix16 {
        BlockMatrix16::from_fn(|r, s| {
            (0..4).fold(spin_zero(), |acc, l| {
                acc + self.blocks[r][l] * rhs.blocks[l][s]
            })
        })
    }
}

impl Add for &BlockMatrix16 {
    type Output = BlockMatrix16;
    fn add(self, rhs: &BlockMatrix16) -> BlockMatrix16 {
        BlockMatrix16::from_fn(|r, s| self.blocks[r][s] + rhs.blocks[r][s])
    }
}

impl Sub for &BlockMatrix16 {
    type Output = BlockMatrix16;
    fn sub(self, rhs: &BlockMatrix16) -> BlockMatrix16 {
        BlockMatrix16::from_fn(|r, s| self.blocks[r][s] - rhs.blocks[r][s])
    }
}

/// `gamma_r gamma^s` as a block matrix.
pub fn gamma_gamma(gs: &GammaSet) -> BlockMatrix16 {
    BlockMatrix16::from_fn(|r, s| gs.gamma_down[r] * gs.gamma_up[s])
}

/// `delta_r^s + k gamma_r gamma^s`.
fn delta_plus(gs: &GammaSet, k: f64) -> BlockMatrix16 {
    &BlockMatrix16::identity() + &gamma_gamma(gs).scale(C64::new(k, 0.0))
}

/// Derivative matrices `alpha^n` and mass matrix `beta` of the wave operator
/// `(alpha^n D_n + kappa beta) Psi`.
pub fn build_alpha_beta(gs: &GammaSet) -> ([BlockMatrix16; 4], BlockMatrix16) {
    let third = 1.0 / 3.0;
    let g_up = &gs.metric.g_upper;
    let alpha = std::array::from_fn(|n| {
        BlockMatrix16::from_fn(|r, s| {
            let mut b = scale(&(gs.gamma_down[r] * gs.gamma_up[n] * gs.gamma_up[s]), third);
            if r == s {
                b += gs.gamma_up[n];
            }
            if r == n {
                b -= scale(&gs.gamma_up[s], third);
            }
            b - scale(&gs.gamma_down[r], third * g_up[(n, s)])
        })
    });
    (alpha, delta_plus(gs, -third))
}

/// Intermediate and final matrices of the two-step transformation.
#[derive(Debug, Clone)]
pub struct Transformed {
    pub c: BlockMatrix16,
    pub s: BlockMatrix16,
    pub s_inv: BlockMatrix16,
    pub alpha_prime: [BlockMatrix16; 4],
    pub beta_prime: BlockMatrix16,
    pub alpha_tilde: [BlockMatrix16; 4],
    pub beta_tilde: BlockMatrix16,
}

/// Left multiplication by `C = 1 + c gamma gamma`, then similarity by
/// `S = 1 + a gamma gamma` with `S^-1 = 1 + b gamma gamma`.
pub fn transform_cs(
    alpha: &[BlockMatrix16; 4],
    beta: &BlockMatrix16,
    gs: &GammaSet,
    a: f64,
    b: f64,
    c: f64,
) -> Result<Transformed> {
    let residual = a + b + 4.0 * a * b;
    if !(residual.abs() <= 1e-12) {
        return Err(Error::InvalidTransform { a, b, residual });
    }
    let cm = delta_plus(gs, c);
    let s = delta_plus(gs, a);
    let s_inv = delta_plus(gs, b);
    let alpha_prime: [BlockMatrix16; 4] = std::array::from_fn(|n| &cm * &alpha[n]);
    let beta_prime = &cm * beta;
    let alpha_tilde = std::array::from_fn(|n| &(&s * &alpha_prime[n]) * &s_inv);
    let beta_tilde = &(&s * &beta_prime) * &s_inv;
    Ok(Transformed {
        c: cm,
        s,
        s_inv,
        alpha_prime,
        beta_prime,
        alpha_tilde,
        beta_tilde,
    })
}

/// `sum_m eps_r^{nsm} gamma_m` for each `n`, as block matrices over `(r, s)`.
fn epsilon_gamma(gs: &GammaSet) -> [BlockMatrix16; 4] {
    let eps = gs.eps.first_lowered(&gs.metric);
    std::array::from_fn(|n| {
        BlockMatrix16::from_fn(|r, s| {
            (0..4).fold(spin_zero(), |acc, m| {
                acc + scale(&gs.gamma_down[m], eps[r][n][s][m])
            })
        })
    })
}

/// Closed-form expansion of the transformed matrices for general `(a, b, c)`,
/// in the basis `gamma^n delta`, `gamma^s delta^n_r`, `gamma_r g^{ns}` and the
/// Levi-Civita term. Returns `(alpha', beta', alpha~, beta~)`.
pub fn printed_expansion(
    gs: &GammaSet,
    a: f64,
    b: f64,
    c: f64,
) -> (
    [BlockMatrix16; 4],
    BlockMatrix16,
    [BlockMatrix16; 4],
    BlockMatrix16,
) {
    let third = 1.0 / 3.0;
    let g_up = &gs.metric.g_upper;
    let shifted = (2.0 * c - 1.0) * (1.0 + 4.0 * a) / 3.0 + 2.0 * a;
    let k = (b + 1.0) / 3.0 + b * shifted;
    let eg = epsilon_gamma(gs);
    let basis = |n: usize, r: usize, s: usize, w: [f64; 3]| {
        let mut out = scale(&gs.gamma_down[r], w[2] * g_up[(n, s)]);
        if r == s {
            out += scale(&gs.gamma_up[n], w[0]);
        }
        if r == n {
            out += scale(&gs.gamma_up[s], w[1]);
        }
        out
    };
    let alpha_prime = std::array::from_fn(|n| {
        BlockMatrix16::from_fn(|r, s| {
            basis(n, r, s, [1.0, -third, (2.0 * c - 1.0) / 3.0])
                + scale(&(gs.gamma_down[r] * gs.gamma_up[n] * gs.gamma_up[s]), third)
        })
    });
    let beta_prime = delta_plus(gs, -(c + 1.0) / 3.0);
    let alpha_tilde = std::array::from_fn(|n| {
        BlockMatrix16::from_fn(|r, s| {
            basis(n, r, s, [1.0 - k, (2.0 * b - 1.0) / 3.0 + k, shifted + k])
                + gs.gamma5 * eg[n].block(r, s) * (I * k)
        })
    });
    let beta_tilde = delta_plus(
        gs,
        b + (4.0 * b + 1.0) * (a - (4.0 * a + 1.0) * (c + 1.0) / 3.0),
    );
    (alpha_prime, beta_prime, alpha_tilde, beta_tilde)
}

/// The transformed matrices at `(a, b, c) = (-1/3, -1, 2)` written directly.
#[derive(Debug, Clone)]
pub struct TildeForms {
    /// `i gamma^5 eps_r^{nsm} gamma_m`.
    pub alpha: [BlockMatrix16; 4],
    /// `delta_r^s - gamma_r gamma^s`.
    pub beta_gamma: BlockMatrix16,
    /// `-2 sigma_r^s`.
    pub beta_sigma: BlockMatrix16,
    /// `(i/2) gamma^5 eps_r^{nsm} gamma_m gamma_n`.
    pub beta_eps: BlockMatrix16,
}

pub fn tilde_closed_form(gs: &GammaSet) -> TildeForms {
    let eg = epsilon_gamma(gs);
    let alpha =
        std::array::from_fn(|n| BlockMatrix16::from_fn(|r, s| gs.gamma5 * eg[n].block(r, s) * I));
    let beta_eps = BlockMatrix16::from_fn(|r, s| {
        let sum = (0..4).fold(spin_zero(), |acc, n| {
            acc + eg[n].block(r, s) * gs.gamma_down[n]
        });
        gs.gamma5 * sum * (I * 0.5)
    });
    TildeForms {
        alpha,
        beta_gamma: delta_plus(gs, -1.0),
        beta_sigma: BlockMatrix16::from_fn(|r, s| scale(&gs.sigma_mixed(r, s), -2.0)),
        beta_eps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{eval_metric, sample_points};
    use crate::spacetimes::{load_preset, PresetId};
    use crate::spin_frame::{build_tetrad, curved_gammas, GammaRep};
    use proptest::prelude::*;

    fn gamma_sets(id: PresetId, n: usize) -> Vec<GammaSet> {
        let spec = load_preset(&id).unwrap();
        sample_points(&spec, n, 7)
            .unwrap()
            .iter()
            .map(|x| {
                let m = eval_metric(&spec, x).unwrap();
                curved_gammas(&GammaRep::chiral(), &build_tetrad(&m).unwrap(), &m).unwrap()
            })
            .collect()
    }

    fn max_diff(a: &BlockMatrix16, b: &BlockMatrix16) -> f64 {
        (a - b).max_abs()
    }

    fn curved() -> Vec<GammaSet> {
        let mut v = gamma_sets(PresetId::Schwarzschild { mass: 1.0 }, 3);
        v.extend(gamma_sets(PresetId::DeSitterStatic { alpha: 1.0 }, 3));
        v.extend(gamma_sets(PresetId::FrwDust { a0: 1.0 }, 3));
        v
    }

    #[test]
    fn block_arithmetic_matches_dense() {
        let gs = &gamma_sets(PresetId::Schwarzschild { mass: 1.0 }, 1)[0];
        let (alpha, beta) = build_alpha_beta(gs);
        let a = &alpha[1];
        let z = C64::new(0.3, -1.2);
        let prod = &(a * &beta) + &gamma_gamma(gs).scale(z);
        let dense = a.to_dense() * beta.to_dense() + gamma_gamma(gs).to_dense() * z;
        let dmax = |m: &SMatrix<C64, 16, 16>| m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        assert!(dmax(&(prod.to_dense() - dense)) < 1e-13 * dmax(&dense));
        let psi: VectorBispinor =
            std::array::from_fn(|r| Bispinor::from_fn(|i, _| C64::new(r as f64, i as f64)));
        let flat = nalgebra::SVector::<C64, 16>::from_fn(|k, _| psi[k / 4][k % 4]);
        let applied = a.apply(&psi);
        let dense_applied = a.to_dense() * flat;
        for k in 0..16 {
            assert!((applied[k / 4][k % 4] - dense_applied[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn beta_trace() {
        for gs in curved() {
            let (_, beta) = build_alpha_beta(&gs);
            let trace = (0..4).fold(spin_zero(), |acc, r| acc + beta.block(r, r));
            let expected = spin_identity() * C64::new(8.0 / 3.0, 0.0);
            assert!(crate::spinor::max_abs(&(trace - expected)) < 1e-12);
        }
    }

    #[test]
    fn s_times_inverse_is_identity() {
        for gs in curved() {
            for a in [-1.0 / 3.0, 0.5, 2.0, -0.1] {
                let b = -a / (1.0 + 4.0 * a);
                let s = delta_plus(&gs, a);
                let s_inv = delta_plus(&gs, b);
                let id = BlockMatrix16::identity();
                assert!(max_diff(&(&s * &s_inv), &id) < 1e-12);
                assert!(max_diff(&(&s_inv * &s), &id) < 1e-12);
            }
        }
    }

    #[test]
    fn trivial_transform_is_identity() {
        let gs = &curved()[0];
        let (alpha, beta) = build_alpha_beta(gs);
        let t = transform_cs(&alpha, &beta, gs, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(t.beta_tilde, beta);
        for n in 0..4 {
            assert_eq!(t.alpha_tilde[n], alpha[n]);
        }
    }

    #[test]
    fn rejects_inconsistent_parameters() {
        let gs = &curved()[0];
        let (alpha, beta) = build_alpha_beta(gs);
        assert!(matches!(
            transform_cs(&alpha, &beta, gs, 0.1, 0.1, 1.0),
            Err(Error::InvalidTransform { .. })
        ));
        assert!(transform_cs(&alpha, &beta, gs, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn special_parameters_give_closed_form() {
        for gs in curved() {
            let (alpha, beta) = build_alpha_beta(&gs);
            let t = transform_cs(&alpha, &beta, &gs, -1.0 / 3.0, -1.0, 2.0).unwrap();
            let closed = tilde_closed_form(&gs);
            let scale = 1.0 + closed.alpha.iter().map(|a| a.max_abs()).fold(0.0, f64::max);
            for n in 0..4 {
                assert!(max_diff(&t.alpha_tilde[n], &closed.alpha[n]) < 1e-12 * scale);
            }
            assert!(max_diff(&t.beta_tilde, &closed.beta_gamma) < 1e-12 * scale);
            assert!(max_diff(&closed.beta_gamma, &closed.beta_sigma) < 1e-12 * scale);
            assert!(max_diff(&closed.beta_gamma, &closed.beta_eps) < 1e-12 * scale);
        }
    }

    #[test]
    fn flat_closed_form_is_constant() {
        let spec = load_preset(&PresetId::MinkowskiCartesian).unwrap();
        let forms: Vec<TildeForms> = sample_points(&spec, 3, 2)
            .unwrap()
            .iter()
            .map(|x| {
                let m = eval_metric(&spec, x).unwrap();
                tilde_closed_form(
                    &curved_gammas(&GammaRep::chiral(), &build_tetrad(&m).unwrap(), &m).unwrap(),
                )
            })
            .collect();
        for f in &forms[1..] {
            for n in 0..4 {
                assert_eq!(f.alpha[n], forms[0].alpha[n]);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn general_transform_matches_expansion(a in -2.0f64..2.0, c in -3.0f64..3.0, which in 0usize..9) {
            prop_assume!((1.0 + 4.0 * a).abs() > 0.1);
            let b = -a / (1.0 + 4.0 * a);
            let gs = &curved()[which];
            let (alpha, beta) = build_alpha_beta(gs);
            let t = transform_cs(&alpha, &beta, gs, a, b, c).unwrap();
            let (ap, bp, at, bt) = printed_expansion(gs, a, b, c);
            let scale = 1.0 + at.iter().chain(&t.alpha_tilde).map(|m| m.max_abs()).fold(0.0, f64::max);
            prop_assert!(max_diff(&t.beta_prime, &bp) < 1e-12 * scale);
            prop_assert!(max_diff(&t.beta_tilde, &bt) < 1e-12 * scale);
            for n in 0..4 {
                prop_assert!(max_diff(&t.alpha_prime[n], &ap[n]) < 1e-12 * scale);
                prop_assert!(max_diff(&t.alpha_tilde[n], &at[n]) < 1e-12 * scale);
            }
        }
    }
}
