//! Per-point evaluation of each registered check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GaugeClass;
use crate::error::Result;
use crate::gauge::{
    epsilon_contraction_check, gauge_criterion, massless_residual, GaugeCheck, SimilarityField,
};
use crate::geometry::fd::{self, Stencil};
use crate::geometry::{curvature, CurvatureBundle, Point};
use crate::rs_operator::fixtures::{plane_wave_amplitudes, PlaneWave, PolyTrigField};
use crate::rs_operator::{
    bridge_check, build_alpha_beta, commutator_decomposition_check, contraction_identity,
    derivative_chain_check, einstein_space_factor, flat_reduction_check, printed_expansion,
    rs_residual, tilde_closed_form, transform_cs, vector_bispinor_max_abs, Background,
    BlockMatrix16, LocalField, MassParam, VectorBispinor,
};
use crate::spin_frame::{connection_curvature, spin_frame, spinor_curvature_from, SpinFrame};
use crate::spinor::{
    anticommutator, bispinor_max_abs, c, commutator, max_abs, spin_identity, spin_zero, Bispinor,
    SpinMatrix, C64, I,
};

/// Largest gauge residual, relative to the field scale, still read as zero.
pub const GAUGE_ZERO_TOLERANCE: f64 = 1e-5;

/// Einstein tensor below this fraction of the Riemann scale counts as zero.
const EINSTEIN_ZERO: f64 = 1e-6;

/// Whether the gradient-field residual should vanish at this point.
pub fn classify_gauge(bundle: &CurvatureBundle) -> GaugeClass {
    if bundle.einstein.abs().max() <= EINSTEIN_ZERO * bundle.max_riemann().max(1.0) {
        GaugeClass::Zero
    } else {
        GaugeClass::CriterionNonzero
    }
}

/// Zero class: the residual vanishes. Nonzero class: it does not vanish and
/// matches the Einstein-tensor prediction within `tol`.
pub fn gauge_expectation_met(class: GaugeClass, check: &GaugeCheck, tol: f64) -> bool {
    match class {
        GaugeClass::Zero => check.relative_direct() <= GAUGE_ZERO_TOLERANCE,
        GaugeClass::CriterionNonzero => {
            check.relative_direct() > GAUGE_ZERO_TOLERANCE && check.mismatch() <= tol
        }
    }
}

/// Everything a check may use at one point.
pub(super) struct PointContext<'a> {
    pub bg: &'a Background,
    pub mass: MassParam,
    pub x: Point,
    pub frame: SpinFrame,
    pub bundle: CurvatureBundle,
    pub vectors: &'a [PolyTrigField],
    pub bispinors: &'a [PolyTrigField],
    /// Seed for per-point random choices.
    pub seed: u64,
}

impl<'a> PointContext<'a> {
    pub fn new(
        bg: &'a Background,
        mass: MassParam,
        x: Point,
        vectors: &'a [PolyTrigField],
        bispinors: &'a [PolyTrigField],
        seed: u64,
    ) -> Result<Self> {
        Ok(PointContext {
            frame: spin_frame(&bg.spec, &x, &bg.rep)?,
            bundle: curvature(&bg.spec, &x)?,
            bg,
            mass,
            x,
            vectors,
            bispinors,
            seed,
        })
    }
}

/// Outcome of one check at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) struct Sample {
    pub error: f64,
    /// False when the point carries no information for this check.
    pub informative: bool,
    pub gauge: Option<GaugeClass>,
    /// Expectation met at this point.
    pub pass: bool,
}

impl Sample {
    fn zero(error: f64, tol: f64) -> Sample {
        Sample {
            error,
            informative: true,
            gauge: None,
            pass: error <= tol,
        }
    }
}

fn ratio(err: f64, scale: f64) -> f64 {
    if err == 0.0 {
        0.0
    } else {
        err / scale.max(f64::MIN_POSITIVE)
    }
}

/// Lowered-Riemann magnitude a chart produces from its Christoffel symbols
/// alone; finite-difference noise in the curvature scales with it, so flat
/// curvilinear charts are not judged against a zero curvature.
fn chart_curvature_scale(b: &CurvatureBundle) -> f64 {
    let chr = b
        .christoffel
        .iter()
        .map(|m| m.abs().max())
        .fold(0.0, f64::max);
    b.max_riemann()
        .max(chr * chr * b.metric.g_lower.abs().max())
}

fn block_diff(a: &BlockMatrix16, b: &BlockMatrix16) -> f64 {
    (a - b).max_abs()
}

fn vdiff(a: &VectorBispinor, b: &VectorBispinor) -> f64 {
    let d: VectorBispinor = std::array::from_fn(|i| a[i] - b[i]);
    vector_bispinor_max_abs(&d)
}

pub(super) fn evaluate(id: &str, cx: &PointContext, tol: f64) -> Result<Sample> {
    let gs = &cx.frame.gammas;
    let gu = &cx.frame.metric.g_upper;
    let s = match id {
        "gamma_hermiticity" => {
            let g0 = gs.gamma_flat[0];
            let (mut err, mut scale) = (0.0f64, 0.0f64);
            for b in 0..4 {
                err = err.max(max_abs(
                    &(gs.gamma_up[b].adjoint() - g0 * gs.gamma_up[b] * g0),
                ));
                scale = scale.max(max_abs(&gs.gamma_up[b]));
            }
            Sample::zero(ratio(err, scale), tol)
        }
        "connection_hermiticity" => {
            let g0 = gs.gamma_flat[0];
            let (mut err, mut scale) = (0.0f64, 0.0f64);
            for gb in &cx.frame.connection.gamma {
                err = err
                    .max(max_abs(&(gb.adjoint() * g0 + g0 * gb)))
                    .max(gb.trace().norm());
                scale = scale.max(max_abs(gb));
            }
            Sample::zero(ratio(err, scale), tol)
        }
        "gamma_covariant_constancy" => {
            let (bg, x) = (cx.bg, &cx.x);
            let f = |q: &Point| Ok(spin_frame(&bg.spec, q, &bg.rep)?.gammas.gamma_up);
            let d: [[SpinMatrix; 4]; 4] = fd::gradient(&f, x, &Stencil::SECOND)?;
            let (mut err, mut scale) = (0.0f64, 0.0f64);
            for s in 0..4 {
                for r in 0..4 {
                    let conn = commutator(&cx.frame.connection.gamma[s], &gs.gamma_up[r]);
                    let mut total = d[s][r] + conn;
                    for l in 0..4 {
                        total += gs.gamma_up[l] * c(cx.frame.christoffel[r][(s, l)]);
                    }
                    err = err.max(max_abs(&total));
                    scale = scale.max(max_abs(&d[s][r])).max(max_abs(&conn));
                }
            }
            Sample::zero(ratio(err, scale), tol)
        }
        "clifford_anticommutator" => {
            let (mut err, mut scale) = (0.0f64, 0.0f64);
            for a in 0..4 {
                for b in 0..4 {
                    let rhs = spin_identity() * c(2.0 * gu[(a, b)]);
                    err = err.max(max_abs(
                        &(anticommutator(&gs.gamma_up[a], &gs.gamma_up[b]) - rhs),
                    ));
                    scale = scale.max(2.0 * gu[(a, b)].abs());
                }
            }
            Sample::zero(ratio(err, scale), tol)
        }
        "gamma_trace" => {
            let sum = (0..4).fold(spin_zero(), |acc, a| {
                acc + gs.gamma_up[a] * gs.gamma_down[a]
            });
            Sample::zero(max_abs(&(sum - spin_identity() * c(4.0))) / 4.0, tol)
        }
        "triple_gamma_expansion" => {
            let (mut err, mut scale) = (0.0f64, 0.0f64);
            for a in 0..4 {
                for b in 0..4 {
                    for r in 0..4 {
                        let lhs = gs.gamma_up[a] * gs.gamma_up[b] * gs.gamma_up[r];
                        let mut rhs = gs.gamma_up[a] * c(gu[(b, r)])
                            - gs.gamma_up[b] * c(gu[(a, r)])
                            + gs.gamma_up[r] * c(gu[(a, b)]);
                        for m in 0..4 {
                            rhs += gs.gamma5 * gs.gamma_down[m] * (I * gs.eps.upper[a][b][r][m]);
                        }
                        err = err.max(max_abs(&(lhs - rhs)));
                        scale = scale.max(max_abs(&lhs));
                    }
                }
            }
            Sample::zero(ratio(err, scale), tol)
        }
        "sigma_commutator" => {
            let sg = &gs.sigma_curved;
            let (mut err, mut scale) = (0.0f64, 0.0f64);
            for a in 0..4 {
                for b in 0..4 {
                    for m in 0..4 {
                        for n in 0..4 {
                            let lhs = commutator(&sg[a][b], &sg[m][n]);
                            let rhs = (sg[n][b] * c(gu[(m, a)]) - sg[n][a] * c(gu[(m, b)]))
                                - (sg[m][b] * c(gu[(n, a)]) - sg[m][a] * c(gu[(n, b)]));
                            err = err.max(max_abs(&(lhs - rhs)));
                            scale = scale.max(max_abs(&lhs)).max(max_abs(&rhs));
                        }
                    }
                }
            }
            Sample::zero(ratio(err, scale), tol)
        }
        "spinor_curvature" => {
            let direct = connection_curvature(&cx.bg.spec, &cx.x, &cx.bg.rep)?;
            let from_riemann = spinor_curvature_from(gs, &cx.bundle);
            let (mut err, mut scale) = (0.0f64, 0.0f64);
            for a in 0..4 {
                for b in 0..4 {
                    err = err.max(max_abs(&(direct[a][b] - from_riemann[a][b])));
                    scale = scale.max(max_abs(&from_riemann[a][b]));
                }
                // in flat curvilinear charts the curvature vanishes while the
                // connection does not
                let g = max_abs(&cx.frame.connection.gamma[a]);
                scale = scale.max(g * g);
            }
            Sample::zero(ratio(err, scale), tol)
        }
        "spinor_curvature_ricci_contraction" => {
            let omega = spinor_curvature_from(gs, &cx.bundle);
            let (mut err, mut scale) = (0.0f64, 0.0f64);
            for b in 0..4 {
                let mut lhs = spin_zero();
                let mut rhs = spin_zero();
                for a in 0..4 {
                    lhs += gs.gamma_up[a] * omega[a][b];
                    rhs += gs.gamma_up[a] * c(0.5 * cx.bundle.ricci[(a, b)]);
                }
                err = err.max(max_abs(&(lhs - rhs)));
                scale = scale.max(max_abs(&rhs));
            }
            let riemann = chart_curvature_scale(&cx.bundle) * gu.abs().max();
            Sample::zero(ratio(err, scale.max(riemann)), tol)
        }
        "covariant_commutator_decomposition" => {
            let mut worst = 0.0f64;
            for f in cx.vectors {
                worst =
                    worst.max(commutator_decomposition_check(f, cx.bg, &cx.x)?.relative_error());
            }
            Sample::zero(worst, tol)
        }
        "ricci_bridge" => {
            let mut worst = 0.0f64;
            for f in cx.vectors {
                worst = worst.max(bridge_check(f, cx.bg, &cx.x)?.relative_error());
            }
            Sample::zero(worst, tol)
        }
        "gamma_contraction_constraint" => {
            let mut worst = 0.0f64;
            for f in cx.vectors {
                let (lhs, rhs) = contraction_identity(f, cx.bg, &cx.mass, &cx.x)?;
                worst = worst.max(ratio(
                    bispinor_max_abs(&(lhs - rhs)),
                    bispinor_max_abs(&rhs),
                ));
            }
            Sample::zero(worst, tol)
        }
        "divergence_chain_constraint" => {
            let mut worst = 0.0f64;
            for f in cx.vectors {
                worst = worst
                    .max(derivative_chain_check(f, cx.bg, &cx.mass, &cx.x, tol)?.relative_error());
            }
            Sample::zero(worst, tol)
        }
        "operator_matrix_form" => {
            let mut worst = 0.0f64;
            for f in cx.vectors {
                let local = LocalField::at(f, cx.bg, &cx.x)?;
                let a = local.residual(&cx.mass);
                let b = local.operator_residual(&cx.mass);
                worst = worst.max(ratio(vdiff(&a, &b), vector_bispinor_max_abs(&a)));
            }
            Sample::zero(worst, tol)
        }
        "massless_form_equivalence" => {
            let (alpha, beta) = build_alpha_beta(gs);
            let t = transform_cs(&alpha, &beta, gs, -1.0 / 3.0, -1.0, 2.0)?;
            // the massless form is defined without electromagnetic coupling
            let neutral = Background::new(cx.bg.spec.clone()).with_rep(cx.bg.rep.clone());
            let mut worst = 0.0f64;
            for f in cx.vectors {
                let e = rs_residual(f, &neutral, &MassParam::massless(), &cx.x)?;
                let expected = t.s.apply(&t.c.apply(&e));
                let tilde = SimilarityField::new(f, cx.bg.spec.clone(), cx.bg.rep.clone());
                let got = massless_residual(&tilde, cx.bg, &cx.x)?;
                worst = worst.max(ratio(
                    vdiff(&got, &expected),
                    vector_bispinor_max_abs(&expected),
                ));
            }
            Sample::zero(worst, tol)
        }
        "flat_dirac_reduction" => {
            let m = cx.mass.m;
            let mut rng = ChaCha8Rng::seed_from_u64(cx.seed);
            let mut worst = 0.0f64;
            for _ in 0..cx.vectors.len().max(1) {
                let spatial: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                let k0 = (m * m + spatial.iter().map(|k| k * k).sum::<f64>()).sqrt();
                let k = [k0, spatial[0], spatial[1], spatial[2]];
                let amps = plane_wave_amplitudes(k, m, &cx.bg.rep)?;
                let weights: Vec<C64> = amps
                    .iter()
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let amp: VectorBispinor = std::array::from_fn(|a| {
                    amps.iter()
                        .zip(&weights)
                        .fold(Bispinor::zeros(), |acc, (v, w)| acc + v[a] * *w)
                });
                let wave = PlaneWave::vector(k, amp);
                let report = flat_reduction_check(&wave, &cx.mass, &cx.x, &cx.bg.rep)?;
                let scale = vector_bispinor_max_abs(&amp) * k0.max(m);
                let err = report.rs_max.max(report.dirac_max).max(report.difference);
                worst = worst.max(ratio(err, scale));
            }
            Sample::zero(worst, tol)
        }
        "einstein_space_ricci" => {
            let r = cx.bundle.scalar;
            let g = &cx.frame.metric.g_lower;
            let err = (cx.bundle.ricci - g * (r / 4.0)).abs().max();
            Sample::zero(ratio(err, cx.bundle.ricci.abs().max()), tol)
        }
        "einstein_space_factor" => {
            let mut worst = 0.0f64;
            let mut informative = false;
            for f in cx.vectors {
                let e = einstein_space_factor(f, cx.bg, &cx.mass, &cx.x)?;
                if e.vacuous {
                    continue;
                }
                informative = true;
                let scale = (cx.bundle.scalar / 12.0).abs().max(cx.mass.m * cx.mass.m);
                worst = worst.max(ratio(e.misfit, scale));
            }
            Sample {
                informative,
                ..Sample::zero(worst, tol)
            }
        }
        "similarity_inverse" => {
            let mut worst = 0.0f64;
            for a in [-1.0 / 3.0, 0.5, 2.0, -0.1] {
                let b = -a / (1.0 + 4.0 * a);
                let (alpha, beta) = build_alpha_beta(gs);
                let t = transform_cs(&alpha, &beta, gs, a, b, 0.0)?;
                let prod = &t.s * &t.s_inv;
                worst = worst.max(block_diff(&prod, &BlockMatrix16::identity()));
            }
            Sample::zero(worst, tol)
        }
        "transformation_expansion" => {
            let (alpha, beta) = build_alpha_beta(gs);
            let mut worst = 0.0f64;
            for (a, cc) in [(0.7, -1.3), (-0.45, 0.4), (1.9, 2.5)] {
                let b = -a / (1.0 + 4.0 * a);
                let t = transform_cs(&alpha, &beta, gs, a, b, cc)?;
                let (ap, bp, at, bt) = printed_expansion(gs, a, b, cc);
                let scale = at
                    .iter()
                    .chain(&t.alpha_tilde)
                    .map(|m| m.max_abs())
                    .fold(1.0, f64::max);
                let mut err = block_diff(&t.beta_prime, &bp).max(block_diff(&t.beta_tilde, &bt));
                for n in 0..4 {
                    err = err
                        .max(block_diff(&t.alpha_prime[n], &ap[n]))
                        .max(block_diff(&t.alpha_tilde[n], &at[n]));
                }
                worst = worst.max(err / scale);
            }
            Sample::zero(worst, tol)
        }
        "transformation_closed_form" => {
            let (alpha, beta) = build_alpha_beta(gs);
            let t = transform_cs(&alpha, &beta, gs, -1.0 / 3.0, -1.0, 2.0)?;
            let closed = tilde_closed_form(gs);
            let scale = closed.alpha.iter().map(|m| m.max_abs()).fold(1.0, f64::max);
            let mut err = block_diff(&t.beta_tilde, &closed.beta_gamma);
            for n in 0..4 {
                err = err.max(block_diff(&t.alpha_tilde[n], &closed.alpha[n]));
            }
            Sample::zero(err / scale, tol)
        }
        "transformed_mass_dual_forms" => {
            let closed = tilde_closed_form(gs);
            let scale = closed.beta_gamma.max_abs().max(1.0);
            let err = block_diff(&closed.beta_gamma, &closed.beta_sigma)
                .max(block_diff(&closed.beta_gamma, &closed.beta_eps));
            Sample::zero(err / scale, tol)
        }
        "gauge_einstein_criterion" => {
            let class = classify_gauge(&cx.bundle);
            let mut worst = 0.0f64;
            let mut pass = true;
            for psi in cx.bispinors {
                let check = gauge_criterion(psi, cx.bg, &cx.x)?;
                worst = worst.max(match class {
                    GaugeClass::Zero => check.relative_direct(),
                    GaugeClass::CriterionNonzero => check.mismatch(),
                });
                pass &= gauge_expectation_met(class, &check, tol);
            }
            Sample {
                error: worst,
                informative: true,
                gauge: Some(class),
                pass,
            }
        }
        "epsilon_determinant" => {
            let e = epsilon_contraction_check(&cx.bg.spec, &cx.x)?;
            let err = (e.raw - e.expanded)
                .abs()
                .max()
                .max((e.raw - e.einstein).abs().max());
            let scale = e
                .riemann_scale
                .max(chart_curvature_scale(&cx.bundle) * gu.abs().max().powi(2));
            Sample::zero(ratio(err, scale), tol)
        }
        other => unreachable!("unregistered check `{other}`"),
    };
    Ok(s)
}
