//! Residual of the spin-3/2 wave equation and the constraints derived from it.

use super::{
    build_alpha_beta, covariant_derivative_in, vector_bispinor_max_abs, Background,
    DerivativeField, MassParam, SpinorField, SpinorTensor, Transport, VectorBispinor,
};
use crate::error::{Error, Result};
use crate::geometry::fd::Stencil;
use crate::geometry::{curvature, CurvatureBundle, Point};
use crate::spacetimes::{load_preset, PresetId};
use crate::spin_frame::{spinor_curvature_from, GammaRep, GammaSet, SpinFrame};
use crate::spinor::{bispinor_max_abs, bscale, Bispinor, C64, I};

const THIRD: f64 = 1.0 / 3.0;

/// Field value and first covariant derivative at one point.
#[derive(Debug, Clone)]
pub struct LocalField {
    pub frame: SpinFrame,
    pub psi: VectorBispinor,
    /// `d[n][b] = D_n Psi_b`.
    pub d: [[Bispinor; 4]; 4],
}

impl LocalField {
    pub fn at<F: SpinorField + ?Sized>(
        field: &F,
        bg: &Background,
        x: &Point,
    ) -> Result<LocalField> {
        let frame = bg.frame(x)?;
        let psi = field.value(x)?.as_vector()?;
        let d = covariant_derivative_in(field, bg, &frame, Transport::Full, &bg.stencil)?
            .as_matrix()?;
        Ok(LocalField { frame, psi, d })
    }

    fn gammas(&self) -> &GammaSet {
        &self.frame.gammas
    }

    /// `gamma^s Psi_s`.
    pub fn gamma_trace(&self) -> Bispinor {
        let g = self.gammas();
        (0..4).fold(Bispinor::zeros(), |acc, s| {
            acc + g.gamma_up[s] * self.psi[s]
        })
    }

    /// `D^b Psi_b = g^{ab} D_a Psi_b`.
    pub fn divergence(&self) -> Bispinor {
        let gu = &self.frame.metric.g_upper;
        let mut out = Bispinor::zeros();
        for a in 0..4 {
            for b in 0..4 {
                if gu[(a, b)] != 0.0 {
                    out += bscale(&self.d[a][b], gu[(a, b)]);
                }
            }
        }
        out
    }

    /// `D^b Psi_b - (kappa/2) gamma^b Psi_b`.
    pub fn first_constraint(&self, mass: &MassParam) -> Bispinor {
        self.divergence() - self.gamma_trace() * (mass.kappa * 0.5)
    }

    /// The wave equation's left side, term by term.
    pub fn residual(&self, mass: &MassParam) -> VectorBispinor {
        let g = self.gammas();
        let kappa = mass.kappa;
        let trace = self.gamma_trace();
        let div = self.divergence();
        // gamma^a gamma^b D_a Psi_b
        let mut ggd = Bispinor::zeros();
        for a in 0..4 {
            for b in 0..4 {
                ggd += g.gamma_up[a] * (g.gamma_up[b] * self.d[a][b]);
            }
        }
        std::array::from_fn(|r| {
            let mut e = self.psi[r] * kappa;
            for a in 0..4 {
                e += g.gamma_up[a] * self.d[a][r];
                e -= bscale(&(g.gamma_up[a] * self.d[r][a]), THIRD);
            }
            let tail = ggd - div - trace * kappa;
            e + bscale(&(g.gamma_down[r] * tail), THIRD)
        })
    }

    /// The same left side as `(alpha^n D_n + kappa beta) Psi`.
    pub fn operator_residual(&self, mass: &MassParam) -> VectorBispinor {
        let (alpha, beta) = build_alpha_beta(self.gammas());
        let mut out = beta.apply(&self.psi).map(|b| b * mass.kappa);
        for (n, alpha_n) in alpha.iter().enumerate() {
            let dn = alpha_n.apply(&self.d[n]);
            for r in 0..4 {
                out[r] += dn[r];
            }
        }
        out
    }
}

/// Left side of the wave equation at `x`.
pub fn rs_residual<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    mass: &MassParam,
    x: &Point,
) -> Result<VectorBispinor> {
    Ok(LocalField::at(field, bg, x)?.residual(mass))
}

pub fn operator_residual<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    mass: &MassParam,
    x: &Point,
) -> Result<VectorBispinor> {
    Ok(LocalField::at(field, bg, x)?.operator_residual(mass))
}

/// `(gamma^s E_s, (2/3)(D^b Psi_b - (kappa/2) gamma^b Psi_b))`. The two agree
/// for every field.
pub fn contraction_identity<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    mass: &MassParam,
    x: &Point,
) -> Result<(Bispinor, Bispinor)> {
    let local = LocalField::at(field, bg, x)?;
    let e = local.residual(mass);
    let g = local.gammas();
    let lhs = (0..4).fold(Bispinor::zeros(), |acc, s| acc + g.gamma_up[s] * e[s]);
    let rhs = bscale(&local.first_constraint(mass), 2.0 / 3.0);
    Ok((lhs, rhs))
}

fn constraint_two_from(
    gs: &GammaSet,
    bundle: &CurvatureBundle,
    ef: &nalgebra::Matrix4<f64>,
    psi: &VectorBispinor,
    mass: &MassParam,
) -> Bispinor {
    let gu = &gs.metric.g_upper;
    let psi_up: VectorBispinor = std::array::from_fn(|b| {
        (0..4).fold(Bispinor::zeros(), |acc, l| {
            acc + bscale(&psi[l], gu[(b, l)])
        })
    });
    let mut out = Bispinor::zeros();
    let mut sigma_f = crate::spinor::spin_zero();
    for a in 0..4 {
        for b in 0..4 {
            let w = C64::new(0.5 * bundle.ricci[(a, b)], ef[(a, b)]);
            out += gs.gamma_up[a] * psi_up[b] * w;
            sigma_f += crate::spinor::scale(&gs.sigma_curved[a][b], ef[(a, b)]);
        }
    }
    let trace = (0..4).fold(Bispinor::zeros(), |acc, s| acc + gs.gamma_up[s] * psi[s]);
    let scalar = mass.kappa * mass.kappa * 0.5 - bundle.scalar / 12.0;
    out + trace * scalar - sigma_f * trace * (I * THIRD)
}

/// Algebraic curvature/field constraint
/// `(R_{ab}/2 + i e F_{ab}) gamma^a Psi^b
///  + [kappa^2/2 - R/12 - (i e/3) F_{ab} sigma^{ab}] gamma^r Psi_r`.
pub fn constraint_two_residual<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    mass: &MassParam,
    x: &Point,
) -> Result<Bispinor> {
    let frame = bg.frame(x)?;
    let bundle = curvature(&bg.spec, x)?;
    let psi = field.value(x)?.as_vector()?;
    Ok(constraint_two_from(
        &frame.gammas,
        &bundle,
        &bg.coupled_strength(),
        &psi,
        mass,
    ))
}

/// The residual `E_r` as a field, for differentiating it once more.
struct ResidualField<'a, F: ?Sized> {
    inner: &'a F,
    bg: &'a Background,
    mass: MassParam,
}

impl<F: SpinorField + ?Sized> SpinorField for ResidualField<'_, F> {
    fn rank(&self) -> usize {
        1
    }
    fn value(&self, x: &Point) -> Result<SpinorTensor> {
        Ok(SpinorTensor::from_vector(&rs_residual(
            self.inner, self.bg, &self.mass, x,
        )?))
    }
}

/// `D^b Psi_b - (kappa/2) gamma^b Psi_b` as a bispinor field.
struct FirstConstraintField<'a, F: ?Sized> {
    inner: &'a F,
    bg: &'a Background,
    mass: MassParam,
}

impl<F: SpinorField + ?Sized> SpinorField for FirstConstraintField<'_, F> {
    fn rank(&self) -> usize {
        0
    }
    fn value(&self, x: &Point) -> Result<SpinorTensor> {
        let local = LocalField::at(self.inner, self.bg, x)?;
        Ok(SpinorTensor::from_bispinor(
            local.first_constraint(&self.mass),
        ))
    }
}

/// Both sides of the divergence chain
/// `D^s E_s - (2/3) gamma^a D_a C - kappa C = K`, where `C` is the first
/// constraint and `K` the algebraic constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainCheck {
    pub lhs: Bispinor,
    pub rhs: Bispinor,
    /// Largest magnitude among the individual terms.
    pub scale: f64,
    /// Relative change of `lhs` when the outer stencil is halved.
    pub stencil_disagreement: f64,
}

impl ChainCheck {
    pub fn relative_error(&self) -> f64 {
        bispinor_max_abs(&(self.lhs - self.rhs)) / self.scale.max(f64::MIN_POSITIVE)
    }
}

fn chain_lhs<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    mass: &MassParam,
    frame: &SpinFrame,
    outer: &Stencil,
) -> Result<(Bispinor, f64)> {
    let e = ResidualField {
        inner: field,
        bg,
        mass: *mass,
    };
    let c = FirstConstraintField {
        inner: field,
        bg,
        mass: *mass,
    };
    let de = covariant_derivative_in(&e, bg, frame, Transport::Full, outer)?.as_matrix()?;
    let dc = covariant_derivative_in(&c, bg, frame, Transport::Full, outer)?.as_vector()?;
    let c0 = c.value(&frame.point)?.as_bispinor()?;
    let gu = &frame.metric.g_upper;
    let mut div = Bispinor::zeros();
    for a in 0..4 {
        for s in 0..4 {
            if gu[(a, s)] != 0.0 {
                div += bscale(&de[a][s], gu[(a, s)]);
            }
        }
    }
    let gdc = (0..4).fold(Bispinor::zeros(), |acc, a| {
        acc + frame.gammas.gamma_up[a] * dc[a]
    });
    let kc = c0 * mass.kappa;
    let scale = bispinor_max_abs(&div)
        .max(bispinor_max_abs(&gdc))
        .max(bispinor_max_abs(&kc));
    Ok((div - bscale(&gdc, 2.0 / 3.0) - kc, scale))
}

/// Checks the divergence chain with a nested finite difference. Fails with
/// [`Error::StencilTooCoarse`] when halving the outer step changes the left
/// side by more than `10 * tol` relative.
pub fn derivative_chain_check<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    mass: &MassParam,
    x: &Point,
    tol: f64,
) -> Result<ChainCheck> {
    let frame = bg.frame(x)?;
    let (lhs, s1) = chain_lhs(field, bg, mass, &frame, &Stencil::SECOND)?;
    let (fine, _) = chain_lhs(field, bg, mass, &frame, &Stencil::SECOND.halved())?;
    let rhs = constraint_two_residual(field, bg, mass, x)?;
    let scale = s1.max(bispinor_max_abs(&rhs));
    let disagreement = bispinor_max_abs(&(lhs - fine)) / scale.max(f64::MIN_POSITIVE);
    let limit = 10.0 * tol;
    if disagreement > limit {
        return Err(Error::StencilTooCoarse {
            disagreement,
            limit,
        });
    }
    Ok(ChainCheck {
        lhs,
        rhs,
        scale,
        stencil_disagreement: disagreement,
    })
}

fn nested_derivative<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    frame: &SpinFrame,
    transport: Transport,
) -> Result<SpinorTensor> {
    let inner = DerivativeField::new(field, bg.clone(), transport);
    covariant_derivative_in(&inner, bg, frame, transport, &Stencil::SECOND)
}

/// `-gamma^a [nabla_a, nabla_b] Psi^b` against `gamma^a R_{na} Psi^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeCheck {
    pub lhs: Bispinor,
    pub rhs: Bispinor,
    pub scale: f64,
}

impl BridgeCheck {
    pub fn relative_error(&self) -> f64 {
        bispinor_max_abs(&(self.lhs - self.rhs)) / self.scale.max(f64::MIN_POSITIVE)
    }
}

pub fn bridge_check<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    x: &Point,
) -> Result<BridgeCheck> {
    let frame = bg.frame(x)?;
    let bundle = curvature(&bg.spec, x)?;
    let nn = nested_derivative(field, bg, &frame, Transport::CoordinateOnly)?;
    let psi = field.value(x)?.as_vector()?;
    let gs = &frame.gammas;
    let gu = &frame.metric.g_upper;
    let mut lhs = Bispinor::zeros();
    let mut rhs = Bispinor::zeros();
    let mut scale = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            for k in 0..4 {
                if gu[(b, k)] != 0.0 {
                    let comm = nn.get(&[a, b, k]) - nn.get(&[b, a, k]);
                    scale = scale.max(bispinor_max_abs(nn.get(&[a, b, k])) * gu[(b, k)].abs());
                    lhs -= gs.gamma_up[a] * bscale(&comm, gu[(b, k)]);
                }
            }
            // gamma^a R_{na} g^{nl} Psi_l
            for n in 0..4 {
                let w: f64 = bundle.ricci[(n, a)] * gu[(n, b)];
                if w != 0.0 {
                    rhs += gs.gamma_up[a] * bscale(&psi[b], w);
                }
            }
        }
    }
    let scale = scale.max(bispinor_max_abs(&rhs));
    Ok(BridgeCheck { lhs, rhs, scale })
}

/// `[D_a, D_b] Psi_n` from nested derivatives against
/// `-R^l_{nab} Psi_l + Omega_{ab} Psi_n - i e F_{ab} Psi_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorCheck {
    pub max_error: f64,
    /// Largest second-derivative magnitude.
    pub scale: f64,
}

impl CommutatorCheck {
    pub fn relative_error(&self) -> f64 {
        self.max_error / self.scale.max(f64::MIN_POSITIVE)
    }
}

pub fn commutator_decomposition_check<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    x: &Point,
) -> Result<CommutatorCheck> {
    let frame = bg.frame(x)?;
    let bundle = curvature(&bg.spec, x)?;
    let omega = spinor_curvature_from(&frame.gammas, &bundle);
    let ef = bg.coupled_strength();
    let dd = nested_derivative(field, bg, &frame, Transport::Full)?;
    let psi = field.value(x)?.as_vector()?;
    let mut max_error = 0.0f64;
    let mut scale = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            for n in 0..4 {
                scale = scale.max(bispinor_max_abs(dd.get(&[a, b, n])));
                let direct = dd.get(&[a, b, n]) - dd.get(&[b, a, n]);
                let mut predicted = omega[a][b] * psi[n] - psi[n] * (I * ef[(a, b)]);
                for l in 0..4 {
                    let r = bundle.riemann_mixed(l, n, a, b);
                    if r != 0.0 {
                        predicted -= bscale(&psi[l], r);
                    }
                }
                max_error = max_error.max(bispinor_max_abs(&(direct - predicted)));
            }
        }
    }
    Ok(CommutatorCheck { max_error, scale })
}

/// Flat-space comparison of the wave equation with four Dirac equations.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatReduction {
    pub rs_max: f64,
    /// Largest component of `(gamma^a d_a + kappa) Psi_c`.
    pub dirac_max: f64,
    pub difference: f64,
    pub gamma_trace: f64,
    pub divergence: f64,
    /// The two residuals agree within `1e-10` of the field's derivative scale.
    pub holds: bool,
}

pub fn flat_reduction_check<F: SpinorField + ?Sized>(
    field: &F,
    mass: &MassParam,
    x: &Point,
    rep: &GammaRep,
) -> Result<FlatReduction> {
    let bg = Background::new(load_preset(&PresetId::MinkowskiCartesian)?).with_rep(rep.clone());
    let local = LocalField::at(field, &bg, x)?;
    let rs = local.residual(mass);
    let g = local.gammas();
    let dirac: VectorBispinor = std::array::from_fn(|c| {
        (0..4).fold(local.psi[c] * mass.kappa, |acc, a| {
            acc + g.gamma_up[a] * local.d[a][c]
        })
    });
    let diff: VectorBispinor = std::array::from_fn(|c| rs[c] - dirac[c]);
    let scale = local.d.iter().map(vector_bispinor_max_abs).fold(
        vector_bispinor_max_abs(&local.psi) * mass.kappa.norm(),
        f64::max,
    );
    let difference = vector_bispinor_max_abs(&diff);
    Ok(FlatReduction {
        rs_max: vector_bispinor_max_abs(&rs),
        dirac_max: vector_bispinor_max_abs(&dirac),
        difference,
        gamma_trace: bispinor_max_abs(&local.gamma_trace()),
        divergence: bispinor_max_abs(&local.divergence()),
        holds: difference <= 1e-10 * scale.max(f64::MIN_POSITIVE),
    })
}

/// Fit of the algebraic constraint to a multiple of `gamma^r Psi_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct EinsteinFactor {
    /// Least-squares scalar `K ~ ratio gamma^r Psi_r`.
    pub ratio: C64,
    /// `(R/12 + kappa^2) / 2`, which is `(R/12 - m^2)/2` for `kappa = i m`.
    pub predicted: C64,
    /// `|K - predicted gamma^r Psi_r| / |gamma^r Psi_r|`.
    pub misfit: f64,
    /// `gamma^r Psi_r` vanishes, so the fit says nothing.
    pub vacuous: bool,
}

pub fn einstein_space_factor<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    mass: &MassParam,
    x: &Point,
) -> Result<EinsteinFactor> {
    let frame = bg.frame(x)?;
    let bundle = curvature(&bg.spec, x)?;
    let psi = field.value(x)?.as_vector()?;
    let k = constraint_two_from(&frame.gammas, &bundle, &bg.coupled_strength(), &psi, mass);
    let trace = (0..4).fold(Bispinor::zeros(), |acc, s| {
        acc + frame.gammas.gamma_up[s] * psi[s]
    });
    let predicted = (mass.kappa * mass.kappa + bundle.scalar / 12.0) * 0.5;
    let norm2 = trace.norm_squared();
    let vacuous = trace.norm() <= 1e-12 * vector_bispinor_max_abs(&psi).max(f64::MIN_POSITIVE);
    if vacuous {
        return Ok(EinsteinFactor {
            ratio: C64::new(0.0, 0.0),
            predicted,
            misfit: 0.0,
            vacuous,
        });
    }
    let ratio = trace.dotc(&k) / norm2;
    let misfit = (k - trace * predicted).norm() / norm2.sqrt();
    Ok(EinsteinFactor {
        ratio,
        predicted,
        misfit,
        vacuous,
    })
}

/// Mass in `[lo, hi]` where the real part of the fitted factor changes sign,
/// located by a scan of `steps` intervals and bisection. `None` when the
/// factor keeps one sign or every point is vacuous.
pub fn find_mass_root<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    x: &Point,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<Option<f64>> {
    let factor = |m: f64| -> Result<Option<f64>> {
        let f = einstein_space_factor(field, bg, &MassParam::new(m)?, x)?;
        Ok((!f.vacuous).then_some(f.ratio.re))
    };
    let steps = steps.max(1);
    let grid: Vec<f64> = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect();
    let mut prev: Option<(f64, f64)> = None;
    for &m in &grid {
        let Some(v) = factor(m)? else { return Ok(None) };
        if v == 0.0 {
            return Ok(Some(m));
        }
        if let Some((pm, pv)) = prev {
            if pv.signum() != v.signum() {
                let (mut a, mut b, mut fa) = (pm, m, pv);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let fm = factor(mid)?.unwrap_or(0.0);
                    if fm == 0.0 || (b - a) < 1e-14 {
                        return Ok(Some(mid));
                    }
                    if fm.signum() == fa.signum() {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                return Ok(Some(0.5 * (a + b)));
            }
        }
        prev = Some((m, v));
    }
    Ok(None)
}
