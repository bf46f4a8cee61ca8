//! The spin-3/2 wave operator, its matrix form and transformed form, and the
//! constraints that follow from it.

mod blocks;
pub mod fixtures;
mod residual;

use std::sync::Arc;

use nalgebra::Matrix4;

pub use blocks::{
    build_alpha_beta, gamma_gamma, printed_expansion, tilde_closed_form, transform_cs,
    BlockMatrix16, TildeForms, Transformed,
};
pub use residual::{
    bridge_check, commutator_decomposition_check, constraint_two_residual, contraction_identity,
    derivative_chain_check, einstein_space_factor, find_mass_root, flat_reduction_check,
    operator_residual, rs_residual, BridgeCheck, ChainCheck, CommutatorCheck, EinsteinFactor,
    FlatReduction, LocalField,
};

use crate::error::{Error, Result};
use crate::geometry::fd::{self, FdValue, Stencil};
use crate::geometry::{MetricSpec, Point};
use crate::spin_frame::{spin_frame, GammaRep, SpinFrame};
use crate::spinor::{bscale, Bispinor, C64, I};

/// `Psi_b`: one bispinor per coordinate index.
pub type VectorBispinor = [Bispinor; 4];

pub fn zero_vector_bispinor() -> VectorBispinor {
    [Bispinor::zeros(); 4]
}

pub fn vector_bispinor_max_abs(v: &VectorBispinor) -> f64 {
    v.iter()
        .flat_map(|b| b.iter())
        .fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Bispinor-valued tensor with `rank` lower coordinate indices, stored with
/// the first index slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorTensor {
    rank: usize,
    data: Vec<Bispinor>,
}

impl SpinorTensor {
    pub fn zeros(rank: usize) -> SpinorTensor {
        SpinorTensor {
            rank,
            data: vec![Bispinor::zeros(); 4usize.pow(rank as u32)],
        }
    }

    pub fn from_bispinor(b: Bispinor) -> SpinorTensor {
        SpinorTensor {
            rank: 0,
            data: vec![b],
        }
    }

    pub fn from_vector(v: &VectorBispinor) -> SpinorTensor {
        SpinorTensor {
            rank: 1,
            data: v.to_vec(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * 4 + i)
    }

    pub fn get(&self, idx: &[usize]) -> &Bispinor {
        &self.data[self.offset(idx)]
    }

    pub fn get_mut(&mut self, idx: &[usize]) -> &mut Bispinor {
        let o = self.offset(idx);
        &mut self.data[o]
    }

    pub fn as_bispinor(&self) -> Result<Bispinor> {
        self.expect_rank(0)?;
        Ok(self.data[0])
    }

    pub fn as_vector(&self) -> Result<VectorBispinor> {
        self.expect_rank(1)?;
        Ok(std::array::from_fn(|i| self.data[i]))
    }

    /// Rank-2 tensor as `[first][second]`.
    pub fn as_matrix(&self) -> Result<[[Bispinor; 4]; 4]> {
        self.expect_rank(2)?;
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.data[4 * i + j])
        }))
    }

    pub fn expect_rank(&self, rank: usize) -> Result<()> {
        if self.rank == rank {
            Ok(())
        } else {
            Err(Error::RankMismatch {
                expected: rank,
                found: self.rank,
            })
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .flat_map(|b| b.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// All multi-indices in storage order.
    pub fn indices(rank: usize) -> impl Iterator<Item = Vec<usize>> {
        (0..4usize.pow(rank as u32)).map(move |mut k| {
            let mut idx = vec![0; rank];
            for slot in idx.iter_mut().rev() {
                *slot = k % 4;
                k /= 4;
            }
            idx
        })
    }
}

impl FdValue for SpinorTensor {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        SpinorTensor {
            rank: self.rank,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| bscale(x, a) + bscale(y, b))
                .collect(),
        }
    }

    fn scaled(&self, s: f64) -> Self {
        SpinorTensor {
            rank: self.rank,
            data: self.data.iter().map(|x| bscale(x, s)).collect(),
        }
    }
}

/// A smooth bispinor-valued tensor field. Implementations must be pure:
/// the same point always gives the same value.
pub trait SpinorField: Send + Sync {
    fn rank(&self) -> usize;
    fn value(&self, x: &Point) -> Result<SpinorTensor>;
}

impl<T: SpinorField + ?Sized> SpinorField for &T {
    fn rank(&self) -> usize {
        (**self).rank()
    }
    fn value(&self, x: &Point) -> Result<SpinorTensor> {
        (**self).value(x)
    }
}

impl<T: SpinorField + ?Sized> SpinorField for Arc<T> {
    fn rank(&self) -> usize {
        (**self).rank()
    }
    fn value(&self, x: &Point) -> Result<SpinorTensor> {
        (**self).value(x)
    }
}

impl<T: SpinorField + ?Sized> SpinorField for Box<T> {
    fn rank(&self) -> usize {
        (**self).rank()
    }
    fn value(&self, x: &Point) -> Result<SpinorTensor> {
        (**self).value(x)
    }
}

/// Uniform electromagnetic field with potential `A_b = -F_{bm} x^m / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmField {
    f: Matrix4<f64>,
}

impl EmField {
    /// Antisymmetrises the given components.
    pub fn uniform(f: Matrix4<f64>) -> EmField {
        EmField {
            f: (f - f.transpose()) * 0.5,
        }
    }

    pub fn strength(&self) -> Matrix4<f64> {
        self.f
    }

    pub fn potential(&self, x: &Point) -> [f64; 4] {
        std::array::from_fn(|b| -0.5 * (0..4).map(|m| self.f[(b, m)] * x.coords[m]).sum::<f64>())
    }
}

/// Mass `m` (inverse length) and the constant `kappa` of the wave equation,
/// `kappa = i m` unless overridden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassParam {
    pub m: f64,
    pub kappa: C64,
}

impl MassParam {
    pub fn new(m: f64) -> Result<MassParam> {
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "mass".to_string(),
                value: m,
                reason: "must be finite and non-negative",
            });
        }
        Ok(MassParam { m, kappa: I * m })
    }

    pub fn massless() -> MassParam {
        MassParam {
            m: 0.0,
            kappa: C64::new(0.0, 0.0),
        }
    }

    pub fn with_kappa(self, kappa: C64) -> MassParam {
        MassParam { kappa, ..self }
    }
}

/// Which connection terms a covariant derivative includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    /// Christoffel terms, spinor connection and the `-ieA` coupling.
    Full,
    /// Christoffel terms on the coordinate indices only.
    CoordinateOnly,
}

/// Metric, representation, electromagnetic coupling and stencil shared by
/// all field operations.
#[derive(Debug, Clone)]
pub struct Background {
    pub spec: MetricSpec,
    pub rep: GammaRep,
    pub em: Option<EmField>,
    pub charge: f64,
    pub stencil: Stencil,
}

impl Background {
    pub fn new(spec: MetricSpec) -> Background {
        Background {
            spec,
            rep: GammaRep::chiral(),
            em: None,
            charge: 0.0,
            stencil: Stencil::FIRST,
        }
    }

    pub fn with_rep(self, rep: GammaRep) -> Background {
        Background { rep, ..self }
    }

    pub fn with_em(self, em: EmField, charge: f64) -> Background {
        Background {
            em: Some(em),
            charge,
            ..self
        }
    }

    pub fn with_stencil(self, stencil: Stencil) -> Background {
        Background { stencil, ..self }
    }

    pub fn frame(&self, x: &Point) -> Result<SpinFrame> {
        spin_frame(&self.spec, x, &self.rep)
    }

    /// `e F_{ab}`, zero without a field.
    pub fn coupled_strength(&self) -> Matrix4<f64> {
        self.em
            .map_or(Matrix4::zeros(), |em| em.strength() * self.charge)
    }

    fn coupled_potential(&self, x: &Point) -> [f64; 4] {
        match self.em {
            Some(em) => em.potential(x).map(|a| a * self.charge),
            None => [0.0; 4],
        }
    }
}

/// `D_n T_{b1..bk}` at `x` as a rank `k + 1` tensor with the derivative index
/// first.
pub fn covariant_derivative<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    x: &Point,
    transport: Transport,
) -> Result<SpinorTensor> {
    let frame = bg.frame(x)?;
    covariant_derivative_in(field, bg, &frame, transport, &bg.stencil)
}

/// As [`covariant_derivative`], reusing a precomputed frame and an explicit
/// stencil.
pub fn covariant_derivative_in<F: SpinorField + ?Sized>(
    field: &F,
    bg: &Background,
    frame: &SpinFrame,
    transport: Transport,
    stencil: &Stencil,
) -> Result<SpinorTensor> {
    let x = &frame.point;
    let value = field.value(x)?;
    let rank = value.rank();
    let f = |p: &Point| field.value(p);
    let grad: [SpinorTensor; 4] = fd::gradient(&f, x, stencil)?;
    let potential = bg.coupled_potential(x);
    let mut out = SpinorTensor::zeros(rank + 1);
    for n in 0..4 {
        for idx in SpinorTensor::indices(rank) {
            let mut d = *grad[n].get(&idx);
            for slot in 0..rank {
                let b = idx[slot];
                let mut moved = idx.clone();
                for l in 0..4 {
                    let c = frame.christoffel[l][(n, b)];
                    if c != 0.0 {
                        moved[slot] = l;
                        d -= bscale(value.get(&moved), c);
                    }
                }
            }
            if transport == Transport::Full {
                let v = value.get(&idx);
                d += frame.connection.gamma[n] * v;
                if potential[n] != 0.0 {
                    d -= v * (I * potential[n]);
                }
            }
            let mut full = Vec::with_capacity(rank + 1);
            full.push(n);
            full.extend_from_slice(&idx);
            *out.get_mut(&full) = d;
        }
    }
    Ok(out)
}

/// The field `x -> D_n T(x)`, itself differentiable.
pub struct DerivativeField<F> {
    pub inner: F,
    pub bg: Background,
    pub transport: Transport,
}

impl<F: SpinorField> DerivativeField<F> {
    pub fn new(inner: F, bg: Background, transport: Transport) -> Self {
        DerivativeField {
            inner,
            bg,
            transport,
        }
    }
}

impl<F: SpinorField> SpinorField for DerivativeField<F> {
    fn rank(&self) -> usize {
        self.inner.rank() + 1
    }

    fn value(&self, x: &Point) -> Result<SpinorTensor> {
        covariant_derivative(&self.inner, &self.bg, x, self.transport)
    }
}
