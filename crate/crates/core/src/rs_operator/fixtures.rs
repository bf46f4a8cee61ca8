//! Closed-form test fields: seeded polynomial-trigonometric families,
//! plane waves, and wrappers that combine or project fields.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SpinorField, SpinorTensor, VectorBispinor};
use crate::error::{Error, Result};
use crate::geometry::{eta, eval_metric, MetricSpec, Point};
use crate::spin_frame::{build_tetrad, curved_gammas, GammaRep};
use crate::spinor::{bscale, scale, spin_identity, spin_zero, Bispinor, C64, I};

#[derive(Debug, Clone)]
pub struct ConstantField {
    value: SpinorTensor,
}

impl ConstantField {
    pub fn bispinor(b: Bispinor) -> ConstantField {
        ConstantField {
            value: SpinorTensor::from_bispinor(b),
        }
    }

    pub fn vector(v: VectorBispinor) -> ConstantField {
        ConstantField {
            value: SpinorTensor::from_vector(&v),
        }
    }
}

impl SpinorField for ConstantField {
    fn rank(&self) -> usize {
        self.value.rank()
    }
    fn value(&self, _x: &Point) -> Result<SpinorTensor> {
        Ok(self.value.clone())
    }
}

/// One complex component: `a + b.x + x.c.x + d sin(k.x + phase)`.
#[derive(Debug, Clone, PartialEq)]
struct Component {
    a: C64,
    b: [C64; 4],
    c: [[C64; 4]; 4],
    d: C64,
    k: [f64; 4],
    phase: f64,
}

impl Component {
    fn random(rng: &mut ChaCha8Rng) -> Component {
        let mut z = |s: f64| C64::new(rng.gen_range(-s..s), rng.gen_range(-s..s));
        let a = z(1.0);
        let b = std::array::from_fn(|_| z(0.5));
        let c = std::array::from_fn(|_| std::array::from_fn(|_| z(0.1)));
        let d = z(1.0);
        let k = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        Component {
            a,
            b,
            c,
            d,
            k,
            phase,
        }
    }

    fn eval(&self, x: &[f64; 4]) -> C64 {
        let mut v = self.a;
        let mut arg = self.phase;
        for m in 0..4 {
            v += self.b[m] * x[m];
            arg += self.k[m] * x[m];
            for n in 0..4 {
                v += self.c[m][n] * (x[m] * x[n]);
            }
        }
        v + self.d * arg.sin()
    }
}

/// Smooth random field of a given rank, reproducible from its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTrigField {
    rank: usize,
    components: Vec<[Component; 4]>,
}

impl PolyTrigField {
    pub fn with_rank(rank: usize, seed: u64) -> PolyTrigField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let components = (0..4usize.pow(rank as u32))
            .map(|_| std::array::from_fn(|_| Component::random(&mut rng)))
            .collect();
        PolyTrigField { rank, components }
    }

    pub fn bispinor(seed: u64) -> PolyTrigField {
        PolyTrigField::with_rank(0, seed)
    }

    pub fn vector(seed: u64) -> PolyTrigField {
        PolyTrigField::with_rank(1, seed)
    }
}

impl SpinorField for PolyTrigField {
    fn rank(&self) -> usize {
        self.rank
    }

    fn value(&self, x: &Point) -> Result<SpinorTensor> {
        let mut out = SpinorTensor::zeros(self.rank);
        for (idx, comps) in SpinorTensor::indices(self.rank).zip(&self.components) {
            *out.get_mut(&idx) = Bispinor::from_fn(|s, _| comps[s].eval(&x.coords));
        }
        Ok(out)
    }
}

/// `n` vector-bispinor fixtures with seeds derived from `seed`.
pub fn vector_catalog(n: usize, seed: u64) -> Vec<PolyTrigField> {
    (0..n as u64)
        .map(|i| PolyTrigField::vector(seed.wrapping_mul(1000).wrapping_add(i)))
        .collect()
}

pub fn bispinor_catalog(n: usize, seed: u64) -> Vec<PolyTrigField> {
    (0..n as u64)
        .map(|i| PolyTrigField::bispinor(seed.wrapping_mul(1000).wrapping_add(500 + i)))
        .collect()
}

/// `amplitude * exp(i k_m x^m)` with covariant wave vector `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWave {
    k: [f64; 4],
    amplitude: SpinorTensor,
}

impl PlaneWave {
    pub fn bispinor(k: [f64; 4], u: Bispinor) -> PlaneWave {
        PlaneWave {
            k,
            amplitude: SpinorTensor::from_bispinor(u),
        }
    }

    pub fn vector(k: [f64; 4], a: VectorBispinor) -> PlaneWave {
        PlaneWave {
            k,
            amplitude: SpinorTensor::from_vector(&a),
        }
    }
}

impl SpinorField for PlaneWave {
    fn rank(&self) -> usize {
        self.amplitude.rank()
    }

    fn value(&self, x: &Point) -> Result<SpinorTensor> {
        let phase: f64 = (0..4).map(|m| self.k[m] * x.coords[m]).sum();
        let e = (I * phase).exp();
        let mut out = self.amplitude.clone();
        for idx in SpinorTensor::indices(out.rank()) {
            let v = *out.get(&idx);
            *out.get_mut(&idx) = v * e;
        }
        Ok(out)
    }
}

/// Amplitudes `A_c` of flat-space plane waves `A_c exp(i k.x)` satisfying
/// `gamma^a A_a = 0`, `k^a A_a = 0` and `(gamma^a k_a + m) A_c = 0`, i.e.
/// the flat constrained equation with `kappa = i m`. Requires `k.k = m^2`.
pub fn plane_wave_amplitudes(k: [f64; 4], m: f64, rep: &GammaRep) -> Result<Vec<VectorBispinor>> {
    let eta = eta();
    let k2: f64 = (0..4).map(|a| eta[(a, a)] * k[a] * k[a]).sum();
    if (k2 - m * m).abs() > 1e-10 * (1.0 + m * m) {
        return Err(Error::InvalidParameter {
            name: "k".to_string(),
            value: k2,
            reason: "wave vector must satisfy k.k = m^2",
        });
    }
    let g = rep.flat();
    let slash = (0..4).fold(spin_zero(), |acc, a| acc + scale(&g[a], k[a]));
    let dirac = slash + spin_identity() * C64::new(m, 0.0);
    let mut sys = DMatrix::<C64>::zeros(24, 16);
    for c in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                sys[(4 * c + i, 4 * c + j)] = dirac[(i, j)];
            }
        }
    }
    for a in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                sys[(16 + i, 4 * a + j)] = g[a][(i, j)];
            }
            sys[(20 + i, 4 * a + i)] = C64::new(eta[(a, a)] * k[a], 0.0);
        }
    }
    let svd = sys.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let top = svd.singular_values.max();
    let mut out = Vec::new();
    for (row, s) in svd.singular_values.iter().enumerate() {
        if *s <= 1e-10 * top {
            let v: Vec<C64> = v_t.row(row).iter().map(|z| z.conj()).collect();
            out.push(std::array::from_fn(|a| {
                Bispinor::from_fn(|i, _| v[4 * a + i])
            }));
        }
    }
    Ok(out)
}

/// Sum of weighted fields of equal rank.
pub struct Superposition {
    terms: Vec<(C64, Box<dyn SpinorField>)>,
}

impl Superposition {
    pub fn new(terms: Vec<(C64, Box<dyn SpinorField>)>) -> Superposition {
        Superposition { terms }
    }
}

impl SpinorField for Superposition {
    fn rank(&self) -> usize {
        self.terms.first().map_or(0, |(_, f)| f.rank())
    }

    fn value(&self, x: &Point) -> Result<SpinorTensor> {
        let mut out = SpinorTensor::zeros(self.rank());
        for (w, f) in &self.terms {
            let v = f.value(x)?;
            v.expect_rank(out.rank())?;
            for idx in SpinorTensor::indices(out.rank()) {
                *out.get_mut(&idx) += v.get(&idx) * *w;
            }
        }
        Ok(out)
    }
}

/// `Psi_r - gamma_r gamma^s Psi_s / 4`, which has `gamma^r Psi_r = 0`.
pub struct GammaTraceless<F> {
    inner: F,
    spec: MetricSpec,
    rep: GammaRep,
}

impl<F: SpinorField> GammaTraceless<F> {
    pub fn new(inner: F, spec: MetricSpec, rep: GammaRep) -> Self {
        GammaTraceless { inner, spec, rep }
    }
}

impl<F: SpinorField> SpinorField for GammaTraceless<F> {
    fn rank(&self) -> usize {
        1
    }

    fn value(&self, x: &Point) -> Result<SpinorTensor> {
        let psi = self.inner.value(x)?.as_vector()?;
        let m = eval_metric(&self.spec, x)?;
        let gs = curved_gammas(&self.rep, &build_tetrad(&m)?, &m)?;
        let trace = (0..4).fold(Bispinor::zeros(), |acc, s| acc + gs.gamma_up[s] * psi[s]);
        let out: VectorBispinor =
            std::array::from_fn(|r| psi[r] - bscale(&(gs.gamma_down[r] * trace), 0.25));
        Ok(SpinorTensor::from_vector(&out))
    }
}
