//! Bispinor-space primitives shared by the frame, operator and gauge modules.

use nalgebra::{Matrix4, Vector4};

pub use num_complex::Complex64 as C64;

/// 4x4 complex matrix acting on bispinor indices.
pub type SpinMatrix = Matrix4<C64>;

/// Four complex components transforming under the local Lorentz group.
pub type Bispinor = Vector4<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn spin_identity() -> SpinMatrix {
    SpinMatrix::identity()
}

pub fn spin_zero() -> SpinMatrix {
    SpinMatrix::zeros()
}

pub fn commutator(a: &SpinMatrix, b: &SpinMatrix) -> SpinMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &SpinMatrix, b: &SpinMatrix) -> SpinMatrix {
    a * b + b * a
}

pub fn scale(m: &SpinMatrix, s: f64) -> SpinMatrix {
    m.map(|z| z * s)
}

/// Largest entry modulus.
pub fn max_abs(m: &SpinMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn bispinor_max_abs(v: &Bispinor) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `s * v` for a real scalar.
pub fn bscale(v: &Bispinor, s: f64) -> Bispinor {
    v.map(|z| z * s)
}
