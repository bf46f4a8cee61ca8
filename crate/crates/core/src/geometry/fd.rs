//! Central finite differences over chart coordinates.
//!
//! Step sizes are per coordinate: `h_mu = max(min, rel * |x_mu|)`. When a
//! stencil point falls outside the metric domain the step is halved, at most
//! [`MAX_HALVINGS`] times, before the out-of-domain error is returned.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::Point;
use crate::error::{Error, Result};
use crate::spinor::C64;

pub const MAX_HALVINGS: usize = 8;

/// Values that can be combined linearly by a difference stencil.
pub trait FdValue: Clone {
    /// Returns `a * self + b * other`.
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self;
    fn scaled(&self, s: f64) -> Self;
}

impl FdValue for f64 {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        a * self + b * other
    }
    fn scaled(&self, s: f64) -> Self {
        s * self
    }
}

impl FdValue for Matrix4<f64> {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        self * a + other * b
    }
    fn scaled(&self, s: f64) -> Self {
        self * s
    }
}

impl FdValue for Matrix4<C64> {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        self.map(|z| z * a) + other.map(|z| z * b)
    }
    fn scaled(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }
}

impl<T: FdValue, const N: usize> FdValue for [T; N] {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        std::array::from_fn(|i| self[i].lin(a, &other[i], b))
    }
    fn scaled(&self, s: f64) -> Self {
        std::array::from_fn(|i| self[i].scaled(s))
    }
}

/// Step policy of a central difference stencil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stencil {
    pub rel: f64,
    pub min: f64,
    /// Combine the steps `h` and `h/2` as `(4 D(h/2) - D(h)) / 3`.
    pub richardson: bool,
}

impl Stencil {
    /// First derivatives of metrics and fields.
    pub const FIRST: Stencil = Stencil {
        rel: 1e-5,
        min: 1e-5,
        richardson: false,
    };

    /// Second derivatives and nested first derivatives.
    pub const SECOND: Stencil = Stencil {
        rel: 1e-3,
        min: 1e-3,
        richardson: true,
    };

    pub fn step(&self, coord: f64) -> f64 {
        self.min.max(self.rel * coord.abs())
    }

    pub fn halved(&self) -> Stencil {
        Stencil {
            rel: self.rel * 0.5,
            min: self.min * 0.5,
            richardson: self.richardson,
        }
    }

    pub fn without_richardson(&self) -> Stencil {
        Stencil {
            richardson: false,
            ..*self
        }
    }
}

fn shifted(x: &Point, mu: usize, h: f64) -> Point {
    let mut y = *x;
    y.coords[mu] += h;
    y
}

fn plain_partial<T, F>(f: &F, x: &Point, mu: usize, h0: f64) -> Result<T>
where
    T: FdValue,
    F: Fn(&Point) -> Result<T>,
{
    let mut h = h0;
    let mut last_err = None;
    for _ in 0..=MAX_HALVINGS {
        match (f(&shifted(x, mu, h)), f(&shifted(x, mu, -h))) {
            (Ok(plus), Ok(minus)) => return Ok(plus.lin(0.5 / h, &minus, -0.5 / h)),
            (Err(e @ Error::OutOfDomain { .. }), _) | (_, Err(e @ Error::OutOfDomain { .. })) => {
                last_err = Some(e);
                h *= 0.5;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    Err(last_err.expect("loop ran at least once"))
}

/// Partial derivative along coordinate `mu`.
pub fn partial<T, F>(f: &F, x: &Point, mu: usize, stencil: &Stencil) -> Result<T>
where
    T: FdValue,
    F: Fn(&Point) -> Result<T>,
{
    let h = stencil.step(x.coords[mu]);
    let coarse = plain_partial(f, x, mu, h)?;
    if !stencil.richardson {
        return Ok(coarse);
    }
    let fine = plain_partial(f, x, mu, 0.5 * h)?;
    Ok(fine.lin(4.0 / 3.0, &coarse, -1.0 / 3.0))
}

/// All four partial derivatives, indexed by coordinate.
pub fn gradient<T, F>(f: &F, x: &Point, stencil: &Stencil) -> Result<[T; 4]>
where
    T: FdValue,
    F: Fn(&Point) -> Result<T>,
{
    let d0 = partial(f, x, 0, stencil)?;
    let d1 = partial(f, x, 1, stencil)?;
    let d2 = partial(f, x, 2, stencil)?;
    let d3 = partial(f, x, 3, stencil)?;
    Ok([d0, d1, d2, d3])
}

fn plain_hessian<T, F>(f: &F, x: &Point, center: &T, h: [f64; 4]) -> Result<[[T; 4]; 4]>
where
    T: FdValue,
    F: Fn(&Point) -> Result<T>,
{
    let mut rows: Vec<Vec<Option<T>>> = vec![vec![None; 4]; 4];
    for mu in 0..4 {
        let plus = f(&shifted(x, mu, h[mu]))?;
        let minus = f(&shifted(x, mu, -h[mu]))?;
        let inv = 1.0 / (h[mu] * h[mu]);
        let sum = plus.lin(inv, &minus, inv);
        rows[mu][mu] = Some(sum.lin(1.0, center, -2.0 * inv));
        for nu in (mu + 1)..4 {
            let pp = f(&shifted(&shifted(x, mu, h[mu]), nu, h[nu]))?;
            let pm = f(&shifted(&shifted(x, mu, h[mu]), nu, -h[nu]))?;
            let mp = f(&shifted(&shifted(x, mu, -h[mu]), nu, h[nu]))?;
            let mm = f(&shifted(&shifted(x, mu, -h[mu]), nu, -h[nu]))?;
            let a = pp.lin(1.0, &pm, -1.0);
            let b = mp.lin(1.0, &mm, -1.0);
            let v = a.lin(1.0, &b, -1.0).scaled(0.25 / (h[mu] * h[nu]));
            rows[nu][mu] = Some(v.clone());
            rows[mu][nu] = Some(v);
        }
    }
    let mut it = rows.into_iter().map(|r| {
        let mut c = r.into_iter().map(|v| v.expect("filled"));
        let r: [T; 4] = std::array::from_fn(|_| c.next().expect("four columns"));
        r
    });
    Ok(std::array::from_fn(|_| it.next().expect("four rows")))
}

/// Symmetric second-derivative matrix `d_mu d_nu f` from function values.
pub fn hessian<T, F>(f: &F, x: &Point, stencil: &Stencil) -> Result<[[T; 4]; 4]>
where
    T: FdValue,
    F: Fn(&Point) -> Result<T>,
{
    let center = f(x)?;
    let mut h: [f64; 4] = std::array::from_fn(|mu| stencil.step(x.coords[mu]));
    let mut last_err = None;
    for _ in 0..=MAX_HALVINGS {
        let attempt = plain_hessian(f, x, &center, h).and_then(|coarse| {
            if !stencil.richardson {
                return Ok(coarse);
            }
            let half = h.map(|s| 0.5 * s);
            let fine = plain_hessian(f, x, &center, half)?;
            Ok(fine.lin(4.0 / 3.0, &coarse, -1.0 / 3.0))
        });
        match attempt {
            Err(e @ Error::OutOfDomain { .. }) => {
                last_err = Some(e);
                h = h.map(|s| 0.5 * s);
            }
            other => return other,
        }
    }
    Err(last_err.expect("loop ran at least once"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChartId;

    fn pt(c: [f64; 4]) -> Point {
        Point::new(c, ChartId::CARTESIAN)
    }

    #[test]
    fn gradient_of_polynomial_is_accurate() {
        let f = |p: &Point| -> Result<f64> {
            let [t, x, y, z] = p.coords;
            Ok(t * t * x + y.sin() * z.exp())
        };
        let x = pt([0.3, -1.2, 0.7, 0.1]);
        let g = gradient(&f, &x, &Stencil::FIRST).unwrap();
        let [t, xx, y, z] = x.coords;
        let exact = [2.0 * t * xx, t * t, y.cos() * z.exp(), y.sin() * z.exp()];
        for mu in 0..4 {
            assert!(
                (g[mu] - exact[mu]).abs() < 1e-9,
                "{mu}: {} vs {}",
                g[mu],
                exact[mu]
            );
        }
    }

    #[test]
    fn richardson_improves_nested_accuracy() {
        let f = |p: &Point| -> Result<f64> { Ok((2.0 * p.coords[1]).sin()) };
        let x = pt([0.0, 0.4, 0.0, 0.0]);
        let exact = -4.0 * (0.8f64).sin();
        let plain = hessian(&f, &x, &Stencil::SECOND.without_richardson()).unwrap()[1][1];
        let rich = hessian(&f, &x, &Stencil::SECOND).unwrap()[1][1];
        assert!((rich - exact).abs() < (plain - exact).abs());
        assert!((rich - exact).abs() < 1e-9);
    }

    #[test]
    fn hessian_is_symmetric() {
        let f = |p: &Point| -> Result<f64> {
            let [t, x, y, z] = p.coords;
            Ok((t * x).cos() + x * y * z + (y - t).exp())
        };
        let h = hessian(&f, &pt([0.2, 0.5, -0.3, 1.1]), &Stencil::SECOND).unwrap();
        for mu in 0..4 {
            for nu in 0..4 {
                assert_eq!(h[mu][nu], h[nu][mu]);
            }
        }
        let exact_tx = -(0.1f64).cos() * 0.1 - (0.1f64).sin();
        assert!((h[0][1] - exact_tx).abs() < 1e-9);
    }

    #[test]
    fn step_is_halved_near_domain_edge() {
        let f = |p: &Point| -> Result<f64> {
            if p.coords[1] <= 1.0 {
                return Err(Error::OutOfDomain {
                    metric: "test".into(),
                    coords: p.coords,
                });
            }
            Ok(p.coords[1].ln())
        };
        let x = pt([0.0, 1.0 + 3e-6, 0.0, 0.0]);
        let d = partial(&f, &x, 1, &Stencil::FIRST).unwrap();
        assert!((d - 1.0 / x.coords[1]).abs() < 1e-4);

        let too_close = pt([0.0, 1.0 + 1e-9, 0.0, 0.0]);
        assert!(matches!(
            partial(&f, &too_close, 1, &Stencil::FIRST),
            Err(Error::OutOfDomain { .. })
        ));
    }
}
