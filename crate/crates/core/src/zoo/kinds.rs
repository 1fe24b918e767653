//! Closed-form zoo members.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::{capped, capped_complex, APoint, MapKernel};
use crate::error::{Error, Result};
use crate::sphere::{dist, norm, ExtendedPoint};

/// A planar map given by complex formulas.
pub(crate) trait Holo: Send + Sync + fmt::Debug {
    fn value(&self, z: Complex64) -> Complex64;
    fn deriv(&self, z: Complex64) -> Complex64;
    /// Spherical derivative squared, `|f′|² / (1 + |f|²)²`.
    fn density(&self, z: Complex64) -> f64;
    fn parts(&self, z: Complex64) -> (Complex64, Complex64);
    /// Solutions of `f = a` (`None` = ∞) in `B(c, r)`; `None` if no analytic
    /// enumerator exists.
    fn solve(&self, _a: Option<Complex64>, _c: Complex64, _r: f64) -> Option<Result<Vec<(Complex64, u32)>>> {
        None
    }
    fn has_solver(&self) -> bool {
        false
    }
}

#[derive(Debug)]
pub(crate) struct HoloKernel<H: Holo>(pub H);

#[inline]
fn cx(x: &[f64]) -> Complex64 {
    Complex64::new(x[0], x[1])
}

impl<H: Holo> MapKernel for HoloKernel<H> {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64]) -> ExtendedPoint {
        capped_complex(self.0.value(cx(x)))
    }

    fn has_jacobian(&self) -> bool {
        true
    }

    fn jacobian(&self, x: &[f64]) -> Option<f64> {
        Some(self.0.deriv(cx(x)).norm_sqr())
    }

    fn chordal_density(&self, x: &[f64]) -> Option<f64> {
        Some(self.0.density(cx(x)))
    }

    fn has_enumerator(&self) -> bool {
        self.0.has_solver()
    }

    fn apoints(&self, a: &ExtendedPoint, center: &[f64], radius: f64) -> Option<Result<Vec<APoint>>> {
        let target = match a {
            ExtendedPoint::Infinity => None,
            ExtendedPoint::Finite(v) => Some(cx(v)),
        };
        let sols = self.0.solve(target, cx(center), radius)?;
        Some(sols.map(|s| {
            s.into_iter()
                .map(|(z, m)| APoint {
                    location: vec![z.re, z.im],
                    multiplicity: m,
                })
                .collect()
        }))
    }

    fn holomorphic_parts(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        Some(self.0.parts(z))
    }

    fn is_meromorphic(&self) -> bool {
        true
    }
}

pub(crate) fn holo_map<H: Holo + 'static>(h: H) -> Arc<dyn MapKernel> {
    Arc::new(HoloKernel(h))
}

/// `(ρ e^w, ρ)` with `ρ = e^{−max(Re w, 0)}`.
#[inline]
fn exp_parts(w: Complex64) -> (Complex64, Complex64) {
    let s = w.re.max(0.0);
    let m = (w.re - s).exp();
    (Complex64::from_polar(m, w.im), Complex64::new((-s).exp(), 0.0))
}

/// Principal complex logarithm of `a`, or `None` for the omitted values 0, ∞.
fn log_target(a: Option<Complex64>) -> Option<Complex64> {
    match a {
        Some(w) if w.norm() > 0.0 => Some(w.ln()),
        _ => None,
    }
}

/// Integers `k` with `|base + k·step·i − c| < r` for a purely vertical lattice.
fn vertical_range(base: Complex64, step: f64, c: Complex64, r: f64) -> Option<(i64, i64)> {
    let dx = base.re - c.re;
    if dx.abs() >= r {
        return None;
    }
    let h = (r * r - dx * dx).sqrt();
    let lo = ((c.im - h - base.im) / step).ceil() as i64;
    let hi = ((c.im + h - base.im) / step).floor() as i64;
    (lo <= hi).then_some((lo, hi))
}

fn inside(z: Complex64, c: Complex64, r: f64) -> bool {
    (z - c).norm() < r
}

/// `e^z`: n = 2, K = 1, omits 0 and ∞.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Exponential;

impl Holo for Exponential {
    fn value(&self, z: Complex64) -> Complex64 {
        z.exp()
    }

    fn deriv(&self, z: Complex64) -> Complex64 {
        z.exp()
    }

    fn density(&self, z: Complex64) -> f64 {
        let h = 0.5 / z.re.cosh();
        h * h
    }

    fn parts(&self, z: Complex64) -> (Complex64, Complex64) {
        exp_parts(z)
    }

    fn has_solver(&self) -> bool {
        true
    }

    fn solve(&self, a: Option<Complex64>, c: Complex64, r: f64) -> Option<Result<Vec<(Complex64, u32)>>> {
        let Some(l) = log_target(a) else {
            return Some(Ok(Vec::new()));
        };
        let mut out = Vec::new();
        if let Some((lo, hi)) = vertical_range(l, TAU, c, r) {
            for k in lo..=hi {
                let z = l + Complex64::new(0.0, TAU * k as f64);
                if inside(z, c, r) {
                    out.push((z, 1));
                }
            }
        }
        Some(Ok(out))
    }
}

/// `sin z`: n = 2, K = 1.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sine;

impl Holo for Sine {
    fn value(&self, z: Complex64) -> Complex64 {
        z.sin()
    }

    fn deriv(&self, z: Complex64) -> Complex64 {
        z.cos()
    }

    fn density(&self, z: Complex64) -> f64 {
        // scale by e^{−|y|} so neither factor overflows
        let (s, c, e) = scaled_sin_cos(z);
        let e2 = e * e;
        let num = c.norm_sqr() * e2;
        let den = e2 + s.norm_sqr();
        num / (den * den)
    }

    fn parts(&self, z: Complex64) -> (Complex64, Complex64) {
        let (s, _, e) = scaled_sin_cos(z);
        (s, Complex64::new(e, 0.0))
    }

    fn has_solver(&self) -> bool {
        true
    }

    fn solve(&self, a: Option<Complex64>, c: Complex64, r: f64) -> Option<Result<Vec<(Complex64, u32)>>> {
        let Some(w) = a else {
            return Some(Ok(Vec::new()));
        };
        let b0 = w.asin();
        let b1 = Complex64::new(PI, 0.0) - b0;
        let double = (b0 - b1 - Complex64::new(TAU * ((b0.re - b1.re) / TAU).round(), 0.0)).norm()
            < super::DEDUP_TOLERANCE;
        let mut out = Vec::new();
        let bases: &[(Complex64, u32)] = if double { &[(b0, 2)] } else { &[(b0, 1), (b1, 1)] };
        for &(b, m) in bases {
            let dy = b.im - c.im;
            if dy.abs() >= r {
                continue;
            }
            let h = (r * r - dy * dy).sqrt();
            let lo = ((c.re - h - b.re) / TAU).ceil() as i64;
            let hi = ((c.re + h - b.re) / TAU).floor() as i64;
            for k in lo..=hi {
                let z = b + Complex64::new(TAU * k as f64, 0.0);
                if inside(z, c, r) {
                    out.push((z, m));
                }
            }
        }
        Some(Ok(out))
    }
}

/// `(sin z · e^{−|y|}, cos z · e^{−|y|}, e^{−|y|})`.
fn scaled_sin_cos(z: Complex64) -> (Complex64, Complex64, f64) {
    let ay = z.im.abs();
    let e = (-ay).exp();
    // e^{±y−|y|} ∈ (0, 1]
    let ep = (z.im - ay).exp();
    let em = (-z.im - ay).exp();
    let (sx, cxs) = z.re.sin_cos();
    let s = Complex64::new(sx * (ep + em) * 0.5, cxs * (ep - em) * 0.5);
    let c = Complex64::new(cxs * (ep + em) * 0.5, -sx * (ep - em) * 0.5);
    (s, c, e)
}

/// `e^{z²}`: n = 2, K = 1. Not a Yosida function.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ExpSquare;

impl Holo for ExpSquare {
    fn value(&self, z: Complex64) -> Complex64 {
        (z * z).exp()
    }

    fn deriv(&self, z: Complex64) -> Complex64 {
        z * 2.0 * (z * z).exp()
    }

    fn density(&self, z: Complex64) -> f64 {
        let w = z * z;
        let h = z.norm() / w.re.cosh();
        h * h
    }

    fn parts(&self, z: Complex64) -> (Complex64, Complex64) {
        exp_parts(z * z)
    }

    fn has_solver(&self) -> bool {
        true
    }

    /// `z = ±√(log a + 2πik)`.
    fn solve(&self, a: Option<Complex64>, c: Complex64, r: f64) -> Option<Result<Vec<(Complex64, u32)>>> {
        let Some(l) = log_target(a) else {
            return Some(Ok(Vec::new()));
        };
        let rho = c.norm() + r;
        let bound = rho * rho;
        let lo = ((-bound - l.im) / TAU).floor() as i64;
        let hi = ((bound - l.im) / TAU).ceil() as i64;
        let mut out = Vec::new();
        for k in lo..=hi {
            let w = l + Complex64::new(0.0, TAU * k as f64);
            if w.norm() > bound {
                continue;
            }
            if w.norm() == 0.0 {
                if inside(Complex64::new(0.0, 0.0), c, r) {
                    out.push((Complex64::new(0.0, 0.0), 2));
                }
                continue;
            }
            let s = w.sqrt();
            for z in [s, -s] {
                if inside(z, c, r) {
                    out.push((z, 1));
                }
            }
        }
        Some(Ok(out))
    }
}

/// `z^k`, including the identity (`k = 1`).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Power {
    pub k: u32,
}

impl Holo for Power {
    fn value(&self, z: Complex64) -> Complex64 {
        z.powu(self.k)
    }

    fn deriv(&self, z: Complex64) -> Complex64 {
        z.powu(self.k - 1) * self.k as f64
    }

    fn density(&self, z: Complex64) -> f64 {
        let k = self.k as i32;
        let r = z.norm();
        let kk = (self.k * self.k) as f64;
        if r > 1.0 {
            let inv = 1.0 / r;
            let t = inv.powi(2 * k);
            kk * inv.powi(2 * k + 2) / ((t + 1.0) * (t + 1.0))
        } else {
            let t = r.powi(2 * k);
            kk * r.powi(2 * k - 2) / ((1.0 + t) * (1.0 + t))
        }
    }

    fn parts(&self, z: Complex64) -> (Complex64, Complex64) {
        (z.powu(self.k), Complex64::new(1.0, 0.0))
    }

    fn has_solver(&self) -> bool {
        true
    }

    fn solve(&self, a: Option<Complex64>, c: Complex64, r: f64) -> Option<Result<Vec<(Complex64, u32)>>> {
        let Some(w) = a else {
            return Some(Ok(Vec::new()));
        };
        let zero = Complex64::new(0.0, 0.0);
        if w.norm() == 0.0 {
            let v = if inside(zero, c, r) { vec![(zero, self.k)] } else { vec![] };
            return Some(Ok(v));
        }
        let k = self.k as f64;
        let (m, th) = w.to_polar();
        let rad = m.powf(1.0 / k);
        let out = (0..self.k)
            .map(|j| Complex64::from_polar(rad, (th + TAU * j as f64) / k))
            .filter(|z| inside(*z, c, r))
            .map(|z| (z, 1))
            .collect();
        Some(Ok(out))
    }
}

/// A constant map in any dimension.
#[derive(Debug, Clone)]
pub(crate) struct Constant {
    pub dim: usize,
    pub value: ExtendedPoint,
}

impl MapKernel for Constant {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _x: &[f64]) -> ExtendedPoint {
        self.value.clone()
    }

    fn has_jacobian(&self) -> bool {
        true
    }

    fn jacobian(&self, _x: &[f64]) -> Option<f64> {
        Some(0.0)
    }

    fn chordal_density(&self, _x: &[f64]) -> Option<f64> {
        Some(0.0)
    }

    fn has_enumerator(&self) -> bool {
        true
    }

    fn apoints(&self, a: &ExtendedPoint, _center: &[f64], _radius: f64) -> Option<Result<Vec<APoint>>> {
        if crate::sphere::chordal(a, &self.value) == 0.0 {
            return Some(Err(Error::Degenerate(
                "every point is an a-point of a constant map at its value".into(),
            )));
        }
        Some(Ok(Vec::new()))
    }

    fn holomorphic_parts(&self, _z: Complex64) -> Option<(Complex64, Complex64)> {
        if self.dim != 2 {
            return None;
        }
        Some(match &self.value {
            ExtendedPoint::Infinity => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            ExtendedPoint::Finite(v) => (Complex64::new(v[0], v[1]), Complex64::new(1.0, 0.0)),
        })
    }

    fn is_meromorphic(&self) -> bool {
        self.dim == 2
    }
}

/// The winding map `(r, θ, x₃, …) ↦ (r, kθ, x₃, …)` in cylindrical
/// coordinates. Jacobian determinant `k` off the axis.
#[derive(Debug, Clone)]
pub(crate) struct Winding {
    pub dim: usize,
    pub k: u32,
}

impl MapKernel for Winding {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> ExtendedPoint {
        let r = x[0].hypot(x[1]);
        let th = x[1].atan2(x[0]) * self.k as f64;
        let mut v = Vec::with_capacity(self.dim);
        v.push(r * th.cos());
        v.push(r * th.sin());
        v.extend_from_slice(&x[2..]);
        capped(v)
    }

    fn has_jacobian(&self) -> bool {
        true
    }

    fn jacobian(&self, _x: &[f64]) -> Option<f64> {
        Some(self.k as f64)
    }

    fn chordal_density(&self, x: &[f64]) -> Option<f64> {
        // |f(x)| = |x|
        let r = norm(x);
        let n = self.dim as i32;
        Some(if r > 1.0 {
            let inv = 1.0 / r;
            self.k as f64 * inv.powi(2 * n) / (1.0 + inv * inv).powi(n)
        } else {
            self.k as f64 / (1.0 + r * r).powi(n)
        })
    }

    fn has_enumerator(&self) -> bool {
        true
    }

    fn apoints(&self, a: &ExtendedPoint, center: &[f64], radius: f64) -> Option<Result<Vec<APoint>>> {
        let ExtendedPoint::Finite(v) = a else {
            return Some(Ok(Vec::new()));
        };
        let rho = v[0].hypot(v[1]);
        let mut out = Vec::new();
        if rho == 0.0 {
            let loc = v.clone();
            if dist(&loc, center) < radius {
                out.push(APoint {
                    location: loc,
                    multiplicity: self.k,
                });
            }
            return Some(Ok(out));
        }
        let phi = v[1].atan2(v[0]);
        let k = self.k as f64;
        for j in 0..self.k {
            let th = (phi + TAU * j as f64) / k;
            let mut loc = vec![rho * th.cos(), rho * th.sin()];
            loc.extend_from_slice(&v[2..]);
            if dist(&loc, center) < radius {
                out.push(APoint {
                    location: loc,
                    multiplicity: 1,
                });
            }
        }
        Some(Ok(out))
    }
}

/// A Zorich-type exponential map in ℝ³: `x ↦ e^{x₃} h(x₁, x₂)`, where `h`
/// sends the square `[−1, 1]²` onto the upper unit hemisphere and is
/// extended by reflection in the square's sides. Periods 4·e₁ and 4·e₂.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Zorich;

/// Fold `t` into `[−1, 1]` by reflections; returns the folded value and the
/// parity of the number of reflections.
fn fold(t: f64) -> (f64, bool) {
    // period 4: [−1, 1] identity, [1, 3] reflected
    let u = (t + 1.0).rem_euclid(4.0);
    if u <= 2.0 {
        (u - 1.0, false)
    } else {
        (3.0 - u, true)
    }
}

impl MapKernel for Zorich {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, x: &[f64]) -> ExtendedPoint {
        let (u, pu) = fold(x[0]);
        let (v, pv) = fold(x[1]);
        let s = u.abs().max(v.abs());
        let e = norm(&[u, v]);
        // square → disk (radial), disk → hemisphere (polar angle ρπ/2)
        let (c1, c2) = if e == 0.0 { (0.0, 0.0) } else { (u / e, v / e) };
        let polar = s * PI / 2.0;
        let mut top = polar.cos();
        if pu != pv {
            top = -top;
        }
        let m = x[2].exp();
        capped(vec![m * polar.sin() * c1, m * polar.sin() * c2, m * top])
    }
}
