//! A doubly periodic map of order two: `f(z) = sn²(u, k)` written through
//! Jacobi theta functions,
//!
//! ```text
//! f(z) = (θ₃/θ₂)² · θ₁(v)² / θ₄(v)²,   v = πz/ω₁,   q = e^{iπτ},   τ = ω₂/ω₁
//! ```
//!
//! where `ω₁, ω₂` is the Lagrange-reduced basis of the lattice. Zeros (double)
//! sit on the lattice, double poles on `ω₂/2 + Λ`; each period cell carries
//! exactly two preimages of every value.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::kinds::Holo;
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Value, derivative (in `v`) of θ₁ and θ₄.
#[derive(Debug, Clone, Copy)]
struct ThetaPair {
    t1: Complex64,
    d1: Complex64,
    t4: Complex64,
    d4: Complex64,
}

#[derive(Debug, Clone)]
pub struct EllipticSn2 {
    w1: Complex64,
    w2: Complex64,
    tau: Complex64,
    /// `(θ₃(0)/θ₂(0))²`
    c2: Complex64,
    /// `k² = θ₂⁴/θ₃⁴`
    k2: Complex64,
    theta3_sq: Complex64,
    /// `q^{(j+1/2)²}` for j = 0..
    q_half: Vec<Complex64>,
    /// `q^{j²}` for j = 1..
    q_int: Vec<Complex64>,
}

impl EllipticSn2 {
    /// Build from two lattice generators (as complex numbers).
    pub fn new(g1: Complex64, g2: Complex64) -> Result<Self> {
        let finite = |z: Complex64| z.re.is_finite() && z.im.is_finite();
        if !finite(g1) || !finite(g2) {
            return Err(Error::param("generators", "must be finite"));
        }
        let area = (g1.conj() * g2).im;
        if area.abs() <= 1e-12 * g1.norm().max(g2.norm()).powi(2) || g1.norm() == 0.0 {
            return Err(Error::param("generators", "must be linearly independent"));
        }
        let (w1, w2) = reduce_basis(g1, g2);
        let tau = w2 / w1;
        let mut q_half = Vec::new();
        let mut q_int = Vec::new();
        for j in 0..64 {
            let h = j as f64 + 0.5;
            let t = (I * PI * tau * (h * h)).exp();
            if t.norm() < 1e-18 {
                break;
            }
            q_half.push(t);
        }
        for j in 1..64 {
            let n = (j * j) as f64;
            let t = (I * PI * tau * n).exp();
            if t.norm() < 1e-18 {
                break;
            }
            q_int.push(t);
        }
        let theta2 = q_half.iter().sum::<Complex64>() * 2.0;
        let theta3 = ONE + q_int.iter().sum::<Complex64>() * 2.0;
        let c = theta3 / theta2;
        let r = theta2 / theta3;
        Ok(EllipticSn2 {
            w1,
            w2,
            tau,
            c2: c * c,
            k2: r * r * r * r,
            theta3_sq: theta3 * theta3,
            q_half,
            q_int,
        })
    }

    /// The square lattice with generators 2 and 2i.
    pub fn square() -> Self {
        Self::new(Complex64::new(2.0, 0.0), Complex64::new(0.0, 2.0)).expect("valid lattice")
    }

    pub fn periods(&self) -> (Complex64, Complex64) {
        (self.w1, self.w2)
    }

    pub fn cell_area(&self) -> f64 {
        (self.w1.conj() * self.w2).im.abs()
    }

    /// Squared modulus `k²` of the underlying `sn`.
    pub fn modulus_sq(&self) -> Complex64 {
        self.k2
    }

    /// The four critical values `0, 1, 1/k², ∞` (∞ as `None`).
    pub fn critical_values(&self) -> [Option<Complex64>; 4] {
        [Some(ZERO), Some(ONE), Some(self.k2.inv()), None]
    }

    fn thetas(&self, v: Complex64) -> ThetaPair {
        let mut t1 = ZERO;
        let mut d1 = ZERO;
        for (j, &q) in self.q_half.iter().enumerate() {
            let m = (2 * j + 1) as f64;
            let s = if j % 2 == 0 { 2.0 } else { -2.0 };
            t1 += q * (v * m).sin() * s;
            d1 += q * (v * m).cos() * (s * m);
        }
        let mut t4 = ONE;
        let mut d4 = ZERO;
        for (j, &q) in self.q_int.iter().enumerate() {
            let n = (j + 1) as f64;
            let s = if j % 2 == 0 { -2.0 } else { 2.0 };
            t4 += q * (v * (2.0 * n)).cos() * s;
            d4 -= q * (v * (2.0 * n)).sin() * (s * 2.0 * n);
        }
        ThetaPair { t1, d1, t4, d4 }
    }

    /// Lattice coordinates `(x, y)` with `z = x ω₁ + y ω₂`.
    fn lattice_coords(&self, z: Complex64) -> (f64, f64) {
        let det = (self.w1.conj() * self.w2).im;
        let x = (z.conj() * self.w2).im / det;
        let y = (self.w1.conj() * z).im / det;
        (x, y)
    }

    /// `z = z_red + m ω₁ + n ω₂` with `z_red` in the centred cell.
    fn reduce(&self, z: Complex64) -> (Complex64, f64, f64) {
        let (x, y) = self.lattice_coords(z);
        let m = x.round();
        let n = y.round();
        (z - self.w1 * m - self.w2 * n, m, n)
    }

    /// `(N, N′, D, D′)` in the `z` variable at an unreduced point; valid
    /// near the centred cell.
    fn local_parts(&self, z: Complex64) -> (Complex64, Complex64, Complex64, Complex64) {
        let dv = PI / self.w1;
        let t = self.thetas(z * dv);
        let n = self.c2 * t.t1 * t.t1;
        let dn = self.c2 * t.t1 * t.d1 * 2.0 * dv;
        let d = t.t4 * t.t4;
        let dd = t.t4 * t.d4 * 2.0 * dv;
        (n, dn, d, dd)
    }

    /// `(N, D)` at the reduced point plus the phase of the quasi-periodic
    /// factor relating them to the entire functions at `z`.
    fn parts_with_phase(&self, z: Complex64) -> (Complex64, Complex64, f64) {
        let (zr, _m, n) = self.reduce(z);
        let (num, _, den, _) = self.local_parts(zr);
        let v = zr * (PI / self.w1);
        let phase = -2.0 * PI * n * n * self.tau.re - 4.0 * n * v.re;
        (num, den, phase)
    }

    /// One solution `z₀` of `f(z₀) = w` near the centred cell.
    fn base_solution(&self, w: Option<Complex64>) -> Result<Complex64> {
        let w = match w {
            None => return Ok(self.w2 * 0.5),
            Some(w) if w == ZERO => return Ok(ZERO),
            Some(w) => w,
        };
        let s = w.sqrt();
        let rf = carlson_rf(ONE - s * s, ONE - self.k2 * s * s, ONE);
        // u = 2Kz/ω₁ with K = πθ₃²/2
        let theta3_sq = self.theta3_sq;
        let u = s * rf;
        let mut best = None;
        if let Some(guess) = rf.re.is_finite().then(|| u * self.w1 / (theta3_sq * PI)) {
            if let Some(z) = self.polish(guess, w) {
                best = Some(z);
            }
        }
        if best.is_none() {
            // multistart over the cell
            'grid: for i in 0..10 {
                for j in 0..10 {
                    let g = self.w1 * ((i as f64 + 0.5) / 10.0 - 0.5) + self.w2 * ((j as f64 + 0.5) / 10.0 - 0.5);
                    if let Some(z) = self.polish(g, w) {
                        best = Some(z);
                        break 'grid;
                    }
                }
            }
        }
        best.ok_or_else(|| Error::NonConvergence {
            context: "elliptic inverse",
            detail: format!("no solution located for value {w}"),
        })
    }

    /// Newton iteration on `N − wD` (or `D − N/w` for large `w`).
    fn polish(&self, mut z: Complex64, w: Complex64) -> Option<Complex64> {
        let big = w.norm() > 1.0;
        let winv = w.inv();
        for _ in 0..60 {
            let (zr, _, _) = self.reduce(z);
            z = zr;
            let (n, dn, d, dd) = self.local_parts(z);
            let (g, dg) = if big {
                (d - n * winv, dd - dn * winv)
            } else {
                (n - d * w, dn - dd * w)
            };
            if dg == ZERO || !(dg.re.is_finite() && dg.im.is_finite()) {
                return None;
            }
            let step = g / dg;
            if !(step.re.is_finite() && step.im.is_finite()) {
                return None;
            }
            // damp wild steps
            let lim = 0.25 * self.w1.norm().min(self.w2.norm());
            let step = if step.norm() > lim { step * (lim / step.norm()) } else { step };
            z -= step;
            if step.norm() < 1e-15 * (1.0 + z.norm()) {
                break;
            }
        }
        let val = self.value(z);
        let err = crate::sphere::chordal(
            &super::capped_complex(val),
            &crate::sphere::ExtendedPoint::from_complex(w),
        );
        (err <= 1e-10).then_some(self.reduce(z).0)
    }

    /// All solutions of `f = w` (`None` = ∞) in `B(c, r)`.
    pub fn solutions(&self, w: Option<Complex64>, c: Complex64, r: f64) -> Result<Vec<(Complex64, u32)>> {
        let z0 = self.base_solution(w)?;
        let (x, y) = self.lattice_coords(z0 * 2.0);
        let doubled = (x - x.round()).abs() < 1e-7 && (y - y.round()).abs() < 1e-7;
        let bases: Vec<(Complex64, u32)> = if doubled {
            vec![(z0, 2)]
        } else {
            vec![(z0, 1), (-z0, 1)]
        };
        let det = (self.w1.conj() * self.w2).im.abs();
        let span_x = r * self.w2.norm() / det + 1.0;
        let span_y = r * self.w1.norm() / det + 1.0;
        let mut out = Vec::new();
        for (b, mult) in bases {
            let (cx, cy) = self.lattice_coords(c - b);
            let (m0, m1) = ((cx - span_x).floor() as i64, (cx + span_x).ceil() as i64);
            let (n0, n1) = ((cy - span_y).floor() as i64, (cy + span_y).ceil() as i64);
            for m in m0..=m1 {
                for n in n0..=n1 {
                    let z = b + self.w1 * m as f64 + self.w2 * n as f64;
                    if (z - c).norm() < r {
                        out.push((z, mult));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Lagrange–Gauss reduction, oriented so `Im(ω₂/ω₁) > 0`.
fn reduce_basis(mut a: Complex64, mut b: Complex64) -> (Complex64, Complex64) {
    if a.norm_sqr() > b.norm_sqr() {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        let mu = ((b * a.conj()).re / a.norm_sqr()).round();
        b -= a * mu;
        if b.norm_sqr() < a.norm_sqr() {
            std::mem::swap(&mut a, &mut b);
        } else {
            break;
        }
    }
    if (b / a).im < 0.0 {
        b = -b;
    }
    (a, b)
}

/// Carlson's symmetric integral `R_F(x, y, z)` by duplication.
pub(crate) fn carlson_rf(mut x: Complex64, mut y: Complex64, mut z: Complex64) -> Complex64 {
    for _ in 0..100 {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sy * sz + sz * sx;
        x = (x + lam) * 0.25;
        y = (y + lam) * 0.25;
        z = (z + lam) * 0.25;
        let mu = (x + y + z) / 3.0;
        let dev = [(mu - x).norm(), (mu - y).norm(), (mu - z).norm()]
            .into_iter()
            .fold(0.0, f64::max)
            / mu.norm();
        if dev < 1e-4 {
            let ex = (mu - x) / mu;
            let ey = (mu - y) / mu;
            let ez = -(ex + ey);
            let e2 = ex * ey - ez * ez;
            let e3 = ex * ey * ez;
            let series = ONE - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - e2 * e3 * (3.0 / 44.0);
            return series / mu.sqrt();
        }
    }
    Complex64::new(f64::NAN, f64::NAN)
}

impl Holo for EllipticSn2 {
    fn value(&self, z: Complex64) -> Complex64 {
        let (zr, _, _) = self.reduce(z);
        let (n, _, d, _) = self.local_parts(zr);
        if d == ZERO {
            return Complex64::new(f64::INFINITY, 0.0);
        }
        n / d
    }

    fn deriv(&self, z: Complex64) -> Complex64 {
        let (zr, _, _) = self.reduce(z);
        let (n, dn, d, dd) = self.local_parts(zr);
        (dn * d - n * dd) / (d * d)
    }

    fn density(&self, z: Complex64) -> f64 {
        let (zr, _, _) = self.reduce(z);
        let (n, dn, d, dd) = self.local_parts(zr);
        let s = (dn * d - n * dd).norm() / (n.norm_sqr() + d.norm_sqr());
        s * s
    }

    fn parts(&self, z: Complex64) -> (Complex64, Complex64) {
        let (n, d, phase) = self.parts_with_phase(z);
        let e = Complex64::from_polar(1.0, phase);
        (n * e, d * e)
    }

    fn has_solver(&self) -> bool {
        true
    }

    fn solve(&self, a: Option<Complex64>, c: Complex64, r: f64) -> Option<Result<Vec<(Complex64, u32)>>> {
        Some(self.solutions(a, c, r))
    }
}
