//! Polynomials with complex coefficients and rational maps `P/Q`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::kinds::Holo;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Roots closer than this are merged into one root with multiplicity.
pub(crate) const ROOT_CLUSTER_TOL: f64 = 1e-5;

/// A polynomial `Σ c_j z^j` with coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    /// Trailing zero coefficients are dropped; the zero polynomial keeps a
    /// single 0 coefficient.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        Polynomial { coeffs }
    }

    pub fn from_real(c: &[f64]) -> Self {
        Self::new(c.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == ZERO
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// `(p(z), p′(z))` by Horner.
    pub fn eval_with_deriv(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = ZERO;
        let mut d = ZERO;
        for &c in self.coeffs.iter().rev() {
            d = d * z + p;
            p = p * z + c;
        }
        (p, d)
    }

    /// `Σ |c_j| |z|^j`, the scale of rounding errors in `eval`.
    fn magnitude(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    /// Coefficients of `z^D p(1/z)` for `D ≥ deg p`.
    fn reversed(&self, d: usize) -> Polynomial {
        let mut c = vec![ZERO; d + 1];
        for (j, &a) in self.coeffs.iter().enumerate() {
            c[d - j] = a;
        }
        Polynomial { coeffs: c }
    }

    fn combine(&self, other: &Polynomial, a: Complex64) -> Polynomial {
        // self − a·other
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n)
            .map(|j| {
                self.coeffs.get(j).copied().unwrap_or(ZERO)
                    - a * other.coeffs.get(j).copied().unwrap_or(ZERO)
            })
            .collect();
        Polynomial::new(c)
    }

    /// All roots with multiplicities, by Aberth–Ehrlich iteration followed
    /// by clustering at [`ROOT_CLUSTER_TOL`].
    pub fn roots(&self) -> Result<Vec<(Complex64, u32)>> {
        if self.is_zero() {
            return Err(Error::Degenerate("roots of the zero polynomial".into()));
        }
        let d = self.degree();
        if d == 0 {
            return Ok(Vec::new());
        }
        let lead = self.coeffs[d];
        let monic: Vec<Complex64> = self.coeffs.iter().map(|c| c / lead).collect();
        let mp = Polynomial { coeffs: monic };
        if d == 1 {
            return Ok(vec![(-mp.coeffs[0], 1)]);
        }
        // Fujiwara-style bound for the initial circle
        let bound = (0..d)
            .map(|j| mp.coeffs[j].norm().powf(1.0 / (d - j) as f64))
            .fold(0.0_f64, f64::max)
            * 2.0;
        let radius = bound.max(1e-3);
        let mut z: Vec<Complex64> = (0..d)
            .map(|k| Complex64::from_polar(radius, TAU * k as f64 / d as f64 + 0.4))
            .collect();
        let mut converged = false;
        for _ in 0..2000 {
            let mut max_step = 0.0_f64;
            for i in 0..d {
                let (p, dp) = mp.eval_with_deriv(z[i]);
                if p == ZERO {
                    continue;
                }
                let ratio = p / dp;
                let mut s = ZERO;
                for j in 0..d {
                    if j != i {
                        let diff = z[i] - z[j];
                        if diff != ZERO {
                            s += ONE / diff;
                        }
                    }
                }
                let step = ratio / (ONE - ratio * s);
                if step.re.is_finite() && step.im.is_finite() {
                    z[i] -= step;
                    max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
                }
            }
            if max_step < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            // accept if residuals are at rounding level
            let ok = z
                .iter()
                .all(|&r| mp.eval(r).norm() <= 1e-6 * mp.magnitude(r).max(1e-300));
            if !ok {
                return Err(Error::NonConvergence {
                    context: "polynomial roots",
                    detail: format!("Aberth iteration did not settle for degree {d}"),
                });
            }
        }
        Ok(cluster_roots(&z, &mp))
    }
}

fn cluster_roots(z: &[Complex64], p: &Polynomial) -> Vec<(Complex64, u32)> {
    let mut used = vec![false; z.len()];
    let mut out = Vec::new();
    for i in 0..z.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![z[i]];
        let mut grew = true;
        while grew {
            grew = false;
            for j in 0..z.len() {
                if !used[j] && members.iter().any(|m| (z[j] - m).norm() < ROOT_CLUSTER_TOL) {
                    used[j] = true;
                    members.push(z[j]);
                    grew = true;
                }
            }
        }
        let m = members.len() as u32;
        let mut c = members.iter().sum::<Complex64>() / members.len() as f64;
        if m == 1 {
            // Newton polish
            for _ in 0..3 {
                let (v, dv) = p.eval_with_deriv(c);
                if dv == ZERO {
                    break;
                }
                let next = c - v / dv;
                if !(next.re.is_finite() && next.im.is_finite()) {
                    break;
                }
                c = next;
            }
        }
        out.push((c, m));
    }
    out
}

/// `P/Q` with no common roots.
#[derive(Debug, Clone)]
pub(crate) struct Rational {
    p: Polynomial,
    q: Polynomial,
    /// `max(deg P, deg Q)`
    d: usize,
    p_rev: Polynomial,
    q_rev: Polynomial,
    dp: Polynomial,
    dq: Polynomial,
    dp_rev: Polynomial,
    dq_rev: Polynomial,
}

fn derivative(p: &Polynomial) -> Polynomial {
    if p.degree() == 0 {
        return Polynomial::new(vec![ZERO]);
    }
    Polynomial::new(
        p.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, &c)| c * j as f64)
            .collect(),
    )
}

impl Rational {
    pub(crate) fn new(p: Polynomial, q: Polynomial) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::param("denominator", "zero polynomial"));
        }
        if p.coeffs.iter().chain(&q.coeffs).any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::param("coefficients", "must be finite"));
        }
        if !p.is_zero() {
            for (r, _) in q.roots()? {
                let scale = p.magnitude(r).max(1e-300);
                if p.eval(r).norm() <= 1e-9 * scale {
                    return Err(Error::param(
                        "numerator",
                        format!("shares the root {r} with the denominator"),
                    ));
                }
            }
        }
        let d = p.degree().max(q.degree());
        let p_rev = p.reversed(d);
        let q_rev = q.reversed(d);
        Ok(Rational {
            dp: derivative(&p),
            dq: derivative(&q),
            dp_rev: derivative(&p_rev),
            dq_rev: derivative(&q_rev),
            p,
            q,
            d,
            p_rev,
            q_rev,
        })
    }

    pub(crate) fn degree(&self) -> usize {
        self.d
    }

    /// `(P, Q)` at `z` scaled by a positive factor so neither overflows.
    fn scaled(&self, z: Complex64) -> (Complex64, Complex64) {
        let r = z.norm();
        if r <= 1.0 {
            (self.p.eval(z), self.q.eval(z))
        } else {
            let w = z.inv();
            let phase = Complex64::from_polar(1.0, z.arg() * self.d as f64);
            (self.p_rev.eval(w) * phase, self.q_rev.eval(w) * phase)
        }
    }

    /// `|f′| / (1 + |f|²)`.
    fn spherical_derivative(&self, z: Complex64) -> f64 {
        if z.norm() <= 1.0 {
            let (p, q) = (self.p.eval(z), self.q.eval(z));
            let w = self.dp.eval(z) * q - p * self.dq.eval(z);
            w.norm() / (p.norm_sqr() + q.norm_sqr())
        } else {
            let w = z.inv();
            let (p, q) = (self.p_rev.eval(w), self.q_rev.eval(w));
            let num = p * self.dq_rev.eval(w) - self.dp_rev.eval(w) * q;
            w.norm_sqr() * num.norm() / (p.norm_sqr() + q.norm_sqr())
        }
    }
}

impl Holo for Rational {
    fn value(&self, z: Complex64) -> Complex64 {
        let (n, d) = self.scaled(z);
        if d == ZERO {
            return Complex64::new(f64::INFINITY, 0.0);
        }
        n / d
    }

    fn deriv(&self, z: Complex64) -> Complex64 {
        let (p, q) = (self.p.eval(z), self.q.eval(z));
        (self.dp.eval(z) * q - p * self.dq.eval(z)) / (q * q)
    }

    fn density(&self, z: Complex64) -> f64 {
        let s = self.spherical_derivative(z);
        s * s
    }

    fn parts(&self, z: Complex64) -> (Complex64, Complex64) {
        self.scaled(z)
    }

    fn has_solver(&self) -> bool {
        true
    }

    fn solve(&self, a: Option<Complex64>, c: Complex64, r: f64) -> Option<Result<Vec<(Complex64, u32)>>> {
        let poly = match a {
            None => self.q.clone(),
            Some(w) => {
                let g = self.p.combine(&self.q, w);
                if g.is_zero() {
                    return Some(Err(Error::Degenerate(format!(
                        "rational map is identically {w}"
                    ))));
                }
                g
            }
        };
        Some(poly.roots().map(|rs| {
            rs.into_iter()
                .filter(|(z, _)| (z - c).norm() < r)
                .collect()
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn horner_and_derivative() {
        let p = Polynomial::from_real(&[1.0, -3.0, 0.0, 2.0]);
        let (v, d) = p.eval_with_deriv(c(2.0, 0.0));
        assert_eq!(v, c(11.0, 0.0));
        assert_eq!(d, c(21.0, 0.0));
        assert_eq!(p.degree(), 3);
        assert_eq!(Polynomial::from_real(&[1.0, 0.0, 0.0]).degree(), 0);
    }

    #[test]
    fn roots_of_unity() {
        let p = Polynomial::from_real(&[-1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let roots = p.roots().unwrap();
        assert_eq!(roots.len(), 5);
        for (z, m) in roots {
            assert_eq!(m, 1);
            assert!((z.powu(5) - 1.0).norm() < 1e-13);
        }
    }

    #[test]
    fn double_root_is_clustered() {
        // (z − 1)²(z + 2)
        let p = Polynomial::from_real(&[2.0, -3.0, 0.0, 1.0]);
        let mut roots = p.roots().unwrap();
        roots.sort_by(|a, b| a.0.re.total_cmp(&b.0.re));
        assert_eq!(roots.len(), 2);
        assert!((roots[0].0 - c(-2.0, 0.0)).norm() < 1e-10);
        assert_eq!(roots[1].1, 2);
        assert!((roots[1].0 - c(1.0, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn shared_root_rejected() {
        let p = Polynomial::from_real(&[-1.0, 1.0]);
        let q = Polynomial::from_real(&[-1.0, 0.0, 1.0]);
        assert!(Rational::new(p, q).is_err());
        assert!(Rational::new(Polynomial::from_real(&[1.0]), Polynomial::from_real(&[0.0])).is_err());
    }

    #[test]
    fn scaled_density_matches_direct_formula() {
        let f = Rational::new(
            Polynomial::from_real(&[1.0, 2.0, 0.5]),
            Polynomial::from_real(&[3.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        for z in [c(0.3, 0.2), c(2.0, -1.5), c(-4.0, 7.0)] {
            let w = f.value(z);
            let direct = f.deriv(z).norm() / (1.0 + w.norm_sqr());
            let s = f.spherical_derivative(z);
            assert!((s - direct).abs() <= 1e-12 * direct.max(1e-300), "{z}");
        }
    }
}
