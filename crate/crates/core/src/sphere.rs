//! Chordal geometry on the one-point compactification ℝⁿ ∪ {∞}.
//!
//! Points are [`ExtendedPoint`]s: either a finite coordinate vector or the
//! tagged point at infinity. Infinity is never encoded as an IEEE infinity
//! inside a coordinate vector.
//!
//! The chordal metric is the one induced by the sphere of diameter one, so
//! `q(a, b) ≤ 1` with equality for antipodal pairs such as `e₁, −e₁` or
//! `0, ∞`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// A point of ℝⁿ ∪ {∞}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointRepr", into = "PointRepr")]
pub enum ExtendedPoint {
    Finite(Vec<f64>),
    Infinity,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PointRepr {
    Coords(Vec<f64>),
    Tag(String),
}

impl TryFrom<PointRepr> for ExtendedPoint {
    type Error = String;

    fn try_from(r: PointRepr) -> std::result::Result<Self, String> {
        match r {
            PointRepr::Coords(c) => ExtendedPoint::finite(c).map_err(|e| e.to_string()),
            PointRepr::Tag(t) if matches!(t.as_str(), "inf" | "infinity" | "∞") => {
                Ok(ExtendedPoint::Infinity)
            }
            PointRepr::Tag(t) => Err(format!("expected coordinate list or \"inf\", got {t:?}")),
        }
    }
}

impl From<ExtendedPoint> for PointRepr {
    fn from(p: ExtendedPoint) -> Self {
        match p {
            ExtendedPoint::Finite(c) => PointRepr::Coords(c),
            ExtendedPoint::Infinity => PointRepr::Tag("inf".into()),
        }
    }
}

impl ExtendedPoint {
    /// Finite point; rejects NaN and infinite coordinates.
    pub fn finite(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("point coordinates"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("coordinates", format!("{coords:?} is not finite")));
        }
        Ok(ExtendedPoint::Finite(coords))
    }

    pub fn origin(dim: usize) -> Self {
        ExtendedPoint::Finite(vec![0.0; dim])
    }

    /// `k`-th standard basis vector scaled by `s` (0-based `k`).
    pub fn basis(dim: usize, k: usize, s: f64) -> Self {
        let mut v = vec![0.0; dim];
        v[k] = s;
        ExtendedPoint::Finite(v)
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            ExtendedPoint::Finite(vec![z.re, z.im])
        } else {
            ExtendedPoint::Infinity
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, ExtendedPoint::Infinity)
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            ExtendedPoint::Finite(c) => Some(c),
            ExtendedPoint::Infinity => None,
        }
    }

    /// Dimension of a finite point; `None` for ∞, which is compatible with
    /// every dimension.
    pub fn dim(&self) -> Option<usize> {
        self.coords().map(<[f64]>::len)
    }

    /// Euclidean norm, `+∞` for the point at infinity.
    pub fn norm(&self) -> f64 {
        match self {
            ExtendedPoint::Finite(c) => norm(c),
            ExtendedPoint::Infinity => f64::INFINITY,
        }
    }

    /// Interpret a 2-dimensional finite point as a complex number.
    pub fn as_complex(&self) -> Option<Complex64> {
        match self {
            ExtendedPoint::Finite(c) if c.len() == 2 => Some(Complex64::new(c[0], c[1])),
            _ => None,
        }
    }
}

/// Overflow-safe Euclidean norm.
pub fn norm(x: &[f64]) -> f64 {
    match x.len() {
        0 => 0.0,
        1 => x[0].abs(),
        2 => x[0].hypot(x[1]),
        _ => {
            let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if m == 0.0 || !m.is_finite() {
                return m;
            }
            if m < 1e150 && m > 1e-150 {
                x.iter().map(|v| v * v).sum::<f64>().sqrt()
            } else {
                m * x.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt()
            }
        }
    }
}

/// Overflow-safe Euclidean distance.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() == 2 {
        return (a[0] - b[0]).hypot(a[1] - b[1]);
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d)
}

/// `√(1 + r²)` without overflow for large `r`.
#[inline]
fn lift(r: f64) -> f64 {
    if r > 1.0 {
        let s = 1.0 / r;
        r * (1.0 + s * s).sqrt()
    } else {
        (1.0 + r * r).sqrt()
    }
}

/// Chordal distance between finite coordinate slices of equal length.
#[inline]
pub fn chordal_finite(a: &[f64], b: &[f64]) -> f64 {
    let d = dist(a, b);
    let (ra, rb) = (norm(a), norm(b));
    if ra < 1e75 && rb < 1e75 {
        // one rounded square root keeps antipodal pairs at exactly 1
        return (d / ((1.0 + ra * ra) * (1.0 + rb * rb)).sqrt()).min(1.0);
    }
    (d / lift(ra) / lift(rb)).min(1.0)
}

/// Chordal distance from a finite point to ∞.
#[inline]
pub fn chordal_to_infinity(a: &[f64]) -> f64 {
    (1.0 / lift(norm(a))).min(1.0)
}

/// The chordal metric `q(a, b)`.
pub fn chordal_distance(a: &ExtendedPoint, b: &ExtendedPoint) -> Result<f64> {
    match (a, b) {
        (ExtendedPoint::Finite(x), ExtendedPoint::Finite(y)) => {
            if x.len() != y.len() {
                return Err(Error::DimensionMismatch {
                    expected: x.len(),
                    got: y.len(),
                });
            }
            Ok(chordal_finite(x, y))
        }
        (ExtendedPoint::Finite(x), ExtendedPoint::Infinity)
        | (ExtendedPoint::Infinity, ExtendedPoint::Finite(x)) => Ok(chordal_to_infinity(x)),
        (ExtendedPoint::Infinity, ExtendedPoint::Infinity) => Ok(0.0),
    }
}

/// Chordal distance for callers that have already checked dimensions.
#[inline]
pub(crate) fn chordal(a: &ExtendedPoint, b: &ExtendedPoint) -> f64 {
    match (a, b) {
        (ExtendedPoint::Finite(x), ExtendedPoint::Finite(y)) => chordal_finite(x, y),
        (ExtendedPoint::Finite(x), ExtendedPoint::Infinity)
        | (ExtendedPoint::Infinity, ExtendedPoint::Finite(x)) => chordal_to_infinity(x),
        (ExtendedPoint::Infinity, ExtendedPoint::Infinity) => 0.0,
    }
}

/// Maximum pairwise chordal distance.
pub fn spherical_diameter(points: &[ExtendedPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty("point set"));
    }
    let dim = points.iter().find_map(ExtendedPoint::dim);
    if let Some(d) = dim {
        if let Some(bad) = points.iter().filter_map(ExtendedPoint::dim).find(|&n| n != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad });
        }
    }
    Ok(diameter_unchecked(points))
}

pub(crate) fn diameter_unchecked(points: &[ExtendedPoint]) -> f64 {
    let mut best = 0.0_f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(chordal(a, b));
        }
    }
    best
}

/// The weighted ball `B_p(a, r) = {x : |x − a| < r·|a|^{2−p}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedBallSpec {
    center: Vec<f64>,
    radius: f64,
    exponent: f64,
}

impl WeightedBallSpec {
    pub fn new(center: Vec<f64>, radius: f64, exponent: f64) -> Result<Self> {
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("center", "must be finite"));
        }
        if norm(&center) == 0.0 {
            return Err(Error::param("center", "weighted balls need a nonzero center"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param("radius", format!("{radius} is not positive")));
        }
        if !(exponent >= 1.0 && exponent.is_finite()) {
            return Err(Error::param("p", format!("{exponent} < 1")));
        }
        let ball = WeightedBallSpec {
            center,
            radius,
            exponent,
        };
        if !(ball.effective_radius() > 0.0 && ball.effective_radius().is_finite()) {
            return Err(Error::param("radius", "effective radius underflows or overflows"));
        }
        Ok(ball)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Euclidean radius `r·|a|^{2−p}`.
    pub fn effective_radius(&self) -> f64 {
        self.radius * norm(&self.center).powf(2.0 - self.exponent)
    }

    pub fn contains(&self, x: &ExtendedPoint) -> Result<bool> {
        match x {
            ExtendedPoint::Infinity => Err(Error::param("x", "weighted balls only hold finite points")),
            ExtendedPoint::Finite(c) => {
                if c.len() != self.center.len() {
                    return Err(Error::DimensionMismatch {
                        expected: self.center.len(),
                        got: c.len(),
                    });
                }
                Ok(dist(c, &self.center) < self.effective_radius())
            }
        }
    }
}

/// Inverse stereographic projection onto the unit sphere `Sⁿ ⊂ ℝⁿ⁺¹`
/// with ∞ at the north pole. Chordal distance is half the Euclidean
/// distance of the images.
pub fn to_unit_sphere(p: &ExtendedPoint, dim: usize) -> Vec<f64> {
    match p {
        ExtendedPoint::Infinity => {
            let mut v = vec![0.0; dim + 1];
            v[dim] = 1.0;
            v
        }
        ExtendedPoint::Finite(c) => {
            let r = norm(c);
            let mut v = Vec::with_capacity(c.len() + 1);
            if r > 1.0 {
                // divide through by r² to stay finite for huge |y|
                let inv = 1.0 / r;
                let den = 1.0 + inv * inv;
                v.extend(c.iter().map(|x| 2.0 * (x * inv) * inv / den));
                v.push((1.0 - inv * inv) / den);
            } else {
                let r2 = r * r;
                v.extend(c.iter().map(|x| 2.0 * x / (1.0 + r2)));
                v.push((r2 - 1.0) / (r2 + 1.0));
            }
            v
        }
    }
}

/// Stereographic projection from the unit sphere, north pole ↦ ∞.
pub fn from_unit_sphere(xi: &[f64]) -> ExtendedPoint {
    let n = xi.len() - 1;
    let top = xi[n];
    let den = 1.0 - top;
    if den <= 0.0 {
        return ExtendedPoint::Infinity;
    }
    let coords: Vec<f64> = xi[..n].iter().map(|x| x / den).collect();
    if coords.iter().any(|c| !c.is_finite()) {
        ExtendedPoint::Infinity
    } else {
        ExtendedPoint::Finite(coords)
    }
}

const GOLDEN: f64 = 1.618_033_988_749_895;

/// Deterministic, near-uniform values on the chordal sphere.
///
/// For `dim = 2` this is a Fibonacci lattice on S² with a seeded azimuthal
/// offset; for higher dimensions a Kronecker (R_d) sequence with a seeded
/// Cranley–Patterson shift is pushed through the Gaussian quantile and
/// normalised. Both are then projected stereographically.
pub fn sample_sphere_values(dim: usize, count: usize, seed: u64) -> Result<Vec<ExtendedPoint>> {
    if dim < 2 {
        return Err(Error::param("dim", "n ≥ 2 required"));
    }
    if count == 0 {
        return Err(Error::param("count", "at least one value required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if dim == 2 {
        let offset: f64 = rng.random();
        let n = count as f64;
        return Ok((0..count)
            .map(|i| {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / n;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let phi = 2.0 * PI * ((i as f64 / GOLDEN + offset).fract());
                from_unit_sphere(&[rho * phi.cos(), rho * phi.sin(), z])
            })
            .collect());
    }
    let d = dim + 1;
    let alphas = kronecker_alphas(d);
    let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let normal = Normal::standard();
    Ok((0..count)
        .map(|i| {
            let g: Vec<f64> = (0..d)
                .map(|j| {
                    let u = (shift[j] + (i as f64 + 1.0) * alphas[j]).fract();
                    normal.inverse_cdf(u.clamp(1e-12, 1.0 - 1e-12))
                })
                .collect();
            let r = norm(&g);
            let xi: Vec<f64> = g.iter().map(|x| x / r).collect();
            from_unit_sphere(&xi)
        })
        .collect())
}

/// Generalised golden-ratio increments for the R_d sequence.
fn kronecker_alphas(d: usize) -> Vec<f64> {
    // phi_d is the unique positive root of x^{d+1} = x + 1
    let mut phi = 2.0_f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect()
}

/// One draw from the normalised chordal measure `(1+|y|²)^{−n} dm(y) / λ_n`.
pub fn sample_chordal_measure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ExtendedPoint {
    if dim == 2 {
        // radial CDF t²/(1+t²), angle uniform
        let u: f64 = rng.random();
        let t = (u / (1.0 - u)).sqrt();
        let phi = 2.0 * PI * rng.random::<f64>();
        if !t.is_finite() {
            return ExtendedPoint::Infinity;
        }
        return ExtendedPoint::Finite(vec![t * phi.cos(), t * phi.sin()]);
    }
    let g: Vec<f64> = (0..=dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let r = norm(&g);
    let xi: Vec<f64> = g.iter().map(|x| x / r).collect();
    from_unit_sphere(&xi)
}

/// `λ_n = ∫_{ℝⁿ} (1+|y|²)^{−n} dm(y) = π^{n/2} Γ(n/2) / Γ(n)`.
pub fn lambda_n(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::param("n", "n ≥ 2 required"));
    }
    let nf = n as f64;
    Ok((0.5 * nf * PI.ln() + ln_gamma(0.5 * nf) - ln_gamma(nf)).exp())
}

/// Area of the sphere `Sⁿ` of diameter one (the chordal sphere).
pub fn chordal_sphere_area(n: usize) -> f64 {
    let nf = n as f64;
    let unit = 2.0 * (0.5 * (nf + 1.0) * PI.ln() - ln_gamma(0.5 * (nf + 1.0))).exp();
    unit * 0.5_f64.powi(n as i32)
}

/// Typical chordal spacing of `count` equidistributed values on `Sⁿ`.
pub fn typical_spacing(n: usize, count: usize) -> f64 {
    (chordal_sphere_area(n) / count as f64).powf(1.0 / n as f64)
}
