//! Argument-principle counting for planar meromorphic mappings.
//!
//! With `f = N/D` (see [`crate::zoo::MapKernel::holomorphic_parts`]), the
//! number of solutions of `f = a` inside a disc, counted with multiplicity,
//! is the winding number of `N − aD` (of `D` when `a = ∞`) along the circle.
//! The winding is tracked by adaptive bisection of the circle until every
//! arc turns by less than π/4.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sphere::ExtendedPoint;
use crate::zoo::Mapping;

/// Minimum chordal distance between the target value and the boundary image.
pub const BOUNDARY_MARGIN: f64 = 1e-6;

const MAX_DEPTH: u32 = 40;
const INITIAL_ARCS: usize = 64;

#[derive(Debug, Clone, Copy)]
enum Target {
    Finite(Complex64),
    Infinity,
}

impl Target {
    fn of(a: &ExtendedPoint) -> Result<Self> {
        match a {
            ExtendedPoint::Infinity => Ok(Target::Infinity),
            ExtendedPoint::Finite(v) if v.len() == 2 => Ok(Target::Finite(Complex64::new(v[0], v[1]))),
            ExtendedPoint::Finite(v) => Err(Error::DimensionMismatch {
                expected: 2,
                got: v.len(),
            }),
        }
    }

    /// The holomorphic function whose zeros are the solutions, and the
    /// homogeneous chordal distance of `[N : D]` to the target.
    #[inline]
    fn residual(self, n: Complex64, d: Complex64) -> (Complex64, f64) {
        let h = (n.norm_sqr() + d.norm_sqr()).sqrt();
        match self {
            Target::Infinity => (d, d.norm() / h),
            Target::Finite(a) => {
                let s = (1.0 + a.norm_sqr()).sqrt();
                // divide by the larger of 1, |a| to keep magnitudes tame
                let g = if a.norm() > 1.0 { n / a - d } else { n - d * a };
                (g, (n - d * a).norm() / (h * s))
            }
        }
    }
}

struct Tracker<'a> {
    f: &'a Mapping,
    target: Target,
    center: Complex64,
    radius: f64,
    min_margin: f64,
}

impl Tracker<'_> {
    fn sample(&mut self, t: f64) -> Result<Complex64> {
        let z = self.center + Complex64::from_polar(self.radius, t);
        let (n, d) = self.f.holomorphic_parts(z).ok_or_else(|| Error::NoEnumerator(self.f.label().to_string()))?;
        let (g, margin) = self.target.residual(n, d);
        if !(margin.is_finite() && g.re.is_finite() && g.im.is_finite()) {
            return Err(Error::Evaluation {
                at: vec![z.re, z.im],
                detail: "non-finite holomorphic parts".into(),
            });
        }
        self.min_margin = self.min_margin.min(margin);
        if margin < BOUNDARY_MARGIN {
            return Err(Error::MarginViolation {
                margin: BOUNDARY_MARGIN,
                distance: margin,
            });
        }
        Ok(g)
    }

    fn arc(&mut self, t0: f64, g0: Complex64, t1: f64, g1: Complex64, depth: u32) -> Result<f64> {
        let tm = 0.5 * (t0 + t1);
        let gm = self.sample(tm)?;
        let d1 = (gm / g0).arg();
        let d2 = (g1 / gm).arg();
        let whole = (g1 / g0).arg();
        let consistent = {
            let s = d1 + d2 - whole;
            (s - TAU * (s / TAU).round()).abs() < 1e-9
        };
        if d1.abs() < PI / 4.0 && d2.abs() < PI / 4.0 && consistent && depth > 0 {
            return Ok(d1 + d2);
        }
        if depth >= MAX_DEPTH {
            return Err(Error::NonConvergence {
                context: "argument principle",
                detail: format!("phase tracking did not resolve near angle {tm}"),
            });
        }
        Ok(self.arc(t0, g0, tm, gm, depth + 1)? + self.arc(tm, gm, t1, g1, depth + 1)?)
    }
}

/// Winding count of solutions of `f = a` in the open disc `B(center, radius)`.
///
/// Returns the count and the smallest chordal margin seen on the boundary.
pub fn winding_count(f: &Mapping, a: &ExtendedPoint, center: &[f64], radius: f64) -> Result<(u64, f64)> {
    if !f.is_meromorphic() {
        return Err(Error::NoEnumerator(format!(
            "{} (argument principle needs a planar meromorphic map)",
            f.label()
        )));
    }
    if center.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: center.len(),
        });
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", "must be positive"));
    }
    let mut tr = Tracker {
        f,
        target: Target::of(a)?,
        center: Complex64::new(center[0], center[1]),
        radius,
        min_margin: f64::INFINITY,
    };
    let mut total = 0.0;
    let ts: Vec<f64> = (0..=INITIAL_ARCS).map(|k| TAU * k as f64 / INITIAL_ARCS as f64).collect();
    let mut prev = tr.sample(ts[0])?;
    let first = prev;
    for k in 1..=INITIAL_ARCS {
        let g = if k == INITIAL_ARCS { first } else { tr.sample(ts[k])? };
        total += tr.arc(ts[k - 1], prev, ts[k], g, 1)?;
        prev = g;
    }
    let w = total / TAU;
    let rounded = w.round();
    if (w - rounded).abs() > 1e-3 || rounded < 0.0 {
        return Err(Error::NonConvergence {
            context: "argument principle",
            detail: format!("winding {w} is not a non-negative integer"),
        });
    }
    Ok((rounded as u64, tr.min_margin))
}
