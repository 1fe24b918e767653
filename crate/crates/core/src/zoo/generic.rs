//! Seeded Newton enumeration for planar meromorphic maps without an
//! analytic enumerator, validated against the argument principle.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dedup, APoint, Mapping, DEDUP_TOLERANCE};
use crate::argument::winding_count;
use crate::error::{Error, Result};
use crate::sphere::ExtendedPoint;

const SEED: u64 = 0x5eed_a901;

/// `f − a` for small `|a|`, `1/f − 1/a` otherwise (`1/f` for `a = ∞`), so the
/// target is always a simple zero of a locally holomorphic function.
fn residual(f: &Mapping, a: Option<Complex64>, z: Complex64) -> Option<Complex64> {
    let (n, d) = f.holomorphic_parts(z)?;
    let v = match a {
        None => d / n,
        Some(a) if a.norm() > 1.0 => d / n - a.inv(),
        Some(a) => n / d - a,
    };
    (v.re.is_finite() && v.im.is_finite()).then_some(v)
}

fn newton(f: &Mapping, a: Option<Complex64>, mut z: Complex64, scale: f64) -> Option<Complex64> {
    for _ in 0..80 {
        let g = residual(f, a, z)?;
        let h = 1e-7 * (1.0 + z.norm());
        let gp = residual(f, a, z + h)?;
        let gm = residual(f, a, z - h)?;
        let dg = (gp - gm) / (2.0 * h);
        if dg.norm() == 0.0 {
            return None;
        }
        let mut step = g / dg;
        if step.norm() > scale {
            step *= scale / step.norm();
        }
        z -= step;
        if step.norm() < 1e-14 * (1.0 + z.norm()) {
            break;
        }
    }
    let g = residual(f, a, z)?;
    (g.norm() < 1e-9).then_some(z)
}

pub(crate) fn newton_enumerate(
    f: &Mapping,
    a: &ExtendedPoint,
    center: &[f64],
    radius: f64,
) -> Result<Vec<APoint>> {
    let (total, _) = winding_count(f, a, center, radius)?;
    if total == 0 {
        return Ok(Vec::new());
    }
    let target = a.as_complex();
    let c = Complex64::new(center[0], center[1]);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut found: Vec<Complex64> = Vec::new();
    let mut seeds = 64 * total as usize;
    for _round in 0..6 {
        for _ in 0..seeds {
            let r = radius * rng.random::<f64>().sqrt();
            let t = std::f64::consts::TAU * rng.random::<f64>();
            let z0 = c + Complex64::from_polar(r, t);
            if let Some(z) = newton(f, target, z0, 0.1 * radius) {
                if (z - c).norm() < radius && !found.iter().any(|w| (w - z).norm() < DEDUP_TOLERANCE) {
                    found.push(z);
                }
            }
        }
        let mut pts = Vec::with_capacity(found.len());
        let mut sum = 0u64;
        for (i, &z) in found.iter().enumerate() {
            let sep = found
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, w)| (w - z).norm())
                .fold(radius - (z - c).norm(), f64::min);
            let rho = (0.4 * sep).min(1e-3);
            let (m, _) = winding_count(f, a, &[z.re, z.im], rho)?;
            sum += m;
            pts.push(APoint {
                location: vec![z.re, z.im],
                multiplicity: m as u32,
            });
        }
        if sum == total {
            return Ok(dedup(pts));
        }
        seeds *= 4;
    }
    Err(Error::NonConvergence {
        context: "a-point enumeration",
        detail: format!(
            "located {} of {total} a-points of {} in the ball",
            found.len(),
            f.label()
        ),
    })
}
