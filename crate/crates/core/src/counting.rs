//! Counting functions `n(x, r, a)`, the average counting function `A_f(r)`
//! by a value-sphere route and a domain-Jacobian route, oscillation
//! profiles and log-log growth fits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::argument::winding_count;
use crate::error::{Error, Result};
use crate::par;
use crate::sampling::{jittered_cube, per_axis_for};
use crate::sphere::{dist, from_unit_sphere, lambda_n, norm, sample_chordal_measure, to_unit_sphere, ExtendedPoint};
use crate::zoo::{enumerate_apoints, Mapping};

/// Largest chordal jitter applied to a sampled value whose count failed.
pub const MAX_JITTER: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    /// Analytic enumerator when the map has one, else the argument principle.
    Auto,
    AnalyticEnumeration,
    ArgumentPrinciple,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingSample {
    pub center: Vec<f64>,
    pub radius: f64,
    pub value: ExtendedPoint,
    pub count: u64,
    pub method: CountMethod,
    /// Smallest chordal distance from the value to the sampled boundary
    /// image; reported by the argument-principle route only.
    pub boundary_margin: Option<f64>,
}

fn check_ball(f: &Mapping, center: &[f64], radius: f64) -> Result<()> {
    if center.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: center.len(),
        });
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", format!("{radius} is not positive")));
    }
    Ok(())
}

/// Multiplicity-weighted number of solutions of `f = a` in `B(center, r)`.
pub fn count_apoints(
    f: &Mapping,
    center: &[f64],
    radius: f64,
    a: &ExtendedPoint,
    method: CountMethod,
) -> Result<CountingSample> {
    check_ball(f, center, radius)?;
    let resolved = match method {
        CountMethod::Auto if f.has_enumerator() => CountMethod::AnalyticEnumeration,
        CountMethod::Auto => CountMethod::ArgumentPrinciple,
        m => m,
    };
    let (count, margin) = match resolved {
        CountMethod::AnalyticEnumeration => {
            if !f.has_enumerator() {
                return Err(Error::NoEnumerator(f.label().to_string()));
            }
            let pts = enumerate_apoints(f, a, center, radius)?;
            (pts.iter().map(|p| p.multiplicity as u64).sum(), None)
        }
        _ => {
            if !f.is_meromorphic() {
                return Err(Error::NoEnumerator(f.label().to_string()));
            }
            let (c, m) = winding_count(f, a, center, radius)?;
            (c, Some(m))
        }
    };
    Ok(CountingSample {
        center: center.to_vec(),
        radius,
        value: a.clone(),
        count,
        method: resolved,
        boundary_margin: margin,
    })
}

/// `N(f, y, B(a, r))`: the multiplicity sum of `f⁻¹(y)` over a ball.
pub fn multiplicity_sum(f: &Mapping, y: &ExtendedPoint, a: &[f64], r: f64) -> Result<u64> {
    Ok(count_apoints(f, a, r, y, CountMethod::Auto)?.count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AfrMethod {
    SphereIntegral,
    DomainIntegral,
}

/// Samples of `A_f(r)` (or `A_f(x, r)` about `center`) over a radius grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AfrCurve {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub method: AfrMethod,
    pub samples: usize,
    pub seed: u64,
    /// Sphere route: values whose count needed a jitter.
    pub jittered: usize,
    pub fit: Option<GrowthFit>,
}

impl AfrCurve {
    /// Attach a growth fit when the grid allows one.
    pub fn with_fit(mut self) -> Self {
        self.fit = growth_fit(&self).ok();
        self
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::Empty("radius grid"));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::param("radii", "radii must be positive"));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("radii", "radii must be strictly increasing"));
    }
    Ok(())
}

/// Mean and standard error of the mean.
fn mean_se(xs: impl Iterator<Item = f64> + Clone, count: usize) -> (f64, f64) {
    let n = count as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if count < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Move `y` by at most [`MAX_JITTER`] chordally.
fn jitter(y: &ExtendedPoint, n: usize, rng: &mut ChaCha8Rng) -> ExtendedPoint {
    use rand::Rng;
    let mut xi = to_unit_sphere(y, n);
    let step: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s = norm(&step).max(f64::MIN_POSITIVE);
    // chordal distance is half the unit-sphere distance
    for (x, t) in xi.iter_mut().zip(&step) {
        *x += 1.8 * MAX_JITTER * t / s;
    }
    let r = norm(&xi);
    xi.iter_mut().for_each(|x| *x /= r);
    from_unit_sphere(&xi)
}

/// Counts `n(center, r, y)` for every `r` in the grid at once.
fn counts_for_value(f: &Mapping, center: &[f64], radii: &[f64], y: &ExtendedPoint) -> Result<Vec<u64>> {
    let rmax = *radii.last().unwrap();
    if f.has_enumerator() {
        let pts = enumerate_apoints(f, y, center, rmax)?;
        Ok(radii
            .iter()
            .map(|&r| {
                pts.iter()
                    .filter(|p| dist(&p.location, center) < r)
                    .map(|p| p.multiplicity as u64)
                    .sum()
            })
            .collect())
    } else {
        radii.iter().map(|&r| Ok(winding_count(f, y, center, r)?.0)).collect()
    }
}

/// Value-sphere Monte Carlo for `A_f(r)` over a radius grid.
///
/// Values are drawn from the normalised chordal measure, so each estimate
/// is a plain average of counts. The same values serve every radius, which
/// keeps the curve non-decreasing. A value whose count fails is jittered by
/// at most [`MAX_JITTER`] (up to four times) and reported in `jittered`.
pub fn afr_sphere_curve(f: &Mapping, radii: &[f64], samples: usize, seed: u64) -> Result<AfrCurve> {
    check_radii(radii)?;
    if samples == 0 {
        return Err(Error::param("samples", "at least one sample required"));
    }
    if !f.has_enumerator() && !f.is_meromorphic() {
        return Err(Error::NoEnumerator(f.label().to_string()));
    }
    let n = f.dim();
    let center = vec![0.0; n];
    let rows = par::map_indexed(samples, |i| -> Result<(Vec<u64>, bool)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let y = sample_chordal_measure(n, &mut rng);
        let mut attempt = y.clone();
        let mut last = None;
        for k in 0..5 {
            match counts_for_value(f, &center, radii, &attempt) {
                Ok(c) => return Ok((c, k > 0)),
                Err(e @ (Error::MarginViolation { .. } | Error::NonConvergence { .. })) => last = Some(e),
                Err(e) => return Err(e),
            }
            attempt = jitter(&y, n, &mut rng);
        }
        Err(last.unwrap())
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(radii.len());
    let mut std_errors = Vec::with_capacity(radii.len());
    for j in 0..radii.len() {
        let (m, se) = mean_se(rows.iter().map(|r| r.0[j] as f64), samples);
        values.push(m);
        std_errors.push(se);
    }
    Ok(AfrCurve {
        center,
        radii: radii.to_vec(),
        values,
        std_errors,
        method: AfrMethod::SphereIntegral,
        samples,
        seed,
        jittered: rows.iter().filter(|r| r.1).count(),
        fit: None,
    })
}

/// Single-radius form of [`afr_sphere_curve`].
pub fn afr_sphere(f: &Mapping, r: f64, samples: usize, seed: u64) -> Result<AfrEstimate> {
    AfrEstimate::from_curve(afr_sphere_curve(f, &[r], samples, seed)?)
}

/// One `A_f` value with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AfrEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub method: AfrMethod,
}

impl AfrEstimate {
    fn from_curve(c: AfrCurve) -> Result<Self> {
        Ok(AfrEstimate {
            value: c.values[0],
            std_error: c.std_errors[0],
            samples: c.samples,
            method: c.method,
        })
    }
}

/// Domain route: `(1/λ_n) ∫_{B(x,r)} J(y,f) / (1+|f(y)|²)ⁿ dm(y)` by
/// stratified jittered sampling, nested over the radius grid.
///
/// Each radius gets its own stratification of about `samples` points, and
/// the annulus between it and the previous radius is integrated on that
/// raster. Annulus terms are non-negative, so the curve is non-decreasing.
/// The standard error is the i.i.d. bound.
pub fn afr_domain_curve(
    f: &Mapping,
    center: &[f64],
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<AfrCurve> {
    check_radii(radii)?;
    check_ball(f, center, radii[0])?;
    if samples == 0 {
        return Err(Error::param("samples", "at least one sample required"));
    }
    if !f.has_jacobian() {
        return Err(Error::NoJacobian(f.label().to_string()));
    }
    let n = f.dim();
    let lambda = lambda_n(n)?;
    let mut values = Vec::with_capacity(radii.len());
    let mut std_errors = Vec::with_capacity(radii.len());
    let (mut acc, mut var) = (0.0, 0.0);
    for (j, &r) in radii.iter().enumerate() {
        let inner = if j == 0 { 0.0 } else { radii[j - 1] };
        let per_axis = per_axis_for(n, samples);
        let cell = (2.0 * r / per_axis as f64).powi(n as i32);
        let mut pts: Vec<Vec<f64>> = Vec::new();
        jittered_cube(center, r, per_axis, seed ^ (j as u64).wrapping_mul(0x2545_f491), |x| {
            let d = dist(x, center);
            if d < r && d >= inner {
                pts.push(x.to_vec());
            }
        });
        let dens = par::map_indexed(pts.len(), |i| f.chordal_density(&pts[i]));
        let mut sum = 0.0;
        let mut sq = 0.0;
        for (i, d) in dens.into_iter().enumerate() {
            let d = d.ok_or_else(|| Error::NoJacobian(f.label().to_string()))?;
            if !d.is_finite() {
                return Err(Error::Evaluation {
                    at: pts[i].clone(),
                    detail: "non-finite chordal density".into(),
                });
            }
            sum += d;
            sq += d * d;
        }
        let k = pts.len() as f64;
        acc += sum * cell / lambda;
        if k > 1.0 {
            let mean = sum / k;
            let v = (sq / k - mean * mean).max(0.0) * k / (k - 1.0);
            var += v * (k * cell / lambda).powi(2) / k;
        }
        values.push(acc);
        std_errors.push(var.sqrt());
    }
    Ok(AfrCurve {
        center: center.to_vec(),
        radii: radii.to_vec(),
        values,
        std_errors,
        method: AfrMethod::DomainIntegral,
        samples,
        seed,
        jittered: 0,
        fit: None,
    })
}

/// `A_f(r)` by the domain route about the origin.
pub fn afr_domain(f: &Mapping, r: f64, samples: usize, seed: u64) -> Result<AfrEstimate> {
    let c = vec![0.0; f.dim()];
    AfrEstimate::from_curve(afr_domain_curve(f, &c, &[r], samples, seed)?)
}

/// Localised `A_f(x, r)` by the domain route.
pub fn afr_local(f: &Mapping, x: &[f64], r: f64, samples: usize, seed: u64) -> Result<AfrEstimate> {
    AfrEstimate::from_curve(afr_domain_curve(f, x, &[r], samples, seed)?)
}

/// Dyadic grid `r₀, 2r₀, …` with `count` entries.
pub fn dyadic_radii(r0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| r0 * 2f64.powi(i as i32)).collect()
}

/// `log A ≈ log C + s·log r` over the upper half of the radius grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Root-mean-square residual in `log A`.
    pub residual: f64,
    pub radii_used: Vec<f64>,
}

pub fn growth_fit(curve: &AfrCurve) -> Result<GrowthFit> {
    let r = &curve.radii;
    if r.len() < 5 {
        return Err(Error::param("radii", format!("{} radii given, at least 5 needed", r.len())));
    }
    if r[r.len() - 1] < 8.0 * r[0] {
        return Err(Error::param("radii", "the grid must span a factor of at least 8"));
    }
    let half = r.len() / 2;
    let used: Vec<(f64, f64)> = r[half..]
        .iter()
        .zip(&curve.values[half..])
        .filter(|(_, a)| **a > 0.0 && a.is_finite())
        .map(|(r, a)| (*r, *a))
        .collect();
    let pts: Vec<(f64, f64)> = used.iter().map(|(r, a)| (r.ln(), a.ln())).collect();
    if pts.len() < 3 {
        return Err(Error::Degenerate(format!(
            "{} usable (positive) points in the upper half of the grid, at least 3 needed",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let s = sxy / sxx;
    let c = my - s * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - c - s * p.0).powi(2)).sum();
    Ok(GrowthFit {
        exponent: s,
        prefactor: c.exp(),
        residual: (rss / k).sqrt(),
        radii_used: used.iter().map(|p| p.0).collect(),
    })
}

/// Sample pattern of `B̄(0, 1)`: the centre plus boundary and half-radius
/// shells along a fixed direction set.
fn unit_pattern(n: usize) -> Vec<Vec<f64>> {
    let dirs: Vec<Vec<f64>> = if n == 2 {
        (0..32)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 32.0;
                vec![t.cos(), t.sin()]
            })
            .collect()
    } else {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(0x05c1_11a7);
        (0..64)
            .map(|_| {
                let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let s = norm(&g);
                g.into_iter().map(|t| t / s).collect()
            })
            .collect()
    };
    let mut out = vec![vec![0.0; n]];
    for shell in [1.0, 0.5] {
        out.extend(dirs.iter().map(|d| d.iter().map(|t| t * shell).collect()));
    }
    out
}

fn diameter_embedded(pts: &[Vec<f64>]) -> f64 {
    let mut best: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            best = best.max(d2);
        }
    }
    // chordal distance is half the unit-sphere distance
    (0.5 * best.sqrt()).min(1.0)
}

/// Sampled chordal diameters of `f(B̄(x, r))` for ascending radii; the
/// samples for a radius include those of every smaller one, so the values
/// are non-decreasing in `r`.
fn nested_diameters(f: &Mapping, x: &[f64], radii: &[f64], pattern: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let mut images: Vec<Vec<f64>> = Vec::new();
    radii
        .iter()
        .map(|&r| {
            for u in pattern {
                let z: Vec<f64> = x.iter().zip(u).map(|(a, t)| a + r * t).collect();
                let im = to_unit_sphere(&f.eval_unchecked(&z), n);
                if im.iter().all(|t| t.is_finite()) {
                    images.push(im);
                }
            }
            diameter_embedded(&images)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationProfile {
    pub radii: Vec<f64>,
    /// Per radius, sup over the grid of the sampled chordal diameter.
    pub sup: Vec<f64>,
    pub witness: Vec<Vec<f64>>,
}

fn check_grid(f: &Mapping, grid: &[Vec<f64>]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Empty("grid"));
    }
    if let Some(x) = grid.iter().find(|x| x.len() != f.dim()) {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// `sup_x diam_q f(B̄(x, r))` over `grid`, for each radius.
pub fn oscillation_profile(f: &Mapping, radii: &[f64], grid: &[Vec<f64>]) -> Result<OscillationProfile> {
    check_grid(f, grid)?;
    if radii.is_empty() || radii.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(Error::param("radii", "radii must be finite and non-negative"));
    }
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|a, b| radii[*a].total_cmp(&radii[*b]));
    let sorted: Vec<f64> = order.iter().map(|&i| radii[i]).collect();
    let pattern = unit_pattern(f.dim());
    let per_point = par::map_indexed(grid.len(), |g| nested_diameters(f, &grid[g], &sorted, &pattern));
    let mut sup = vec![0.0; sorted.len()];
    let mut witness = vec![grid[0].clone(); sorted.len()];
    for (g, ds) in per_point.iter().enumerate() {
        for (j, &d) in ds.iter().enumerate() {
            if d > sup[j] {
                sup[j] = d;
                witness[j] = grid[g].clone();
            }
        }
    }
    Ok(OscillationProfile {
        radii: sorted,
        sup,
        witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinOscillation {
    pub radius: f64,
    pub inf: f64,
    pub witness: Vec<f64>,
}

/// `inf_x diam_q f(B̄(x, r))` over `grid`.
pub fn min_oscillation(f: &Mapping, r: f64, grid: &[Vec<f64>]) -> Result<MinOscillation> {
    check_grid(f, grid)?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::param("radius", "must be finite and non-negative"));
    }
    let pattern = unit_pattern(f.dim());
    let ds = par::map_indexed(grid.len(), |g| nested_diameters(f, &grid[g], &[r], &pattern)[0]);
    let (i, inf) = ds
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, d)| if d < acc.1 { (i, d) } else { acc });
    Ok(MinOscillation {
        radius: r,
        inf,
        witness: grid[i].clone(),
    })
}

/// Sweep of `N(f, y, B(a, r))` over random pairs: `a` uniform in the box
/// `[−half, half]ⁿ`, `y` from the chordal measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicitySweep {
    pub radius: f64,
    pub samples: usize,
    pub max: u64,
    pub argmax: (Vec<f64>, ExtendedPoint),
    /// `histogram[k]` = number of pairs with sum `k`.
    pub histogram: Vec<usize>,
}

pub fn multiplicity_sweep(f: &Mapping, r: f64, half: f64, samples: usize, seed: u64) -> Result<MultiplicitySweep> {
    use rand::Rng;
    if samples == 0 {
        return Err(Error::param("samples", "at least one sample required"));
    }
    if !(half > 0.0 && half.is_finite()) {
        return Err(Error::param("half", "box half-width must be positive"));
    }
    let n = f.dim();
    let rows = par::map_indexed(samples, |i| -> Result<(u64, Vec<f64>, ExtendedPoint)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-half..half)).collect();
        let y = sample_chordal_measure(n, &mut rng);
        let mut attempt = y.clone();
        for _ in 0..5 {
            match multiplicity_sum(f, &attempt, &a, r) {
                Ok(c) => return Ok((c, a, attempt)),
                Err(Error::MarginViolation { .. }) => attempt = jitter(&y, n, &mut rng),
                Err(e) => return Err(e),
            }
        }
        Ok((multiplicity_sum(f, &attempt, &a, r)?, a, attempt))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.0 > rows[best].0 {
            best = i;
        }
    }
    let max = rows[best].0;
    let mut histogram = vec![0usize; max as usize + 1];
    for r in &rows {
        histogram[r.0 as usize] += 1;
    }
    Ok(MultiplicitySweep {
        radius: r,
        samples,
        max,
        argmax: (rows[best].1.clone(), rows[best].2.clone()),
        histogram,
    })
}
