//! Finite-scale M_p and μ_p detectors on weighted balls `B_p(x_m, r)`.

use std::collections::HashMap;

use serde::Serialize;

use super::{dp_prefix, PointSequence, Trend};
use crate::error::{Error, Result};
use crate::par;
use crate::sampling::ball_samples;
use crate::sphere::{chordal, dist, norm, sample_sphere_values, to_unit_sphere, typical_spacing, ExtendedPoint};
use crate::zoo::{neighbour_offsets, Mapping};

/// Adaptive raster of `f` over `B(center, radius)`.
///
/// Starts from a grid of about `cells` cubes covering the ball; a cube is
/// split in 2ⁿ while the unit-sphere images of its corners spread wider
/// than `spread` and the budget allows. Every evaluated point inside the
/// ball is passed to `mark` as its unit-sphere image. Returns the number
/// of evaluations and whether the budget ran out.
fn rasterize(
    f: &Mapping,
    center: &[f64],
    radius: f64,
    cells: usize,
    spread: f64,
    budget: usize,
    mark: &mut dyn FnMut(&[f64]),
) -> (usize, bool) {
    let n = center.len();
    let per_axis = ((cells as f64).powf(1.0 / n as f64).ceil() as usize).max(1);
    let h0 = 2.0 * radius / per_axis as f64;
    let corners: Vec<Vec<f64>> = (0..1usize << n)
        .map(|b| (0..n).map(|i| if b >> i & 1 == 1 { 0.5 } else { -0.5 }).collect())
        .collect();
    // (cell centre, width), depth-first
    let mut stack: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let c: Vec<f64> = (0..n).map(|i| center[i] - radius + h0 * (idx[i] as f64 + 0.5)).collect();
        stack.push((c, h0));
        let mut d = 0;
        while d < n {
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == n {
            break;
        }
    }
    let mut evals = 0;
    let mut saturated = false;
    while let Some((c, w)) = stack.pop() {
        // nearest point of the cube to the ball centre
        let gap: f64 = c
            .iter()
            .zip(center)
            .map(|(a, b)| ((a - b).abs() - 0.5 * w).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt();
        if gap >= radius {
            continue;
        }
        let mut images = Vec::with_capacity(corners.len() + 1);
        for off in corners.iter().map(Some).chain([None]) {
            let z: Vec<f64> = match off {
                Some(o) => c.iter().zip(o).map(|(a, t)| a + t * w).collect(),
                None => c.clone(),
            };
            let im = to_unit_sphere(&f.eval_unchecked(&z), n);
            evals += 1;
            if im.iter().any(|t| t.is_nan()) {
                continue;
            }
            if dist(&z, center) < radius {
                mark(&im);
            }
            images.push(im);
        }
        let wide = images
            .iter()
            .enumerate()
            .any(|(i, a)| images[i + 1..].iter().any(|b| euclid(a, b) > spread));
        if wide {
            if evals >= budget {
                saturated = true;
                continue;
            }
            for o in &corners {
                stack.push((c.iter().zip(o).map(|(a, t)| a + 0.5 * t * w).collect(), 0.5 * w));
            }
        }
    }
    (evals, saturated)
}

/// Euclidean spatial hash over points of the unit sphere `Sⁿ ⊂ ℝⁿ⁺¹`.
struct SphereHash {
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
    offsets: Vec<Vec<i64>>,
}

impl SphereHash {
    fn new(points: &[Vec<f64>], cell: f64) -> Self {
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i);
        }
        SphereHash {
            cell,
            cells,
            offsets: neighbour_offsets(points.first().map_or(0, Vec::len)),
        }
    }

    fn key(p: &[f64], cell: f64) -> Vec<i64> {
        p.iter().map(|x| (x / cell).floor() as i64).collect()
    }

    /// Calls `visit` with every stored index possibly within `cell` of `p`.
    fn near(&self, p: &[f64], mut visit: impl FnMut(usize)) {
        let k = Self::key(p, self.cell);
        let mut probe = k.clone();
        for o in &self.offsets {
            for ((t, a), b) in probe.iter_mut().zip(&k).zip(o) {
                *t = a + b;
            }
            if let Some(ids) = self.cells.get(probe.as_slice()) {
                ids.iter().copied().for_each(&mut visit);
            }
        }
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A group of exceptional values of chordal diameter at most the bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueCluster {
    pub representative: ExtendedPoint,
    pub size: usize,
    pub diameter: f64,
}

/// Greedy cover of `values` (given with their unit-sphere images) by groups
/// of chordal diameter ≤ `bound`: each group collects the remaining values
/// within `bound/2` of its first member.
fn greedy_clusters(values: &[ExtendedPoint], embedded: &[Vec<f64>], bound: f64) -> Vec<ValueCluster> {
    let mut assigned = vec![false; values.len()];
    let mut out = Vec::new();
    for i in 0..values.len() {
        if assigned[i] {
            continue;
        }
        // unit-sphere distance is twice the chordal one
        let members: Vec<usize> = (i..values.len())
            .filter(|&j| !assigned[j] && euclid(&embedded[i], &embedded[j]) <= bound)
            .collect();
        for &j in &members {
            assigned[j] = true;
        }
        let mut diameter: f64 = 0.0;
        for (a, &x) in members.iter().enumerate() {
            for &y in &members[a + 1..] {
                diameter = diameter.max(chordal(&values[x], &values[y]));
            }
        }
        out.push(ValueCluster {
            representative: values[i].clone(),
            size: members.len(),
            diameter,
        });
    }
    out
}

fn check_common(f: &Mapping, x: &PointSequence, p: f64, l: usize) -> Result<()> {
    if x.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: x.dim(),
        });
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("{p} < 1")));
    }
    if l == 0 {
        return Err(Error::param("l", "at least one exceptional value is allowed"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpOptions {
    pub eps_cover: f64,
    pub eps_cluster: f64,
    /// Points per ball in the seeding cloud.
    pub cloud: usize,
    /// Local searches per (value, ball).
    pub starts: usize,
    /// Objective evaluations per local search.
    pub max_evals: usize,
    pub seed: u64,
}

impl Default for MpOptions {
    fn default() -> Self {
        MpOptions {
            eps_cover: 1e-2,
            eps_cluster: 0.1,
            cloud: 4096,
            starts: 16,
            max_evals: 400,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MpVerdict {
    #[serde(rename = "M_p-evidence")]
    MpEvidence,
    #[serde(rename = "not M_p at this resolution")]
    NotMp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueEvidence {
    pub value: ExtendedPoint,
    /// Found on every late ball.
    pub covered: bool,
    /// Largest over late balls of the best `q(f(x′), c)` reached.
    pub worst_distance: f64,
    /// Late balls where the local searches ran out of budget.
    pub exhausted: usize,
    /// `d_p` between the late centers and the companions found.
    pub companion_dp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpReport {
    pub p: f64,
    pub delta: f64,
    pub l: usize,
    pub late_indices: Vec<usize>,
    /// Fraction of values found, per late ball.
    pub ball_coverage: Vec<f64>,
    pub coverage_trend: Trend,
    pub failing: usize,
    pub clusters: Vec<ValueCluster>,
    pub within_l: bool,
    pub within_l_plus_one: bool,
    pub max_companion_dp: Option<f64>,
    pub values: Vec<ValueEvidence>,
    pub verdict: MpVerdict,
    pub options: MpOptions,
}

/// Coordinate descent of `x ↦ q(f(x), c)` inside `B(center, radius)` with
/// step halving. Returns the best point, its value and whether the budget
/// ran out before reaching `goal` or stalling.
fn descend(
    f: &Mapping,
    c: &ExtendedPoint,
    center: &[f64],
    radius: f64,
    start: &[f64],
    h0: f64,
    goal: f64,
    budget: usize,
) -> (Vec<f64>, f64, bool) {
    let phi = |x: &[f64]| {
        let v = chordal(&f.eval_unchecked(x), c);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut x = start.to_vec();
    let mut best = phi(&x);
    let mut h = h0;
    let mut evals = 1;
    let floor = radius * 1e-10;
    while best > goal && h > floor {
        if evals >= budget {
            return (x, best, true);
        }
        let mut moved = false;
        for i in 0..x.len() {
            for s in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += s * h;
                if dist(&y, center) >= radius {
                    continue;
                }
                let v = phi(&y);
                evals += 1;
                if v < best {
                    best = v;
                    x = y;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    (x, best, false)
}

/// Searches each late ball `B_p(x_m, δ)` for points where `f` comes within
/// `ε_cover` of each of `V` sphere values; the values missed somewhere are
/// grouped into clusters of diameter ≤ `ε_cluster`, and the verdict is
/// M_p-evidence when at most `l` clusters remain.
pub fn mp_detect(
    f: &Mapping,
    x: &PointSequence,
    p: f64,
    delta: f64,
    grid_size: usize,
    l: usize,
    opts: &MpOptions,
) -> Result<MpReport> {
    check_common(f, x, p, l)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", format!("{delta} is not positive")));
    }
    if !(opts.eps_cover > 0.0 && opts.eps_cluster > 0.0) || opts.cloud == 0 || opts.starts == 0 {
        return Err(Error::param("options", "tolerances and sizes must be positive"));
    }
    let n = f.dim();
    let values = sample_sphere_values(n, grid_size, opts.seed)?;
    let embedded: Vec<Vec<f64>> = values.iter().map(|v| to_unit_sphere(v, n)).collect();
    let late: Vec<usize> = (x.late_start()..x.truncation()).collect();

    struct Ball {
        center: Vec<f64>,
        radius: f64,
        cloud: Vec<Vec<f64>>,
        images: Vec<Vec<f64>>,
    }
    let balls: Vec<Ball> = late
        .iter()
        .map(|&m| {
            let center = x.points()[m].clone();
            let radius = delta * norm(&center).powf(2.0 - p);
            let cloud = ball_samples(&center, radius, opts.cloud, opts.seed ^ (m as u64).wrapping_mul(0x9e37_79b9));
            let images = cloud.iter().map(|z| to_unit_sphere(&f.eval_unchecked(z), n)).collect();
            Ball {
                center,
                radius,
                cloud,
                images,
            }
        })
        .collect();

    // per value, per ball: (companion, distance, exhausted)
    let results = par::map_indexed(values.len(), |vi| {
        let c = &values[vi];
        let xi = &embedded[vi];
        balls
            .iter()
            .map(|b| {
                let mut order: Vec<(f64, usize)> = b
                    .images
                    .iter()
                    .enumerate()
                    .map(|(i, im)| {
                        let d = 0.5 * euclid(im, xi);
                        (if d.is_nan() { f64::INFINITY } else { d }, i)
                    })
                    .collect();
                let k = opts.starts.min(order.len());
                order.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                order[..k].sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let (d0, i0) = order[0];
                if d0 <= opts.eps_cover {
                    return (b.cloud[i0].clone(), d0, false);
                }
                let h0 = b.radius / (b.cloud.len() as f64).powf(1.0 / n as f64);
                let mut best = (b.cloud[i0].clone(), d0, false);
                let mut exhausted = false;
                for &(_, i) in &order[..k] {
                    let (z, v, out) =
                        descend(f, c, &b.center, b.radius, &b.cloud[i], h0, opts.eps_cover, opts.max_evals);
                    exhausted |= out;
                    if v < best.1 {
                        best = (z, v, false);
                    }
                    if best.1 <= opts.eps_cover {
                        return best;
                    }
                }
                best.2 = exhausted;
                best
            })
            .collect::<Vec<_>>()
    });

    let late_centers: Vec<Vec<f64>> = balls.iter().map(|b| b.center.clone()).collect();
    let mut evidence = Vec::with_capacity(values.len());
    let mut failing_idx = Vec::new();
    for (vi, per_ball) in results.iter().enumerate() {
        let covered = per_ball.iter().all(|r| r.1 <= opts.eps_cover);
        let companion_dp = covered.then(|| {
            let comp: Vec<Vec<f64>> = per_ball.iter().map(|r| r.0.clone()).collect();
            let a = dp_prefix(&late_centers, &comp, p).last().unwrap().value;
            let b = dp_prefix(&comp, &late_centers, p).last().unwrap().value;
            a.min(b)
        });
        if !covered {
            failing_idx.push(vi);
        }
        evidence.push(ValueEvidence {
            value: values[vi].clone(),
            covered,
            worst_distance: per_ball.iter().map(|r| r.1).fold(0.0, f64::max),
            exhausted: per_ball.iter().filter(|r| r.2).count(),
            companion_dp,
        });
    }
    let ball_coverage: Vec<f64> = (0..balls.len())
        .map(|bi| results.iter().filter(|r| r[bi].1 <= opts.eps_cover).count() as f64 / values.len() as f64)
        .collect();
    let fail_vals: Vec<ExtendedPoint> = failing_idx.iter().map(|&i| values[i].clone()).collect();
    let fail_emb: Vec<Vec<f64>> = failing_idx.iter().map(|&i| embedded[i].clone()).collect();
    let clusters = greedy_clusters(&fail_vals, &fail_emb, opts.eps_cluster);
    let within_l = clusters.len() <= l;
    Ok(MpReport {
        p,
        delta,
        l,
        late_indices: late.iter().map(|m| m + 1).collect(),
        coverage_trend: Trend::of(&ball_coverage),
        ball_coverage,
        failing: failing_idx.len(),
        within_l_plus_one: clusters.len() <= l + 1,
        within_l,
        clusters,
        max_companion_dp: evidence.iter().filter_map(|e| e.companion_dp).reduce(f64::max),
        values: evidence,
        verdict: if within_l {
            MpVerdict::MpEvidence
        } else {
            MpVerdict::NotMp
        },
        options: opts.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverOptions {
    /// Cells of the initial raster per ball.
    pub samples: usize,
    /// Evaluation budget per ball for adaptive refinement.
    pub max_evaluations: usize,
    /// Size of the value grid on the sphere.
    pub grid_values: usize,
    pub eps_cluster: f64,
    /// Cluster diameter bound `L_m` per late ball; constant `eps_cluster`
    /// when absent.
    pub diameter_bounds: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions {
            samples: 20_000,
            max_evaluations: 4_000_000,
            grid_values: 500,
            eps_cluster: 0.1,
            diameter_bounds: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MuPVerdict {
    #[serde(rename = "mu_p-evidence")]
    MuPEvidence,
    #[serde(rename = "no mu_p-evidence")]
    NoMuP,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallCoverage {
    pub index: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub covered_fraction: f64,
    pub evaluations: usize,
    /// The refinement budget ran out before every cell image shrank
    /// below the cover radius.
    pub saturated: bool,
    pub diameter_bound: f64,
    pub clusters: Vec<ValueCluster>,
    pub within_l: bool,
    pub within_l_plus_one: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub p: f64,
    pub l: usize,
    pub radii: Vec<f64>,
    pub cover_radius: f64,
    pub balls: Vec<BallCoverage>,
    pub uncovered_trend: Trend,
    pub verdict: MuPVerdict,
    pub verdict_l_plus_one: MuPVerdict,
    pub options: CoverOptions,
}

/// Rasterizes `f(B_p(x_m, r_m))` onto a sphere grid for the late balls and
/// groups the uncovered grid values into clusters of diameter ≤ `L_m`.
///
/// `radii` is a single constant `r` or one `r_m` per sequence point,
/// nonincreasing. A grid value counts as covered when a raster image lies
/// within one grid spacing of it; the raster refines until neighbouring
/// images are that close.
pub fn mu_p_cover_check(
    f: &Mapping,
    x: &PointSequence,
    p: f64,
    radii: &[f64],
    l: usize,
    opts: &CoverOptions,
) -> Result<CoverageReport> {
    check_common(f, x, p, l)?;
    if radii.is_empty() || (radii.len() != 1 && radii.len() != x.truncation()) {
        return Err(Error::param("radii", "give one radius or one per sequence point"));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::param("radii", "radii must be positive"));
    }
    if radii.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::param("radii", "radius schedule must be nonincreasing"));
    }
    let n = f.dim();
    let spacing = typical_spacing(n, opts.grid_values);
    if spacing > opts.eps_cluster {
        return Err(Error::param(
            "grid_values",
            format!(
                "grid spacing {spacing:.4} exceeds eps_cluster {}; use more values",
                opts.eps_cluster
            ),
        ));
    }
    let late: Vec<usize> = (x.late_start()..x.truncation()).collect();
    if let Some(b) = &opts.diameter_bounds {
        if b.len() != late.len() || b.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::param(
                "diameter_bounds",
                format!("need {} positive bounds, one per late ball", late.len()),
            ));
        }
    }
    let values = sample_sphere_values(n, opts.grid_values, opts.seed)?;
    let embedded: Vec<Vec<f64>> = values.iter().map(|v| to_unit_sphere(v, n)).collect();
    // chordal ρ is Euclidean 2ρ on the unit sphere
    let hash = SphereHash::new(&embedded, 2.0 * spacing);

    let balls = par::map_indexed(late.len(), |li| {
        let m = late[li];
        let center = x.points()[m].clone();
        let r = if radii.len() == 1 { radii[0] } else { radii[m] };
        let radius = r * norm(&center).powf(2.0 - p);
        let mut covered = vec![false; values.len()];
        let mut mark = |im: &[f64]| {
            hash.near(im, |j| {
                if !covered[j] && euclid(im, &embedded[j]) <= 2.0 * spacing {
                    covered[j] = true;
                }
            })
        };
        let (evaluations, saturated) =
            rasterize(f, &center, radius, opts.samples, 2.0 * spacing, opts.max_evaluations, &mut mark);
        let unc: Vec<usize> = (0..values.len()).filter(|&j| !covered[j]).collect();
        let bound = opts.diameter_bounds.as_ref().map_or(opts.eps_cluster, |b| b[li]);
        let clusters = greedy_clusters(
            &unc.iter().map(|&j| values[j].clone()).collect::<Vec<_>>(),
            &unc.iter().map(|&j| embedded[j].clone()).collect::<Vec<_>>(),
            bound,
        );
        BallCoverage {
            index: m + 1,
            center,
            radius,
            covered_fraction: 1.0 - unc.len() as f64 / values.len() as f64,
            evaluations,
            saturated,
            diameter_bound: bound,
            within_l: clusters.len() <= l,
            within_l_plus_one: clusters.len() <= l + 1,
            clusters,
        }
    });
    let uncovered: Vec<f64> = balls.iter().map(|b| 1.0 - b.covered_fraction).collect();
    let verdict = |ok: bool| {
        if ok {
            MuPVerdict::MuPEvidence
        } else {
            MuPVerdict::NoMuP
        }
    };
    Ok(CoverageReport {
        p,
        l,
        radii: radii.to_vec(),
        cover_radius: spacing,
        uncovered_trend: Trend::of(&uncovered),
        verdict: verdict(balls.iter().all(|b| b.within_l)),
        verdict_l_plus_one: verdict(balls.iter().all(|b| b.within_l_plus_one)),
        balls,
        options: opts.clone(),
    })
}
