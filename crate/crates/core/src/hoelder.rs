//! Finite-scale spherical Hölder quotients
//!
//! ```text
//! Q_f(x) = limsup_{|h|→0} q(f(x + h), f(x)) / |h|^α,   α = K^{1/(1−n)}
//! ```
//!
//! and the Yosida / p-Yosida indicators built on them. Every limsup is
//! replaced by a finite scale ladder and a finite direction set; the
//! estimator `Q̂` is the larger of the two smallest-scale maxima.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::sphere::{chordal, dist, norm, ExtendedPoint};
use crate::zoo::{MapTransform, Mapping};

/// `Q̂` above this is reported as evidence of unboundedness.
pub const DIVERGENCE_THRESHOLD: f64 = 1e3;

/// Smallest admissible ladder scale.
pub const MIN_SCALE: f64 = 1e-8;

/// `α = K^{1/(1−n)}`.
pub fn alpha_of(n: usize, k: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::param("n", format!("n = {n} < 2")));
    }
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::param("K", format!("K = {k} is not a finite number ≥ 1")));
    }
    if k == 1.0 {
        return Ok(1.0);
    }
    Ok(k.powf(1.0 / (1.0 - n as f64)))
}

/// Scale ladder, direction count and seed for quotient estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoelderConfig {
    pub alpha: f64,
    /// Strictly decreasing scales `δ₀ > δ₁ > … ≥ 1e−8`.
    pub ladder: Vec<f64>,
    pub directions: usize,
    pub seed: u64,
}

impl HoelderConfig {
    pub fn new(alpha: f64, ladder: Vec<f64>, directions: usize, seed: u64) -> Result<Self> {
        let cfg = HoelderConfig {
            alpha,
            ladder,
            directions,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Ladder 1e−1 … 1e−4, 16 directions in the plane and 32 otherwise,
    /// `α` taken from the mapping.
    pub fn for_mapping(f: &Mapping) -> Self {
        HoelderConfig {
            alpha: f.alpha(),
            ladder: vec![1e-1, 1e-2, 1e-3, 1e-4],
            directions: if f.dim() == 2 { 16 } else { 32 },
            seed: 0,
        }
    }

    pub fn with_ladder(mut self, ladder: Vec<f64>) -> Result<Self> {
        self.ladder = ladder;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_directions(mut self, directions: usize) -> Result<Self> {
        self.directions = directions;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param("alpha", format!("α = {} outside (0, 1]", self.alpha)));
        }
        if self.ladder.is_empty() {
            return Err(Error::Empty("scale ladder"));
        }
        if self.ladder.iter().any(|d| !d.is_finite() || *d < MIN_SCALE) {
            return Err(Error::param("ladder", "scales must be finite and ≥ 1e-8"));
        }
        if self.ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::param("ladder", "scales must be strictly decreasing"));
        }
        if self.directions < 8 {
            return Err(Error::param("directions", "at least 8 directions required"));
        }
        Ok(())
    }

    fn check_against(&self, f: &Mapping) -> Result<()> {
        self.validate()?;
        let a = f.alpha();
        if (a - self.alpha).abs() > 1e-15 * a {
            return Err(Error::param(
                "alpha",
                format!("α = {} does not match K^(1/(1-n)) = {a} for {}", self.alpha, f.label()),
            ));
        }
        Ok(())
    }

    /// The seeded unit directions: evenly spaced angles with a seeded offset
    /// in the plane, normalised Gaussian vectors otherwise.
    pub fn direction_set(&self, dim: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0xd1_4ec7);
        if dim == 2 {
            let off: f64 = rng.random();
            (0..self.directions)
                .map(|j| {
                    let t = TAU * (j as f64 + off) / self.directions as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        } else {
            (0..self.directions)
                .map(|_| loop {
                    let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                    let r = norm(&g);
                    if r > 1e-8 {
                        break g.iter().map(|c| c / r).collect();
                    }
                })
                .collect()
        }
    }

    fn smallest_two(&self) -> usize {
        self.ladder.len().saturating_sub(2)
    }
}

/// Maximum quotient at one ladder scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleEntry {
    pub delta: f64,
    pub max_quotient: f64,
    pub witness_direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientProfile {
    pub base: Vec<f64>,
    pub alpha: f64,
    pub scales: Vec<ScaleEntry>,
    /// Larger of the two smallest-scale maxima.
    pub q_hat: f64,
}

fn eval_probe(f: &Mapping, x: &[f64]) -> Result<ExtendedPoint> {
    f.evaluate(x).map_err(|e| match e {
        Error::Evaluation { detail, .. } => Error::Evaluation {
            at: x.to_vec(),
            detail: format!("probe failed: {detail}"),
        },
        other => other,
    })
}

/// Shared core: `max_u q(f(arg(x + δu)), f(arg(x))) / (s·δ)^α` per scale.
fn profile_core(
    f: &Mapping,
    arg: &dyn Fn(&[f64]) -> Vec<f64>,
    scale: f64,
    x: &[f64],
    dirs: &[Vec<f64>],
    cfg: &HoelderConfig,
) -> Result<Vec<ScaleEntry>> {
    let fx = eval_probe(f, &arg(x))?;
    let mut out = Vec::with_capacity(cfg.ladder.len());
    let mut probe = vec![0.0; x.len()];
    for &delta in &cfg.ladder {
        let denom = (scale * delta).powf(cfg.alpha);
        let mut best = 0.0;
        let mut witness = &dirs[0];
        for u in dirs {
            for i in 0..x.len() {
                probe[i] = x[i] + delta * u[i];
            }
            let v = eval_probe(f, &arg(&probe))?;
            let qv = chordal(&v, &fx) / denom;
            if qv > best {
                best = qv;
                witness = u;
            }
        }
        out.push(ScaleEntry {
            delta,
            max_quotient: best,
            witness_direction: witness.clone(),
        });
    }
    Ok(out)
}

fn q_hat_of(scales: &[ScaleEntry], cfg: &HoelderConfig) -> f64 {
    scales[cfg.smallest_two()..]
        .iter()
        .map(|e| e.max_quotient)
        .fold(0.0, f64::max)
}

/// Finite-scale profile of `Q_f(x)`.
pub fn quotient_profile(f: &Mapping, x: &[f64], cfg: &HoelderConfig) -> Result<QuotientProfile> {
    cfg.check_against(f)?;
    check_finite_point(f, x)?;
    let dirs = cfg.direction_set(f.dim());
    profile_at(f, x, &dirs, cfg)
}

fn profile_at(f: &Mapping, x: &[f64], dirs: &[Vec<f64>], cfg: &HoelderConfig) -> Result<QuotientProfile> {
    let scales = profile_core(f, &|y| y.to_vec(), 1.0, x, dirs, cfg)?;
    Ok(QuotientProfile {
        base: x.to_vec(),
        alpha: cfg.alpha,
        q_hat: q_hat_of(&scales, cfg),
        scales,
    })
}

fn check_finite_point(f: &Mapping, x: &[f64]) -> Result<()> {
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::param("x", "must be finite"));
    }
    Ok(())
}

/// `Q̂` at every point of `grid`, in grid order.
pub fn q_field(f: &Mapping, grid: &[Vec<f64>], cfg: &HoelderConfig) -> Result<Vec<f64>> {
    cfg.check_against(f)?;
    for x in grid {
        check_finite_point(f, x)?;
    }
    let dirs = cfg.direction_set(f.dim());
    par::map_indexed(grid.len(), |i| profile_at(f, &grid[i], &dirs, cfg).map(|p| p.q_hat))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Bounded at this resolution.
    Consistent,
    /// Divergence evidence: `Q̂` above the threshold, or a witness path
    /// along which `Q̂` grows tenfold.
    Evidence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    pub values: Vec<f64>,
    /// Last value over first value along the path.
    pub growth: f64,
    pub strictly_increasing: bool,
}

impl TrendReport {
    pub fn is_evidence(&self) -> bool {
        self.strictly_increasing && self.growth >= 10.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YosidaReport {
    /// Empirical sup of `Q̂` over the grid; a lower bound for the true sup.
    pub sup: f64,
    pub witness: Vec<f64>,
    pub threshold: f64,
    pub verdict: Verdict,
    pub trend: Option<TrendReport>,
}

/// `Q̂` along an ordered path, with its growth factor.
pub fn trend_along(f: &Mapping, path: &[Vec<f64>], cfg: &HoelderConfig) -> Result<TrendReport> {
    if path.len() < 2 {
        return Err(Error::param("path", "at least two points required"));
    }
    let values = q_field(f, path, cfg)?;
    let first = values[0];
    let last = *values.last().expect("non-empty");
    let growth = if first > 0.0 { last / first } else if last > 0.0 { f64::INFINITY } else { 1.0 };
    Ok(TrendReport {
        strictly_increasing: values.windows(2).all(|w| w[1] > w[0]),
        growth,
        values,
    })
}

/// Sup of `Q̂` over a grid; evidence of non-Yosida behaviour when it exceeds
/// [`DIVERGENCE_THRESHOLD`].
pub fn yosida_indicator(f: &Mapping, grid: &[Vec<f64>], cfg: &HoelderConfig) -> Result<YosidaReport> {
    yosida_indicator_with_path(f, grid, None, cfg)
}

/// As [`yosida_indicator`], additionally flagging a tenfold strictly
/// increasing trend of `Q̂` along `path`.
pub fn yosida_indicator_with_path(
    f: &Mapping,
    grid: &[Vec<f64>],
    path: Option<&[Vec<f64>]>,
    cfg: &HoelderConfig,
) -> Result<YosidaReport> {
    if grid.is_empty() {
        return Err(Error::Empty("grid"));
    }
    let field = q_field(f, grid, cfg)?;
    let (idx, sup) = argmax(&field);
    let trend = path.map(|p| trend_along(f, p, cfg)).transpose()?;
    let evidence = sup > DIVERGENCE_THRESHOLD || trend.as_ref().is_some_and(TrendReport::is_evidence);
    Ok(YosidaReport {
        sup,
        witness: grid[idx].clone(),
        threshold: DIVERGENCE_THRESHOLD,
        verdict: if evidence { Verdict::Evidence } else { Verdict::Consistent },
        trend,
    })
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, x)| if x > bv { (i, x) } else { (bi, bv) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PYosidaEntry {
    pub anchor: Vec<f64>,
    pub modulus: f64,
    /// `|a|^{(2−p)α} Q̂_f(a)`
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PYosidaReport {
    pub p: f64,
    pub entries: Vec<PYosidaEntry>,
    /// Max over the top decile of `|a|`.
    pub limsup: f64,
    pub witness: Vec<f64>,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Estimate `limsup_{|a|→∞} |a|^{(2−p)α} Q_f(a)` over anchors sorted by
/// increasing modulus.
pub fn p_yosida_indicator(f: &Mapping, p: f64, anchors: &[Vec<f64>], cfg: &HoelderConfig) -> Result<PYosidaReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("p = {p} must exceed 1")));
    }
    if anchors.is_empty() {
        return Err(Error::Empty("anchors"));
    }
    let moduli: Vec<f64> = anchors.iter().map(|a| norm(a)).collect();
    if moduli.iter().any(|&r| r == 0.0) {
        return Err(Error::param("anchors", "anchor at 0"));
    }
    if moduli.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("anchors", "must be sorted by increasing |a|"));
    }
    if moduli[moduli.len() - 1] < 100.0 * (1.0 - 1e-12) * moduli[0] {
        return Err(Error::param("anchors", "need |a|max / |a|min ≥ 100"));
    }
    let field = q_field(f, anchors, cfg)?;
    let e = (2.0 - p) * cfg.alpha;
    let entries: Vec<PYosidaEntry> = anchors
        .iter()
        .zip(&moduli)
        .zip(&field)
        .map(|((a, &r), &qh)| PYosidaEntry {
            anchor: a.clone(),
            modulus: r,
            value: if qh == 0.0 { 0.0 } else { r.powf(e) * qh },
        })
        .collect();
    let start = (entries.len() * 9) / 10;
    let start = start.min(entries.len() - 1);
    let (i, limsup) = argmax(&entries[start..].iter().map(|e| e.value).collect::<Vec<_>>());
    Ok(PYosidaReport {
        p,
        witness: entries[start + i].anchor.clone(),
        limsup,
        threshold: DIVERGENCE_THRESHOLD,
        verdict: if limsup > DIVERGENCE_THRESHOLD { Verdict::Evidence } else { Verdict::Consistent },
        entries,
    })
}

/// Largest relative discrepancy, over `directions`, between the quotient of
/// `f_a(x) = f(a + |a|^{2−p}x)` at `(0; δ, u)` and `|a|^{(2−p)α}` times the
/// quotient of `f` at `(a; δ|a|^{2−p}, u)`.
///
/// Both sides evaluate `f` at the same points, so the result measures only
/// the rounding in the scale factors.
pub fn rescale_identity_check(
    f: &Mapping,
    a: &[f64],
    p: f64,
    delta: f64,
    directions: &[Vec<f64>],
) -> Result<f64> {
    if directions.is_empty() {
        return Err(Error::Empty("directions"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", "must be positive"));
    }
    let t = MapTransform::new(f.clone(), a.to_vec(), p)?;
    let alpha = f.alpha();
    let s = t.scale();
    let zero = vec![0.0; f.dim()];
    let fa0 = eval_probe(f, &t.argument(&zero))?;
    let mut worst = 0.0_f64;
    for u in directions {
        if u.len() != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: u.len(),
            });
        }
        let h: Vec<f64> = u.iter().map(|c| delta * c).collect();
        let num = chordal(&eval_probe(f, &t.argument(&h))?, &fa0);
        let lhs = num / delta.powf(alpha);
        let rhs = s.powf(alpha) * (num / (s * delta).powf(alpha));
        let scale = lhs.abs().max(rhs.abs());
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityReport {
    /// Empirical `M_G`.
    pub m_g: f64,
    pub member: usize,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub skipped_pairs: usize,
}

/// Empirical `sup q(f(x₁), f(x₂)) / |x₁ − x₂|^α` over family members,
/// `x₁ ∈ G` and `x₂` in the probe set. Coincident pairs are skipped.
pub fn normality_constant(
    family: &[Mapping],
    g: &[Vec<f64>],
    probes: &[Vec<f64>],
    cfg: &HoelderConfig,
) -> Result<NormalityReport> {
    if family.is_empty() {
        return Err(Error::Empty("family"));
    }
    if g.is_empty() || probes.is_empty() {
        return Err(Error::Empty("grid"));
    }
    for f in family {
        cfg.check_against(f)?;
        for x in g.iter().chain(probes) {
            check_finite_point(f, x)?;
        }
    }
    let per_member: Vec<Result<(f64, usize, usize, usize)>> = par::map_indexed(family.len(), |k| {
        let f = &family[k];
        let fg: Vec<ExtendedPoint> = g.iter().map(|x| eval_probe(f, x)).collect::<Result<_>>()?;
        let fp: Vec<ExtendedPoint> = probes.iter().map(|x| eval_probe(f, x)).collect::<Result<_>>()?;
        let mut best = (0.0, 0, 0, 0);
        for (i, x1) in g.iter().enumerate() {
            for (j, x2) in probes.iter().enumerate() {
                let d = dist(x1, x2);
                if d == 0.0 {
                    best.3 += 1;
                    continue;
                }
                let r = chordal(&fg[i], &fp[j]) / d.powf(cfg.alpha);
                if r > best.0 {
                    best = (r, i, j, best.3);
                }
            }
        }
        Ok(best)
    });
    let mut report = NormalityReport {
        m_g: 0.0,
        member: 0,
        x1: g[0].clone(),
        x2: probes[0].clone(),
        skipped_pairs: 0,
    };
    for (k, r) in per_member.into_iter().enumerate() {
        let (v, i, j, skipped) = r?;
        report.skipped_pairs += skipped;
        if v > report.m_g {
            report.m_g = v;
            report.member = k;
            report.x1 = g[i].clone();
            report.x2 = probes[j].clone();
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCheck {
    pub stage: usize,
    /// `Q̂` of `f_{a_n}` at `x`.
    pub lhs: f64,
    /// `sup_{m ≥ n} |y_m|^{(2−p)α} Q̂_f(y_m)` with `y_m = a_m + |a_m|^{2−p}x`.
    pub q_indicator: f64,
    /// `|e_{a_n} + |a_n|^{1−p}x|^{(p−2)α}`
    pub factor: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Finite-stage check of `Q_{f_{a_n}}(x) ≤ Q · |e_{a_n} + |a_n|^{1−p}x|^{(p−2)α}`
/// where `Q` is the p-weighted quotient indicator over the tail `m ≥ n`.
///
/// Quotients of `f` at `y_m` use the matched scales `|a_m|^{2−p}δ`. The
/// tolerance is 1e−12 relative.
pub fn limit_inequality_check(
    f: &Mapping,
    p: f64,
    anchors: &[Vec<f64>],
    x: &[f64],
    stage: usize,
    cfg: &HoelderConfig,
) -> Result<LimitCheck> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("p = {p} must exceed 1")));
    }
    cfg.check_against(f)?;
    check_finite_point(f, x)?;
    if stage >= anchors.len() {
        return Err(Error::param("stage", format!("stage {stage} beyond {} anchors", anchors.len())));
    }
    let dirs = cfg.direction_set(f.dim());
    let alpha = cfg.alpha;
    let e = (2.0 - p) * alpha;
    let mut lhs = 0.0;
    let mut q_ind = 0.0_f64;
    for (m, a) in anchors.iter().enumerate().skip(stage) {
        let t = MapTransform::new(f.clone(), a.clone(), p)?;
        let s = t.scale();
        let arg = |h: &[f64]| t.argument(h);
        // numerators are shared; only the normalisation differs
        let per_scale = profile_core(f, &arg, 1.0, x, &dirs, cfg)?;
        let q_rescaled = q_hat_of(&per_scale, cfg);
        if m == stage {
            lhs = q_rescaled;
        }
        let y = t.argument(x);
        let ry = norm(&y);
        // quotient of f at y on scale sδ is q_rescaled / s^α
        let term = if q_rescaled == 0.0 { 0.0 } else { ry.powf(e) * q_rescaled / s.powf(alpha) };
        q_ind = q_ind.max(term);
    }
    let an = &anchors[stage];
    let rn = norm(an);
    let w: Vec<f64> = an
        .iter()
        .zip(x)
        .map(|(a, xi)| a / rn + rn.powf(1.0 - p) * xi)
        .collect();
    let factor = norm(&w).powf((p - 2.0) * alpha);
    let rhs = q_ind * factor;
    let tol = 1e-12 * lhs.max(rhs).max(1.0);
    let slack = rhs + tol - lhs;
    Ok(LimitCheck {
        stage,
        lhs,
        q_indicator: q_ind,
        factor,
        rhs,
        slack,
        holds: slack >= 0.0,
    })
}

#[cfg(test)]
mod tests;
