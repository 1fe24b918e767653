//! Truncated point sequences, the weighted distances `D_p` / `d_p`, the
//! a-point separation statistic and the M_p / μ_p detectors.
//!
//! Limits in `m` are read at truncation: a property "for large m" must hold
//! on the last half of the sequence, and the direction of travel is
//! reported alongside.

mod detect;
mod expr;

pub use detect::{
    mp_detect, mu_p_cover_check, BallCoverage, CoverOptions, CoverageReport, MpOptions, MpReport, MpVerdict,
    MuPVerdict, ValueCluster, ValueEvidence,
};
pub use expr::Generator;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::sphere::{dist, norm, ExtendedPoint};
use crate::zoo::{enumerate_apoints, Mapping};

/// Ordered finite sequence `x₁, …, x_M` of nonzero points whose moduli
/// grow: strictly increasing on the last half and `|x_M| ≥ 10·|x₁|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSequence {
    points: Vec<Vec<f64>>,
    generator: String,
}

impl PointSequence {
    pub fn new(points: Vec<Vec<f64>>, generator: impl Into<String>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::Empty("point sequence"));
        };
        let dim = first.len();
        if dim < 2 {
            return Err(Error::param("dim", "n ≥ 2 required"));
        }
        for (i, x) in points.iter().enumerate() {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
            if x.iter().any(|c| !c.is_finite()) {
                return Err(Error::param("points", format!("x_{} is not finite", i + 1)));
            }
            if norm(x) == 0.0 {
                return Err(Error::param("points", format!("x_{} is zero", i + 1)));
            }
        }
        let moduli: Vec<f64> = points.iter().map(|x| norm(x)).collect();
        let m = moduli.len();
        if m < 2 || moduli[m - 1] < 10.0 * moduli[0] {
            return Err(Error::Degenerate(format!(
                "|x_M| = {:.4} < 10·|x_1| = {:.4}; the sequence does not escape",
                moduli[m - 1],
                10.0 * moduli[0]
            )));
        }
        if moduli[m / 2..].windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Degenerate("|x_m| is not strictly increasing on the last half".into()));
        }
        Ok(PointSequence {
            points,
            generator: generator.into(),
        })
    }

    /// `x_m = g(m)` for `m = 1..=truncation`.
    pub fn from_generator(expr: &str, dim: usize, truncation: usize) -> Result<Self> {
        if truncation < 2 {
            return Err(Error::param("truncation", "at least two points required"));
        }
        let g = Generator::parse(expr, dim)?;
        let points = (1..=truncation).map(|m| g.point(m)).collect::<Result<Vec<_>>>()?;
        Self::new(points, expr)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn generator(&self) -> &str {
        &self.generator
    }

    pub fn truncation(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// First 0-based index of the late half.
    pub fn late_start(&self) -> usize {
        self.points.len() / 2
    }

    /// Pointwise image under `x ↦ x + shift(m, x)`.
    pub fn perturbed(&self, label: &str, shift: impl Fn(usize, &[f64]) -> Vec<f64>) -> Result<Self> {
        let pts = self
            .points
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let s = shift(i + 1, x);
                x.iter().zip(&s).map(|(a, b)| a + b).collect()
            })
            .collect();
        Self::new(pts, label)
    }
}

/// One-sided weighted distance with its minimizing pair (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpValue {
    pub value: f64,
    pub m: usize,
    pub k: usize,
    pub truncation: usize,
}

fn check_pair(x: &[Vec<f64>], y: &[Vec<f64>], p: f64) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Empty("point sequence"));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("{p} < 1")));
    }
    if x[0].len() != y[0].len() {
        return Err(Error::DimensionMismatch {
            expected: x[0].len(),
            got: y[0].len(),
        });
    }
    Ok(())
}

/// `D_p` at every truncation `T = 1..=max(M_X, M_Y)`: entry `T−1` is the
/// infimum over pairs with `m, k ≤ T`.
pub(crate) fn dp_prefix(x: &[Vec<f64>], y: &[Vec<f64>], p: f64) -> Vec<DpValue> {
    let weight: Vec<f64> = x.iter().map(|v| norm(v).powf(2.0 - p)).collect();
    let w = |m: usize, k: usize| dist(&x[m], &y[k]) / weight[m];
    let len = x.len().max(y.len());
    // bucket b holds the pairs with max(m, k) = b
    let buckets = par::map_indexed(len, |b| {
        let mut best = (f64::INFINITY, 0, 0);
        if b < x.len() {
            for k in 0..=b.min(y.len() - 1) {
                let v = w(b, k);
                if v < best.0 {
                    best = (v, b, k);
                }
            }
        }
        if b < y.len() {
            for m in 0..b.min(x.len()) {
                let v = w(m, b);
                if v < best.0 {
                    best = (v, m, b);
                }
            }
        }
        best
    });
    let mut out = Vec::with_capacity(len);
    let mut run = (f64::INFINITY, 0, 0);
    for (t, b) in buckets.into_iter().enumerate() {
        if b.0 < run.0 {
            run = b;
        }
        out.push(DpValue {
            value: run.0,
            m: run.1 + 1,
            k: run.2 + 1,
            truncation: t + 1,
        });
    }
    out
}

/// `D_p(X, Y) = inf_{m,k} |x_m − y_k| / |x_m|^{2−p}` over the truncations.
pub fn directed_dp(x: &PointSequence, y: &PointSequence, p: f64) -> Result<DpValue> {
    check_pair(x.points(), y.points(), p)?;
    Ok(*dp_prefix(x.points(), y.points(), p).last().unwrap())
}

/// `d_p(X, Y) = min{D_p(X, Y), D_p(Y, X)}`.
pub fn dp(x: &PointSequence, y: &PointSequence, p: f64) -> Result<DpValue> {
    let a = directed_dp(x, y, p)?;
    let b = directed_dp(y, x, p)?;
    Ok(if b.value < a.value { b } else { a })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Decreasing,
    Increasing,
    Flat,
}

impl Trend {
    pub fn of(values: &[f64]) -> Trend {
        let (Some(first), Some(last)) = (values.first(), values.last()) else {
            return Trend::Flat;
        };
        let scale = first.abs().max(last.abs());
        if (last - first).abs() <= 1e-12 * scale || (first.is_infinite() && last.is_infinite()) {
            Trend::Flat
        } else if last < first {
            Trend::Decreasing
        } else {
            Trend::Increasing
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Agreement {
    Agree,
    Disagree,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BothZeroReport {
    pub p: f64,
    pub epsilon: f64,
    pub truncations: Vec<usize>,
    pub forward: Vec<DpValue>,
    pub backward: Vec<DpValue>,
    pub forward_trend: Trend,
    pub backward_trend: Trend,
    pub both_below: bool,
    pub both_above: bool,
    pub verdict: Agreement,
}

/// Dyadic truncations `M, M/2, M/4, …` (≥ 8), ascending.
fn dyadic_truncations(m: usize) -> Vec<usize> {
    let mut t = vec![m];
    let mut cur = m / 2;
    while cur >= 8 {
        t.push(cur);
        cur /= 2;
    }
    t.reverse();
    t
}

/// Evaluates `D_p(X, Y)` and `D_p(Y, X)` at dyadic truncations; the two
/// agree when both end below `ε` or both end at or above it.
pub fn both_zero_check(x: &PointSequence, y: &PointSequence, p: f64, epsilon: f64) -> Result<BothZeroReport> {
    check_pair(x.points(), y.points(), p)?;
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    let fwd = dp_prefix(x.points(), y.points(), p);
    let bwd = dp_prefix(y.points(), x.points(), p);
    let truncations = dyadic_truncations(fwd.len());
    let forward: Vec<DpValue> = truncations.iter().map(|&t| fwd[t - 1]).collect();
    let backward: Vec<DpValue> = truncations.iter().map(|&t| bwd[t - 1]).collect();
    let (f, b) = (forward.last().unwrap().value, backward.last().unwrap().value);
    let both_below = f < epsilon && b < epsilon;
    let both_above = f >= epsilon && b >= epsilon;
    let vals = |v: &[DpValue]| v.iter().map(|d| d.value).collect::<Vec<_>>();
    Ok(BothZeroReport {
        p,
        epsilon,
        forward_trend: Trend::of(&vals(&forward)),
        backward_trend: Trend::of(&vals(&backward)),
        truncations,
        forward,
        backward,
        both_below,
        both_above,
        verdict: if both_below || both_above {
            Agreement::Agree
        } else {
            Agreement::Disagree
        },
    })
}

/// `max_m |x_m − y_m| / |y_m|^{2−p}` over the late half, with its trend,
/// for checking that two sequences merge at the weighted scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Closeness {
    pub ratios: Vec<f64>,
    pub late_max: f64,
    pub trend: Trend,
}

pub fn closeness(x: &PointSequence, y: &PointSequence, p: f64) -> Result<Closeness> {
    check_pair(x.points(), y.points(), p)?;
    if x.truncation() != y.truncation() {
        return Err(Error::param("truncation", "sequences must have equal length"));
    }
    let ratios: Vec<f64> = x
        .points()
        .iter()
        .zip(y.points())
        .map(|(a, b)| dist(a, b) / norm(b).powf(2.0 - p))
        .collect();
    let late = &ratios[x.late_start()..];
    Ok(Closeness {
        late_max: late.iter().copied().fold(0.0, f64::max),
        trend: Trend::of(late),
        ratios,
    })
}

/// Location of the separation infimum: `a_{jk}` is the k-th point of value
/// j, `a_{im}` the m-th point of value i (all 0-based).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationWitness {
    pub j: usize,
    pub k: usize,
    pub i: usize,
    pub m: usize,
    pub a_jk: Vec<f64>,
    pub a_im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub p: f64,
    pub value: f64,
    pub witness: SeparationWitness,
    pub counts: Vec<usize>,
}

/// `inf |a_{jk} − a_{im}| / |a_{jk}|^{2−p}` over `i ≠ j`, skipping `a_{jk} = 0`.
pub fn separation_from_sets(sets: &[Vec<Vec<f64>>], p: f64) -> Result<SeparationReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("{p} < 1")));
    }
    let nonempty = sets.iter().filter(|s| !s.is_empty()).count();
    if nonempty < 2 {
        return Err(Error::Degenerate(format!(
            "{nonempty} value(s) with nonempty preimage; at least two needed"
        )));
    }
    let flat: Vec<(usize, usize)> = sets
        .iter()
        .enumerate()
        .flat_map(|(j, s)| (0..s.len()).map(move |k| (j, k)))
        .collect();
    let rows = par::map_indexed(flat.len(), |r| {
        let (j, k) = flat[r];
        let a = &sets[j][k];
        let na = norm(a);
        if na == 0.0 {
            return None;
        }
        let w = na.powf(2.0 - p);
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, s) in sets.iter().enumerate() {
            if i == j {
                continue;
            }
            for (m, b) in s.iter().enumerate() {
                let v = dist(a, b) / w;
                if best.is_none_or(|t| v < t.0) {
                    best = Some((v, i, m));
                }
            }
        }
        best.map(|(v, i, m)| (v, j, k, i, m))
    });
    let (value, j, k, i, m) = rows
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<(f64, usize, usize, usize, usize)>, r| match acc {
            Some(a) if a.0 <= r.0 => Some(a),
            _ => Some(r),
        })
        .ok_or_else(|| Error::Degenerate("every a-point sits at the origin".into()))?;
    Ok(SeparationReport {
        p,
        value,
        witness: SeparationWitness {
            j,
            k,
            i,
            m,
            a_jk: sets[j][k].clone(),
            a_im: sets[i][m].clone(),
        },
        counts: sets.iter().map(Vec::len).collect(),
    })
}

/// Separation statistic of the a-points of `values` inside `B(center, radius)`.
///
/// Points are counted without multiplicity; a multiple a-point is one
/// location.
pub fn separation_statistic(
    f: &Mapping,
    values: &[ExtendedPoint],
    center: &[f64],
    radius: f64,
    p: f64,
) -> Result<SeparationReport> {
    if values.len() < 2 {
        return Err(Error::param("values", "at least two values required"));
    }
    if !f.has_enumerator() && !f.is_meromorphic() {
        return Err(Error::NoEnumerator(f.label().to_string()));
    }
    let sets = values
        .iter()
        .map(|a| {
            enumerate_apoints(f, a, center, radius).map(|pts| pts.into_iter().map(|q| q.location).collect())
        })
        .collect::<Result<Vec<Vec<Vec<f64>>>>>()?;
    separation_from_sets(&sets, p)
}
