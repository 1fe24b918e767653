//! Explicit quasimeromorphic mappings with declared dimension and
//! distortion, plus the transforms the normality criteria act through.
//!
//! A [`Mapping`] wraps an immutable [`MapKernel`]. Kernels evaluate the map,
//! and optionally its Jacobian determinant, an a-point enumerator and (for
//! planar meromorphic maps) a numerator/denominator representation used by
//! the argument principle.
//!
//! Evaluation maps every value with magnitude above [`INFINITY_THRESHOLD`] to
//! [`ExtendedPoint::Infinity`]; the chordal error of doing so is below 1e−12.

mod descriptor;
mod elliptic;
mod generic;
mod kinds;
mod rational;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sphere::{norm, ExtendedPoint};

pub use descriptor::{catalog, AffineBlock, CatalogEntry, Coefficient, MapDescriptor, MapKind};
pub use elliptic::EllipticSn2;
pub use rational::Polynomial;

/// Magnitudes above this are reported as ∞.
pub const INFINITY_THRESHOLD: f64 = 1e12;

/// Locations closer than this are merged by the enumerators.
pub const DEDUP_TOLERANCE: f64 = 1e-6;

/// A solution of `f(x) = a` with its local index `i(x, f)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct APoint {
    pub location: Vec<f64>,
    pub multiplicity: u32,
}

/// Evaluation backend of a [`Mapping`].
pub trait MapKernel: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> ExtendedPoint;

    fn has_jacobian(&self) -> bool {
        false
    }

    /// Jacobian determinant `J(x, f)`.
    fn jacobian(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// `J(x, f) / (1 + |f(x)|²)ⁿ`, evaluated stably near poles.
    fn chordal_density(&self, x: &[f64]) -> Option<f64> {
        let j = self.jacobian(x)?;
        Some(match self.eval(x) {
            ExtendedPoint::Infinity => 0.0,
            ExtendedPoint::Finite(v) => {
                let r = norm(&v);
                j / (1.0 + r * r).powi(self.dim() as i32)
            }
        })
    }

    fn has_enumerator(&self) -> bool {
        false
    }

    /// All solutions of `f(x) = a` in the open ball `B(center, radius)`.
    fn apoints(
        &self,
        _a: &ExtendedPoint,
        _center: &[f64],
        _radius: f64,
    ) -> Option<Result<Vec<APoint>>> {
        None
    }

    /// Planar meromorphic representation `f = N/D`.
    ///
    /// Returns `(ρN, ρD)` where `N`, `D` are entire without common zeros and
    /// `ρ(z) > 0` is an arbitrary positive scale (used to avoid overflow).
    /// Winding numbers of `N − aD` are therefore unaffected by `ρ`.
    fn holomorphic_parts(&self, _z: Complex64) -> Option<(Complex64, Complex64)> {
        None
    }

    fn is_meromorphic(&self) -> bool {
        false
    }
}

/// Lattice and scaling metadata carried alongside a mapping.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MapMeta {
    /// Translation periods (generators of the period lattice), if any.
    pub periods: Vec<Vec<f64>>,
    /// Volume of one period cell.
    pub cell_volume: Option<f64>,
    /// Number of preimages (with multiplicity) of a generic value per cell.
    pub degree_per_cell: Option<u32>,
    /// `|a|^{2−p}` recorded by [`p_rescale`].
    pub scale_factor: Option<f64>,
}

/// An evaluable quasimeromorphic mapping `ℝⁿ → ℝⁿ ∪ {∞}`.
#[derive(Clone)]
pub struct Mapping {
    label: String,
    distortion: f64,
    kernel: Arc<dyn MapKernel>,
    meta: MapMeta,
}

impl fmt::Debug for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mapping")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .field("distortion", &self.distortion)
            .field("meta", &self.meta)
            .finish()
    }
}

impl Mapping {
    pub fn new(label: impl Into<String>, distortion: f64, kernel: Arc<dyn MapKernel>) -> Result<Self> {
        if kernel.dim() < 2 {
            return Err(Error::param("dim", "n ≥ 2 required"));
        }
        if !(distortion >= 1.0 && distortion.is_finite()) {
            return Err(Error::param("distortion", format!("K = {distortion} < 1")));
        }
        Ok(Mapping {
            label: label.into(),
            distortion,
            kernel,
            meta: MapMeta::default(),
        })
    }

    pub(crate) fn with_meta(mut self, meta: MapMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn distortion(&self) -> f64 {
        self.distortion
    }

    /// Replace the declared distortion `K`.
    pub fn with_distortion(mut self, k: f64) -> Result<Self> {
        if !(k >= 1.0 && k.is_finite()) {
            return Err(Error::param("distortion", format!("K = {k} < 1")));
        }
        self.distortion = k;
        Ok(self)
    }

    /// Hölder exponent `α = K^{1/(1−n)}`.
    pub fn alpha(&self) -> f64 {
        crate::hoelder::alpha_of(self.dim(), self.distortion).expect("validated at construction")
    }

    pub fn meta(&self) -> &MapMeta {
        &self.meta
    }

    pub fn kernel(&self) -> &Arc<dyn MapKernel> {
        &self.kernel
    }

    /// Evaluate `f(x)`. Fails on a dimension mismatch or a NaN result.
    pub fn evaluate(&self, x: &[f64]) -> Result<ExtendedPoint> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let v = self.kernel.eval(x);
        if let ExtendedPoint::Finite(c) = &v {
            if c.iter().any(|t| t.is_nan()) {
                return Err(Error::Evaluation {
                    at: x.to_vec(),
                    detail: format!("{} produced NaN", self.label),
                });
            }
        }
        Ok(v)
    }

    /// Evaluation without argument checks, for hot loops that have
    /// validated dimensions already.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> ExtendedPoint {
        self.kernel.eval(x)
    }

    pub fn has_jacobian(&self) -> bool {
        self.kernel.has_jacobian()
    }

    pub fn jacobian(&self, x: &[f64]) -> Option<f64> {
        self.kernel.jacobian(x)
    }

    pub fn chordal_density(&self, x: &[f64]) -> Option<f64> {
        self.kernel.chordal_density(x)
    }

    pub fn has_enumerator(&self) -> bool {
        self.kernel.has_enumerator()
    }

    pub fn is_meromorphic(&self) -> bool {
        self.dim() == 2 && self.kernel.is_meromorphic()
    }

    pub fn holomorphic_parts(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        self.kernel.holomorphic_parts(z)
    }
}

/// Map a raw value vector to an [`ExtendedPoint`], applying the ∞ threshold.
#[inline]
pub(crate) fn capped(v: Vec<f64>) -> ExtendedPoint {
    if v.iter().any(|c| c.is_infinite()) {
        return ExtendedPoint::Infinity;
    }
    let r = norm(&v);
    if r > INFINITY_THRESHOLD {
        ExtendedPoint::Infinity
    } else {
        ExtendedPoint::Finite(v)
    }
}

#[inline]
pub(crate) fn capped_complex(w: Complex64) -> ExtendedPoint {
    if w.re.is_infinite() || w.im.is_infinite() || w.norm() > INFINITY_THRESHOLD {
        ExtendedPoint::Infinity
    } else {
        ExtendedPoint::Finite(vec![w.re, w.im])
    }
}

/// Pre-composition with `x ↦ anchor + scale·x`.
#[derive(Debug)]
struct PreAffine {
    base: Arc<dyn MapKernel>,
    anchor: Vec<f64>,
    scale: f64,
}

impl PreAffine {
    #[inline]
    fn argument(&self, x: &[f64]) -> Vec<f64> {
        self.anchor.iter().zip(x).map(|(a, xi)| a + self.scale * xi).collect()
    }
}

impl MapKernel for PreAffine {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, x: &[f64]) -> ExtendedPoint {
        self.base.eval(&self.argument(x))
    }

    fn has_jacobian(&self) -> bool {
        self.base.has_jacobian()
    }

    fn jacobian(&self, x: &[f64]) -> Option<f64> {
        let s = self.scale.abs().powi(self.dim() as i32);
        self.base.jacobian(&self.argument(x)).map(|j| s * j)
    }

    fn chordal_density(&self, x: &[f64]) -> Option<f64> {
        let s = self.scale.abs().powi(self.dim() as i32);
        self.base.chordal_density(&self.argument(x)).map(|j| s * j)
    }

    fn has_enumerator(&self) -> bool {
        self.base.has_enumerator()
    }

    fn apoints(&self, a: &ExtendedPoint, center: &[f64], radius: f64) -> Option<Result<Vec<APoint>>> {
        let c = self.argument(center);
        let found = self.base.apoints(a, &c, radius * self.scale.abs())?;
        Some(found.map(|pts| {
            pts.into_iter()
                .map(|p| APoint {
                    location: p
                        .location
                        .iter()
                        .zip(&self.anchor)
                        .map(|(y, a)| (y - a) / self.scale)
                        .collect(),
                    multiplicity: p.multiplicity,
                })
                .filter(|p| crate::sphere::dist(&p.location, center) < radius)
                .collect()
        }))
    }

    fn holomorphic_parts(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        let a = Complex64::new(self.anchor[0], self.anchor[1]);
        self.base.holomorphic_parts(a + z * self.scale)
    }

    fn is_meromorphic(&self) -> bool {
        self.base.is_meromorphic()
    }
}

/// Post-composition with `w ↦ scale·w + shift` (∞ ↦ ∞).
#[derive(Debug)]
struct PostAffine {
    base: Arc<dyn MapKernel>,
    scale: f64,
    shift: Vec<f64>,
}

impl MapKernel for PostAffine {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, x: &[f64]) -> ExtendedPoint {
        match self.base.eval(x) {
            ExtendedPoint::Infinity => ExtendedPoint::Infinity,
            ExtendedPoint::Finite(v) => capped(
                v.iter()
                    .zip(&self.shift)
                    .map(|(w, b)| self.scale * w + b)
                    .collect(),
            ),
        }
    }

    fn has_jacobian(&self) -> bool {
        self.base.has_jacobian()
    }

    fn jacobian(&self, x: &[f64]) -> Option<f64> {
        let s = self.scale.abs().powi(self.dim() as i32);
        self.base.jacobian(x).map(|j| s * j)
    }

    fn has_enumerator(&self) -> bool {
        self.base.has_enumerator()
    }

    fn apoints(&self, a: &ExtendedPoint, center: &[f64], radius: f64) -> Option<Result<Vec<APoint>>> {
        let target = match a {
            ExtendedPoint::Infinity => ExtendedPoint::Infinity,
            ExtendedPoint::Finite(c) => ExtendedPoint::Finite(
                c.iter().zip(&self.shift).map(|(w, b)| (w - b) / self.scale).collect(),
            ),
        };
        self.base.apoints(&target, center, radius)
    }

    fn holomorphic_parts(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        let (n, d) = self.base.holomorphic_parts(z)?;
        let b = Complex64::new(self.shift[0], self.shift[1]);
        Some((n * self.scale + b * d, d))
    }

    fn is_meromorphic(&self) -> bool {
        self.base.is_meromorphic()
    }
}

fn check_point(name: &'static str, a: &[f64], dim: usize) -> Result<()> {
    if a.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: a.len(),
        });
    }
    if a.iter().any(|c| !c.is_finite()) {
        return Err(Error::param(name, "must be finite"));
    }
    Ok(())
}

fn pre_compose(f: &Mapping, anchor: &[f64], scale: f64, label: String) -> Mapping {
    let n = f.dim() as i32;
    let mut meta = f.meta.clone();
    if scale != 1.0 {
        meta.periods = meta
            .periods
            .iter()
            .map(|p| p.iter().map(|c| c / scale).collect())
            .collect();
        meta.cell_volume = meta.cell_volume.map(|v| v / scale.abs().powi(n));
    }
    Mapping {
        label,
        distortion: f.distortion,
        kernel: Arc::new(PreAffine {
            base: f.kernel.clone(),
            anchor: anchor.to_vec(),
            scale,
        }),
        meta,
    }
}

/// `x ↦ f(x + a)`.
pub fn translate(f: &Mapping, a: &[f64]) -> Result<Mapping> {
    check_point("a", a, f.dim())?;
    Ok(pre_compose(f, a, 1.0, format!("{}(x + {:?})", f.label, a)))
}

/// `x ↦ f(a + |a|^{2−p} x)`.
pub fn p_rescale(f: &Mapping, a: &[f64], p: f64) -> Result<Mapping> {
    Ok(MapTransform::new(f.clone(), a.to_vec(), p)?.to_mapping())
}

/// Pre-/post-composition with similarity blocks from a map descriptor.
pub fn affine_compose(f: &Mapping, pre: Option<&AffineBlock>, post: Option<&AffineBlock>) -> Result<Mapping> {
    let mut g = f.clone();
    if let Some(b) = pre {
        let shift = b.shift_or_zero(g.dim())?;
        if b.scale == 0.0 || !b.scale.is_finite() {
            return Err(Error::param("pre.scale", "must be finite and nonzero"));
        }
        g = pre_compose(&g, &shift, b.scale, format!("{}∘pre", g.label));
    }
    if let Some(b) = post {
        let shift = b.shift_or_zero(g.dim())?;
        if b.scale == 0.0 || !b.scale.is_finite() {
            return Err(Error::param("post.scale", "must be finite and nonzero"));
        }
        g = Mapping {
            label: format!("post∘{}", g.label),
            distortion: g.distortion,
            kernel: Arc::new(PostAffine {
                base: g.kernel.clone(),
                scale: b.scale,
                shift,
            }),
            meta: g.meta.clone(),
        };
    }
    Ok(g)
}

/// The p-rescaled mapping `f_a(x) = f(a + |a|^{2−p} x)` with its anchor kept
/// explicit, so callers can reproduce the exact argument it evaluates at.
#[derive(Debug, Clone)]
pub struct MapTransform {
    base: Mapping,
    anchor: Vec<f64>,
    exponent: f64,
    scale: f64,
}

impl MapTransform {
    pub fn new(base: Mapping, anchor: Vec<f64>, exponent: f64) -> Result<Self> {
        check_point("a", &anchor, base.dim())?;
        let r = norm(&anchor);
        if r == 0.0 {
            return Err(Error::param("a", "anchor must be nonzero"));
        }
        if !(exponent >= 1.0 && exponent.is_finite()) {
            return Err(Error::param("p", format!("p = {exponent} < 1")));
        }
        let scale = r.powf(2.0 - exponent);
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param("p", "scale |a|^{2-p} under/overflows"));
        }
        Ok(MapTransform {
            base,
            anchor,
            exponent,
            scale,
        })
    }

    pub fn base(&self) -> &Mapping {
        &self.base
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// `|a|^{2−p}`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `e_a = a / |a|`.
    pub fn direction(&self) -> Vec<f64> {
        let r = norm(&self.anchor);
        self.anchor.iter().map(|c| c / r).collect()
    }

    /// The point `a + |a|^{2−p} x` at which the base map is evaluated.
    pub fn argument(&self, x: &[f64]) -> Vec<f64> {
        self.anchor.iter().zip(x).map(|(a, xi)| a + self.scale * xi).collect()
    }

    pub fn to_mapping(&self) -> Mapping {
        let mut m = pre_compose(
            &self.base,
            &self.anchor,
            self.scale,
            format!("{}(a + |a|^(2-p) x), p = {}", self.base.label, self.exponent),
        );
        m.meta.scale_factor = Some(self.scale);
        m
    }
}

/// All solutions of `f(x) = a` in the open ball `B(center, radius)`, with
/// multiplicities, merged at [`DEDUP_TOLERANCE`].
///
/// Uses the mapping's analytic enumerator when it has one; planar
/// meromorphic maps without one fall back to seeded Newton refinement
/// validated by the argument principle.
pub fn enumerate_apoints(
    f: &Mapping,
    a: &ExtendedPoint,
    center: &[f64],
    radius: f64,
) -> Result<Vec<APoint>> {
    check_point("center", center, f.dim())?;
    if let Some(d) = a.dim() {
        if d != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: d,
            });
        }
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", format!("{radius} is not positive")));
    }
    let pts = match f.kernel.apoints(a, center, radius) {
        Some(r) => r?,
        None if f.is_meromorphic() => generic::newton_enumerate(f, a, center, radius)?,
        None => return Err(Error::NoEnumerator(f.label.clone())),
    };
    Ok(dedup(pts))
}

pub(crate) fn dedup(pts: Vec<APoint>) -> Vec<APoint> {
    use std::collections::HashMap;
    let key = |x: &[f64]| -> Vec<i64> {
        x.iter().map(|c| (c / DEDUP_TOLERANCE).floor() as i64).collect()
    };
    let mut out: Vec<APoint> = Vec::with_capacity(pts.len());
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for p in pts {
        let k = key(&p.location);
        let mut hit = None;
        'search: for offset in neighbour_offsets(k.len()) {
            let nk: Vec<i64> = k.iter().zip(&offset).map(|(a, b)| a + b).collect();
            if let Some(ids) = cells.get(&nk) {
                for &i in ids {
                    if crate::sphere::dist(&out[i].location, &p.location) < DEDUP_TOLERANCE {
                        hit = Some(i);
                        break 'search;
                    }
                }
            }
        }
        match hit {
            Some(i) => out[i].multiplicity += p.multiplicity,
            None => {
                cells.entry(k).or_default().push(out.len());
                out.push(p);
            }
        }
    }
    out.sort_by(|a, b| {
        a.location
            .iter()
            .zip(&b.location)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

/// All offsets in {−1, 0, 1}^dim.
pub(crate) fn neighbour_offsets(dim: usize) -> Vec<Vec<i64>> {
    let mut acc = vec![Vec::new()];
    for _ in 0..dim {
        acc = acc
            .into_iter()
            .flat_map(|v| {
                (-1..=1).map(move |d| {
                    let mut w = v.clone();
                    w.push(d);
                    w
                })
            })
            .collect();
    }
    acc
}

/// Build a mapping from a descriptor.
pub fn make_zoo_map(desc: &MapDescriptor) -> Result<Mapping> {
    descriptor::build(desc)
}

pub(crate) use kinds::holo_map;

#[cfg(test)]
mod tests;
