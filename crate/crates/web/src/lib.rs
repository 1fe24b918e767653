//! Browser bindings for the static demo page in `www/`.
//!
//! Each export takes a map descriptor as JSON text and returns a JSON
//! document. The `*_json` functions hold the logic and are plain Rust so
//! they can be tested natively; the `#[wasm_bindgen]` wrappers only turn
//! their errors into JavaScript exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qrlab_core::counting::{afr_domain_curve, afr_sphere_curve, growth_fit, AfrCurve, GrowthFit};
use qrlab_core::hoelder::{q_field, HoelderConfig};
use qrlab_core::zoo::{catalog, enumerate_apoints, make_zoo_map, APoint};
use qrlab_core::{ExtendedPoint, MapDescriptor, Mapping};

/// Grids above this side length are refused to keep the page responsive.
pub const MAX_SIDE: usize = 401;

fn mapping(map: &str) -> Result<Mapping, String> {
    let d = MapDescriptor::parse(map).map_err(|e| e.to_string())?;
    make_zoo_map(&d).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

#[derive(Debug, Serialize)]
pub struct Heatmap {
    pub side: usize,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    /// Row-major over the first coordinate, second coordinate fastest.
    pub values: Vec<f64>,
    pub max: f64,
    pub argmax: [f64; 2],
    pub alpha: f64,
}

/// Q-hat on a `side × side` grid over `center ± half_width` for a planar map.
pub fn q_field_json(map: &str, cx: f64, cy: f64, half_width: f64, side: usize, seed: u64) -> Result<String, String> {
    let f = mapping(map)?;
    if f.dim() != 2 {
        return Err(format!("the heatmap needs a planar map, {} has dimension {}", f.label(), f.dim()));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err("half_width must be positive".into());
    }
    if !(2..=MAX_SIDE).contains(&side) {
        return Err(format!("side must lie in 2..={MAX_SIDE}"));
    }
    let step = 2.0 * half_width / (side - 1) as f64;
    let lo = [cx - half_width, cy - half_width];
    let grid: Vec<Vec<f64>> = (0..side * side)
        .map(|k| vec![lo[0] + (k / side) as f64 * step, lo[1] + (k % side) as f64 * step])
        .collect();
    let cfg = HoelderConfig::for_mapping(&f).with_seed(seed);
    let values = q_field(&f, &grid, &cfg).map_err(|e| e.to_string())?;
    let (i, max) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    Ok(to_json(&Heatmap {
        side,
        lo,
        hi: [cx + half_width, cy + half_width],
        argmax: [grid[i][0], grid[i][1]],
        max,
        alpha: cfg.alpha,
        values,
    }))
}

#[derive(Debug, Serialize)]
pub struct CurveWithFit {
    pub curve: AfrCurve,
    pub fit: Option<GrowthFit>,
    /// Why no fit was attempted or why it failed.
    pub fit_error: Option<String>,
}

/// `A_f(r)` on `count` log-spaced radii in `[r0, r1]` by the sphere route
/// (`"sphere"`) or the Jacobian route (`"domain"`), with a log-log fit.
pub fn afr_json(map: &str, route: &str, r0: f64, r1: f64, count: usize, samples: usize, seed: u64) -> Result<String, String> {
    let f = mapping(map)?;
    if !(r0 > 0.0 && r1 > r0 && r1.is_finite()) {
        return Err("need 0 < r0 < r1".into());
    }
    if count < 2 {
        return Err("need at least two radii".into());
    }
    let radii: Vec<f64> = (0..count)
        .map(|i| r0 * (r1 / r0).powf(i as f64 / (count - 1) as f64))
        .collect();
    let curve = match route {
        "sphere" => afr_sphere_curve(&f, &radii, samples, seed),
        "domain" => afr_domain_curve(&f, &vec![0.0; f.dim()], &radii, samples, seed),
        other => return Err(format!("unknown route `{other}`, use sphere or domain")),
    }
    .map_err(|e| e.to_string())?;
    let (fit, fit_error) = match growth_fit(&curve) {
        Ok(g) => (Some(g), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(to_json(&CurveWithFit { curve, fit, fit_error }))
}

#[derive(Debug, Serialize)]
pub struct APointList {
    pub points: Vec<APoint>,
    /// Sum of multiplicities, `n(center, radius, value)`.
    pub count: u64,
}

/// Solutions of `f(x) = value` in `B(center, radius)` with multiplicities.
/// `value` is JSON: a coordinate array or `"inf"`.
pub fn apoints_json(map: &str, value: &str, center: &[f64], radius: f64) -> Result<String, String> {
    let f = mapping(map)?;
    let a: ExtendedPoint = serde_json::from_str(value).map_err(|e| format!("value: {e}"))?;
    let points = enumerate_apoints(&f, &a, center, radius).map_err(|e| e.to_string())?;
    let count = points.iter().map(|p| p.multiplicity as u64).sum();
    Ok(to_json(&APointList { points, count }))
}

/// The zoo catalog.
pub fn catalog_json() -> String {
    to_json(&catalog())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn q_field_heatmap(map: &str, cx: f64, cy: f64, half_width: f64, side: u32, seed: u32) -> Result<String, JsError> {
    js(q_field_json(map, cx, cy, half_width, side as usize, seed as u64))
}

#[wasm_bindgen]
pub fn afr_curve(map: &str, route: &str, r0: f64, r1: f64, count: u32, samples: u32, seed: u32) -> Result<String, JsError> {
    js(afr_json(map, route, r0, r1, count as usize, samples as usize, seed as u64))
}

#[wasm_bindgen]
pub fn apoints(map: &str, value: &str, cx: f64, cy: f64, radius: f64) -> Result<String, JsError> {
    js(apoints_json(map, value, &[cx, cy], radius))
}

#[wasm_bindgen]
pub fn zoo_catalog() -> String {
    catalog_json()
}
