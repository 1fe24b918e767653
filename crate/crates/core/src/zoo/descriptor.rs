//! Map descriptors: a `kind` tag with kind-specific parameters plus optional
//! affine `pre` / `post` blocks.
//!
//! ```json
//! { "kind": "rational", "numerator": [1, 0, [0, 2]], "denominator": [1, 1],
//!   "pre": { "scale": 0.5, "shift": [1, 0] } }
//! ```

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::elliptic::EllipticSn2;
use super::kinds::{Constant, ExpSquare, Exponential, Power, Sine, Winding, Zorich};
use super::rational::{Polynomial, Rational};
use super::{affine_compose, holo_map, MapMeta, Mapping};
use crate::error::{Error, Result};
use crate::sphere::ExtendedPoint;

/// Declared distortion of the Zorich-type map unless configured.
pub const ZORICH_DEFAULT_DISTORTION: f64 = 4.0;

/// A real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(f64),
    Complex([f64; 2]),
}

impl Coefficient {
    pub fn to_complex(self) -> Complex64 {
        match self {
            Coefficient::Real(x) => Complex64::new(x, 0.0),
            Coefficient::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// `x ↦ scale·x + shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineBlock {
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

fn two() -> usize {
    2
}

fn default_generators() -> [[f64; 2]; 2] {
    [[2.0, 0.0], [0.0, 2.0]]
}

impl AffineBlock {
    pub(crate) fn shift_or_zero(&self, dim: usize) -> Result<Vec<f64>> {
        match &self.shift {
            None => Ok(vec![0.0; dim]),
            Some(s) if s.len() != dim => Err(Error::DimensionMismatch {
                expected: dim,
                got: s.len(),
            }),
            Some(s) if s.iter().any(|c| !c.is_finite()) => Err(Error::param("shift", "must be finite")),
            Some(s) => Ok(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapKind {
    /// `e^z`
    Exponential {},
    /// `sin z`
    Sine {},
    /// `e^{z²}`
    ExpSquare {},
    /// `z`
    Identity {},
    /// `z^k`
    Power { k: u32 },
    /// `P/Q`, coefficients in ascending order.
    Rational {
        numerator: Vec<Coefficient>,
        denominator: Vec<Coefficient>,
    },
    Constant {
        value: ExtendedPoint,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    /// `sn²` on the lattice spanned by two generators.
    Elliptic {
        #[serde(default = "default_generators")]
        generators: [[f64; 2]; 2],
    },
    Winding {
        k: u32,
        #[serde(default = "two")]
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distortion: Option<f64>,
    },
    Zorich {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distortion: Option<f64>,
    },
}

/// A complete map description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value")]
pub struct MapDescriptor {
    #[serde(flatten)]
    pub kind: MapKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre: Option<AffineBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post: Option<AffineBlock>,
}

impl TryFrom<Value> for MapDescriptor {
    type Error = String;

    fn try_from(v: Value) -> std::result::Result<Self, String> {
        let Value::Object(mut obj) = v else {
            return Err("map descriptor must be an object".into());
        };
        let take = |obj: &mut serde_json::Map<String, Value>, key: &str| -> std::result::Result<Option<AffineBlock>, String> {
            obj.remove(key)
                .map(|b| serde_json::from_value(b).map_err(|e| format!("{key}: {e}")))
                .transpose()
        };
        let pre = take(&mut obj, "pre")?;
        let post = take(&mut obj, "post")?;
        let kind: MapKind = serde_json::from_value(Value::Object(obj)).map_err(|e| e.to_string())?;
        Ok(MapDescriptor { kind, pre, post })
    }
}

impl From<MapKind> for MapDescriptor {
    fn from(kind: MapKind) -> Self {
        MapDescriptor {
            kind,
            pre: None,
            post: None,
        }
    }
}

impl MapDescriptor {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            if let Some(tag) = msg
                .strip_prefix("unknown variant `")
                .and_then(|r| r.split('`').next())
            {
                Error::UnknownKind(tag.to_string())
            } else {
                Error::param("map", msg)
            }
        })
    }

    pub fn exponential() -> Self {
        MapKind::Exponential {}.into()
    }

    pub fn exp_square() -> Self {
        MapKind::ExpSquare {}.into()
    }

    pub fn identity() -> Self {
        MapKind::Identity {}.into()
    }

    pub fn sine() -> Self {
        MapKind::Sine {}.into()
    }

    pub fn power(k: u32) -> Self {
        MapKind::Power { k }.into()
    }

    pub fn elliptic() -> Self {
        MapKind::Elliptic {
            generators: default_generators(),
        }
        .into()
    }

    pub fn constant(value: ExtendedPoint) -> Self {
        MapKind::Constant { value, dim: None }.into()
    }

    pub fn rational(numerator: &[f64], denominator: &[f64]) -> Self {
        MapKind::Rational {
            numerator: numerator.iter().map(|&c| Coefficient::Real(c)).collect(),
            denominator: denominator.iter().map(|&c| Coefficient::Real(c)).collect(),
        }
        .into()
    }

    pub fn winding(k: u32, dim: usize) -> Self {
        MapKind::Winding {
            k,
            dim,
            distortion: None,
        }
        .into()
    }

    pub fn zorich() -> Self {
        MapKind::Zorich { distortion: None }.into()
    }
}

/// One row of the zoo catalog.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub kind: &'static str,
    pub parameters: &'static str,
    pub dim: &'static str,
    pub distortion: &'static str,
    pub jacobian: bool,
    pub apoints: &'static str,
    pub note: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            kind: "exponential",
            parameters: "",
            dim: "2",
            distortion: "1",
            jacobian: true,
            apoints: "analytic: log a + 2πik",
            note: "Yosida, not of first order; omits 0 and ∞",
        },
        CatalogEntry {
            kind: "sine",
            parameters: "",
            dim: "2",
            distortion: "1",
            jacobian: true,
            apoints: "analytic: asin a + 2πk, π − asin a + 2πk",
            note: "Yosida",
        },
        CatalogEntry {
            kind: "exp_square",
            parameters: "",
            dim: "2",
            distortion: "1",
            jacobian: true,
            apoints: "closed form only for the quadratic-in-exponent family z = ±√(log a + 2πik); no general analytic enumerator",
            note: "not Yosida",
        },
        CatalogEntry {
            kind: "identity",
            parameters: "",
            dim: "2",
            distortion: "1",
            jacobian: true,
            apoints: "analytic",
            note: "",
        },
        CatalogEntry {
            kind: "power",
            parameters: "k ≥ 1",
            dim: "2",
            distortion: "1",
            jacobian: true,
            apoints: "analytic: k-th roots",
            note: "",
        },
        CatalogEntry {
            kind: "rational",
            parameters: "numerator, denominator (ascending coefficients, real or [re, im])",
            dim: "2",
            distortion: "1",
            jacobian: true,
            apoints: "analytic: roots of P − aQ",
            note: "common roots rejected",
        },
        CatalogEntry {
            kind: "constant",
            parameters: "value, dim",
            dim: "n",
            distortion: "1",
            jacobian: true,
            apoints: "analytic (empty)",
            note: "",
        },
        CatalogEntry {
            kind: "elliptic",
            parameters: "generators [[re, im], [re, im]] (default 2, 2i)",
            dim: "2",
            distortion: "1",
            jacobian: true,
            apoints: "analytic: ±z₀ + lattice",
            note: "sn² on the lattice; degree per cell d = 2",
        },
        CatalogEntry {
            kind: "winding",
            parameters: "k ≥ 1, dim ≥ 2, distortion",
            dim: "n",
            distortion: "k^(n-1) unless configured",
            jacobian: true,
            apoints: "analytic",
            note: "declared distortion",
        },
        CatalogEntry {
            kind: "zorich",
            parameters: "distortion",
            dim: "3",
            distortion: "4 unless configured",
            jacobian: false,
            apoints: "none",
            note: "periods 4e₁, 4e₂; declared distortion",
        },
    ]
}

fn planar(label: &str, kernel: Arc<dyn super::MapKernel>) -> Result<Mapping> {
    Mapping::new(label, 1.0, kernel)
}

fn build_kind(kind: &MapKind) -> Result<Mapping> {
    Ok(match kind {
        MapKind::Exponential {} => planar("exp", holo_map(Exponential))?.with_meta(MapMeta {
            periods: vec![vec![0.0, TAU]],
            ..MapMeta::default()
        }),
        MapKind::Sine {} => planar("sin", holo_map(Sine))?.with_meta(MapMeta {
            periods: vec![vec![TAU, 0.0]],
            ..MapMeta::default()
        }),
        MapKind::ExpSquare {} => planar("exp_square", holo_map(ExpSquare))?,
        MapKind::Identity {} => planar("identity", holo_map(Power { k: 1 }))?,
        MapKind::Power { k } => {
            if *k == 0 {
                return Err(Error::param("k", "power must be ≥ 1"));
            }
            if *k > 64 {
                return Err(Error::param("k", "power must be ≤ 64"));
            }
            planar(&format!("z^{k}"), holo_map(Power { k: *k }))?
        }
        MapKind::Rational {
            numerator,
            denominator,
        } => {
            if numerator.is_empty() || denominator.is_empty() {
                return Err(Error::param("rational", "coefficient lists must be non-empty"));
            }
            let p = Polynomial::new(numerator.iter().map(|c| c.to_complex()).collect());
            let q = Polynomial::new(denominator.iter().map(|c| c.to_complex()).collect());
            let r = Rational::new(p, q)?;
            let label = format!("rational(deg {})", r.degree());
            planar(&label, holo_map(r))?
        }
        MapKind::Constant { value, dim } => {
            let d = match (value.dim(), dim) {
                (Some(a), Some(b)) if a != *b => {
                    return Err(Error::DimensionMismatch { expected: *b, got: a })
                }
                (Some(a), _) => a,
                (None, Some(b)) => *b,
                (None, None) => 2,
            };
            if d < 2 {
                return Err(Error::param("dim", "n ≥ 2 required"));
            }
            Mapping::new(
                "constant",
                1.0,
                Arc::new(Constant {
                    dim: d,
                    value: value.clone(),
                }),
            )?
        }
        MapKind::Elliptic { generators } => {
            let [[a, b], [c, d]] = *generators;
            let f = EllipticSn2::new(Complex64::new(a, b), Complex64::new(c, d))?;
            let (w1, w2) = f.periods();
            let meta = MapMeta {
                periods: vec![vec![w1.re, w1.im], vec![w2.re, w2.im]],
                cell_volume: Some(f.cell_area()),
                degree_per_cell: Some(2),
                scale_factor: None,
            };
            planar("elliptic sn²", holo_map(f))?.with_meta(meta)
        }
        MapKind::Winding { k, dim, distortion } => {
            if *k == 0 {
                return Err(Error::param("k", "winding number must be ≥ 1"));
            }
            if *dim < 2 {
                return Err(Error::param("dim", "n ≥ 2 required"));
            }
            let kk = distortion.unwrap_or_else(|| (*k as f64).powi(*dim as i32 - 1));
            Mapping::new(format!("winding(k={k}, n={dim})"), kk, Arc::new(Winding { dim: *dim, k: *k }))?
        }
        MapKind::Zorich { distortion } => {
            let kk = distortion.unwrap_or(ZORICH_DEFAULT_DISTORTION);
            Mapping::new("zorich", kk, Arc::new(Zorich))?.with_meta(MapMeta {
                periods: vec![vec![4.0, 0.0, 0.0], vec![0.0, 4.0, 0.0]],
                cell_volume: None,
                degree_per_cell: None,
                scale_factor: None,
            })
        }
    })
}

pub(crate) fn build(desc: &MapDescriptor) -> Result<Mapping> {
    let base = build_kind(&desc.kind)?;
    if desc.pre.is_none() && desc.post.is_none() {
        return Ok(base);
    }
    affine_compose(&base, desc.pre.as_ref(), desc.post.as_ref())
}
