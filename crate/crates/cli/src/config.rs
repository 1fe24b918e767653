//! Experiment configuration: strict JSON with defaults resolved in place.
//!
//! [`parse_config`] reads the document, rejects unknown keys, fills every
//! default that depends on the map (dimension, grid step, Hölder ladder)
//! and checks each numeric parameter against the precondition of the
//! module that will consume it. The resolved config is what reports echo,
//! so a report can be re-run from its own `config` block.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qrlab_core::counting::dyadic_radii;
use qrlab_core::hoelder::HoelderConfig;
use qrlab_core::sequence::{MpOptions, PointSequence};
use qrlab_core::sphere::{norm, typical_spacing};
use qrlab_core::zoo::make_zoo_map;
use qrlab_core::{ExtendedPoint, MapDescriptor, Mapping};

/// Grids larger than this are refused before any evaluation starts.
pub const MAX_GRID_POINTS: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Malformed document, unknown key or wrong type.
    Parse(String),
    /// Well-formed but violates a precondition.
    Field { path: String, reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "config parse error: {m}"),
            ConfigError::Field { path, reason } => write!(f, "invalid config field `{path}`: {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn field(path: impl Into<String>, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Field {
        path: path.into(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Required by every kind except `seqdist`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapDescriptor>,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub plot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            plot: false,
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("qrlab-out")
}

/// Axis-aligned grid of spacing `step` covering `center ± half_width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default = "d_half_width")]
    pub half_width: f64,
    /// 0.5 in the plane, 2.5 in higher dimensions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            center: None,
            half_width: d_half_width(),
            step: None,
        }
    }
}

fn d_half_width() -> f64 {
    20.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoelderSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
}

/// `count` log-spaced points `t·u`, `t ∈ [from, to]`, along the unit
/// vector `u` (the normalised diagonal by default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(default = "d_from")]
    pub from: f64,
    #[serde(default = "d_to")]
    pub to: f64,
    #[serde(default = "d_count")]
    pub count: usize,
}

impl Default for RaySpec {
    fn default() -> Self {
        RaySpec {
            direction: None,
            from: d_from(),
            to: d_to(),
            count: d_count(),
        }
    }
}

fn d_from() -> f64 {
    20.0
}
fn d_to() -> f64 {
    2000.0
}
fn d_count() -> usize {
    20
}

/// A generator expression in `m` truncated at `truncation` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    pub generator: String,
    pub truncation: usize,
    /// Defaults to the map dimension, or 2 without a map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpSearch {
    #[serde(default = "d_eps_cover")]
    pub eps_cover: f64,
    #[serde(default = "d_eps_cluster")]
    pub eps_cluster: f64,
    #[serde(default = "d_cloud")]
    pub cloud: usize,
    #[serde(default = "d_starts")]
    pub starts: usize,
    #[serde(default = "d_max_evals")]
    pub max_evals: usize,
}

impl Default for MpSearch {
    fn default() -> Self {
        MpSearch {
            eps_cover: d_eps_cover(),
            eps_cluster: d_eps_cluster(),
            cloud: d_cloud(),
            starts: d_starts(),
            max_evals: d_max_evals(),
        }
    }
}

fn d_eps_cover() -> f64 {
    MpOptions::default().eps_cover
}
fn d_eps_cluster() -> f64 {
    MpOptions::default().eps_cluster
}
fn d_cloud() -> usize {
    MpOptions::default().cloud
}
fn d_starts() -> usize {
    MpOptions::default().starts
}
fn d_max_evals() -> usize {
    MpOptions::default().max_evals
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverSpec {
    #[serde(default = "d_cover_samples")]
    pub samples: usize,
    #[serde(default = "d_max_evaluations")]
    pub max_evaluations: usize,
    #[serde(default = "d_grid_values")]
    pub grid_values: usize,
    #[serde(default = "d_eps_cluster")]
    pub eps_cluster: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter_bounds: Option<Vec<f64>>,
}

impl Default for CoverSpec {
    fn default() -> Self {
        CoverSpec {
            samples: d_cover_samples(),
            max_evaluations: d_max_evaluations(),
            grid_values: d_grid_values(),
            eps_cluster: d_eps_cluster(),
            diameter_bounds: None,
        }
    }
}

fn d_cover_samples() -> usize {
    20_000
}
fn d_max_evaluations() -> usize {
    4_000_000
}
fn d_grid_values() -> usize {
    500
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AfrRoute {
    /// Monte Carlo over the chordal measure of values.
    #[default]
    Sphere,
    /// Jacobian integral over nested balls.
    Domain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicSpec {
    pub start: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethodSpec {
    #[default]
    Auto,
    Analytic,
    ArgumentPrinciple,
}

/// One explicit `n(a, r, value)` probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub value: ExtendedPoint,
    #[serde(default)]
    pub method: CountMethodSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Qfield {
        #[serde(default)]
        grid: GridSpec,
        #[serde(default)]
        hoelder: HoelderSpec,
    },
    Yosida {
        #[serde(default)]
        grid: GridSpec,
        #[serde(default)]
        hoelder: HoelderSpec,
        /// Optional ray along which the Q-field trend is recorded.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<RaySpec>,
    },
    Pyosida {
        p: f64,
        #[serde(default)]
        anchors: RaySpec,
        #[serde(default)]
        hoelder: HoelderSpec,
    },
    Seqdist {
        x: SequenceSpec,
        y: SequenceSpec,
        #[serde(default = "d_p")]
        p: f64,
        #[serde(default = "d_epsilon")]
        epsilon: f64,
    },
    Mpdetect {
        sequence: SequenceSpec,
        #[serde(default = "d_p")]
        p: f64,
        #[serde(default = "d_delta")]
        delta: f64,
        #[serde(default = "d_grid_values")]
        grid_size: usize,
        #[serde(default = "d_l")]
        l: usize,
        #[serde(default)]
        search: MpSearch,
    },
    Mucheck {
        sequence: SequenceSpec,
        #[serde(default = "d_p")]
        p: f64,
        #[serde(default = "d_mu_radii")]
        radii: Vec<f64>,
        #[serde(default = "d_l")]
        l: usize,
        #[serde(default)]
        cover: CoverSpec,
    },
    Separation {
        values: Vec<ExtendedPoint>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default = "d_sep_radii")]
        radii: Vec<f64>,
        #[serde(default = "d_p")]
        p: f64,
    },
    Afr {
        #[serde(default)]
        method: AfrRoute,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        /// Explicit increasing radii; exclusive with `dyadic`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radii: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dyadic: Option<DyadicSpec>,
        #[serde(default = "d_afr_samples")]
        samples: usize,
        #[serde(default = "d_true")]
        fit: bool,
    },
    Oscillation {
        #[serde(default = "d_osc_radii")]
        radii: Vec<f64>,
        #[serde(default)]
        grid: GridSpec,
        /// Also report the infimum over the grid at this radius.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_radius: Option<f64>,
    },
    Nprobe {
        #[serde(default = "d_np_radius")]
        radius: f64,
        #[serde(default = "d_np_half")]
        half_width: f64,
        #[serde(default = "d_np_samples")]
        samples: usize,
        #[serde(default)]
        probes: Vec<ProbeSpec>,
    },
}

fn d_p() -> f64 {
    2.0
}
fn d_epsilon() -> f64 {
    1e-3
}
fn d_delta() -> f64 {
    1.0
}
fn d_l() -> usize {
    2
}
fn d_mu_radii() -> Vec<f64> {
    vec![1.0]
}
fn d_sep_radii() -> Vec<f64> {
    vec![10.0, 20.0, 40.0]
}
fn d_afr_samples() -> usize {
    20_000
}
fn d_true() -> bool {
    true
}
fn d_osc_radii() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}
fn d_np_radius() -> f64 {
    0.5
}
fn d_np_half() -> f64 {
    50.0
}
fn d_np_samples() -> usize {
    1000
}

impl Experiment {
    /// The subcommand name for this kind.
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Qfield { .. } => "qfield",
            Experiment::Yosida { .. } => "yosida",
            Experiment::Pyosida { .. } => "pyosida",
            Experiment::Seqdist { .. } => "seqdist",
            Experiment::Mpdetect { .. } => "mpdetect",
            Experiment::Mucheck { .. } => "mucheck",
            Experiment::Separation { .. } => "separation",
            Experiment::Afr { .. } => "afr",
            Experiment::Oscillation { .. } => "oscillation",
            Experiment::Nprobe { .. } => "nprobe",
        }
    }
}

/// Parses and validates a config document, resolving defaults in place.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            ConfigError::Parse(inner.to_string())
        } else {
            ConfigError::Parse(format!("at `{path}`: {inner}"))
        }
    })?;
    cfg.resolve()?;
    Ok(cfg)
}

/// Reads and parses a config file.
pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(path, format!("{v} must be positive and finite")))
    }
}

fn at_least(path: &str, v: usize, min: usize) -> Result<(), ConfigError> {
    if v >= min {
        Ok(())
    } else {
        Err(field(path, format!("{v} is below the minimum {min}")))
    }
}

fn p_at_least_one(path: &str, p: f64) -> Result<(), ConfigError> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(field(path, format!("p = {p} must be at least 1")))
    }
}

fn point_of_dim(path: &str, x: &[f64], dim: usize) -> Result<(), ConfigError> {
    if x.len() != dim {
        return Err(field(path, format!("has {} coordinates, the map lives in dimension {dim}", x.len())));
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(field(path, "coordinates must be finite"));
    }
    Ok(())
}

fn value_of_dim(path: &str, v: &ExtendedPoint, dim: usize) -> Result<(), ConfigError> {
    match v.dim() {
        Some(d) if d != dim => Err(field(path, format!("has {d} coordinates, expected {dim}"))),
        _ => Ok(()),
    }
}

fn increasing(path: &str, r: &[f64], strict: bool) -> Result<(), ConfigError> {
    if r.is_empty() {
        return Err(field(path, "at least one radius required"));
    }
    for (i, &v) in r.iter().enumerate() {
        positive(&format!("{path}[{i}]"), v)?;
    }
    if strict && r.windows(2).any(|w| w[1] <= w[0]) {
        return Err(field(path, "radii must be strictly increasing"));
    }
    Ok(())
}

impl GridSpec {
    fn resolve(&mut self, path: &str, dim: usize) -> Result<(), ConfigError> {
        let center = self.center.get_or_insert_with(|| vec![0.0; dim]);
        point_of_dim(&format!("{path}.center"), center, dim)?;
        positive(&format!("{path}.half_width"), self.half_width)?;
        let step = *self.step.get_or_insert(if dim == 2 { 0.5 } else { 2.5 });
        positive(&format!("{path}.step"), step)?;
        let per_axis = self.per_axis();
        let total = (per_axis as f64).powi(dim as i32);
        if total > MAX_GRID_POINTS as f64 {
            return Err(field(
                format!("{path}.step"),
                format!("grid would hold {total:.0} points, the limit is {MAX_GRID_POINTS}"),
            ));
        }
        Ok(())
    }

    fn per_axis(&self) -> usize {
        2 * (self.half_width / self.step.unwrap_or(1.0) + 1e-9).floor() as usize + 1
    }

    /// Grid points in row-major order, last coordinate fastest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let center = self.center.clone().unwrap_or_default();
        let step = self.step.unwrap_or(1.0);
        let k = self.per_axis();
        let half = (k / 2) as f64;
        let dim = center.len();
        let total = k.pow(dim as u32);
        (0..total)
            .map(|mut idx| {
                let mut x = vec![0.0; dim];
                for j in (0..dim).rev() {
                    x[j] = center[j] + (((idx % k) as f64) - half) * step;
                    idx /= k;
                }
                x
            })
            .collect()
    }

    /// Points per axis.
    pub fn side(&self) -> usize {
        self.per_axis()
    }
}

impl RaySpec {
    fn resolve(&mut self, path: &str, dim: usize, min_ratio: f64) -> Result<(), ConfigError> {
        let dir = self
            .direction
            .get_or_insert_with(|| vec![1.0 / (dim as f64).sqrt(); dim]);
        point_of_dim(&format!("{path}.direction"), dir, dim)?;
        let len = norm(dir);
        if len == 0.0 {
            return Err(field(format!("{path}.direction"), "must be nonzero"));
        }
        for c in dir.iter_mut() {
            *c /= len;
        }
        positive(&format!("{path}.from"), self.from)?;
        positive(&format!("{path}.to"), self.to)?;
        if self.to < min_ratio * self.from || self.to <= self.from {
            return Err(field(
                format!("{path}.to"),
                format!("must exceed {min_ratio} × from = {}", min_ratio * self.from),
            ));
        }
        at_least(&format!("{path}.count"), self.count, 2)
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let dir = self.direction.clone().unwrap_or_default();
        let n = self.count.max(2);
        (0..n)
            .map(|i| {
                let t = self.from * (self.to / self.from).powf(i as f64 / (n - 1) as f64);
                dir.iter().map(|u| t * u).collect()
            })
            .collect()
    }
}

impl HoelderSpec {
    fn resolve(&mut self, path: &str, f: &Mapping) -> Result<(), ConfigError> {
        let base = HoelderConfig::for_mapping(f);
        let ladder = self.ladder.get_or_insert(base.ladder.clone()).clone();
        let dirs = *self.directions.get_or_insert(base.directions);
        base.with_ladder(ladder)
            .map_err(|e| field(format!("{path}.ladder"), e))?
            .with_directions(dirs)
            .map_err(|e| field(format!("{path}.directions"), e))?;
        Ok(())
    }

    pub fn build(&self, f: &Mapping, seed: u64) -> HoelderConfig {
        let base = HoelderConfig::for_mapping(f).with_seed(seed);
        HoelderConfig {
            ladder: self.ladder.clone().unwrap_or(base.ladder.clone()),
            directions: self.directions.unwrap_or(base.directions),
            ..base
        }
    }
}

impl SequenceSpec {
    fn resolve(&mut self, path: &str, map_dim: Option<usize>) -> Result<PointSequence, ConfigError> {
        let dim = *self.dim.get_or_insert(map_dim.unwrap_or(2));
        if let Some(n) = map_dim {
            if n != dim {
                return Err(field(format!("{path}.dim"), format!("{dim} differs from the map dimension {n}")));
            }
        }
        self.build().map_err(|e| field(path, e))
    }

    pub fn build(&self) -> qrlab_core::Result<PointSequence> {
        PointSequence::from_generator(&self.generator, self.dim.unwrap_or(2), self.truncation)
    }
}

impl ExperimentConfig {
    /// The map, built from its descriptor.
    pub fn mapping(&self) -> Result<Option<Mapping>, ConfigError> {
        self.map
            .as_ref()
            .map(|d| make_zoo_map(d).map_err(|e| field("map", e)))
            .transpose()
    }

    fn resolve(&mut self) -> Result<(), ConfigError> {
        let f = self.mapping()?;
        let needs_map = !matches!(self.experiment, Experiment::Seqdist { .. });
        let f = match (f, needs_map) {
            (Some(f), _) => Some(f),
            (None, true) => {
                return Err(field("map", format!("required for `{}` experiments", self.experiment.name())))
            }
            (None, false) => None,
        };
        let dim = f.as_ref().map(Mapping::dim);
        let e = "experiment";
        match &mut self.experiment {
            Experiment::Qfield { grid, hoelder } => {
                let f = f.as_ref().expect("map checked");
                grid.resolve(&format!("{e}.grid"), f.dim())?;
                hoelder.resolve(&format!("{e}.hoelder"), f)?;
            }
            Experiment::Yosida { grid, hoelder, path } => {
                let f = f.as_ref().expect("map checked");
                grid.resolve(&format!("{e}.grid"), f.dim())?;
                hoelder.resolve(&format!("{e}.hoelder"), f)?;
                if let Some(r) = path {
                    r.resolve(&format!("{e}.path"), f.dim(), 1.0)?;
                }
            }
            Experiment::Pyosida { p, anchors, hoelder } => {
                let f = f.as_ref().expect("map checked");
                if !(*p > 1.0 && p.is_finite()) {
                    return Err(field(format!("{e}.p"), format!("p = {p} must exceed 1")));
                }
                anchors.resolve(&format!("{e}.anchors"), f.dim(), 100.0)?;
                hoelder.resolve(&format!("{e}.hoelder"), f)?;
            }
            Experiment::Seqdist { x, y, p, epsilon } => {
                p_at_least_one(&format!("{e}.p"), *p)?;
                positive(&format!("{e}.epsilon"), *epsilon)?;
                let sx = x.resolve(&format!("{e}.x"), dim)?;
                let sy = y.resolve(&format!("{e}.y"), dim)?;
                if sx.dim() != sy.dim() {
                    return Err(field(format!("{e}.y.dim"), "x and y must share a dimension"));
                }
                if sx.truncation() != sy.truncation() {
                    return Err(field(format!("{e}.y.truncation"), "x and y must have the same truncation"));
                }
            }
            Experiment::Mpdetect {
                sequence,
                p,
                delta,
                grid_size,
                l,
                search,
            } => {
                p_at_least_one(&format!("{e}.p"), *p)?;
                positive(&format!("{e}.delta"), *delta)?;
                at_least(&format!("{e}.grid_size"), *grid_size, 2)?;
                at_least(&format!("{e}.l"), *l, 1)?;
                positive(&format!("{e}.search.eps_cover"), search.eps_cover)?;
                positive(&format!("{e}.search.eps_cluster"), search.eps_cluster)?;
                at_least(&format!("{e}.search.cloud"), search.cloud, 1)?;
                at_least(&format!("{e}.search.starts"), search.starts, 1)?;
                at_least(&format!("{e}.search.max_evals"), search.max_evals, 1)?;
                sequence.resolve(&format!("{e}.sequence"), dim)?;
            }
            Experiment::Mucheck {
                sequence,
                p,
                radii,
                l,
                cover,
            } => {
                let n = dim.expect("map checked");
                p_at_least_one(&format!("{e}.p"), *p)?;
                at_least(&format!("{e}.l"), *l, 1)?;
                let seq = sequence.resolve(&format!("{e}.sequence"), dim)?;
                increasing(&format!("{e}.radii"), radii, false)?;
                if radii.len() != 1 && radii.len() != seq.truncation() {
                    return Err(field(format!("{e}.radii"), "give one radius or one per sequence point"));
                }
                if radii.windows(2).any(|w| w[1] > w[0]) {
                    return Err(field(format!("{e}.radii"), "radius schedule must be nonincreasing"));
                }
                at_least(&format!("{e}.cover.samples"), cover.samples, 1)?;
                at_least(&format!("{e}.cover.max_evaluations"), cover.max_evaluations, cover.samples)?;
                positive(&format!("{e}.cover.eps_cluster"), cover.eps_cluster)?;
                at_least(&format!("{e}.cover.grid_values"), cover.grid_values, 2)?;
                let spacing = typical_spacing(n, cover.grid_values);
                if spacing > cover.eps_cluster {
                    return Err(field(
                        format!("{e}.cover.grid_values"),
                        format!("grid spacing {spacing:.4} exceeds eps_cluster {}", cover.eps_cluster),
                    ));
                }
                if let Some(b) = &cover.diameter_bounds {
                    let late = seq.truncation() - seq.late_start();
                    if b.len() != late || b.iter().any(|v| !(*v > 0.0)) {
                        return Err(field(
                            format!("{e}.cover.diameter_bounds"),
                            format!("need {late} positive bounds, one per late ball"),
                        ));
                    }
                }
            }
            Experiment::Separation {
                values,
                center,
                radii,
                p,
            } => {
                let f = f.as_ref().expect("map checked");
                p_at_least_one(&format!("{e}.p"), *p)?;
                if values.len() < 2 {
                    return Err(field(format!("{e}.values"), "at least two values required"));
                }
                for (i, v) in values.iter().enumerate() {
                    value_of_dim(&format!("{e}.values[{i}]"), v, f.dim())?;
                }
                let c = center.get_or_insert_with(|| vec![0.0; f.dim()]);
                point_of_dim(&format!("{e}.center"), c, f.dim())?;
                increasing(&format!("{e}.radii"), radii, false)?;
                if !f.has_enumerator() && !f.is_meromorphic() {
                    return Err(field("map", format!("{} has no a-point enumerator", f.label())));
                }
            }
            Experiment::Afr {
                method,
                center,
                radii,
                dyadic,
                samples,
                fit,
            } => {
                let f = f.as_ref().expect("map checked");
                let c = center.get_or_insert_with(|| vec![0.0; f.dim()]);
                point_of_dim(&format!("{e}.center"), c, f.dim())?;
                if *method == AfrRoute::Sphere && c.iter().any(|v| *v != 0.0) {
                    return Err(field(format!("{e}.center"), "the sphere route integrates over balls centred at 0"));
                }
                match (radii.as_ref(), dyadic.take()) {
                    (Some(_), Some(_)) => return Err(field(format!("{e}.dyadic"), "give either radii or dyadic")),
                    (None, Some(d)) => {
                        positive(&format!("{e}.dyadic.start"), d.start)?;
                        at_least(&format!("{e}.dyadic.count"), d.count, 1)?;
                        *radii = Some(dyadic_radii(d.start, d.count));
                    }
                    (None, None) => *radii = Some(dyadic_radii(2.5, 5)),
                    (Some(_), None) => {}
                }
                let r = radii.as_ref().expect("resolved");
                increasing(&format!("{e}.radii"), r, true)?;
                at_least(&format!("{e}.samples"), *samples, 1)?;
                if *fit && (r.len() < 5 || r[r.len() - 1] < 8.0 * r[0]) {
                    return Err(field(
                        format!("{e}.radii"),
                        "a growth fit needs at least 5 radii spanning a factor of 8; set fit = false otherwise",
                    ));
                }
                if *method == AfrRoute::Domain && !f.has_jacobian() {
                    return Err(field(format!("{e}.method"), format!("{} has no Jacobian", f.label())));
                }
            }
            Experiment::Oscillation { radii, grid, min_radius } => {
                let f = f.as_ref().expect("map checked");
                increasing(&format!("{e}.radii"), radii, false)?;
                grid.resolve(&format!("{e}.grid"), f.dim())?;
                if let Some(r) = min_radius {
                    positive(&format!("{e}.min_radius"), *r)?;
                }
            }
            Experiment::Nprobe {
                radius,
                half_width,
                samples,
                probes,
            } => {
                let f = f.as_ref().expect("map checked");
                positive(&format!("{e}.radius"), *radius)?;
                positive(&format!("{e}.half_width"), *half_width)?;
                at_least(&format!("{e}.samples"), *samples, 1)?;
                for (i, pr) in probes.iter().enumerate() {
                    let path = format!("{e}.probes[{i}]");
                    point_of_dim(&format!("{path}.center"), &pr.center, f.dim())?;
                    positive(&format!("{path}.radius"), pr.radius)?;
                    value_of_dim(&format!("{path}.value"), &pr.value, f.dim())?;
                    if pr.method == CountMethodSpec::Analytic && !f.has_enumerator() {
                        return Err(field(format!("{path}.method"), format!("{} has no enumerator", f.label())));
                    }
                }
            }
        }
        Ok(())
    }
}
