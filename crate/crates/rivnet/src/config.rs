//! Scenario documents.
//!
//! A scenario is a JSON object. Edge and vertex ids in documents and in every
//! output file are 1-based; the core library is 0-based internally.
//!
//! ```json
//! {
//!   "id": "large-river-q005",
//!   "network": {
//!     "preset": "1",
//!     "total_length": 1600,
//!     "defaults": { "diffusion": 0.6, "growth": 9.259e-6, "mortality": 6.944e-7 }
//!   },
//!   "hydrology": {
//!     "defaults": { "width": 20, "roughness": 0.2, "slope": 1e-6 },
//!     "discharge": { "1": 0.05 }
//!   },
//!   "boundary": "ZF-FF",
//!   "target_h": 2
//! }
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rivnet_core::graph::{build_network, BoundaryAssignment, BoundaryKind, NetworkError};
use rivnet_core::hydrology::{apply_hydrology, ChannelInput, HydrologyError};
use rivnet_core::presets::{preset_network, PresetError};
use rivnet_core::{BoundarySet, EdgeParams, FlowRegime, NetworkSpec, Preset, RiverNetwork, SharedParams};
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

pub const DEFAULT_TARGET_H: f64 = 2.0;
/// Rates above this (1/s) are almost certainly per-day values left unconverted.
pub const RATE_WARNING: f64 = 1e-2;
pub const VELOCITY_WARNING: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::SchemaViolation { .. } => "SchemaViolation",
            ConfigError::UnknownPreset(_) => "UnknownPreset",
            ConfigError::Io { .. } => "Io",
        }
    }

    pub fn path(&self) -> &str {
        match self {
            ConfigError::SchemaViolation { path, .. } | ConfigError::Io { path, .. } => path,
            ConfigError::UnknownPreset(_) => "network.preset",
        }
    }
}

fn violation(path: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError::SchemaViolation { path: path.into(), message: message.to_string() }
}

/// Non-fatal finding about a document.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRangeWarning {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Validate,
    Lambda,
    R0,
    Steady,
    Simulate,
    Sweep,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Validate => "validate",
            Task::Lambda => "lambda",
            Task::R0 => "r0",
            Task::Steady => "steady",
            Task::Simulate => "simulate",
            Task::Sweep => "sweep",
        }
    }
}

impl FromStr for Task {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Task::Validate, Task::Lambda, Task::R0, Task::Steady, Task::Simulate, Task::Sweep]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| violation("task", format!("unknown task {s:?}")))
    }
}

// Raw document layout.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    id: Option<String>,
    task: Option<String>,
    network: Option<NetworkDoc>,
    hydrology: Option<HydrologyDoc>,
    boundary: Option<BoundaryDoc>,
    target_h: Option<f64>,
    simulate: Option<SimulateDoc>,
    sweep: Option<SweepDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    preset: Option<String>,
    branch_length: Option<f64>,
    total_length: Option<f64>,
    regime: Option<RegimeDoc>,
    vertices: Option<usize>,
    edges: Option<Vec<(usize, usize, f64)>>,
    #[serde(default)]
    defaults: ParamsDoc,
    #[serde(default)]
    overrides: BTreeMap<String, ParamsDoc>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RegimeDoc {
    AreaFixed,
    VelocityFixed,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    diffusion: Option<f64>,
    velocity: Option<f64>,
    area: Option<f64>,
    growth: Option<f64>,
    mortality: Option<f64>,
    capacity: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HydrologyDoc {
    #[serde(default)]
    defaults: ChannelDoc,
    #[serde(default)]
    edges: BTreeMap<String, ChannelDoc>,
    #[serde(default)]
    discharge: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDoc {
    width: Option<f64>,
    roughness: Option<f64>,
    slope: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum BoundaryDoc {
    Set(String),
    PerVertex(PerVertexDoc),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerVertexDoc {
    default: Option<String>,
    #[serde(default)]
    vertices: BTreeMap<String, VertexConditionDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexConditionDoc {
    kind: String,
    alpha: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateDoc {
    t_end: f64,
    dt: f64,
    theta: Option<f64>,
    samples: Option<usize>,
    initial: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDoc {
    presets: Option<Vec<String>>,
    #[serde(default)]
    axes: Vec<AxisDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisDoc {
    name: Option<String>,
    path: Option<String>,
    paths: Option<Vec<String>>,
    min: Option<f64>,
    max: Option<f64>,
    count: Option<usize>,
    scale: Option<String>,
    values: Option<Vec<f64>>,
}

// Validated scenario.

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSpec {
    pub t_end: f64,
    pub dt: f64,
    pub theta: f64,
    pub samples: usize,
    pub initial: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    /// Column header.
    pub name: String,
    /// Dotted document paths set to each value together.
    pub paths: Vec<String>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub presets: Option<Vec<Preset>>,
    pub axes: Vec<Axis>,
}

impl SweepSpec {
    pub fn point_count(&self) -> usize {
        self.presets.as_ref().map_or(1, Vec::len) * self.axes.iter().map(|a| a.values.len()).product::<usize>()
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub task: Option<Task>,
    pub preset: Option<Preset>,
    pub network: RiverNetwork,
    /// Per-edge discharge when hydrology was given, m³/s.
    pub discharges: Option<Vec<f64>>,
    pub target_h: f64,
    pub simulate: Option<SimulateSpec>,
    pub sweep: Option<SweepSpec>,
    /// The document the scenario was loaded from.
    pub document: Value,
    pub warnings: Vec<UnitRangeWarning>,
}

pub fn parse_json(text: &str) -> Result<Value, ConfigError> {
    serde_json::from_str(text).map_err(|e| violation("", format!("invalid JSON: {e}")))
}

pub fn load_config_file(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let mut doc = parse_json(&text)?;
    if let Some(obj) = doc.as_object_mut() {
        if !obj.contains_key("id") {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            obj.insert("id".into(), Value::String(stem));
        }
    }
    load_config(&doc)
}

pub fn load_config_str(text: &str) -> Result<Scenario, ConfigError> {
    load_config(&parse_json(text)?)
}

/// Validate a document and build its network.
pub fn load_config(document: &Value) -> Result<Scenario, ConfigError> {
    let doc: Document = serde_path_to_error::deserialize(document).map_err(|e| {
        let mut path = e.path().to_string();
        if path == "." {
            path.clear();
        }
        let inner = e.into_inner().to_string();
        // Missing fields are reported at the parent; point at the field itself.
        if let Some(rest) = inner.strip_prefix("missing field `") {
            if let Some(field) = rest.split('`').next() {
                path = if path.is_empty() { field.to_string() } else { format!("{path}.{field}") };
            }
        }
        violation(path, inner)
    })?;
    let mut warnings = Vec::new();

    let task = doc.task.as_deref().map(str::parse).transpose()?;
    let net_doc = doc.network.as_ref().ok_or_else(|| violation("network", "missing field `network`"))?;
    let boundary = match &doc.boundary {
        None => return Err(violation("boundary", "missing field `boundary`")),
        Some(b) => boundary_assignment(b)?,
    };
    let (preset, network) = build_topology(net_doc, boundary, &mut warnings)?;
    let (network, discharges) = match &doc.hydrology {
        Some(h) => {
            let (n, q) = hydrology(&network, h)?;
            (n, Some(q))
        }
        None => (network, None),
    };
    for (j, p) in network.params().iter().enumerate() {
        let at = |field: &str| format!("network.edges.{}.{field}", j + 1);
        for (name, value) in [("growth", p.growth), ("mortality", p.mortality)] {
            if value > RATE_WARNING {
                warnings.push(UnitRangeWarning {
                    path: at(name),
                    message: format!("{name} = {value} 1/s is implausibly large; rates are per second"),
                });
            }
        }
        if p.velocity > VELOCITY_WARNING {
            warnings.push(UnitRangeWarning { path: at("velocity"), message: format!("velocity = {} m/s", p.velocity) });
        }
    }

    let target_h = doc.target_h.unwrap_or(DEFAULT_TARGET_H);
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(violation("target_h", "must be positive"));
    }
    let simulate = doc.simulate.as_ref().map(simulate_spec).transpose()?;
    let sweep = doc.sweep.as_ref().map(|s| sweep_spec(s, document, net_doc)).transpose()?;
    match task {
        Some(Task::Sweep) if sweep.is_none() => return Err(violation("sweep", "task sweep needs a sweep block")),
        Some(Task::Simulate) if simulate.is_none() => {
            return Err(violation("simulate", "task simulate needs a simulate block"))
        }
        _ => {}
    }

    Ok(Scenario {
        id: doc.id.clone().unwrap_or_else(|| "scenario".into()),
        task,
        preset,
        network,
        discharges,
        target_h,
        simulate,
        sweep,
        document: document.clone(),
        warnings,
    })
}

fn boundary_set(name: &str, path: &str) -> Result<BoundarySet, ConfigError> {
    name.parse().map_err(|_| violation(path, format!("unknown boundary set {name:?} (expected ZF-FF, ZF-H or H-H)")))
}

fn boundary_assignment(doc: &BoundaryDoc) -> Result<BoundaryAssignment, ConfigError> {
    match doc {
        BoundaryDoc::Set(name) => Ok(boundary_set(name, "boundary")?.into()),
        BoundaryDoc::PerVertex(pv) => {
            let default = pv.default.as_deref().map(|d| boundary_set(d, "boundary.default")).transpose()?;
            let mut conditions = BTreeMap::new();
            for (key, c) in &pv.vertices {
                let path = format!("boundary.vertices.{key}");
                let id = one_based(key, &path)?;
                let kind = match c.kind.as_str() {
                    "zero-flux" => BoundaryKind::ZeroFlux,
                    "free-flow" => BoundaryKind::FreeFlow,
                    "hostile" => BoundaryKind::Hostile,
                    "robin" => match (c.alpha, c.beta) {
                        (Some(alpha), Some(beta)) => BoundaryKind::Robin { alpha, beta },
                        _ => return Err(violation(path, "robin needs alpha and beta")),
                    },
                    other => return Err(violation(format!("{path}.kind"), format!("unknown kind {other:?}"))),
                };
                conditions.insert(id, kind);
            }
            Ok(BoundaryAssignment::PerVertex { conditions, default })
        }
    }
}

fn one_based(key: &str, path: &str) -> Result<usize, ConfigError> {
    match key.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k - 1),
        _ => Err(violation(path, format!("{key:?} is not a 1-based id"))),
    }
}

fn positive(value: Option<f64>, path: &str) -> Result<Option<f64>, ConfigError> {
    match value {
        Some(v) if !(v > 0.0) || !v.is_finite() => Err(violation(path, format!("must be positive, got {v}"))),
        other => Ok(other),
    }
}

fn nonnegative(value: Option<f64>, path: &str) -> Result<Option<f64>, ConfigError> {
    match value {
        Some(v) if !(v >= 0.0) || !v.is_finite() => Err(violation(path, format!("must be non-negative, got {v}"))),
        other => Ok(other),
    }
}

fn check_params(p: &ParamsDoc, path: &str) -> Result<(), ConfigError> {
    positive(p.diffusion, &format!("{path}.diffusion"))?;
    positive(p.area, &format!("{path}.area"))?;
    positive(p.capacity, &format!("{path}.capacity"))?;
    nonnegative(p.velocity, &format!("{path}.velocity"))?;
    nonnegative(p.growth, &format!("{path}.growth"))?;
    nonnegative(p.mortality, &format!("{path}.mortality"))?;
    Ok(())
}

/// Describe a network error with 1-based ids.
pub fn describe_network_error(e: &NetworkError) -> String {
    match *e {
        NetworkError::UnknownVertex { edge, vertex, vertex_count } => {
            format!("edge {} references vertex {}, but only {vertex_count} vertices exist", edge + 1, vertex + 1)
        }
        NetworkError::SelfLoop { edge, vertex } => format!("edge {} starts and ends at vertex {}", edge + 1, vertex + 1),
        NetworkError::CycleDetected { edge } => format!("edge {} closes a cycle", edge + 1),
        NetworkError::Disconnected { vertex } => format!("vertex {} is not connected to vertex 1", vertex + 1),
        NetworkError::NonpositiveLength { edge, length } => format!("edge {} has non-positive length {length}", edge + 1),
        NetworkError::InvalidParameter { edge, name, value } => {
            format!("edge {}: {name} = {value} is out of range", edge + 1)
        }
        NetworkError::FlowConservationViolated { vertex, residual } => {
            format!("flow not conserved at junction {}: residual {residual:e} m³/s", vertex + 1)
        }
        NetworkError::InvalidRobinPair { vertex, alpha, beta } => {
            format!("invalid Robin pair (alpha = {alpha}, beta = {beta}) at vertex {}", vertex + 1)
        }
        NetworkError::MissingBoundaryCondition { vertex } => {
            format!("boundary vertex {} has no boundary condition", vertex + 1)
        }
        NetworkError::BoundaryOnJunction { vertex } => {
            format!("vertex {} is a junction and cannot carry a boundary condition", vertex + 1)
        }
        ref other => other.to_string(),
    }
}

fn network_error(e: NetworkError) -> ConfigError {
    let path = match e {
        NetworkError::InvalidRobinPair { .. }
        | NetworkError::MissingBoundaryCondition { .. }
        | NetworkError::BoundaryOnJunction { .. } => "boundary",
        _ => "network",
    };
    violation(path, describe_network_error(&e))
}

fn build_topology(
    doc: &NetworkDoc,
    boundary: BoundaryAssignment,
    warnings: &mut Vec<UnitRangeWarning>,
) -> Result<(Option<Preset>, RiverNetwork), ConfigError> {
    check_params(&doc.defaults, "network.defaults")?;
    let d = &doc.defaults;
    let require = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| violation(format!("network.defaults.{name}"), format!("missing field `{name}`")))
    };
    let (preset, mut network) = match (&doc.preset, &doc.edges) {
        (Some(_), Some(_)) => return Err(violation("network", "give either preset or edges, not both")),
        (None, None) => return Err(violation("network", "missing field `preset` (or explicit `edges`)")),
        (Some(name), None) => {
            let preset: Preset = name.parse().map_err(|e: PresetError| match e {
                PresetError::UnknownPreset(n) => ConfigError::UnknownPreset(n),
                PresetError::Network(n) => network_error(n),
            })?;
            let branch = match (positive(doc.branch_length, "network.branch_length")?, positive(doc.total_length, "network.total_length")?) {
                (Some(b), None) => b,
                (None, Some(t)) => t / preset.edge_count() as f64,
                _ => return Err(violation("network", "give exactly one of branch_length and total_length")),
            };
            let shared = SharedParams {
                diffusion: require(d.diffusion, "diffusion")?,
                growth: require(d.growth, "growth")?,
                mortality: require(d.mortality, "mortality")?,
                capacity: d.capacity.unwrap_or(1.0),
                base_velocity: d.velocity.unwrap_or(0.0),
                base_area: d.area.unwrap_or(1.0),
                regime: match doc.regime.unwrap_or(RegimeDoc::AreaFixed) {
                    RegimeDoc::AreaFixed => FlowRegime::AreaFixed,
                    RegimeDoc::VelocityFixed => FlowRegime::VelocityFixed,
                },
            };
            let net = preset_network(preset, branch, &shared, boundary).map_err(|e| match e {
                PresetError::Network(n) => network_error(n),
                other => violation("network", other),
            })?;
            (Some(preset), net)
        }
        (None, Some(edges)) => {
            if doc.branch_length.is_some() || doc.total_length.is_some() || doc.regime.is_some() {
                return Err(violation("network", "lengths and regime belong to presets; explicit edges carry their own"));
            }
            let vertex_count = doc.vertices.ok_or_else(|| violation("network.vertices", "missing field `vertices`"))?;
            let mut list = Vec::with_capacity(edges.len());
            for (k, &(t, h, l)) in edges.iter().enumerate() {
                if t == 0 || h == 0 {
                    return Err(violation(format!("network.edges.{}", k + 1), "vertex ids are 1-based"));
                }
                list.push((t - 1, h - 1, l));
            }
            let base = EdgeParams {
                diffusion: require(d.diffusion, "diffusion")?,
                velocity: 0.0,
                area: d.area.unwrap_or(1.0),
                growth: require(d.growth, "growth")?,
                mortality: require(d.mortality, "mortality")?,
                capacity: d.capacity.unwrap_or(1.0),
            };
            let params = vec![base; list.len()];
            let net = build_network(NetworkSpec { vertex_count, edges: list, params, boundary }).map_err(network_error)?;
            if let Some(v) = d.velocity {
                let mut p = net.params().to_vec();
                for q in &mut p {
                    q.velocity = v;
                }
                let net = net.with_params(p).map_err(network_error)?;
                (None, net)
            } else {
                (None, net)
            }
        }
    };

    if !doc.overrides.is_empty() {
        let mut params = network.params().to_vec();
        for (key, o) in &doc.overrides {
            let path = format!("network.overrides.{key}");
            let j = one_based(key, &path)?;
            if j >= params.len() {
                return Err(violation(path, format!("network has {} edges", params.len())));
            }
            check_params(o, &path)?;
            let p = &mut params[j];
            p.diffusion = o.diffusion.unwrap_or(p.diffusion);
            p.velocity = o.velocity.unwrap_or(p.velocity);
            p.area = o.area.unwrap_or(p.area);
            p.growth = o.growth.unwrap_or(p.growth);
            p.mortality = o.mortality.unwrap_or(p.mortality);
            p.capacity = o.capacity.unwrap_or(p.capacity);
        }
        network = network.with_params(params).map_err(network_error)?;
    }
    let _ = warnings;
    Ok((preset, network))
}

fn hydrology(network: &RiverNetwork, doc: &HydrologyDoc) -> Result<(RiverNetwork, Vec<f64>), ConfigError> {
    let m = network.edge_count();
    let mut channels = vec![doc.defaults; m];
    for (key, c) in &doc.edges {
        let path = format!("hydrology.edges.{key}");
        let j = one_based(key, &path)?;
        if j >= m {
            return Err(violation(path, format!("network has {m} edges")));
        }
        let ch = &mut channels[j];
        ch.width = c.width.or(ch.width);
        ch.roughness = c.roughness.or(ch.roughness);
        ch.slope = c.slope.or(ch.slope);
    }
    let mut discharge = vec![None; m];
    for (key, &q) in &doc.discharge {
        let path = format!("hydrology.discharge.{key}");
        let j = one_based(key, &path)?;
        if j >= m {
            return Err(violation(path, format!("network has {m} edges")));
        }
        positive(Some(q), &path)?;
        discharge[j] = Some(q);
    }
    let mut inputs = Vec::with_capacity(m);
    for (j, c) in channels.iter().enumerate() {
        let field = |v: Option<f64>, name: &str| {
            let path = format!("hydrology.edges.{}.{name}", j + 1);
            positive(v, &path)?.ok_or_else(|| violation(path, format!("missing field `{name}`")))
        };
        inputs.push(ChannelInput {
            width: field(c.width, "width")?,
            roughness: field(c.roughness, "roughness")?,
            slope: field(c.slope, "slope")?,
            discharge: discharge[j],
        });
    }
    apply_hydrology(network, &inputs).map_err(|e| match e {
        HydrologyError::MissingUpstreamDischarge { edge } => {
            violation(format!("hydrology.discharge.{}", edge + 1), "missing discharge for an upstream edge")
        }
        HydrologyError::UnresolvedSplit { vertex } => violation(
            "hydrology.discharge",
            format!("junction {} splits flow; give all but one branch discharge", vertex + 1),
        ),
        HydrologyError::PropagationConflict { edge, given, propagated } => violation(
            format!("hydrology.discharge.{}", edge + 1),
            format!("given {given} but conservation requires {propagated}"),
        ),
        HydrologyError::Network(n) => network_error(n),
        other => violation("hydrology", other),
    })
}

fn simulate_spec(doc: &SimulateDoc) -> Result<SimulateSpec, ConfigError> {
    positive(Some(doc.t_end), "simulate.t_end")?;
    positive(Some(doc.dt), "simulate.dt")?;
    let theta = doc.theta.unwrap_or(1.0);
    if !(0.5..=1.0).contains(&theta) {
        return Err(violation("simulate.theta", "must lie in [0.5, 1]"));
    }
    let samples = doc.samples.unwrap_or(10);
    if samples == 0 {
        return Err(violation("simulate.samples", "must be at least 1"));
    }
    let initial = nonnegative(doc.initial, "simulate.initial")?.unwrap_or(0.1);
    Ok(SimulateSpec { t_end: doc.t_end, dt: doc.dt, theta, samples, initial })
}

/// The document path that sets total network length; it replaces
/// `network.branch_length` and need not be present beforehand.
pub const TOTAL_LENGTH_PATH: &str = "network.total_length";

/// Look up a dotted path of object keys.
pub fn lookup<'a>(doc: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(doc, |v, key| v.as_object()?.get(key))
}

fn sweep_spec(doc: &SweepDoc, document: &Value, network: &NetworkDoc) -> Result<SweepSpec, ConfigError> {
    if doc.axes.len() > 2 {
        return Err(violation("sweep.axes", format!("at most 2 axes, got {}", doc.axes.len())));
    }
    let presets = match &doc.presets {
        None => None,
        Some(list) => {
            if network.edges.is_some() {
                return Err(violation("sweep.presets", "preset axis needs a preset network"));
            }
            if list.is_empty() {
                return Err(violation("sweep.presets", "empty preset list"));
            }
            Some(list.iter().map(|n| n.parse().map_err(|_| ConfigError::UnknownPreset(n.clone()))).collect::<Result<Vec<Preset>, _>>()?)
        }
    };
    let mut axes = Vec::with_capacity(doc.axes.len());
    for (k, a) in doc.axes.iter().enumerate() {
        let at = |field: &str| format!("sweep.axes.{k}.{field}");
        let paths = match (&a.path, &a.paths) {
            (Some(p), None) => vec![p.clone()],
            (None, Some(ps)) if !ps.is_empty() => ps.clone(),
            _ => return Err(violation(at("path"), "give path or a non-empty paths list")),
        };
        for p in &paths {
            let ok = p == TOTAL_LENGTH_PATH || lookup(document, p).is_some_and(Value::is_number);
            if !ok {
                return Err(violation(at("path"), format!("{p:?} does not resolve to a number in this document")));
            }
        }
        let values = match (&a.values, a.min, a.max, a.count) {
            (Some(v), None, None, None) if !v.is_empty() => v.clone(),
            (None, Some(min), Some(max), Some(count)) if count >= 1 && min.is_finite() && max.is_finite() => {
                let log = match a.scale.as_deref() {
                    None | Some("linear") => false,
                    Some("log") => true,
                    Some(other) => return Err(violation(at("scale"), format!("unknown scale {other:?}"))),
                };
                if log && !(min > 0.0 && max > 0.0) {
                    return Err(violation(at("min"), "log scale needs positive bounds"));
                }
                (0..count)
                    .map(|i| {
                        let s = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
                        if log {
                            (min.ln() + s * (max.ln() - min.ln())).exp()
                        } else {
                            min + s * (max - min)
                        }
                    })
                    .collect()
            }
            _ => return Err(violation(at("values"), "give either values or min, max and count ≥ 1")),
        };
        let name = a.name.clone().unwrap_or_else(|| paths[0].clone());
        axes.push(Axis { name, paths, values });
    }
    Ok(SweepSpec { presets, axes })
}
