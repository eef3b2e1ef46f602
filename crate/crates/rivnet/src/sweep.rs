//! Parameter sweeps over at most two axes, optionally crossed with presets.
//!
//! Each point is an independent copy of the scenario document with the axis
//! paths overwritten, so every point is validated exactly like a standalone
//! run. Rows come out in row-major order (preset, then axis 0, then axis 1)
//! whatever the worker count.

use rayon::prelude::*;
use rivnet_core::build_grid;
use rivnet_core::eigen::{lambda_star, net_reproductive_rate};
use rivnet_core::Preset;
use serde_json::Value;

use crate::config::{load_config, ConfigError, Scenario, SweepSpec, TOTAL_LENGTH_PATH};
use crate::output::{num, Table};
use crate::tasks::{eigen_kind, RunError};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub preset: Option<Preset>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub r0: Option<f64>,
    pub lambda_star: Option<f64>,
    /// `ok` or the failure kind.
    pub status: String,
    pub n_unknowns: Option<usize>,
    pub iterations: Option<usize>,
}

pub fn points(spec: &SweepSpec) -> Vec<SweepPoint> {
    let presets: Vec<Option<Preset>> = match &spec.presets {
        Some(p) => p.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut out = Vec::with_capacity(spec.point_count());
    for preset in presets {
        let mut combos: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &spec.axes {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    axis.values.iter().map(move |&v| {
                        let mut c = c.clone();
                        c.push(v);
                        c
                    })
                })
                .collect();
        }
        out.extend(combos.into_iter().map(|values| SweepPoint { preset, values }));
    }
    out
}

fn set_path(doc: &mut Value, path: &str, value: f64) {
    let mut keys: Vec<&str> = path.split('.').collect();
    let last = keys.pop().expect("non-empty path");
    let mut node = doc;
    for k in keys {
        node = &mut node[k];
    }
    if path == TOTAL_LENGTH_PATH {
        if let Some(obj) = node.as_object_mut() {
            obj.remove("branch_length");
        }
    }
    node[last] = value.into();
}

/// The standalone document for one point.
pub fn point_document(base: &Value, spec: &SweepSpec, point: &SweepPoint) -> Value {
    let mut doc = base.clone();
    if let Some(obj) = doc.as_object_mut() {
        obj.remove("sweep");
        obj.remove("task");
    }
    if let Some(p) = point.preset {
        doc["network"]["preset"] = p.name().into();
    }
    for (axis, &v) in spec.axes.iter().zip(&point.values) {
        for path in &axis.paths {
            set_path(&mut doc, path, v);
        }
    }
    doc
}

pub fn evaluate(doc: &Value) -> SweepResult {
    let mut res = SweepResult { r0: None, lambda_star: None, status: "ok".into(), n_unknowns: None, iterations: None };
    let s = match load_config(doc) {
        Ok(s) => s,
        Err(e) => {
            res.status = e.kind().into();
            return res;
        }
    };
    let g = match build_grid(&s.network, s.target_h) {
        Ok(g) => g,
        Err(_) => {
            res.status = "SchemaViolation".into();
            return res;
        }
    };
    res.n_unknowns = Some(g.node_count());
    match lambda_star(&s.network, &g) {
        Ok(l) => res.lambda_star = Some(l.value),
        Err(e) => res.status = eigen_kind(&e).into(),
    }
    match net_reproductive_rate(&s.network, &g) {
        Ok(r) => {
            res.r0 = Some(r.value);
            res.iterations = Some(r.iterations);
        }
        Err(e) => {
            if res.status == "ok" {
                res.status = eigen_kind(&e).into();
            }
        }
    }
    res
}

pub fn run_sweep(s: &Scenario, jobs: usize) -> Result<Table, RunError> {
    let spec = s.sweep.as_ref().ok_or_else(|| {
        RunError::Config(ConfigError::SchemaViolation { path: "sweep".into(), message: "missing field `sweep`".into() })
    })?;
    let pts = points(spec);
    let docs: Vec<Value> = pts.iter().map(|p| point_document(&s.document, spec, p)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| RunError::Io { path: "thread pool".into(), message: e.to_string() })?;
    let results: Vec<SweepResult> = pool.install(|| docs.par_iter().map(evaluate).collect());

    let mut header: Vec<&str> = Vec::new();
    if spec.presets.is_some() {
        header.push("preset");
    }
    header.extend(spec.axes.iter().map(|a| a.name.as_str()));
    header.extend(["R0", "lambda_star", "status", "n_unknowns", "iterations"]);
    let mut t = Table::new("r0_sweep.csv", &header);
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for (p, r) in pts.iter().zip(results) {
        let mut row = Vec::with_capacity(header.len());
        if let Some(preset) = p.preset {
            row.push(preset.name().to_string());
        }
        row.extend(p.values.iter().map(|&v| num(v)));
        row.push(opt(r.r0));
        row.push(opt(r.lambda_star));
        row.push(r.status);
        row.push(r.n_unknowns.map(|n| n.to_string()).unwrap_or_default());
        row.push(r.iterations.map(|n| n.to_string()).unwrap_or_default());
        t.push(row);
    }
    Ok(t)
}
