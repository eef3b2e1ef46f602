//! Uniform open-channel flow in rectangular channels.
//!
//! The normal depth of a wide rectangular channel follows from Manning's
//! formula, `y = (Q² n² / (B² S₀ k²))^(3/10)` with `k = 1` in SI units. The
//! wetted area is then `A = B y` and the mean velocity `v = Q / A`.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::graph::{NetworkError, RiverNetwork, VertexClass, FLOW_CONSERVATION_RTOL};

/// Manning conversion factor for SI units.
pub const MANNING_K: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    /// Discharge Q, m³/s.
    pub discharge: f64,
    /// Width B, m.
    pub width: f64,
    /// Manning roughness n, s/m^(1/3).
    pub roughness: f64,
    /// Bed slope S₀, m/m.
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformFlow {
    pub depth: f64,
    pub velocity: f64,
    pub area: f64,
}

/// Channel geometry for one edge; discharge is optional and gets propagated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelInput {
    pub width: f64,
    pub roughness: f64,
    pub slope: f64,
    pub discharge: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HydrologyError {
    #[error("channel on edge {edge}: {name} = {value} must be positive")]
    InvalidChannel { edge: usize, name: &'static str, value: f64 },
    #[error("expected {expected} channel specs, got {got}")]
    ChannelCountMismatch { expected: usize, got: usize },
    #[error("upstream edge {edge} has no discharge")]
    MissingUpstreamDischarge { edge: usize },
    #[error("junction {vertex} splits flow between edges without explicit discharges")]
    UnresolvedSplit { vertex: usize },
    #[error("edge {edge} was given Q = {given} but conservation requires {propagated}")]
    PropagationConflict { edge: usize, given: f64, propagated: f64 },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

impl ChannelSpec {
    fn validate(&self, edge: usize) -> Result<(), HydrologyError> {
        for (name, value) in [
            ("discharge", self.discharge),
            ("width", self.width),
            ("roughness", self.roughness),
            ("slope", self.slope),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(HydrologyError::InvalidChannel { edge, name, value });
            }
        }
        Ok(())
    }
}

/// Normal depth of uniform flow, in meters.
pub fn normal_depth(spec: &ChannelSpec) -> f64 {
    let q = spec.discharge;
    let n = spec.roughness;
    let b = spec.width;
    libm::pow(q * q * n * n / (b * b * spec.slope * MANNING_K * MANNING_K), 0.3)
}

pub fn uniform_flow(spec: &ChannelSpec) -> UniformFlow {
    let depth = normal_depth(spec);
    let area = spec.width * depth;
    UniformFlow { depth, velocity: spec.discharge / area, area }
}

/// Fill in every edge's discharge from the given ones by summing at merges.
///
/// Upstream-most edges must carry a discharge. A downstream edge may carry one
/// too, but only if it agrees with the propagated sum to relative `1e-12`.
/// At a split, all but one branch must be given explicitly.
pub fn propagate_discharge(
    network: &RiverNetwork,
    given: &[Option<f64>],
) -> Result<Vec<f64>, HydrologyError> {
    let m = network.edge_count();
    if given.len() != m {
        return Err(HydrologyError::ChannelCountMismatch { expected: m, got: given.len() });
    }
    for e in network.edges() {
        let tail_class = network.vertices()[e.tail].class;
        if tail_class == VertexClass::UpstreamBoundary && given[e.id].is_none() {
            return Err(HydrologyError::MissingUpstreamDischarge { edge: e.id });
        }
    }

    let mut q: Vec<Option<f64>> = vec![None; m];
    for e in network.edges() {
        if network.vertices()[e.tail].class == VertexClass::UpstreamBoundary {
            q[e.id] = given[e.id];
        }
    }
    // Junction balance determines one missing edge at a time; repeat until stuck.
    loop {
        let mut progressed = false;
        for v in network.vertices_of_class(VertexClass::Junction) {
            let inc = network.incident_edges(v.id);
            let unknown: Vec<usize> = inc.iter().copied().filter(|&j| q[j].is_none()).collect();
            if unknown.is_empty() {
                continue;
            }
            let inflow_known = unknown.iter().all(|&j| network.edges()[j].tail == v.id);
            if !inflow_known {
                // Some inflow still unknown; wait for upstream.
                continue;
            }
            let balance: f64 = inc
                .iter()
                .filter_map(|&j| q[j].map(|qj| f64::from(network.incidence(v.id, j)) * qj))
                .sum();
            if unknown.len() == 1 {
                let j = unknown[0];
                let propagated = balance;
                if let Some(g) = given[j] {
                    if (g - propagated).abs() > FLOW_CONSERVATION_RTOL * g.abs().max(propagated.abs()) {
                        return Err(HydrologyError::PropagationConflict { edge: j, given: g, propagated });
                    }
                    q[j] = Some(g);
                } else {
                    q[j] = Some(propagated);
                }
                progressed = true;
            } else {
                let explicit: Vec<usize> = unknown.iter().copied().filter(|&j| given[j].is_some()).collect();
                if explicit.len() + 1 < unknown.len() {
                    return Err(HydrologyError::UnresolvedSplit { vertex: v.id });
                }
                for j in explicit {
                    q[j] = given[j];
                    progressed = true;
                }
            }
        }
        if !progressed {
            break;
        }
    }
    q.iter()
        .enumerate()
        .map(|(j, qj)| qj.ok_or(HydrologyError::MissingUpstreamDischarge { edge: j }))
        .collect()
}

/// Overwrite every edge's `v` and `A` from uniform flow with propagated
/// discharges. Returns the new network and the per-edge discharges.
pub fn apply_hydrology(
    network: &RiverNetwork,
    channels: &[ChannelInput],
) -> Result<(RiverNetwork, Vec<f64>), HydrologyError> {
    let m = network.edge_count();
    if channels.len() != m {
        return Err(HydrologyError::ChannelCountMismatch { expected: m, got: channels.len() });
    }
    let given: Vec<Option<f64>> = channels.iter().map(|c| c.discharge).collect();
    let q = propagate_discharge(network, &given)?;
    let mut params = network.params().to_vec();
    for (j, ch) in channels.iter().enumerate() {
        let spec = ChannelSpec { discharge: q[j], width: ch.width, roughness: ch.roughness, slope: ch.slope };
        spec.validate(j)?;
        let flow = uniform_flow(&spec);
        params[j].velocity = flow.velocity;
        params[j].area = flow.area;
    }
    Ok((network.with_params(params)?, q))
}
