//! Reference network topologies with equal branch lengths.
//!
//! Edge `k_i` in the usual naming is edge id `i - 1` here. Merging presets
//! (`-a`) carry water from several upstream branches into one outlet; the
//! splitting presets (`-b`) are their mirror images.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::graph::{
    build_network, BoundaryAssignment, EdgeParams, NetworkError, NetworkSpec, RiverNetwork, VertexClass,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preset {
    Single,
    Three(Shape),
    Four(Shape),
    Five(Shape),
    Seven(Shape),
}

/// Merging (`-a`) or splitting (`-b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Merging,
    Splitting,
}

/// How junction flow conservation is met in the preset networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowRegime {
    /// Same area everywhere; velocities follow from conservation.
    AreaFixed,
    /// Same velocity everywhere; areas follow from conservation.
    VelocityFixed,
}

/// Parameters shared by every edge of a preset network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharedParams {
    pub diffusion: f64,
    pub growth: f64,
    pub mortality: f64,
    pub capacity: f64,
    /// Velocity on the base branches (upstream branches of a merging tree,
    /// downstream branches of a splitting tree).
    pub base_velocity: f64,
    /// Area on the base branches.
    pub base_area: f64,
    pub regime: FlowRegime,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PresetError {
    #[error("unknown preset {0:?}")]
    UnknownPreset(alloc::string::String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

pub const ALL_PRESETS: [Preset; 9] = [
    Preset::Single,
    Preset::Three(Shape::Merging),
    Preset::Three(Shape::Splitting),
    Preset::Four(Shape::Merging),
    Preset::Four(Shape::Splitting),
    Preset::Five(Shape::Merging),
    Preset::Five(Shape::Splitting),
    Preset::Seven(Shape::Merging),
    Preset::Seven(Shape::Splitting),
];

impl Preset {
    pub fn name(self) -> &'static str {
        use Shape::*;
        match self {
            Preset::Single => "1",
            Preset::Three(Merging) => "3-a",
            Preset::Three(Splitting) => "3-b",
            Preset::Four(Merging) => "4-a",
            Preset::Four(Splitting) => "4-b",
            Preset::Five(Merging) => "5-a",
            Preset::Five(Splitting) => "5-b",
            Preset::Seven(Merging) => "7-a",
            Preset::Seven(Splitting) => "7-b",
        }
    }

    /// `(vertex_count, [(tail, head)])` for the merging form; splitting forms
    /// reverse every edge and renumber so that edge ids still run upstream to
    /// downstream.
    pub fn topology(self) -> (usize, Vec<(usize, usize)>) {
        let merging: (usize, Vec<(usize, usize)>) = match self {
            Preset::Single => (2, vec![(0, 1)]),
            Preset::Three(_) => (4, vec![(0, 2), (1, 2), (2, 3)]),
            Preset::Four(_) => (5, vec![(0, 3), (1, 3), (2, 3), (3, 4)]),
            Preset::Five(_) => (6, vec![(0, 2), (1, 2), (2, 4), (3, 4), (4, 5)]),
            Preset::Seven(_) => (
                8,
                vec![(0, 4), (1, 4), (2, 5), (3, 5), (4, 6), (5, 6), (6, 7)],
            ),
        };
        match self {
            Preset::Single
            | Preset::Three(Shape::Merging)
            | Preset::Four(Shape::Merging)
            | Preset::Five(Shape::Merging)
            | Preset::Seven(Shape::Merging) => merging,
            _ => mirror(merging),
        }
    }

    pub fn edge_count(self) -> usize {
        self.topology().1.len()
    }

    pub fn is_splitting(self) -> bool {
        matches!(
            self,
            Preset::Three(Shape::Splitting)
                | Preset::Four(Shape::Splitting)
                | Preset::Five(Shape::Splitting)
                | Preset::Seven(Shape::Splitting)
        )
    }
}

/// Reverse all edges, then relabel vertices and edges so that vertex and edge
/// ids increase in the new flow direction.
fn mirror((n, edges): (usize, Vec<(usize, usize)>)) -> (usize, Vec<(usize, usize)>) {
    let vmap = |v: usize| n - 1 - v;
    let mut out: Vec<(usize, usize)> = edges.iter().rev().map(|&(t, h)| (vmap(h), vmap(t))).collect();
    out.sort_by_key(|&(t, h)| (t, h));
    (n, out)
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = PresetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_PRESETS
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| PresetError::UnknownPreset(s.into()))
    }
}

/// Edges whose flux is pinned by the regime: upstream leaves of a merging
/// tree, downstream leaves of a splitting tree, the single edge otherwise.
fn base_edges(preset: Preset, vertex_count: usize, edges: &[(usize, usize)]) -> Vec<bool> {
    let mut valency = vec![0usize; vertex_count];
    for &(t, h) in edges {
        valency[t] += 1;
        valency[h] += 1;
    }
    edges
        .iter()
        .map(|&(t, h)| match preset {
            Preset::Single => true,
            p if p.is_splitting() => valency[h] == 1,
            _ => valency[t] == 1,
        })
        .collect()
}

/// Per-edge fluxes `A v` for a tree where the `base` edges carry `unit` and
/// every junction conserves flow.
fn conserved_fluxes(vertex_count: usize, edges: &[(usize, usize)], base: &[bool], unit: f64) -> Vec<f64> {
    let mut flux: Vec<Option<f64>> = base.iter().map(|&b| b.then_some(unit)).collect();
    let mut incident = vec![Vec::new(); vertex_count];
    for (j, &(t, h)) in edges.iter().enumerate() {
        incident[t].push(j);
        incident[h].push(j);
    }
    loop {
        let mut progressed = false;
        for (v, inc) in incident.iter().enumerate() {
            if inc.len() < 2 {
                continue;
            }
            let unknown: Vec<usize> = inc.iter().copied().filter(|&j| flux[j].is_none()).collect();
            if unknown.len() != 1 {
                continue;
            }
            let j = unknown[0];
            let balance: f64 = inc
                .iter()
                .filter_map(|&k| flux[k].map(|q| if edges[k].1 == v { q } else { -q }))
                .sum();
            flux[j] = Some(if edges[j].1 == v { -balance } else { balance });
            progressed = true;
        }
        if !progressed {
            break;
        }
    }
    flux.into_iter().map(|q| q.unwrap_or(unit)).collect()
}

/// Build a preset network with every branch of length `branch_length`.
pub fn preset_network(
    preset: Preset,
    branch_length: f64,
    shared: &SharedParams,
    boundary: impl Into<BoundaryAssignment>,
) -> Result<RiverNetwork, PresetError> {
    let (n, edges) = preset.topology();
    let base = base_edges(preset, n, &edges);
    let unit = shared.base_area * shared.base_velocity;
    let flux = conserved_fluxes(n, &edges, &base, unit);
    let params = flux
        .iter()
        .map(|&q| {
            let (velocity, area) = match shared.regime {
                FlowRegime::AreaFixed => (q / shared.base_area, shared.base_area),
                FlowRegime::VelocityFixed if shared.base_velocity > 0.0 => {
                    (shared.base_velocity, q / shared.base_velocity)
                }
                // Stagnant water: conservation holds trivially.
                FlowRegime::VelocityFixed => (0.0, shared.base_area),
            };
            EdgeParams {
                diffusion: shared.diffusion,
                velocity,
                area,
                growth: shared.growth,
                mortality: shared.mortality,
                capacity: shared.capacity,
            }
        })
        .collect();
    let spec = NetworkSpec {
        vertex_count: n,
        edges: edges.iter().map(|&(t, h)| (t, h, branch_length)).collect(),
        params,
        boundary: boundary.into(),
    };
    Ok(build_network(spec)?)
}

/// Junction valencies of a network, sorted ascending.
pub fn junction_valencies(network: &RiverNetwork) -> Vec<usize> {
    let mut v: Vec<usize> =
        network.vertices_of_class(VertexClass::Junction).map(|v| v.valency).collect();
    v.sort_unstable();
    v
}
