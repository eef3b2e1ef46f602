#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rivnet_core::graph::{build_network, BoundaryAssignment, BoundaryKind};
use rivnet_core::presets::{preset_network, ALL_PRESETS};
use rivnet_core::{build_grid, BoundarySet, EdgeParams, FlowRegime, Grid, NetworkSpec, RiverNetwork, SharedParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

pub const BOUNDARY_SETS: [BoundarySet; 3] = [BoundarySet::ZfFf, BoundarySet::ZfH, BoundarySet::HH];

/// Random oriented tree with `edges` edges and O(1) rates.
///
/// Vertex 0 is the outlet; every later vertex drains into an earlier one, so
/// discharges add up at merges. With `reverse` every edge flips, which turns
/// merges into splits and keeps flow balanced.
pub fn random_tree(rng: &mut ChaCha8Rng, edges: usize, bc: BoundarySet, max_velocity: f64) -> RiverNetwork {
    let n = edges + 1;
    let mut parent = vec![usize::MAX; n];
    parent[1] = 0;
    for k in 2..n {
        parent[k] = rng.gen_range(1..k);
    }
    // Discharge on edge (k -> parent[k]) is the sum over upstream sources.
    let mut q = vec![0.0; n];
    for k in (1..n).rev() {
        let is_leaf = !(k + 1..n).any(|c| parent[c] == k);
        if is_leaf {
            q[k] += rng.gen_range(0.5..2.0);
        }
        let p = parent[k];
        if p != 0 {
            q[p] += q[k];
        }
    }
    let reverse = rng.gen_bool(0.5);
    let mut list = Vec::with_capacity(edges);
    let mut params = Vec::with_capacity(edges);
    for k in 1..n {
        let length = rng.gen_range(1.0..4.0);
        list.push(if reverse { (parent[k], k, length) } else { (k, parent[k], length) });
        let velocity = if max_velocity > 0.0 { rng.gen_range(0.0..max_velocity) } else { 0.0 };
        let area = if velocity > 0.0 { q[k] / velocity } else { rng.gen_range(0.5..2.0) };
        params.push(EdgeParams {
            diffusion: rng.gen_range(0.2..1.0),
            velocity,
            area,
            growth: rng.gen_range(0.2..2.0),
            mortality: rng.gen_range(0.05..1.0),
            capacity: rng.gen_range(0.5..2.0),
        });
    }
    build_network(NetworkSpec { vertex_count: n, edges: list, params, boundary: bc.into() }).unwrap()
}

/// Random preset with per-edge physical rates (seconds, meters).
pub fn random_preset(rng: &mut ChaCha8Rng) -> RiverNetwork {
    let preset = ALL_PRESETS[rng.gen_range(0..ALL_PRESETS.len())];
    let bc = BOUNDARY_SETS[rng.gen_range(0..3)];
    let shared = SharedParams {
        diffusion: log_uniform(rng, 0.1, 2.0),
        growth: log_uniform(rng, 0.1, 2.0) / 86400.0,
        mortality: log_uniform(rng, 0.01, 0.5) / 86400.0,
        capacity: 1.0,
        base_velocity: log_uniform(rng, 1e-4, 1e-2),
        base_area: log_uniform(rng, 1.0, 20.0),
        regime: if rng.gen_bool(0.5) { FlowRegime::AreaFixed } else { FlowRegime::VelocityFixed },
    };
    let length = log_uniform(rng, 50.0, 2000.0);
    let net = preset_network(preset, length, &shared, bc).unwrap();
    let mut params = net.params().to_vec();
    for p in &mut params {
        p.diffusion *= rng.gen_range(0.5..2.0);
        p.growth *= rng.gen_range(0.5..2.0);
        p.mortality *= rng.gen_range(0.5..2.0);
    }
    net.with_params(params).unwrap()
}

/// Grid with roughly `target` unknowns.
pub fn grid_near(net: &RiverNetwork, target: usize) -> Grid {
    build_grid(net, net.total_length() / target as f64).unwrap()
}

/// Same network with zero flux at every boundary vertex.
pub fn closed(net: &RiverNetwork) -> RiverNetwork {
    let conditions = net
        .vertices()
        .iter()
        .filter(|v| v.class.is_boundary())
        .map(|v| (v.id, BoundaryKind::ZeroFlux))
        .collect();
    net.with_boundary(BoundaryAssignment::PerVertex { conditions, default: None }).unwrap()
}

pub fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// `log2(e_coarse / e_fine)` for successive halvings.
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
