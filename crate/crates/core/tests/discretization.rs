mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use rivnet_core::discretize::{assemble_linearized, assemble_transport, grid_with_cells, symmetrization_weights};
use rivnet_core::graph::build_network;
use rivnet_core::linalg::TreeOrdering;
use rivnet_core::{BoundarySet, EdgeParams, NetworkSpec};

/// Relative asymmetry of `W L̂` split into pairs touching a vertex node and
/// pairs between interior nodes.
fn weighted_asymmetry(net: &rivnet_core::RiverNetwork, cells: usize) -> (f64, f64) {
    let g = grid_with_cells(net, &vec![cells; net.edge_count()]);
    let op = assemble_transport(net, &g);
    let w = symmetrization_weights(net).node_weights(&g);
    let m = op.matrix();
    let (mut vertex, mut interior) = (0.0f64, 0.0f64);
    for i in 0..m.dim() {
        for (j, a) in m.row(i) {
            if j <= i || op.hostile()[i] || op.hostile()[j] {
                continue;
            }
            let (x, y) = (w[i] * a, w[j] * m.get(j, i));
            let defect = (x - y).abs() / x.abs().max(y.abs());
            if i < net.vertex_count() || j < net.vertex_count() {
                vertex = vertex.max(defect);
            } else {
                interior = interior.max(defect);
            }
        }
    }
    (vertex, interior)
}

#[test]
fn weighted_self_adjointness() {
    for seed in 0..6u64 {
        let mut r = rng(200 + seed);
        let edges = r.gen_range(2..7);
        let net = random_tree(&mut r, edges, BoundarySet::ZfFf, 0.5);
        let errs: Vec<(f64, f64)> = [20, 40, 80].iter().map(|&c| weighted_asymmetry(&net, c)).collect();
        let vertex: Vec<f64> = errs.iter().map(|e| e.0).collect();
        let interior: Vec<f64> = errs.iter().map(|e| e.1).collect();
        for o in orders(&interior) {
            assert!(o > 1.9, "interior {interior:?}");
        }
        for o in orders(&vertex) {
            assert!(o > 0.9, "vertex {vertex:?}");
        }
    }
}

#[test]
fn interior_rows_second_order() {
    // u = exp(-x) cos(2x) on a single edge; L u = D u'' - v u' + c u.
    let (d, v, c): (f64, f64, f64) = (0.7, 0.4, -0.3);
    let u = |x: f64| (-x).exp() * (2.0 * x).cos();
    let du = |x: f64| (-x).exp() * (-(2.0 * x).cos() - 2.0 * (2.0 * x).sin());
    let d2u = |x: f64| (-x).exp() * (-3.0 * (2.0 * x).cos() + 4.0 * (2.0 * x).sin());
    let p = EdgeParams { diffusion: d, velocity: v, growth: c.max(0.0), mortality: (-c).max(0.0), ..EdgeParams::default() };
    let net = build_network(NetworkSpec {
        vertex_count: 2,
        edges: vec![(0, 1, 3.0)],
        params: vec![p],
        boundary: BoundarySet::ZfFf.into(),
    })
    .unwrap();
    let mut errors = Vec::new();
    for cells in [30, 60, 120] {
        let g = grid_with_cells(&net, &[cells]);
        let op = assemble_linearized(&net, &g);
        let y = op.apply(&g.sample(&net, |_, x| u(x)));
        let err = g
            .interior_range(0)
            .enumerate()
            .map(|(k, i)| {
                let x = g.position(0, k + 1);
                (y[i] - (d * d2u(x) - v * du(x) + c * u(x))).abs()
            })
            .fold(0.0f64, f64::max);
        errors.push(err);
    }
    for o in orders(&errors) {
        assert!(o > 1.9, "{errors:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn closed_network_conserves_mass(seed in any::<u64>()) {
        let mut r = rng(seed);
        let edges = r.gen_range(1..9);
        let net = closed(&random_tree(&mut r, edges, BoundarySet::ZfFf, 3.0));
        let g = grid_near(&net, r.gen_range(20..200));
        let op = assemble_transport(&net, &g);
        let w = op.weights();
        let m = op.matrix();
        // wᵀ L̂ = 0 column by column.
        let mut col = vec![0.0; m.dim()];
        let mut scale = vec![0.0f64; m.dim()];
        for i in 0..m.dim() {
            for (j, a) in m.row(i) {
                col[j] += w[i] * a;
                scale[j] = scale[j].max((w[i] * a).abs());
            }
        }
        for j in 0..m.dim() {
            prop_assert!(col[j].abs() <= 1e-13 * scale[j], "column {}: {} vs {}", j, col[j], scale[j]);
        }
    }

    #[test]
    fn shifted_operator_is_m_matrix_on_a_tree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let edges = r.gen_range(1..9);
        let bc = BOUNDARY_SETS[r.gen_range(0..3)];
        // Velocities large enough that some faces switch to upwind.
        let net = random_tree(&mut r, edges, bc, 20.0);
        let g = grid_near(&net, r.gen_range(10..120));
        let op = assemble_linearized(&net, &g);
        let m = op.matrix();
        for i in 0..m.dim() {
            for (j, a) in m.row(i) {
                if i != j {
                    prop_assert!(a > 0.0, "L̂[{}, {}] = {}", i, j, a);
                    prop_assert!(m.get(j, i) > 0.0);
                }
            }
        }
        prop_assert!(TreeOrdering::new(m, &op.active()).is_ok());
        let nodes = g.node_count();
        let expected: usize = (0..net.edge_count()).map(|j| g.cells(j) - 1).sum::<usize>() + net.vertex_count();
        prop_assert_eq!(nodes, expected);
    }
}
