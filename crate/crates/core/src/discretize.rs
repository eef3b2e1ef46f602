//! Finite-volume discretization of `L u = D u_xx - v u_x + c(x) u` on a
//! river network.
//!
//! Each graph vertex owns a single unknown shared by all incident edges, which
//! enforces continuity at junctions. The face flux between neighbouring nodes
//! on edge `j` is
//!
//! ```text
//! F = v u_face - D (u_{k+1} - u_k) / h
//! ```
//!
//! with a centred `u_face` when the face Péclet number `v h / 2D` is below one
//! and the upwind value otherwise, which keeps every off-diagonal entry
//! non-negative. A junction row balances `Σ d A F` over its composite control
//! volume, so total mass is conserved exactly.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use thiserror::Error;

use crate::graph::{BoundaryKind, EdgeParams, RiverNetwork, VertexClass};
use crate::linalg::CsrMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("target spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("expected {expected} per-node values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Where a global unknown sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLocation {
    Vertex(usize),
    /// Node `index` (`1..N_j`) strictly inside edge `edge`.
    Interior { edge: usize, index: usize },
}

/// Uniform per-edge grids glued at shared vertex nodes.
///
/// Global numbering: vertex `i` is node `i`; the interior nodes of edge `j`
/// follow in edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    cells: Vec<usize>,
    spacing: Vec<f64>,
    lengths: Vec<f64>,
    offsets: Vec<usize>,
    ends: Vec<(usize, usize)>,
    vertex_count: usize,
    node_count: usize,
}

pub fn build_grid(network: &RiverNetwork, target_h: f64) -> Result<Grid, GridError> {
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(GridError::InvalidSpacing(target_h));
    }
    let cells: Vec<usize> = network
        .edges()
        .iter()
        .map(|e| {
            // Guard against 1600 / 2 landing a hair above 800.
            let ratio = e.length / target_h * (1.0 - 4.0 * f64::EPSILON);
            (libm::ceil(ratio) as usize).max(2)
        })
        .collect();
    Ok(grid_with_cells(network, &cells))
}

/// Grid with explicit per-edge cell counts (each at least 2).
pub fn grid_with_cells(network: &RiverNetwork, cells: &[usize]) -> Grid {
    assert_eq!(cells.len(), network.edge_count());
    let vertex_count = network.vertex_count();
    let mut offsets = Vec::with_capacity(cells.len());
    let mut next = vertex_count;
    for &n in cells {
        assert!(n >= 2, "each edge needs at least two cells");
        offsets.push(next);
        next += n - 1;
    }
    Grid {
        cells: cells.to_vec(),
        spacing: network.edges().iter().zip(cells).map(|(e, &n)| e.length / n as f64).collect(),
        lengths: network.edges().iter().map(|e| e.length).collect(),
        offsets,
        ends: network.edges().iter().map(|e| (e.tail, e.head)).collect(),
        vertex_count,
        node_count: next,
    }
}

impl Grid {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self, edge: usize) -> usize {
        self.cells[edge]
    }

    pub fn spacing(&self, edge: usize) -> f64 {
        self.spacing[edge]
    }

    /// Global index of node `k` (`0..=N_j`) on edge `edge`.
    pub fn node(&self, edge: usize, k: usize) -> usize {
        let n = self.cells[edge];
        debug_assert!(k <= n);
        if k == 0 {
            self.ends[edge].0
        } else if k == n {
            self.ends[edge].1
        } else {
            self.offsets[edge] + k - 1
        }
    }

    /// Global indices of the nodes of `edge`, tail to head.
    pub fn edge_nodes(&self, edge: usize) -> impl Iterator<Item = usize> + '_ {
        (0..=self.cells[edge]).map(move |k| self.node(edge, k))
    }

    pub fn interior_range(&self, edge: usize) -> Range<usize> {
        self.offsets[edge]..self.offsets[edge] + self.cells[edge] - 1
    }

    pub fn location(&self, node: usize) -> NodeLocation {
        if node < self.vertex_count {
            return NodeLocation::Vertex(node);
        }
        let edge = self.offsets.partition_point(|&o| o <= node) - 1;
        NodeLocation::Interior { edge, index: node - self.offsets[edge] + 1 }
    }

    /// Arc-length coordinate of node `k` on `edge`.
    pub fn position(&self, edge: usize, k: usize) -> f64 {
        if k == self.cells[edge] {
            self.lengths[edge]
        } else {
            k as f64 * self.spacing[edge]
        }
    }

    /// Sample per-edge data at every node. Vertex nodes take the
    /// control-volume average `Σ A_j h_j/2 · g_j / Σ A_j h_j/2` over incident edges.
    pub fn node_average(&self, network: &RiverNetwork, value: impl Fn(&EdgeParams) -> f64) -> Vec<f64> {
        let mut acc = vec![0.0; self.node_count];
        let mut vol = vec![0.0; self.node_count];
        for (j, p) in network.params().iter().enumerate() {
            let g = value(p);
            for i in self.interior_range(j) {
                acc[i] = g;
                vol[i] = 1.0;
            }
            let half = p.area * self.spacing[j] / 2.0;
            for v in [self.ends[j].0, self.ends[j].1] {
                acc[v] += half * g;
                vol[v] += half;
            }
        }
        acc.iter().zip(&vol).map(|(a, w)| a / w).collect()
    }

    /// Sample a function of `(edge, x)` at every node; vertex nodes use the
    /// same control-volume average as [`Grid::node_average`].
    pub fn sample(&self, network: &RiverNetwork, f: impl Fn(usize, f64) -> f64) -> Vec<f64> {
        let mut acc = vec![0.0; self.node_count];
        let mut vol = vec![0.0; self.node_count];
        for (j, p) in network.params().iter().enumerate() {
            let n = self.cells[j];
            for k in 1..n {
                let i = self.node(j, k);
                acc[i] = f(j, self.position(j, k));
                vol[i] = 1.0;
            }
            let half = p.area * self.spacing[j] / 2.0;
            for (v, k) in [(self.ends[j].0, 0), (self.ends[j].1, n)] {
                acc[v] += half * f(j, self.position(j, k));
                vol[v] += half;
            }
        }
        acc.iter().zip(&vol).map(|(a, w)| a / w).collect()
    }
}

/// Assembled `L̂` together with its control-volume weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    matrix: CsrMatrix,
    weights: Vec<f64>,
    potential: Vec<f64>,
    hostile: Vec<bool>,
}

impl DiscreteOperator {
    /// The matrix of `L̂`. Hostile rows are identity rows that no other row
    /// references.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Control-volume weights `A · length`, m³.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn hostile(&self) -> &[bool] {
        &self.hostile
    }

    pub fn active(&self) -> Vec<bool> {
        self.hostile.iter().map(|h| !h).collect()
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `Σ w_i u_i`.
    pub fn mass(&self, u: &[f64]) -> f64 {
        self.weights.iter().zip(u).map(|(w, u)| w * u).sum()
    }

    /// `L̂ u` with hostile entries forced to zero.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut y = self.matrix.mul_vec(u);
        for (yi, &h) in y.iter_mut().zip(&self.hostile) {
            if h {
                *yi = 0.0;
            }
        }
        y
    }
}

/// Coefficients `(c_left, c_right)` with `F = c_left u_k + c_right u_{k+1}`.
fn face_coefficients(p: &EdgeParams, h: f64) -> (f64, f64) {
    let diff = p.diffusion / h;
    if p.velocity * h / (2.0 * p.diffusion) < 1.0 {
        (p.velocity / 2.0 + diff, p.velocity / 2.0 - diff)
    } else {
        (p.velocity + diff, -diff)
    }
}

/// Assemble `L̂` with per-node potential `c` (1/s).
pub fn assemble(network: &RiverNetwork, grid: &Grid, potential: &[f64]) -> Result<DiscreteOperator, GridError> {
    let n = grid.node_count();
    if potential.len() != n {
        return Err(GridError::LengthMismatch { expected: n, got: potential.len() });
    }
    let mut hostile = vec![false; n];
    for v in network.vertices() {
        hostile[v.id] = v.hostile;
    }

    let mut weights = vec![0.0; n];
    // Rows hold A-weighted net inflow; divided by the weights below.
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(4 * n);
    for (j, p) in network.params().iter().enumerate() {
        let h = grid.spacing(j);
        let cells = grid.cells(j);
        let (cl, cr) = face_coefficients(p, h);
        for k in 0..cells {
            let a = grid.node(j, k);
            let b = grid.node(j, k + 1);
            weights[a] += p.area * h / 2.0;
            weights[b] += p.area * h / 2.0;
            // Flux A F leaves a and enters b.
            for (row, sign) in [(a, -1.0), (b, 1.0)] {
                if hostile[row] {
                    continue;
                }
                if !hostile[a] {
                    triplets.push((row, a, sign * p.area * cl));
                }
                if !hostile[b] {
                    triplets.push((row, b, sign * p.area * cr));
                }
            }
        }
    }

    for v in network.vertices().iter().filter(|v| v.class.is_boundary() && !v.hostile) {
        let j = network.incident_edges(v.id)[0];
        let p = &network.params()[j];
        let kind = network.boundary(v.id).expect("validated network has boundary conditions");
        // Boundary flux coefficient: inflow at upstream, outflow at downstream.
        let coeff = match (kind, v.class) {
            (BoundaryKind::ZeroFlux, _) => 0.0,
            (BoundaryKind::FreeFlow, VertexClass::UpstreamBoundary) => p.velocity,
            (BoundaryKind::FreeFlow, _) => -p.velocity,
            (BoundaryKind::Robin { alpha, beta }, VertexClass::UpstreamBoundary) => {
                p.velocity - p.diffusion * alpha / beta
            }
            (BoundaryKind::Robin { alpha, beta }, _) => -(p.velocity + p.diffusion * alpha / beta),
            (BoundaryKind::Hostile, _) => unreachable!("hostile vertices are skipped"),
        };
        if coeff != 0.0 {
            triplets.push((v.id, v.id, p.area * coeff));
        }
    }

    for (row, _, value) in triplets.iter_mut() {
        *value /= weights[*row];
    }
    for i in 0..n {
        if hostile[i] {
            triplets.push((i, i, 1.0));
        } else if potential[i] != 0.0 {
            triplets.push((i, i, potential[i]));
        }
    }
    Ok(DiscreteOperator {
        matrix: CsrMatrix::from_triplets(n, &triplets),
        weights,
        potential: potential.to_vec(),
        hostile,
    })
}

/// Assemble with `c = f(x, 0) = r - m` sampled per node.
pub fn assemble_linearized(network: &RiverNetwork, grid: &Grid) -> DiscreteOperator {
    let c = grid.node_average(network, |p| p.growth - p.mortality);
    assemble(network, grid, &c).expect("potential sized from grid")
}

/// Assemble the transport part only (`c ≡ 0`).
pub fn assemble_transport(network: &RiverNetwork, grid: &Grid) -> DiscreteOperator {
    assemble(network, grid, &vec![0.0; grid.node_count()]).expect("potential sized from grid")
}

/// Per-edge constants `η_j` of the weights `p_j(x) = η_j exp(-v_j x / D_j)`
/// and `ζ_j = p_j / D_j` under which `L` is self-adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizationWeights {
    pub eta: Vec<f64>,
    velocity: Vec<f64>,
    diffusion: Vec<f64>,
}

impl SymmetrizationWeights {
    pub fn p(&self, edge: usize, x: f64) -> f64 {
        self.eta[edge] * libm::exp(-self.velocity[edge] / self.diffusion[edge] * x)
    }

    pub fn zeta(&self, edge: usize, x: f64) -> f64 {
        self.p(edge, x) / self.diffusion[edge]
    }

    /// Diagonal of the discrete inner product: `ζ` times control-volume length.
    pub fn node_weights(&self, grid: &Grid) -> Vec<f64> {
        let mut w = vec![0.0; grid.node_count()];
        for j in 0..grid.edge_count() {
            let h = grid.spacing(j);
            let n = grid.cells(j);
            for k in 0..=n {
                let len = if k == 0 || k == n { h / 2.0 } else { h };
                w[grid.node(j, k)] += self.zeta(j, grid.position(j, k)) * len;
            }
        }
        w
    }
}

/// `η = 1` on edge 0, then breadth-first over junctions so that
/// `A_j D_j : A_h D_h = p_j(e) : p_h(e)` at every junction `e`.
pub fn symmetrization_weights(network: &RiverNetwork) -> SymmetrizationWeights {
    let m = network.edge_count();
    let params = network.params();
    let edges = network.edges();
    let mut eta = vec![f64::NAN; m];
    let mut queue = alloc::collections::VecDeque::new();
    eta[0] = 1.0;
    queue.push_back(0usize);
    let decay = |j: usize, x: f64| libm::exp(-params[j].velocity / params[j].diffusion * x);
    let at = |j: usize, vertex: usize| if edges[j].head == vertex { edges[j].length } else { 0.0 };
    while let Some(j) = queue.pop_front() {
        for vertex in [edges[j].tail, edges[j].head] {
            let pj = eta[j] * decay(j, at(j, vertex));
            let ad_j = params[j].area * params[j].diffusion;
            for &k in network.incident_edges(vertex) {
                if !eta[k].is_nan() {
                    continue;
                }
                let ad_k = params[k].area * params[k].diffusion;
                let pk = pj * ad_k / ad_j;
                eta[k] = pk / decay(k, at(k, vertex));
                queue.push_back(k);
            }
        }
    }
    SymmetrizationWeights {
        eta,
        velocity: params.iter().map(|p| p.velocity).collect(),
        diffusion: params.iter().map(|p| p.diffusion).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_network, BoundarySet, NetworkSpec};
    use crate::presets::{preset_network, FlowRegime, Preset, Shape, SharedParams};

    fn single(l: f64, p: EdgeParams, bc: BoundarySet) -> RiverNetwork {
        build_network(NetworkSpec { vertex_count: 2, edges: vec![(0, 1, l)], params: vec![p], boundary: bc.into() })
            .unwrap()
    }

    fn shared(v: f64) -> SharedParams {
        SharedParams {
            diffusion: 0.6,
            growth: 0.0,
            mortality: 0.0,
            capacity: 1.0,
            base_velocity: v,
            base_area: 1.0,
            regime: FlowRegime::AreaFixed,
        }
    }

    #[test]
    fn grid_counts() {
        let net = single(1600.0, EdgeParams::default(), BoundarySet::ZfFf);
        let g = build_grid(&net, 2.0).unwrap();
        assert_eq!((g.cells(0), g.node_count()), (800, 801));

        let net3 = preset_network(Preset::Three(Shape::Merging), 800.0, &shared(0.0), BoundarySet::ZfFf).unwrap();
        assert_eq!(build_grid(&net3, 2.0).unwrap().node_count(), 3 * 399 + 4);

        let tiny = single(1.0, EdgeParams::default(), BoundarySet::ZfFf);
        assert_eq!(build_grid(&tiny, 10.0).unwrap().cells(0), 2);
        assert!(build_grid(&tiny, 0.0).is_err());
    }

    #[test]
    fn node_map_roundtrip() {
        let net = preset_network(Preset::Seven(Shape::Merging), 10.0, &shared(0.0), BoundarySet::ZfFf).unwrap();
        let g = build_grid(&net, 3.0).unwrap();
        for j in 0..g.edge_count() {
            for k in 0..=g.cells(j) {
                let i = g.node(j, k);
                match g.location(i) {
                    NodeLocation::Vertex(v) => {
                        assert!(k == 0 || k == g.cells(j));
                        assert_eq!(v, i);
                    }
                    NodeLocation::Interior { edge, index } => assert_eq!((edge, index), (j, k)),
                }
            }
        }
    }

    #[test]
    fn pure_diffusion_stencil() {
        let p = EdgeParams { diffusion: 0.5, ..EdgeParams::default() };
        let net = single(1.0, p, BoundarySet::ZfFf);
        let g = grid_with_cells(&net, &[4]);
        let op = assemble_transport(&net, &g);
        let h: f64 = 0.25;
        let i = g.node(0, 2);
        let d = 0.5 / (h * h);
        assert!((op.matrix().get(i, g.node(0, 1)) - d).abs() < 1e-12);
        assert!((op.matrix().get(i, i) + 2.0 * d).abs() < 1e-12);
        assert!((op.matrix().get(i, g.node(0, 3)) - d).abs() < 1e-12);
    }

    #[test]
    fn constants_in_kernel_without_advection() {
        for preset in crate::presets::ALL_PRESETS {
            let net = preset_network(preset, 50.0, &shared(0.0), BoundarySet::ZfFf).unwrap();
            let g = build_grid(&net, 7.0).unwrap();
            let op = assemble_transport(&net, &g);
            let y = op.apply(&vec![1.0; g.node_count()]);
            let tol = 1e-14 * op.matrix().norm_inf();
            assert!(y.iter().all(|&v| v.abs() <= tol), "{preset}");
        }
    }

    #[test]
    fn upwind_face_keeps_m_matrix() {
        // Face Péclet v h / 2D = 0.3 * 1 / 0.1 = 3.
        let p = EdgeParams { diffusion: 0.05, velocity: 0.3, ..EdgeParams::default() };
        let net = single(4.0, p, BoundarySet::ZfFf);
        let g = grid_with_cells(&net, &[4]);
        let c: Vec<f64> = (0..g.node_count()).map(|i| 0.1 * i as f64).collect();
        let op = assemble(&net, &g, &c).unwrap();
        let xi = c.iter().cloned().fold(f64::MIN, f64::max);
        for i in 0..g.node_count() {
            for (j, a) in op.matrix().row(i) {
                if i != j {
                    // Off-diagonals of ξ - L̂ are the negated ones of L̂.
                    assert!(-a <= 0.0, "({i},{j}) = {a}");
                }
            }
            assert!(xi - op.matrix().get(i, i) > 0.0);
        }
        // Upwind: row of node 2 sees (v + D/h)/h from node 1 and D/h² from node 3.
        let (n1, n2, n3) = (g.node(0, 1), g.node(0, 2), g.node(0, 3));
        assert!((op.matrix().get(n2, n1) - 0.35).abs() < 1e-12);
        assert!((op.matrix().get(n2, n3) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn eta_recursion() {
        let net = single(1.0, EdgeParams::default(), BoundarySet::ZfFf);
        let w = symmetrization_weights(&net);
        assert_eq!(w.eta, [1.0]);
        assert_eq!(w.zeta(0, 0.7), 1.0);

        let net3 = preset_network(Preset::Three(Shape::Merging), 5.0, &shared(0.0), BoundarySet::ZfFf).unwrap();
        assert_eq!(symmetrization_weights(&net3).eta, [1.0, 1.0, 1.0]);

        let chain = build_network(NetworkSpec {
            vertex_count: 3,
            edges: vec![(0, 1, 1.0), (1, 2, 1.0)],
            params: vec![
                EdgeParams { diffusion: 1.0, area: 2.0, ..EdgeParams::default() },
                EdgeParams { diffusion: 1.0, area: 1.0, ..EdgeParams::default() },
            ],
            boundary: BoundarySet::ZfFf.into(),
        })
        .unwrap();
        let w = symmetrization_weights(&chain);
        assert!((w.eta[1] / w.eta[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hostile_rows_are_decoupled() {
        let p = EdgeParams { diffusion: 1.0, velocity: 0.5, ..EdgeParams::default() };
        let net = single(1.0, p, BoundarySet::HH);
        let g = grid_with_cells(&net, &[5]);
        let op = assemble_transport(&net, &g);
        for v in [0, 1] {
            assert_eq!(op.matrix().row(v).collect::<Vec<_>>(), [(v, 1.0)]);
            for i in 0..g.node_count() {
                if i != v {
                    assert_eq!(op.matrix().get(i, v), 0.0);
                }
            }
        }
    }
}
