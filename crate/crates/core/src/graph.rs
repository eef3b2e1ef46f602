//! River networks as oriented metric trees.
//!
//! Vertex classes are never supplied by the caller: a valency-1 vertex is an
//! upstream boundary when it is the tail of its edge and a downstream boundary
//! when it is the head. Everything with valency two or more is a junction.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

/// Relative tolerance for `Σ d_ij A_j v_j = 0` at junctions.
pub const FLOW_CONSERVATION_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexClass {
    UpstreamBoundary,
    DownstreamBoundary,
    Junction,
}

impl VertexClass {
    pub fn is_boundary(self) -> bool {
        !matches!(self, VertexClass::Junction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub class: VertexClass,
    /// Dirichlet (`u = 0`) boundary vertex. Always `false` for junctions.
    pub hostile: bool,
    pub valency: usize,
}

/// An edge parameterized over `[0, length]`, `x = 0` at `tail`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub id: usize,
    pub tail: usize,
    pub head: usize,
    pub length: f64,
}

/// Per-edge transport and demography. Units: D m²/s, v m/s, A m², r and m 1/s,
/// K in density units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeParams {
    pub diffusion: f64,
    pub velocity: f64,
    pub area: f64,
    pub growth: f64,
    pub mortality: f64,
    pub capacity: f64,
}

impl Default for EdgeParams {
    fn default() -> Self {
        EdgeParams {
            diffusion: 1.0,
            velocity: 0.0,
            area: 1.0,
            growth: 0.0,
            mortality: 0.0,
            capacity: 1.0,
        }
    }
}

impl EdgeParams {
    /// Logistic per-capita growth `r (1 - u/K) - m`.
    pub fn per_capita(&self, u: f64) -> f64 {
        self.growth * (1.0 - u / self.capacity) - self.mortality
    }

    /// Volumetric discharge `A v`.
    pub fn discharge(&self) -> f64 {
        self.area * self.velocity
    }

    fn validate(&self, edge: usize) -> Result<(), NetworkError> {
        let checks: [(&'static str, f64, bool); 6] = [
            ("diffusion", self.diffusion, self.diffusion > 0.0),
            ("velocity", self.velocity, self.velocity >= 0.0),
            ("area", self.area, self.area > 0.0),
            ("growth", self.growth, self.growth >= 0.0),
            ("mortality", self.mortality, self.mortality >= 0.0),
            ("capacity", self.capacity, self.capacity > 0.0),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(NetworkError::InvalidParameter { edge, name, value });
            }
        }
        Ok(())
    }
}

/// Boundary condition at a valency-1 vertex.
///
/// Upstream Robin conditions read `α u - β u_x = 0`, downstream ones
/// `α u + β u_x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    /// Total flux `D u_x - v u` vanishes. Upstream this is the pair `(v, D)`;
    /// at a downstream vertex it describes a closed end.
    ZeroFlux,
    /// `u_x = 0`, the pair `(0, 1)`.
    FreeFlow,
    /// `u = 0`, the pair `(1, 0)`.
    Hostile,
    Robin { alpha: f64, beta: f64 },
}

impl BoundaryKind {
    /// The `(α, β)` pair this condition imposes at a vertex of `class` on an
    /// edge with `params`.
    pub fn robin_pair(&self, class: VertexClass, params: &EdgeParams) -> (f64, f64) {
        match *self {
            BoundaryKind::ZeroFlux => match class {
                VertexClass::DownstreamBoundary => (-params.velocity, params.diffusion),
                _ => (params.velocity, params.diffusion),
            },
            BoundaryKind::FreeFlow => (0.0, 1.0),
            BoundaryKind::Hostile => (1.0, 0.0),
            BoundaryKind::Robin { alpha, beta } => (alpha, beta),
        }
    }

    pub fn is_hostile(&self) -> bool {
        match *self {
            BoundaryKind::Hostile => true,
            BoundaryKind::Robin { beta, .. } => beta == 0.0,
            _ => false,
        }
    }
}

/// The three boundary sets used throughout the numerical studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundarySet {
    /// Zero flux upstream, free flow downstream.
    ZfFf,
    /// Zero flux upstream, hostile downstream.
    ZfH,
    /// Hostile at both ends.
    HH,
}

impl BoundarySet {
    pub fn kind_for(self, class: VertexClass) -> BoundaryKind {
        match (self, class) {
            (BoundarySet::HH, _) => BoundaryKind::Hostile,
            (_, VertexClass::UpstreamBoundary) => BoundaryKind::ZeroFlux,
            (BoundarySet::ZfFf, _) => BoundaryKind::FreeFlow,
            (BoundarySet::ZfH, _) => BoundaryKind::Hostile,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundarySet::ZfFf => "ZF-FF",
            BoundarySet::ZfH => "ZF-H",
            BoundarySet::HH => "H-H",
        }
    }
}

impl fmt::Display for BoundarySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundarySet {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ZF-FF" => Ok(BoundarySet::ZfFf),
            "ZF-H" => Ok(BoundarySet::ZfH),
            "H-H" => Ok(BoundarySet::HH),
            _ => Err(NetworkError::UnknownBoundarySet),
        }
    }
}

/// How boundary conditions are attached to boundary vertices.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryAssignment {
    Set(BoundarySet),
    /// Explicit condition per boundary vertex id; vertices left out fall back
    /// to `default`, and it is an error if that is `None`.
    PerVertex {
        conditions: BTreeMap<usize, BoundaryKind>,
        default: Option<BoundarySet>,
    },
}

impl From<BoundarySet> for BoundaryAssignment {
    fn from(set: BoundarySet) -> Self {
        BoundaryAssignment::Set(set)
    }
}

/// Raw, unvalidated network description.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub vertex_count: usize,
    /// `(tail, head, length)` per edge; the position in this list is the edge id.
    pub edges: Vec<(usize, usize, f64)>,
    pub params: Vec<EdgeParams>,
    pub boundary: BoundaryAssignment,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("network has no edges")]
    Empty,
    #[error("edge {edge} references vertex {vertex}, but only {vertex_count} vertices exist")]
    UnknownVertex { edge: usize, vertex: usize, vertex_count: usize },
    #[error("edge {edge} starts and ends at vertex {vertex}")]
    SelfLoop { edge: usize, vertex: usize },
    #[error("edge {edge} closes a cycle")]
    CycleDetected { edge: usize },
    #[error("vertex {vertex} is not connected to vertex 0")]
    Disconnected { vertex: usize },
    #[error("edge {edge} has non-positive length {length}")]
    NonpositiveLength { edge: usize, length: f64 },
    #[error("edge {edge}: {name} = {value} is out of range")]
    InvalidParameter { edge: usize, name: &'static str, value: f64 },
    #[error("expected {expected} parameter sets, got {got}")]
    ParamCountMismatch { expected: usize, got: usize },
    #[error("flow not conserved at junction {vertex}: residual {residual:e} m³/s")]
    FlowConservationViolated { vertex: usize, residual: f64 },
    #[error("invalid Robin pair (α = {alpha}, β = {beta}) at vertex {vertex}")]
    InvalidRobinPair { vertex: usize, alpha: f64, beta: f64 },
    #[error("boundary vertex {vertex} has no boundary condition")]
    MissingBoundaryCondition { vertex: usize },
    #[error("vertex {vertex} is a junction and cannot carry a boundary condition")]
    BoundaryOnJunction { vertex: usize },
    #[error("unknown boundary set (expected ZF-FF, ZF-H or H-H)")]
    UnknownBoundarySet,
}

/// A validated river network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RiverNetwork {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    params: Vec<EdgeParams>,
    boundary: Vec<Option<BoundaryKind>>,
    incident: Vec<Vec<usize>>,
}

/// Validate a raw description and derive vertex classes.
pub fn build_network(spec: NetworkSpec) -> Result<RiverNetwork, NetworkError> {
    let NetworkSpec { vertex_count, edges, params, boundary } = spec;
    if edges.is_empty() {
        return Err(NetworkError::Empty);
    }
    if params.len() != edges.len() {
        return Err(NetworkError::ParamCountMismatch { expected: edges.len(), got: params.len() });
    }

    let mut uf = UnionFind::new(vertex_count);
    let mut incident = vec![Vec::new(); vertex_count];
    let mut built = Vec::with_capacity(edges.len());
    for (id, &(tail, head, length)) in edges.iter().enumerate() {
        for vertex in [tail, head] {
            if vertex >= vertex_count {
                return Err(NetworkError::UnknownVertex { edge: id, vertex, vertex_count });
            }
        }
        if tail == head {
            return Err(NetworkError::SelfLoop { edge: id, vertex: tail });
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(NetworkError::NonpositiveLength { edge: id, length });
        }
        if !uf.union(tail, head) {
            return Err(NetworkError::CycleDetected { edge: id });
        }
        incident[tail].push(id);
        incident[head].push(id);
        built.push(Edge { id, tail, head, length });
    }
    if let Some(vertex) = (1..vertex_count).find(|&v| !uf.same(0, v)) {
        return Err(NetworkError::Disconnected { vertex });
    }
    for (id, p) in params.iter().enumerate() {
        p.validate(id)?;
    }

    let mut vertices = Vec::with_capacity(vertex_count);
    for (id, inc) in incident.iter().enumerate() {
        let valency = inc.len();
        let class = if valency >= 2 {
            VertexClass::Junction
        } else if built[inc[0]].tail == id {
            VertexClass::UpstreamBoundary
        } else {
            VertexClass::DownstreamBoundary
        };
        vertices.push(Vertex { id, class, hostile: false, valency });
    }

    let mut bc = vec![None; vertex_count];
    match &boundary {
        BoundaryAssignment::Set(set) => {
            for v in vertices.iter().filter(|v| v.class.is_boundary()) {
                bc[v.id] = Some(set.kind_for(v.class));
            }
        }
        BoundaryAssignment::PerVertex { conditions, default } => {
            for (&vertex, kind) in conditions {
                match vertices.get(vertex) {
                    Some(v) if v.class.is_boundary() => bc[vertex] = Some(*kind),
                    Some(_) => return Err(NetworkError::BoundaryOnJunction { vertex }),
                    None => {
                        return Err(NetworkError::UnknownVertex {
                            edge: usize::MAX,
                            vertex,
                            vertex_count,
                        })
                    }
                }
            }
            for v in vertices.iter().filter(|v| v.class.is_boundary()) {
                if bc[v.id].is_none() {
                    match default {
                        Some(set) => bc[v.id] = Some(set.kind_for(v.class)),
                        None => return Err(NetworkError::MissingBoundaryCondition { vertex: v.id }),
                    }
                }
            }
        }
    }

    let network = RiverNetwork { vertices, edges: built, params, boundary: bc, incident };
    network.check_boundary()?;
    network.check_flow_conservation()?;
    let mut network = network;
    for v in network.vertices.iter_mut() {
        v.hostile = network.boundary[v.id].is_some_and(|b| b.is_hostile());
    }
    Ok(network)
}

impl RiverNetwork {
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn params(&self) -> &[EdgeParams] {
        &self.params
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Edges touching `vertex`, in edge-id order.
    pub fn incident_edges(&self, vertex: usize) -> &[usize] {
        &self.incident[vertex]
    }

    pub fn boundary(&self, vertex: usize) -> Option<BoundaryKind> {
        self.boundary[vertex]
    }

    /// Entry `d_ij` of the incidence matrix: `+1` if vertex `i` is the head of
    /// edge `j`, `-1` if it is the tail, `0` otherwise.
    pub fn incidence(&self, vertex: usize, edge: usize) -> i8 {
        let e = &self.edges[edge];
        if e.head == vertex {
            1
        } else if e.tail == vertex {
            -1
        } else {
            0
        }
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn vertices_of_class(&self, class: VertexClass) -> impl Iterator<Item = &Vertex> + '_ {
        self.vertices.iter().filter(move |v| v.class == class)
    }

    /// Edges ordered so that every edge comes after all edges flowing into its
    /// tail. Ties broken by edge id.
    pub fn flow_order(&self) -> Vec<usize> {
        let mut indegree: Vec<usize> = self
            .vertices
            .iter()
            .map(|v| self.incident[v.id].iter().filter(|&&j| self.edges[j].head == v.id).count())
            .collect();
        let mut ready: VecDeque<usize> =
            (0..self.vertices.len()).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.edges.len());
        while let Some(v) = ready.pop_front() {
            for &j in &self.incident[v] {
                if self.edges[j].tail == v {
                    order.push(j);
                    let h = self.edges[j].head;
                    indegree[h] -= 1;
                    if indegree[h] == 0 {
                        ready.push_back(h);
                    }
                }
            }
        }
        order
    }

    /// Rebuild with new per-edge parameters, re-running all checks.
    pub fn with_params(&self, params: Vec<EdgeParams>) -> Result<RiverNetwork, NetworkError> {
        build_network(NetworkSpec { params, ..self.spec() })
    }

    /// Rebuild with a different boundary assignment.
    pub fn with_boundary(&self, boundary: BoundaryAssignment) -> Result<RiverNetwork, NetworkError> {
        build_network(NetworkSpec { boundary, ..self.spec() })
    }

    /// The raw description this network was built from, with boundary
    /// conditions pinned per vertex.
    pub fn spec(&self) -> NetworkSpec {
        let conditions = self
            .boundary
            .iter()
            .enumerate()
            .filter_map(|(v, b)| b.map(|b| (v, b)))
            .collect();
        NetworkSpec {
            vertex_count: self.vertices.len(),
            edges: self.edges.iter().map(|e| (e.tail, e.head, e.length)).collect(),
            params: self.params.clone(),
            boundary: BoundaryAssignment::PerVertex { conditions, default: None },
        }
    }

    /// Run every structural and physical check again.
    pub fn revalidate(&self) -> Result<(), NetworkError> {
        let rebuilt = build_network(self.spec())?;
        debug_assert_eq!(&rebuilt, self);
        Ok(())
    }

    /// `Σ_j d_ij A_j v_j` at `vertex`.
    pub fn flow_residual(&self, vertex: usize) -> f64 {
        self.incident[vertex]
            .iter()
            .map(|&j| f64::from(self.incidence(vertex, j)) * self.params[j].discharge())
            .sum()
    }

    fn check_flow_conservation(&self) -> Result<(), NetworkError> {
        for v in self.vertices_of_class(VertexClass::Junction) {
            let residual = self.flow_residual(v.id);
            let scale: f64 =
                self.incident[v.id].iter().map(|&j| self.params[j].discharge().abs()).sum();
            if residual.abs() > FLOW_CONSERVATION_RTOL * scale {
                return Err(NetworkError::FlowConservationViolated { vertex: v.id, residual });
            }
        }
        Ok(())
    }

    fn check_boundary(&self) -> Result<(), NetworkError> {
        for v in self.vertices.iter().filter(|v| v.class.is_boundary()) {
            let kind = self.boundary[v.id].ok_or(NetworkError::MissingBoundaryCondition { vertex: v.id })?;
            if let BoundaryKind::Robin { alpha, beta } = kind {
                if !(alpha >= 0.0 && beta >= 0.0 && alpha + beta > 0.0)
                    || !alpha.is_finite()
                    || !beta.is_finite()
                {
                    return Err(NetworkError::InvalidRobinPair { vertex: v.id, alpha, beta });
                }
            }
        }
        Ok(())
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }

    fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(v: f64, a: f64) -> EdgeParams {
        EdgeParams { diffusion: 0.35, velocity: v, area: a, ..EdgeParams::default() }
    }

    fn three_a(v3: f64) -> NetworkSpec {
        NetworkSpec {
            vertex_count: 4,
            edges: vec![(0, 2, 800.0), (1, 2, 800.0), (2, 3, 800.0)],
            params: vec![params(0.0015, 1.0), params(0.0015, 1.0), params(v3, 1.0)],
            boundary: BoundarySet::ZfFf.into(),
        }
    }

    #[test]
    fn single_edge_classes() {
        let net = build_network(NetworkSpec {
            vertex_count: 2,
            edges: vec![(0, 1, 1600.0)],
            params: vec![EdgeParams::default()],
            boundary: BoundarySet::ZfFf.into(),
        })
        .unwrap();
        assert_eq!(net.vertices()[0].class, VertexClass::UpstreamBoundary);
        assert_eq!(net.vertices()[1].class, VertexClass::DownstreamBoundary);
        assert_eq!(net.vertices_of_class(VertexClass::Junction).count(), 0);
        assert_eq!(net.boundary(0), Some(BoundaryKind::ZeroFlux));
        assert_eq!(net.boundary(1), Some(BoundaryKind::FreeFlow));
    }

    #[test]
    fn junction_flow_conservation() {
        let net = build_network(three_a(0.003)).unwrap();
        assert_eq!(net.vertices()[2].class, VertexClass::Junction);
        assert_eq!(net.vertices()[2].valency, 3);
        match build_network(three_a(0.0029)) {
            Err(NetworkError::FlowConservationViolated { vertex: 2, residual }) => {
                assert!((residual - 0.0001).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parallel_edges_are_a_cycle() {
        let spec = NetworkSpec {
            vertex_count: 2,
            edges: vec![(0, 1, 1.0), (0, 1, 1.0)],
            params: vec![EdgeParams::default(); 2],
            boundary: BoundarySet::ZfFf.into(),
        };
        assert_eq!(build_network(spec), Err(NetworkError::CycleDetected { edge: 1 }));
    }

    #[test]
    fn disconnected_and_bad_lengths() {
        let spec = NetworkSpec {
            vertex_count: 4,
            edges: vec![(0, 1, 1.0), (2, 3, 1.0)],
            params: vec![EdgeParams::default(); 2],
            boundary: BoundarySet::ZfFf.into(),
        };
        assert_eq!(build_network(spec), Err(NetworkError::Disconnected { vertex: 2 }));

        let spec = NetworkSpec {
            vertex_count: 2,
            edges: vec![(0, 1, 0.0)],
            params: vec![EdgeParams::default()],
            boundary: BoundarySet::ZfFf.into(),
        };
        assert!(matches!(build_network(spec), Err(NetworkError::NonpositiveLength { edge: 0, .. })));
    }

    #[test]
    fn robin_pairs() {
        let p = params(0.002, 1.0);
        assert_eq!(BoundaryKind::ZeroFlux.robin_pair(VertexClass::UpstreamBoundary, &p), (0.002, 0.35));
        assert_eq!(BoundaryKind::FreeFlow.robin_pair(VertexClass::DownstreamBoundary, &p), (0.0, 1.0));
        assert_eq!(BoundaryKind::Hostile.robin_pair(VertexClass::DownstreamBoundary, &p), (1.0, 0.0));

        let mut conditions = BTreeMap::new();
        conditions.insert(0, BoundaryKind::Robin { alpha: 0.0, beta: 0.0 });
        let spec = NetworkSpec {
            vertex_count: 2,
            edges: vec![(0, 1, 1.0)],
            params: vec![EdgeParams::default()],
            boundary: BoundaryAssignment::PerVertex { conditions, default: Some(BoundarySet::ZfFf) },
        };
        assert!(matches!(build_network(spec), Err(NetworkError::InvalidRobinPair { vertex: 0, .. })));
    }

    #[test]
    fn hostile_flags_and_invalid_params() {
        let mut spec = three_a(0.003);
        spec.boundary = BoundarySet::ZfH.into();
        let net = build_network(spec.clone()).unwrap();
        let hostile: Vec<bool> = net.vertices().iter().map(|v| v.hostile).collect();
        assert_eq!(hostile, [false, false, false, true]);

        spec.params[1].diffusion = 0.0;
        assert!(matches!(
            build_network(spec),
            Err(NetworkError::InvalidParameter { edge: 1, name: "diffusion", .. })
        ));
    }

    #[test]
    fn incidence_sums_to_valency_and_revalidate() {
        let net = build_network(three_a(0.003)).unwrap();
        for v in net.vertices() {
            let s: usize = (0..net.edge_count()).map(|j| net.incidence(v.id, j).unsigned_abs() as usize).sum();
            assert_eq!(s, v.valency);
        }
        net.revalidate().unwrap();
        assert_eq!(net.with_params(net.params().to_vec()).unwrap(), net);
        assert_eq!(net.flow_order(), vec![0, 1, 2]);
    }
}
