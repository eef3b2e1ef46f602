//! Persistence metrics and population dynamics for reaction-advection-diffusion
//! models posed on river networks.
//!
//! A river network is an oriented metric tree: every edge carries an arc-length
//! coordinate running from its upstream end (`x = 0`) to its downstream end
//! (`x = l`). On each edge the density obeys
//!
//! ```text
//! u_t = D u_xx - v u_x + f(x, u) u
//! ```
//!
//! with Robin conditions at boundary vertices and continuity plus total-flux
//! balance at interior junctions. This crate discretizes that operator with a
//! conservative finite-volume scheme and computes
//!
//! * the principal eigenvalue `λ*` of the linearization at `u = 0`,
//! * the net reproductive rate `R₀` and the next-generation distribution,
//! * transient trajectories and the positive steady state.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![deny(unsafe_code)]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod discretize;
pub mod dynamics;
pub mod eigen;
pub mod graph;
pub mod hydrology;
pub mod linalg;
pub mod oracle;
pub mod presets;

pub use discretize::{assemble, build_grid, DiscreteOperator, Grid, NodeLocation};
pub use dynamics::{FieldState, GrowthModel, SteadyOutcome};
pub use eigen::{EigenKind, EigenOutcome, SignReport};
pub use graph::{
    BoundaryKind, BoundarySet, Edge, EdgeParams, NetworkError, NetworkSpec, RiverNetwork, Vertex,
    VertexClass,
};
pub use hydrology::{ChannelSpec, UniformFlow};
pub use presets::{FlowRegime, Preset, SharedParams};
