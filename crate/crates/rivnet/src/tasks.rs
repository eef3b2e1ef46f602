//! Task dispatch. Every task returns its tables; writing them is the caller's
//! business.

use rivnet_core::discretize::{assemble_transport, GridError};
use rivnet_core::dynamics::{simulate, steady_state, DynamicsError};
use rivnet_core::eigen::{lambda_star, net_reproductive_rate, EigenError};
use rivnet_core::{build_grid, FieldState, Grid, GrowthModel, SteadyOutcome};
use thiserror::Error;

use crate::config::{ConfigError, Scenario, Task};
use crate::output::{network_table, num, per_node_rows, Table};
use crate::sweep::run_sweep;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{message}")]
    Numerical { kind: &'static str, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical { .. } => 3,
            RunError::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(e) => e.kind(),
            RunError::Numerical { kind, .. } => kind,
            RunError::Io { .. } => "Io",
        }
    }
}

pub fn eigen_kind(e: &EigenError) -> &'static str {
    match e {
        EigenError::NoConvergence { .. } => "NoConvergence",
        EigenError::SingularFactorization(_) => "SingularFactorization",
        EigenError::NoActiveNodes => "NoActiveNodes",
        EigenError::MortalityNotDominant { .. } => "MortalityNotDominant",
        EigenError::NoRecruitment => "NoRecruitment",
    }
}

pub fn dynamics_kind(e: &DynamicsError) -> &'static str {
    match e {
        DynamicsError::NewtonDiverged { .. } => "NewtonDiverged",
        DynamicsError::PositivityViolated { .. } => "PositivityViolated",
        DynamicsError::NoConvergence { .. } => "NoConvergence",
        DynamicsError::InvalidStep(_) => "InvalidStep",
        DynamicsError::LengthMismatch { .. } => "LengthMismatch",
        DynamicsError::Linalg(_) => "SingularFactorization",
        DynamicsError::Eigen(e) => eigen_kind(e),
    }
}

impl From<EigenError> for RunError {
    fn from(e: EigenError) -> Self {
        RunError::Numerical { kind: eigen_kind(&e), message: e.to_string() }
    }
}

impl From<DynamicsError> for RunError {
    fn from(e: DynamicsError) -> Self {
        RunError::Numerical { kind: dynamics_kind(&e), message: e.to_string() }
    }
}

impl From<GridError> for RunError {
    fn from(e: GridError) -> Self {
        RunError::Config(ConfigError::SchemaViolation { path: "target_h".into(), message: e.to_string() })
    }
}

pub fn grid(s: &Scenario) -> Result<Grid, RunError> {
    Ok(build_grid(&s.network, s.target_h)?)
}

/// Run `task` on a loaded scenario. `jobs` bounds sweep concurrency.
pub fn run(s: &Scenario, task: Task, jobs: usize) -> Result<Vec<Table>, RunError> {
    match task {
        Task::Validate => Ok(vec![network_table(&s.network, s.discharges.as_deref())]),
        Task::Lambda => lambda(s),
        Task::R0 => r0(s),
        Task::Steady => steady(s).map(|t| vec![t]),
        Task::Simulate => field(s).map(|t| vec![t]),
        Task::Sweep => run_sweep(s, jobs).map(|t| vec![t]),
    }
}

fn lambda(s: &Scenario) -> Result<Vec<Table>, RunError> {
    let g = grid(s)?;
    let out = lambda_star(&s.network, &g)?;
    let mut summary = Table::new("lambda.csv", &["scenario_id", "lambda_star", "iterations", "residual"]);
    summary.push(vec![s.id.clone(), num(out.value), out.iterations.to_string(), num(out.residual)]);
    let mut ef = Table::new("eigenfunction.csv", &["edge_id", "x_m", "psi"]);
    ef.rows = per_node_rows(&s.network, &g, |i| vec![num(out.eigenfunction[i])]);
    Ok(vec![summary, ef])
}

fn r0(s: &Scenario) -> Result<Vec<Table>, RunError> {
    let g = grid(s)?;
    let out = net_reproductive_rate(&s.network, &g)?;
    let lam = lambda_star(&s.network, &g)?;
    let mut summary = Table::new("r0.csv", &["scenario_id", "R0", "lambda_star", "iterations", "residual"]);
    summary.push(vec![s.id.clone(), num(out.value), num(lam.value), out.iterations.to_string(), num(out.residual)]);
    let phi = out.next_generation.as_deref().unwrap_or(&[]);
    let mut ng = Table::new("next_generation.csv", &["edge_id", "x_m", "psi", "phi"]);
    ng.rows = per_node_rows(&s.network, &g, |i| vec![num(out.eigenfunction[i]), num(phi[i])]);
    Ok(vec![summary, ng])
}

fn steady(s: &Scenario) -> Result<Table, RunError> {
    let g = grid(s)?;
    let growth = GrowthModel::from_network(&s.network, &g);
    match steady_state(&s.network, &g, &growth)? {
        SteadyOutcome::Persistent(u) => {
            let mut t = Table::new("steady.csv", &["edge_id", "x_m", "u"]);
            t.rows = per_node_rows(&s.network, &g, |i| vec![num(u.values[i])]);
            Ok(t)
        }
        SteadyOutcome::Extinct { lambda_star } => {
            let r0 = net_reproductive_rate(&s.network, &g)?.value;
            let mut t = Table::new("steady.csv", &["edge_id", "x_m", "u", "status", "R0", "lambda_star"]);
            t.push(vec![String::new(), String::new(), String::new(), "extinct".into(), num(r0), num(lambda_star)]);
            Ok(t)
        }
    }
}

fn field(s: &Scenario) -> Result<Table, RunError> {
    let spec = s.simulate.as_ref().ok_or_else(|| {
        RunError::Config(ConfigError::SchemaViolation { path: "simulate".into(), message: "missing field `simulate`".into() })
    })?;
    let g = grid(s)?;
    let op = assemble_transport(&s.network, &g);
    let growth = GrowthModel::from_network(&s.network, &g);
    let values = op.hostile().iter().map(|&h| if h { 0.0 } else { spec.initial }).collect();
    let u0 = FieldState::new(values, 0.0);
    let times: Vec<f64> = (1..=spec.samples).map(|k| spec.t_end * k as f64 / spec.samples as f64).collect();
    let traj = simulate(&u0, &op, &growth, spec.dt, spec.theta, &times)?;
    let mut t = Table::new("field.csv", &["t_s", "edge_id", "x_m", "u"]);
    for state in std::iter::once(&u0).chain(&traj) {
        for mut row in per_node_rows(&s.network, &g, |i| vec![num(state.values[i])]) {
            row.insert(0, num(state.time));
            t.push(row);
        }
    }
    Ok(t)
}
