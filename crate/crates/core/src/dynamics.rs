//! Time integration of the logistic reaction–advection–diffusion system and
//! its positive steady state.
//!
//! The semi-discrete system is `u' = L̂u + g(u)` with `L̂` the transport
//! operator (no potential) and `g(u) = r u - (r/K) u² - m u` per node. Steps
//! use the θ-scheme with Newton on the full nonlinear residual; each Jacobian
//! `I - θ dt (L̂ + diag g'(u))` is a tree matrix factored without fill.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::discretize::{assemble_transport, DiscreteOperator, Grid};
use crate::eigen::{lambda_star, EigenError};
use crate::graph::RiverNetwork;
use crate::linalg::{LinalgError, TreeLu, TreeOrdering};

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 20;
/// Undershoot accepted as roundoff, relative to the capacity scale.
const CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    /// Node densities, indexed like the grid.
    pub values: Vec<f64>,
    /// Seconds.
    pub time: f64,
}

impl FieldState {
    pub fn new(values: Vec<f64>, time: f64) -> Self {
        FieldState { values, time }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }
}

/// Node-averaged logistic coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthModel {
    pub growth: Vec<f64>,
    pub mortality: Vec<f64>,
    /// `r / K`.
    pub crowding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SteadyOutcome {
    Persistent(FieldState),
    Extinct { lambda_star: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("Newton did not converge at t = {time} s (update {update:e} after {iterations} iterations)")]
    NewtonDiverged { time: f64, iterations: usize, update: f64 },
    #[error("node {node} went negative: {value:e}")]
    PositivityViolated { node: usize, value: f64 },
    #[error("steady state not found (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("invalid time step {0}")]
    InvalidStep(f64),
    #[error("state has {got} values, grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

impl GrowthModel {
    pub fn from_network(network: &RiverNetwork, grid: &Grid) -> Self {
        GrowthModel {
            growth: grid.node_average(network, |p| p.growth),
            mortality: grid.node_average(network, |p| p.mortality),
            crowding: grid.node_average(network, |p| p.growth / p.capacity),
        }
    }

    /// Spatially constant coefficients on `n` nodes.
    pub fn uniform(n: usize, growth: f64, mortality: f64, capacity: f64) -> Self {
        GrowthModel { growth: vec![growth; n], mortality: vec![mortality; n], crowding: vec![growth / capacity; n] }
    }

    pub fn len(&self) -> usize {
        self.growth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.growth.is_empty()
    }

    /// `g_i(u) = (r - (r/K) u - m) u`.
    pub fn reaction(&self, i: usize, u: f64) -> f64 {
        (self.growth[i] - self.crowding[i] * u - self.mortality[i]) * u
    }

    pub fn derivative(&self, i: usize, u: f64) -> f64 {
        self.growth[i] - 2.0 * self.crowding[i] * u - self.mortality[i]
    }

    pub fn max_growth(&self) -> f64 {
        self.growth.iter().fold(0.0f64, |a, &b| a.max(b))
    }

    /// Largest node carrying capacity, or 1 when growth vanishes everywhere.
    pub fn capacity_scale(&self) -> f64 {
        let k = self
            .growth
            .iter()
            .zip(&self.crowding)
            .filter(|(_, &c)| c > 0.0)
            .fold(0.0f64, |a, (r, c)| a.max(r / c));
        if k > 0.0 {
            k
        } else {
            1.0
        }
    }

    /// `K max(0, 1 - m/r)` per node.
    fn logistic_guess(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let r = self.growth[i];
                if r > 0.0 && self.crowding[i] > 0.0 {
                    (r / self.crowding[i]) * (1.0 - self.mortality[i] / r).max(0.0)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// `Σ w_i u_i`.
pub fn total_mass(state: &FieldState, op: &DiscreteOperator) -> f64 {
    op.mass(&state.values)
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// `L̂u + g(u)`, zero at hostile nodes.
fn rhs(op: &DiscreteOperator, growth: &GrowthModel, u: &[f64], out: &mut [f64]) {
    op.matrix().mul_vec_into(u, out);
    let hostile = op.hostile();
    for i in 0..u.len() {
        out[i] = if hostile[i] { 0.0 } else { out[i] + growth.reaction(i, u[i]) };
    }
}

struct Integrator<'a> {
    op: &'a DiscreteOperator,
    growth: &'a GrowthModel,
    ordering: TreeOrdering,
    clamp: f64,
}

impl<'a> Integrator<'a> {
    fn new(op: &'a DiscreteOperator, growth: &'a GrowthModel) -> Result<Self, DynamicsError> {
        if growth.len() != op.dim() {
            return Err(DynamicsError::LengthMismatch { expected: op.dim(), got: growth.len() });
        }
        let ordering = TreeOrdering::new(op.matrix(), &op.active())?;
        Ok(Integrator { op, growth, ordering, clamp: CLAMP_TOL * growth.capacity_scale() })
    }

    fn step(&self, state: &FieldState, dt: f64, theta: f64) -> Result<FieldState, DynamicsError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(DynamicsError::InvalidStep(dt));
        }
        let n = self.op.dim();
        if state.values.len() != n {
            return Err(DynamicsError::LengthMismatch { expected: n, got: state.values.len() });
        }
        let hostile = self.op.hostile();
        let u = &state.values;
        let mut explicit = vec![0.0; n];
        if theta < 1.0 {
            rhs(self.op, self.growth, u, &mut explicit);
        }
        let mut w: Vec<f64> = u.iter().zip(hostile).map(|(&x, &h)| if h { 0.0 } else { x }).collect();
        let mut f = vec![0.0; n];
        let mut shift = vec![0.0; n];
        let mut update = f64::INFINITY;
        for it in 0..NEWTON_MAX_ITER {
            rhs(self.op, self.growth, &w, &mut f);
            for i in 0..n {
                // -(residual) of w - u - dt[θ F(w) + (1-θ) F(u)] = 0
                f[i] = u[i] - w[i] + dt * (theta * f[i] + (1.0 - theta) * explicit[i]);
                shift[i] = 1.0 - theta * dt * self.growth.derivative(i, w[i]);
            }
            let lu = TreeLu::factor(&self.ordering, self.op.matrix(), -theta * dt, &shift)?;
            lu.solve_in_place(&mut f);
            update = sup_norm(&f);
            for i in 0..n {
                w[i] += f[i];
            }
            if update <= NEWTON_TOL * sup_norm(&w).max(f64::MIN_POSITIVE) {
                return self.finish(w, state.time + dt);
            }
            if !update.is_finite() {
                return Err(DynamicsError::NewtonDiverged { time: state.time, iterations: it + 1, update });
            }
        }
        Err(DynamicsError::NewtonDiverged { time: state.time, iterations: NEWTON_MAX_ITER, update })
    }

    fn finish(&self, mut w: Vec<f64>, time: f64) -> Result<FieldState, DynamicsError> {
        for (i, x) in w.iter_mut().enumerate() {
            if *x < 0.0 {
                if *x < -self.clamp {
                    return Err(DynamicsError::PositivityViolated { node: i, value: *x });
                }
                *x = 0.0;
            }
        }
        Ok(FieldState { values: w, time })
    }
}

/// One θ-scheme step, `θ ∈ [0.5, 1]`. `op` should carry no potential.
pub fn step(
    state: &FieldState,
    op: &DiscreteOperator,
    growth: &GrowthModel,
    dt: f64,
    theta: f64,
) -> Result<FieldState, DynamicsError> {
    Integrator::new(op, growth)?.step(state, dt, theta)
}

/// March from `u0` with steps of at most `dt`, recording the state at each
/// of `sample_times` (ascending, ≥ `u0.time`). The step before a sample is
/// shortened to land on it.
pub fn simulate(
    u0: &FieldState,
    op: &DiscreteOperator,
    growth: &GrowthModel,
    dt: f64,
    theta: f64,
    sample_times: &[f64],
) -> Result<Vec<FieldState>, DynamicsError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(DynamicsError::InvalidStep(dt));
    }
    let integ = Integrator::new(op, growth)?;
    let mut state = u0.clone();
    let mut out = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        // Relative slack so floating time accumulation cannot add a sliver step.
        let slack = 1e-9 * dt;
        while state.time < t - slack {
            let h = dt.min(t - state.time);
            state = integ.step(&state, h, theta)?;
        }
        state.time = state.time.max(t);
        out.push(state.clone());
    }
    Ok(out)
}

/// Positive steady state, or `Extinct` when `λ* ≤ 0`.
pub fn steady_state(network: &RiverNetwork, grid: &Grid, growth: &GrowthModel) -> Result<SteadyOutcome, DynamicsError> {
    let lambda = lambda_star(network, grid)?.value;
    if lambda <= 0.0 {
        return Ok(SteadyOutcome::Extinct { lambda_star: lambda });
    }
    let op = assemble_transport(network, grid);
    let integ = Integrator::new(&op, growth)?;
    let guess = growth.logistic_guess();
    let hostile = op.hostile();
    let guess: Vec<f64> = guess.iter().zip(hostile).map(|(&g, &h)| if h { 0.0 } else { g }).collect();

    let mut best = f64::INFINITY;
    if sup_norm(&guess) > 0.0 {
        match newton_steady(&integ, guess) {
            Ok(u) => return Ok(SteadyOutcome::Persistent(FieldState::new(u, 0.0))),
            Err(r) => best = best.min(r),
        }
    }

    // Pseudo-transient continuation from the constant upper solution.
    let k = growth.capacity_scale();
    let mut state = FieldState::new(hostile.iter().map(|&h| if h { 0.0 } else { k }).collect(), 0.0);
    let mut dt = 0.1 / growth.max_growth().max(lambda);
    for _ in 0..200 {
        state = match integ.step(&state, dt, 1.0) {
            Ok(s) => s,
            Err(_) => {
                dt *= 0.25;
                continue;
            }
        };
        match newton_steady(&integ, state.values.clone()) {
            Ok(u) if u.iter().zip(hostile).all(|(&x, &h)| h || x > 0.0) => {
                return Ok(SteadyOutcome::Persistent(FieldState::new(u, 0.0)));
            }
            Ok(_) => {}
            Err(r) => best = best.min(r),
        }
        dt *= 4.0;
    }
    Err(DynamicsError::NoConvergence { residual: best })
}

/// Damped Newton on `L̂u + g(u) = 0`. On failure returns the best residual.
fn newton_steady(integ: &Integrator<'_>, mut u: Vec<f64>) -> Result<Vec<f64>, f64> {
    let op = integ.op;
    let growth = integ.growth;
    let n = u.len();
    let l_norm = op.matrix().norm_inf();
    let rmax = growth.max_growth();
    let floor = 1e-12 * rmax * growth.capacity_scale();
    let noise = |u: &[f64]| 64.0 * f64::EPSILON * (l_norm + rmax) * sup_norm(u);

    let mut f = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut shift = vec![0.0; n];
    rhs(op, growth, &u, &mut f);
    let mut res = sup_norm(&f);
    for _ in 0..60 {
        if res <= floor.max(noise(&u)) {
            return Ok(u);
        }
        // Solve -(L̂ + diag g') δ = F.
        for i in 0..n {
            shift[i] = -growth.derivative(i, u[i]);
        }
        let lu = TreeLu::factor(&integ.ordering, op.matrix(), -1.0, &shift).map_err(|_| res)?;
        let mut delta = f.clone();
        lu.solve_in_place(&mut delta);
        let step_size = sup_norm(&delta);
        if !step_size.is_finite() {
            return Err(res);
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            for i in 0..n {
                trial[i] = u[i] + lambda * delta[i];
            }
            if trial.iter().all(|&x| x >= -integ.clamp) {
                rhs(op, growth, &trial, &mut f);
                let r = sup_norm(&f);
                if r < res || r <= floor.max(noise(&trial)) {
                    res = r;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(res);
        }
        for (ui, &ti) in u.iter_mut().zip(&trial) {
            *ui = ti.max(0.0);
        }
        if lambda == 1.0 && step_size <= 1e-13 * sup_norm(&u) {
            return Ok(u);
        }
    }
    Err(res)
}
