//! Principal eigenvalue `λ*`, net reproductive rate `R₀`, and the
//! next-generation distribution.
//!
//! Both quantities are Perron roots of a pencil `K - μ R` where `K` is a
//! nonsingular M-matrix on the non-hostile nodes and `R` is a nonnegative
//! diagonal:
//!
//! * `λ*`: `K = ξ I - L̂`, `R = I`, `λ* = ξ - μ`;
//! * `R₀`: `K = -L̂` assembled with potential `-m`, `R = diag(r)`, `R₀ = 1/μ`.
//!
//! The root is found by inverse iteration with Noda-style shift updates:
//! each sweep solves `(K - σR) y = R x` with the tree factorization, reads the
//! Collatz–Wielandt bounds `min y/x ≤ 1/(μ - σ) ≤ max y/x`, and moves `σ` up
//! to the certified lower bound on `μ`. Iterates stay strictly positive and
//! the bracket on `μ` converges superlinearly.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::discretize::{assemble, assemble_linearized, DiscreteOperator, Grid};
use crate::graph::RiverNetwork;
use crate::linalg::{CsrMatrix, LinalgError, TreeLu, TreeOrdering};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on the relative bracket width (or the rounding floor, whichever is
    /// larger) and on the relative change of the root between iterations.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tolerance: 1e-12, max_iterations: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenKind {
    LambdaStar,
    R0,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOutcome {
    pub kind: EigenKind,
    /// `λ*` in 1/s or the dimensionless `R₀`.
    pub value: f64,
    /// Positive eigenvector, sup-normalized, exactly zero at hostile nodes.
    pub eigenfunction: Vec<f64>,
    /// `r̂ ψ*` rescaled to sup 1 (`R₀` only).
    pub next_generation: Option<Vec<f64>>,
    pub iterations: usize,
    /// Relative change of the pencil root over the last iteration.
    pub residual: f64,
    /// Final Collatz–Wielandt bracket width relative to the pencil root. A
    /// rigorous bound, but floored by rounding in the factorization.
    pub bracket: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("no convergence after {iterations} iterations (estimate {estimate:e}, residual {residual:e})")]
    NoConvergence { estimate: f64, iterations: usize, residual: f64 },
    #[error("factorization failed: {0}")]
    SingularFactorization(#[from] LinalgError),
    #[error("every node is hostile")]
    NoActiveNodes,
    #[error("mortality does not dominate: principal eigenvalue with c = -m is {lambda:e} ≥ 0")]
    MortalityNotDominant { lambda: f64 },
    #[error("recruitment rate vanishes on every non-hostile node")]
    NoRecruitment,
}

/// Perron root of the pencil `scale·M + diag(base) - μ diag(weight)`.
struct PencilRoot {
    mu: f64,
    vector: Vec<f64>,
    iterations: usize,
    gap: f64,
    change: f64,
}

fn perron_pencil(
    matrix: &CsrMatrix,
    scale: f64,
    base: &[f64],
    weight: &[f64],
    active: &[bool],
    opts: &SolverOptions,
) -> Result<PencilRoot, EigenError> {
    let n = matrix.dim();
    let ordering = TreeOrdering::new(matrix, active)?;
    if ordering.active_count() == 0 {
        return Err(EigenError::NoActiveNodes);
    }
    let k_norm = libm::fabs(scale) * matrix.norm_inf() + base.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let w_max = weight
        .iter()
        .zip(active)
        .filter(|(_, &a)| a)
        .fold(0.0f64, |m, (w, _)| m.max(*w));
    let noise_floor = 4.0 * f64::EPSILON * k_norm / w_max;

    let mut x: Vec<f64> = active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
    let mut sigma = 0.0;
    let mut sigma_safe = 0.0;
    let mut best: Option<PencilRoot> = None;
    let mut prev_mu = f64::INFINITY;
    let mut shift = vec![0.0; n];
    let mut y = vec![0.0; n];

    for it in 1..=opts.max_iterations {
        for i in 0..n {
            shift[i] = base[i] - sigma * weight[i];
        }
        let solved = TreeLu::factor(&ordering, matrix, scale, &shift).ok().and_then(|lu| {
            if lu.min_pivot() <= 0.0 {
                return None;
            }
            for i in 0..n {
                y[i] = weight[i] * x[i];
            }
            lu.solve_in_place(&mut y);
            (0..n).all(|i| !active[i] || y[i] > 0.0).then_some(())
        });
        if solved.is_none() {
            // σ crossed the root in floating point; fall back toward the last
            // shift that gave a positive solve.
            if sigma == sigma_safe {
                return match best {
                    Some(b) => Ok(b),
                    None => Err(EigenError::SingularFactorization(LinalgError::SingularPivot {
                        row: 0,
                        pivot: 0.0,
                    })),
                };
            }
            sigma = sigma_safe + 0.5 * (sigma - sigma_safe);
            if (sigma - sigma_safe) <= f64::EPSILON * libm::fabs(sigma_safe) {
                sigma = sigma_safe;
            }
            continue;
        }
        sigma_safe = sigma;

        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let mut y_max = 0.0f64;
        for i in 0..n {
            if active[i] {
                let q = y[i] / x[i];
                lo = lo.min(q);
                hi = hi.max(q);
                y_max = y_max.max(y[i]);
            }
        }
        let mu_lo = sigma + 1.0 / hi;
        let mu_hi = sigma + 1.0 / lo;
        for i in 0..n {
            x[i] = if active[i] { y[i] / y_max } else { 0.0 };
        }
        let gap = mu_hi - mu_lo;
        let mu = 0.5 * (mu_lo + mu_hi);
        let change = libm::fabs(mu - prev_mu) / libm::fabs(mu);
        prev_mu = mu;
        let tight = gap <= opts.tolerance * libm::fabs(mu) || gap <= noise_floor;
        let converged = tight && change <= opts.tolerance;
        best = Some(PencilRoot { mu, vector: x.clone(), iterations: it, gap, change });
        if converged {
            return Ok(best.unwrap());
        }
        sigma = mu_lo;
    }
    let b = best.expect("at least one iteration ran");
    Err(EigenError::NoConvergence { estimate: b.mu, iterations: b.iterations, residual: b.change })
}

/// Principal eigenvalue of `L̂` (which carries its own potential).
pub fn principal_eigenvalue(op: &DiscreteOperator) -> Result<EigenOutcome, EigenError> {
    principal_eigenvalue_with(op, &SolverOptions::default())
}

pub fn principal_eigenvalue_with(op: &DiscreteOperator, opts: &SolverOptions) -> Result<EigenOutcome, EigenError> {
    let active = op.active();
    let m = op.matrix();
    let n = op.dim();
    // Collatz–Wielandt bound from the all-ones vector: λ* ≤ max row sum.
    let mut upper = f64::NEG_INFINITY;
    for i in (0..n).filter(|&i| active[i]) {
        let s: f64 = m.row(i).filter(|(j, _)| active[*j]).map(|(_, a)| a).sum();
        upper = upper.max(s);
    }
    if upper == f64::NEG_INFINITY {
        return Err(EigenError::NoActiveNodes);
    }
    let xi = upper + (1e-3 * m.norm_inf()).max(f64::MIN_POSITIVE);
    let base = vec![xi; n];
    let ones = vec![1.0; n];
    let root = perron_pencil(m, -1.0, &base, &ones, &active, opts)?;
    Ok(EigenOutcome {
        kind: EigenKind::LambdaStar,
        value: xi - root.mu,
        residual: root.change,
        bracket: root.gap / libm::fabs(root.mu),
        eigenfunction: root.vector,
        next_generation: None,
        iterations: root.iterations,
    })
}

/// Principal eigenvalue of the linearization at `u = 0`, `c = r - m`.
pub fn lambda_star(network: &RiverNetwork, grid: &Grid) -> Result<EigenOutcome, EigenError> {
    principal_eigenvalue(&assemble_linearized(network, grid))
}

pub fn net_reproductive_rate(network: &RiverNetwork, grid: &Grid) -> Result<EigenOutcome, EigenError> {
    net_reproductive_rate_with(network, grid, &SolverOptions::default())
}

pub fn net_reproductive_rate_with(
    network: &RiverNetwork,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<EigenOutcome, EigenError> {
    let mortality = grid.node_average(network, |p| p.mortality);
    let neg_m: Vec<f64> = mortality.iter().map(|m| -m).collect();
    let b = assemble(network, grid, &neg_m).expect("potential sized from grid");

    let s = principal_eigenvalue_with(&b, opts)?;
    let threshold = 16.0 * f64::EPSILON * b.matrix().norm_inf();
    if !(s.value < -threshold) {
        return Err(EigenError::MortalityNotDominant { lambda: s.value });
    }

    let active = b.active();
    let mut r = grid.node_average(network, |p| p.growth);
    for (ri, &a) in r.iter_mut().zip(&active) {
        if !a {
            *ri = 0.0;
        }
    }
    if !r.iter().any(|&v| v > 0.0) {
        return Err(EigenError::NoRecruitment);
    }
    let zero = vec![0.0; grid.node_count()];
    let root = perron_pencil(b.matrix(), -1.0, &zero, &r, &active, opts)?;
    let psi = root.vector;
    let mut phi: Vec<f64> = psi.iter().zip(&r).map(|(p, r)| p * r).collect();
    let phi_max = phi.iter().fold(0.0f64, |a, &b| a.max(b));
    for v in phi.iter_mut() {
        *v /= phi_max;
    }
    Ok(EigenOutcome {
        kind: EigenKind::R0,
        value: 1.0 / root.mu,
        eigenfunction: psi,
        next_generation: Some(phi),
        iterations: root.iterations,
        residual: root.change,
        bracket: root.gap / libm::fabs(root.mu),
    })
}

/// `λ*` and `R₀` side by side, with the check that `R₀ - 1` and `λ*` share a sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignReport {
    pub lambda_star: f64,
    pub r0: f64,
    pub consistent: bool,
}

fn sign_with_zero(x: f64, zero: f64) -> i8 {
    if libm::fabs(x) < zero {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

pub fn sign_consistency(network: &RiverNetwork, grid: &Grid) -> Result<SignReport, EigenError> {
    let lambda = lambda_star(network, grid)?.value;
    let r0 = net_reproductive_rate(network, grid)?.value;
    let consistent = sign_with_zero(lambda, 1e-14) == sign_with_zero(r0 - 1.0, 1e-10);
    Ok(SignReport { lambda_star: lambda, r0, consistent })
}
