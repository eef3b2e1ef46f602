//! Independent reference computations used to cross-check the solvers.
//!
//! A tree-structured matrix with sign-consistent off-diagonal pairs is
//! similar to a symmetric one through a diagonal scaling, `S = T M T⁻¹` with
//! `t_child = t_parent sqrt(M_pc / M_cp)`. The spectrum of `S` is then
//! computed densely by cyclic Jacobi rotations, which shares no code with the
//! sparse Perron iteration.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::linalg::{CsrMatrix, LinalgError, TreeOrdering};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("off-diagonal pair ({row}, {col}) has mismatched signs or a zero")]
    SignMismatch { row: usize, col: usize },
    #[error("sparsity pattern is not a tree: {0}")]
    NotATree(#[from] LinalgError),
    #[error("closed form only covers hostile conditions at both ends")]
    UnsupportedBoundaryCombination,
    #[error("Jacobi iteration did not converge in {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        DenseMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn frobenius(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }
}

#[derive(Debug, Clone)]
pub struct SymmetrizedSystem {
    pub s: DenseMatrix,
    /// Diagonal of `T` in `S = T M T⁻¹`, indexed like `index`.
    pub scaling: Vec<f64>,
    /// Original node of each row of `s`.
    pub index: Vec<usize>,
}

/// Restrict `matrix` to the masked rows and symmetrize it.
pub fn symmetrize_tree_matrix(matrix: &CsrMatrix, mask: &[bool]) -> Result<SymmetrizedSystem, OracleError> {
    let ordering = TreeOrdering::new(matrix, mask)?;
    let index: Vec<usize> = (0..matrix.dim()).filter(|&i| mask[i]).collect();
    let mut pos = vec![usize::MAX; matrix.dim()];
    for (k, &i) in index.iter().enumerate() {
        pos[i] = k;
    }
    let mut t = vec![0.0; matrix.dim()];
    for i in ordering.top_down() {
        t[i] = match ordering.parent(i) {
            None => 1.0,
            Some(p) => {
                let m_pc = matrix.get(p, i);
                let m_cp = matrix.get(i, p);
                if !(m_pc * m_cp > 0.0) {
                    return Err(OracleError::SignMismatch { row: p, col: i });
                }
                t[p] * libm::sqrt(m_pc / m_cp)
            }
        };
    }
    let mut s = DenseMatrix::zeros(index.len());
    for (a, &i) in index.iter().enumerate() {
        for (j, v) in matrix.row(i) {
            if mask[j] {
                s.set(a, pos[j], v * t[i] / t[j]);
            }
        }
    }
    let scaling = index.iter().map(|&i| t[i]).collect();
    Ok(SymmetrizedSystem { s, scaling, index })
}

#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` of this row-major matrix pairs with `values[k]`.
    pub vectors: DenseMatrix,
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi.
pub fn dense_symmetric_eigs(s: &DenseMatrix) -> Result<SymmetricEigen, OracleError> {
    const MAX_SWEEPS: usize = 100;
    let n = s.dim();
    let mut a = s.clone();
    let mut v = DenseMatrix::zeros(n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    let norm = s.frobenius();
    let off = |a: &DenseMatrix| {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += a.get(i, j) * a.get(i, j);
                }
            }
        }
        libm::sqrt(acc)
    };
    let mut sweeps = 0;
    while off(&a) > 1e-14 * norm {
        if sweeps == MAX_SWEEPS {
            return Err(OracleError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let sn = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - sn * akq);
                    a.set(k, q, sn * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sn * aqk);
                    a.set(q, k, sn * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - sn * vkq);
                    v.set(k, q, sn * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a.get(x, x).total_cmp(&a.get(y, y)));
    let values = order.iter().map(|&k| a.get(k, k)).collect();
    let mut vectors = DenseMatrix::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, col, v.get(i, k));
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Largest eigenvalue of a tree matrix via symmetrization and Jacobi.
pub fn tree_principal_eigenvalue(matrix: &CsrMatrix, mask: &[bool]) -> Result<f64, OracleError> {
    let sys = symmetrize_tree_matrix(matrix, mask)?;
    let eig = dense_symmetric_eigs(&sys.s)?;
    Ok(*eig.values.last().unwrap_or(&f64::NAN))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalBoundary {
    HostileHostile,
    ZeroFluxFreeFlow,
    ZeroFluxHostile,
}

/// Constant-coefficient interval data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalData {
    pub length: f64,
    pub diffusion: f64,
    pub velocity: f64,
    pub growth: f64,
    pub mortality: f64,
}

/// `λ* = c - v²/(4D) - D π²/L²` with `c = r - m`.
pub fn interval_lambda_star(data: &IntervalData, bc: IntervalBoundary) -> Result<f64, OracleError> {
    if bc != IntervalBoundary::HostileHostile {
        return Err(OracleError::UnsupportedBoundaryCombination);
    }
    let IntervalData { length, diffusion: d, velocity: v, growth, mortality } = *data;
    let pi = core::f64::consts::PI;
    Ok(growth - mortality - v * v / (4.0 * d) - d * pi * pi / (length * length))
}

/// `R₀ = r / (m + v²/(4D) + D π²/L²)`.
pub fn interval_r0(data: &IntervalData, bc: IntervalBoundary) -> Result<f64, OracleError> {
    if bc != IntervalBoundary::HostileHostile {
        return Err(OracleError::UnsupportedBoundaryCombination);
    }
    let IntervalData { length, diffusion: d, velocity: v, growth, mortality } = *data;
    let pi = core::f64::consts::PI;
    Ok(growth / (mortality + v * v / (4.0 * d) + d * pi * pi / (length * length)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_scaling() {
        let m = CsrMatrix::from_triplets(2, &[(0, 0, -2.0), (0, 1, 1.0), (1, 0, 4.0), (1, 1, -2.0)]);
        let sys = symmetrize_tree_matrix(&m, &[true, true]).unwrap();
        assert_eq!(sys.scaling, vec![1.0, 0.5]);
        assert_eq!(sys.s, DenseMatrix::from_rows(2, vec![-2.0, 2.0, 2.0, -2.0]));
        let eig = dense_symmetric_eigs(&sys.s).unwrap();
        assert!((eig.values[0] + 4.0).abs() < 1e-14 && eig.values[1].abs() < 1e-14);
    }

    #[test]
    fn sign_mismatch() {
        let m = CsrMatrix::from_triplets(2, &[(0, 0, -2.0), (0, 1, 1.0), (1, 0, -4.0), (1, 1, -2.0)]);
        assert!(matches!(symmetrize_tree_matrix(&m, &[true, true]), Err(OracleError::SignMismatch { .. })));
    }

    #[test]
    fn dirichlet_laplacian() {
        let n = 5;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, -2.0));
            if i + 1 < n {
                trip.push((i, i + 1, 1.0));
                trip.push((i + 1, i, 1.0));
            }
        }
        let m = CsrMatrix::from_triplets(n, &trip);
        let sys = symmetrize_tree_matrix(&m, &[true; 5]).unwrap();
        let eig = dense_symmetric_eigs(&sys.s).unwrap();
        let pi = core::f64::consts::PI;
        for (k, &lam) in eig.values.iter().enumerate() {
            let exact = -4.0 * libm::pow(libm::sin((n - k) as f64 * pi / (2.0 * (n + 1) as f64)), 2.0);
            assert!((lam - exact).abs() < 1e-13, "{k}: {lam} vs {exact}");
        }
        // Eigenvectors are orthonormal.
        let v = &eig.vectors;
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|i| v.get(i, a) * v.get(i, b)).sum();
                assert!((dot - if a == b { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn already_diagonal() {
        let s = DenseMatrix::from_rows(3, vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(dense_symmetric_eigs(&s).unwrap().values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn closed_forms() {
        let pi = core::f64::consts::PI;
        let d = IntervalData { length: pi, diffusion: 1.0, velocity: 2.0, growth: 3.0, mortality: 0.5 };
        assert!((interval_lambda_star(&d, IntervalBoundary::HostileHostile).unwrap() - 0.5).abs() < 1e-15);
        assert!((interval_r0(&d, IntervalBoundary::HostileHostile).unwrap() - 1.2).abs() < 1e-15);
        assert_eq!(
            interval_r0(&d, IntervalBoundary::ZeroFluxFreeFlow),
            Err(OracleError::UnsupportedBoundaryCombination)
        );
    }
}
