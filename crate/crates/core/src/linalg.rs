//! Sparse storage and a fill-free direct solver for tree-structured matrices.
//!
//! Every matrix assembled on a river network has an acyclic adjacency graph,
//! so Gaussian elimination in leaves-first order creates no fill-in and costs
//! `O(n)`. No pivoting is done; callers get an error on a vanishing pivot.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("sparsity graph of the active rows has a cycle")]
    NotATree,
    #[error("structurally asymmetric entry ({row}, {col})")]
    AsymmetricPattern { row: usize, col: usize },
    #[error("zero or non-finite pivot {pivot:e} at row {row}")]
    SingularPivot { row: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Square matrix in compressed-sparse-row layout with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed in input
    /// order, so the result is deterministic.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1, k));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            assert!(r < n && c < n, "triplet ({r}, {c}) out of bounds for n = {n}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, a)| a * x[j]).sum();
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, a)| a.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                d[i * self.n + j] = a;
            }
        }
        d
    }
}

/// Leaves-first elimination order for the active part of a tree-structured
/// matrix. Computed once per sparsity pattern and reused across refactorings.
#[derive(Debug, Clone)]
pub struct TreeOrdering {
    n: usize,
    /// Active nodes, children before parents.
    order: Vec<usize>,
    /// Parent in the elimination tree; `usize::MAX` for roots.
    parent: Vec<usize>,
    active: Vec<bool>,
}

impl TreeOrdering {
    /// `active[i] == false` removes row and column `i` from the system.
    pub fn new(matrix: &CsrMatrix, active: &[bool]) -> Result<Self, LinalgError> {
        let n = matrix.dim();
        if active.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: active.len() });
        }
        let mut parent = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut bfs = Vec::with_capacity(n);
        let mut queue = VecDeque::new();
        for root in 0..n {
            if !active[root] || seen[root] {
                continue;
            }
            seen[root] = true;
            queue.push_back(root);
            while let Some(i) = queue.pop_front() {
                bfs.push(i);
                for (j, a) in matrix.row(i) {
                    if j == i || !active[j] || a == 0.0 {
                        continue;
                    }
                    if matrix.get(j, i) == 0.0 {
                        return Err(LinalgError::AsymmetricPattern { row: i, col: j });
                    }
                    if j == parent[i] {
                        continue;
                    }
                    if seen[j] {
                        return Err(LinalgError::NotATree);
                    }
                    seen[j] = true;
                    parent[j] = i;
                    queue.push_back(j);
                }
            }
        }
        bfs.reverse();
        Ok(TreeOrdering { n, order: bfs, parent, active: active.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn active_count(&self) -> usize {
        self.order.len()
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        (self.parent[i] != usize::MAX).then_some(self.parent[i])
    }

    /// Active nodes in root-first (breadth-first) order.
    pub fn top_down(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().rev().copied()
    }
}

/// LU factors of `scale * M + diag(shift)` restricted to the active nodes of
/// a [`TreeOrdering`].
#[derive(Debug, Clone)]
pub struct TreeLu<'a> {
    ordering: &'a TreeOrdering,
    pivot: Vec<f64>,
    /// `a(i, parent(i))`
    up: Vec<f64>,
    /// `a(parent(i), i)`
    down: Vec<f64>,
}

impl<'a> TreeLu<'a> {
    pub fn factor(
        ordering: &'a TreeOrdering,
        matrix: &CsrMatrix,
        scale: f64,
        shift: &[f64],
    ) -> Result<Self, LinalgError> {
        let n = ordering.n;
        if matrix.dim() != n || shift.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: shift.len().min(matrix.dim()) });
        }
        let mut pivot = vec![0.0; n];
        let mut up = vec![0.0; n];
        let mut down = vec![0.0; n];
        for &i in &ordering.order {
            pivot[i] = scale * matrix.get(i, i) + shift[i];
            if let Some(p) = ordering.parent(i) {
                up[i] = scale * matrix.get(i, p);
                down[i] = scale * matrix.get(p, i);
            }
        }
        for &i in &ordering.order {
            let d = pivot[i];
            if d == 0.0 || !d.is_finite() {
                return Err(LinalgError::SingularPivot { row: i, pivot: d });
            }
            if let Some(p) = ordering.parent(i) {
                pivot[p] -= down[i] * up[i] / d;
            }
        }
        Ok(TreeLu { ordering, pivot, up, down })
    }

    pub fn pivots(&self) -> impl Iterator<Item = f64> + '_ {
        self.ordering.order.iter().map(|&i| self.pivot[i])
    }

    /// Smallest pivot over active nodes. All positive for a nonsingular
    /// M-matrix.
    pub fn min_pivot(&self) -> f64 {
        self.pivots().fold(f64::INFINITY, f64::min)
    }

    /// Solve in place. Inactive entries are set to zero.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let ord = self.ordering;
        for (i, bi) in b.iter_mut().enumerate() {
            if !ord.active[i] {
                *bi = 0.0;
            }
        }
        for &i in &ord.order {
            if let Some(p) = ord.parent(i) {
                b[p] -= self.down[i] / self.pivot[i] * b[i];
            }
        }
        for &i in ord.order.iter().rev() {
            let coupled = ord.parent(i).map_or(0.0, |p| self.up[i] * b[p]);
            b[i] = (b[i] - coupled) / self.pivot[i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
