//! Direct solver for symmetric positive definite graph matrices.
//!
//! Matrices here always have the sparsity pattern of a graph: one diagonal
//! entry per vertex and one off-diagonal entry per edge. A reverse
//! Cuthill-McKee ordering keeps the profile narrow, and the factorization is
//! a classic envelope Cholesky: all fill stays inside the envelope, so the
//! factor is stored as one contiguous slab per row.

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LinSolveError {
    #[error("matrix is not positive definite (pivot {0} at row {1})")]
    NotPositiveDefinite(f64, usize),
}

/// Symmetric graph matrix: `diag[i]` on the diagonal and `offdiag[e]` at
/// `(i, j)` and `(j, i)` for each edge `e = (i, j)`.
pub struct GraphMatrix<'a> {
    pub n: usize,
    pub edges: &'a [(usize, usize)],
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl<'a> GraphMatrix<'a> {
    /// y = A x
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = (0..self.n).map(|i| self.diag[i] * x[i]).collect();
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            y[i] += self.offdiag[e] * x[j];
            y[j] += self.offdiag[e] * x[i];
        }
        y
    }

    /// Cholesky factorization, optionally pinning one unknown to zero
    /// (dropping its row and column). Pinning makes the reduced matrix
    /// positive definite when `A` is only semidefinite with a known
    /// one-dimensional kernel.
    pub fn cholesky(&self, pin: Option<usize>) -> Result<EnvelopeCholesky, LinSolveError> {
        EnvelopeCholesky::factor(self, pin)
    }
}

/// Breadth-first levels from `start`; returns (order, last vertex found).
fn bfs_order(n: usize, adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(start);
    seen[start] = true;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&w| !seen[w]).collect();
        // Cuthill-McKee visits low-degree neighbours first.
        nbrs.sort_unstable_by_key(|&w| adj[w].len());
        for w in nbrs {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order
}

/// Reverse Cuthill-McKee permutation: `perm[new] = old`. The start vertex is
/// pseudo-peripheral (two BFS sweeps from a minimum-degree seed).
pub fn reverse_cuthill_mckee(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let seed = (0..n).min_by_key(|&v| adj[v].len()).unwrap_or(0);
    let sweep = bfs_order(n, &adj, seed);
    let far = *sweep.last().unwrap();
    let mut order = bfs_order(n, &adj, far);
    debug_assert_eq!(order.len(), n, "graph must be connected");
    order.reverse();
    order
}

/// Envelope Cholesky factor `L` with `A = L L^T` in permuted indexing.
pub struct EnvelopeCholesky {
    n_full: usize,
    /// Number of factored unknowns (n_full or n_full - 1 when pinned).
    n: usize,
    /// perm[new] = old vertex id; the pinned vertex, if any, sits last.
    perm: Vec<usize>,
    pinned: Option<usize>,
    /// First column with a structural entry in each row.
    first: Vec<usize>,
    /// Start of each row's slab in `vals`; row i occupies
    /// vals[row_start[i] .. row_start[i] + (i - first[i] + 1)], the last
    /// entry being the diagonal.
    row_start: Vec<usize>,
    vals: Vec<f64>,
}

impl EnvelopeCholesky {
    fn factor(a: &GraphMatrix, pin: Option<usize>) -> Result<Self, LinSolveError> {
        let n_full = a.n;
        let mut perm = reverse_cuthill_mckee(n_full, a.edges);
        if let Some(p) = pin {
            // Move the pinned vertex to the end so dropping it keeps the
            // envelope contiguous.
            let pos = perm.iter().position(|&v| v == p).unwrap();
            perm.remove(pos);
            perm.push(p);
        }
        let mut iperm = vec![0usize; n_full];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let n = if pin.is_some() { n_full - 1 } else { n_full };

        let mut first: Vec<usize> = (0..n).collect();
        for &(i, j) in a.edges {
            let (pi, pj) = (iperm[i], iperm[j]);
            let (lo, hi) = (pi.min(pj), pi.max(pj));
            if hi < n && lo < first[hi] {
                first[hi] = lo;
            }
        }
        let mut row_start = vec![0usize; n + 1];
        for i in 0..n {
            row_start[i + 1] = row_start[i] + (i - first[i] + 1);
        }
        let mut vals = vec![0.0f64; row_start[n]];
        let at = |i: usize, j: usize| -> usize { row_start[i] + (j - first[i]) };
        for i in 0..n {
            vals[at(i, i)] = a.diag[perm[i]];
        }
        for (e, &(i, j)) in a.edges.iter().enumerate() {
            let (pi, pj) = (iperm[i], iperm[j]);
            let (lo, hi) = (pi.min(pj), pi.max(pj));
            if hi < n {
                vals[at(hi, lo)] = a.offdiag[e];
            }
        }

        // In-place envelope factorization.
        for i in 0..n {
            for j in first[i]..i {
                let lo = first[i].max(first[j]);
                let mut s = vals[at(i, j)];
                let (ri, rj) = (row_start[i] - first[i], row_start[j] - first[j]);
                for k in lo..j {
                    s -= vals[ri + k] * vals[rj + k];
                }
                vals[at(i, j)] = s / vals[at(j, j)];
            }
            let mut d = vals[at(i, i)];
            let ri = row_start[i] - first[i];
            for k in first[i]..i {
                let l = vals[ri + k];
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(LinSolveError::NotPositiveDefinite(d, i));
            }
            vals[at(i, i)] = d.sqrt();
        }

        Ok(Self {
            n_full,
            n,
            perm,
            pinned: pin,
            first,
            row_start,
            vals,
        })
    }

    /// Solves `A x = b` (with `x[pinned] = 0` when a vertex was pinned).
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n_full);
        let mut y: Vec<f64> = (0..self.n).map(|i| b[self.perm[i]]).collect();
        // Forward substitution L y' = y.
        for i in 0..self.n {
            let ri = self.row_start[i] - self.first[i];
            let mut s = y[i];
            for k in self.first[i]..i {
                s -= self.vals[ri + k] * y[k];
            }
            y[i] = s / self.vals[ri + i];
        }
        // Back substitution L^T x = y'.
        for i in (0..self.n).rev() {
            let ri = self.row_start[i] - self.first[i];
            let xi = y[i] / self.vals[ri + i];
            y[i] = xi;
            for k in self.first[i]..i {
                y[k] -= self.vals[ri + k] * xi;
            }
        }
        let mut x = vec![0.0; self.n_full];
        for i in 0..self.n {
            x[self.perm[i]] = y[i];
        }
        if let Some(p) = self.pinned {
            x[p] = 0.0;
        }
        x
    }
}
