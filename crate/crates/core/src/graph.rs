//! Discrete vector calculus on weighted graphs.
//!
//! Conventions: an edge weight `eta` is symmetric, a flow is antisymmetric
//! (`x_ij = -x_ji`) and is stored on the canonical direction `lo -> hi`.
//! The Laplacian is `(Delta x)_i = sum_j eta_ij (x_j - x_i)`, i.e. the
//! negative semidefinite sign convention, so `-Delta` and `D - Delta` are the
//! positive (semi)definite operators handed to the Cholesky solver.

use crate::linsolve::GraphMatrix;
use thiserror::Error;

/// A per-vertex real field.
pub type VertexField = Vec<f64>;
/// A symmetric per-edge weight.
pub type EdgeWeight = Vec<f64>;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("right-hand side is not mean-zero: sum = {0}")]
    NotMeanZero(f64),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("brute force enumeration capped at 22 vertices, got {0}")]
    TooLarge(usize),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
}

/// Undirected, simple, connected graph.
#[derive(Clone, Debug)]
pub struct Graph {
    vertex_count: usize,
    /// Canonical edges (lo, hi), lo < hi, sorted.
    edges: Vec<(usize, usize)>,
    /// Per vertex: (neighbor, edge index).
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    pub fn new(vertex_count: usize, mut edges: Vec<(usize, usize)>) -> Self {
        for e in &mut edges {
            let (i, j) = *e;
            assert!(i != j && i < vertex_count && j < vertex_count, "bad edge ({i}, {j})");
            *e = (i.min(j), i.max(j));
        }
        edges.sort_unstable();
        edges.dedup();
        let mut adjacency = vec![Vec::new(); vertex_count];
        for (e, &(i, j)) in edges.iter().enumerate() {
            adjacency[i].push((j, e));
            adjacency[j].push((i, e));
        }
        let g = Self { vertex_count, edges, adjacency };
        assert!(g.is_connected(), "graph must be connected");
        g
    }

    fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return false;
        }
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.vertex_count
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }
}

/// An antisymmetric per-edge quantity, stored as the value in the canonical
/// direction `lo -> hi` of each edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Flow(pub Vec<f64>);

impl Flow {
    pub fn zeros(g: &Graph) -> Self {
        Flow(vec![0.0; g.edge_count()])
    }

    /// Value of `x_{from, to}` over edge `e`, sign-resolved.
    pub fn oriented(&self, g: &Graph, e: usize, from: usize) -> f64 {
        if g.edges[e].0 == from {
            self.0[e]
        } else {
            -self.0[e]
        }
    }
}

/// `(grad x)_{ij} = eta_ij (x_j - x_i)`, stored on canonical directions.
pub fn gradient(g: &Graph, eta: &EdgeWeight, x: &VertexField) -> Flow {
    Flow(
        g.edges
            .iter()
            .zip(eta)
            .map(|(&(i, j), &w)| w * (x[j] - x[i]))
            .collect(),
    )
}

/// `div(x)_i = sum_{j ~ i} x_{ij}`.
pub fn divergence(g: &Graph, f: &Flow) -> VertexField {
    let mut out = vec![0.0; g.vertex_count];
    for (e, &(i, j)) in g.edges.iter().enumerate() {
        out[i] += f.0[e];
        out[j] -= f.0[e];
    }
    out
}

/// `(Delta x)_i = sum_{j ~ i} eta_ij (x_j - x_i)`, equal to `div(grad x)`.
pub fn laplacian_apply(g: &Graph, eta: &EdgeWeight, x: &VertexField) -> VertexField {
    let mut out = vec![0.0; g.vertex_count];
    for (e, &(i, j)) in g.edges.iter().enumerate() {
        let flux = eta[e] * (x[j] - x[i]);
        out[i] += flux;
        out[j] -= flux;
    }
    out
}

/// Dense symmetric matrix of the Laplacian (row-major `n x n`).
pub fn laplacian_matrix(g: &Graph, eta: &EdgeWeight) -> Vec<Vec<f64>> {
    let n = g.vertex_count;
    let mut m = vec![vec![0.0; n]; n];
    for (e, &(i, j)) in g.edges.iter().enumerate() {
        m[i][j] += eta[e];
        m[j][i] += eta[e];
        m[i][i] -= eta[e];
        m[j][j] -= eta[e];
    }
    m
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Subtracts the mean in place.
pub fn project_mean_zero(x: &mut [f64]) {
    let m = mean(x);
    for v in x {
        *v -= m;
    }
}

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Solves `Delta x = y` on the mean-zero subspace for positive weights.
///
/// The right-hand side must already be mean-zero up to `1e-10 * |y|_inf`
/// (it is then projected exactly). The solve pins one coordinate, factors
/// the reduced positive definite system, and re-projects the result; the
/// residual is verified against a `1e-10` relative contract.
pub fn solve_laplacian_mean_zero(
    g: &Graph,
    eta: &EdgeWeight,
    y: &VertexField,
) -> Result<VertexField, GraphError> {
    if let Some(e) = eta.iter().position(|&w| !(w > 0.0)) {
        return Err(GraphError::SingularSystem(format!(
            "weight on edge {e} is {} but must be positive",
            eta[e]
        )));
    }
    let scale = inf_norm(y);
    if scale == 0.0 {
        return Ok(vec![0.0; g.vertex_count]);
    }
    let total: f64 = y.iter().sum();
    if total.abs() > 1e-10 * scale {
        return Err(GraphError::NotMeanZero(total));
    }
    let mut y = y.clone();
    project_mean_zero(&mut y);

    // -Delta is positive semidefinite with kernel spanned by constants.
    let mut diag = vec![0.0; g.vertex_count];
    let mut offdiag = Vec::with_capacity(g.edge_count());
    for (e, &(i, j)) in g.edges.iter().enumerate() {
        diag[i] += eta[e];
        diag[j] += eta[e];
        offdiag.push(-eta[e]);
    }
    let a = GraphMatrix { n: g.vertex_count, edges: &g.edges, diag, offdiag };
    let neg_y: Vec<f64> = y.iter().map(|v| -v).collect();
    let f = a
        .cholesky(Some(g.vertex_count - 1))
        .map_err(|e| GraphError::SingularSystem(e.to_string()))?;
    let mut x = f.solve(&neg_y);
    project_mean_zero(&mut x);

    let res = laplacian_apply(g, eta, &x);
    let err = res.iter().zip(&y).map(|(r, t)| (r - t).abs()).fold(0.0, f64::max);
    if err > 1e-10 * scale {
        return Err(GraphError::SingularSystem(format!(
            "residual {err} exceeds 1e-10 relative contract"
        )));
    }
    Ok(x)
}

/// Solves `(D - Delta) x = y` with `eta > 0`, `D >= 0` diagonal and at least
/// one strictly positive diagonal entry, which makes the operator positive
/// definite.
pub fn solve_shifted(
    g: &Graph,
    eta: &EdgeWeight,
    shift: &VertexField,
    y: &VertexField,
) -> Result<VertexField, GraphError> {
    if let Some(e) = eta.iter().position(|&w| !(w > 0.0)) {
        return Err(GraphError::SingularSystem(format!(
            "weight on edge {e} is {} but must be positive",
            eta[e]
        )));
    }
    if shift.iter().any(|&d| d < 0.0) || shift.iter().all(|&d| d == 0.0) {
        return Err(GraphError::SingularSystem(
            "diagonal shift must be nonnegative with some positive entry".into(),
        ));
    }
    let mut diag = shift.clone();
    let mut offdiag = Vec::with_capacity(g.edge_count());
    for (e, &(i, j)) in g.edges.iter().enumerate() {
        diag[i] += eta[e];
        diag[j] += eta[e];
        offdiag.push(-eta[e]);
    }
    let a = GraphMatrix { n: g.vertex_count, edges: &g.edges, diag, offdiag };
    let f = a
        .cholesky(None)
        .map_err(|e| GraphError::SingularSystem(e.to_string()))?;
    let x = f.solve(y);
    let scale = inf_norm(y).max(1e-300);
    let res = a.apply(&x);
    let err = res.iter().zip(y).map(|(r, t)| (r - t).abs()).fold(0.0, f64::max);
    if err > 1e-10 * scale {
        return Err(GraphError::SingularSystem(format!(
            "residual {err} exceeds 1e-10 relative contract"
        )));
    }
    Ok(x)
}

/// `(perimeter, area, total_area)` of a vertex subset under lengths `l`:
/// the perimeter sums `l` over boundary edges, the area sums `l^2` over
/// edges with both ends inside, and the total sums `l^2` over all edges.
pub fn perimeter_and_area(g: &Graph, l: &EdgeWeight, subset: &[bool]) -> (f64, f64, f64) {
    let mut perimeter = 0.0;
    let mut area = 0.0;
    let mut total = 0.0;
    for (e, &(i, j)) in g.edges.iter().enumerate() {
        total += l[e] * l[e];
        match (subset[i], subset[j]) {
            (true, true) => area += l[e] * l[e],
            (true, false) | (false, true) => perimeter += l[e],
            _ => {}
        }
    }
    (perimeter, area, total)
}

/// Result of the exact isoperimetric enumeration.
#[derive(Clone, Debug)]
pub struct IsoperimetricResult {
    /// Smallest C with `min(|V0|_l, |V|_l - |V0|_l) <= C |dV0|_l^2` for all
    /// subsets.
    pub constant: f64,
    /// A subset attaining the constant.
    pub extremal: Vec<usize>,
}

/// Exact smallest isoperimetric constant by Gray-code enumeration of all
/// proper nonempty vertex subsets. Capped at 22 vertices.
pub fn brute_force_isoperimetric_constant(
    g: &Graph,
    l: &EdgeWeight,
) -> Result<IsoperimetricResult, GraphError> {
    let n = g.vertex_count;
    if n > 22 {
        return Err(GraphError::TooLarge(n));
    }
    let sq: Vec<f64> = l.iter().map(|x| x * x).collect();
    let total: f64 = sq.iter().sum();

    let mut in_set = vec![false; n];
    let mut perimeter = 0.0;
    let mut area = 0.0;
    let mut size = 0usize;
    let mut best = 0.0f64;
    let mut best_mask: u64 = 0;
    let mut mask: u64 = 0;

    // Gray code: step k flips vertex trailing_zeros(k).
    let steps: u64 = 1u64 << n;
    for k in 1..steps {
        let v = k.trailing_zeros() as usize;
        let entering = !in_set[v];
        in_set[v] = entering;
        mask ^= 1u64 << v;
        size = if entering { size + 1 } else { size - 1 };
        for &(w, e) in g.neighbors(v) {
            if in_set[w] {
                if entering {
                    area += sq[e];
                    perimeter -= l[e];
                } else {
                    area -= sq[e];
                    perimeter += l[e];
                }
            } else if entering {
                perimeter += l[e];
            } else {
                perimeter -= l[e];
            }
        }
        if size == 0 || size == n {
            continue;
        }
        // Connected graph and proper subset: the boundary is nonempty. The
        // incremental accumulators only nominate candidates; the winning
        // ratio is recomputed from scratch so rounding drift over 2^n flips
        // cannot leak into the reported constant.
        let ratio = area.min(total - area) / (perimeter * perimeter);
        if ratio > best {
            let (p, a, t) = perimeter_and_area(g, l, &in_set);
            let exact = a.min(t - a) / (p * p);
            if exact > best {
                best = exact;
                best_mask = mask;
            }
        }
    }
    let extremal = (0..n).filter(|&v| best_mask >> v & 1 == 1).collect();
    Ok(IsoperimetricResult { constant: best, extremal })
}

/// Outcome of checking the discrete elliptic estimate on concrete data.
#[derive(Clone, Debug)]
pub struct EllipticReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn elliptic_scale(l: &EdgeWeight) -> (f64, f64) {
    let l_inf = inf_norm(l);
    let total: f64 = l.iter().map(|x| x * x).sum();
    (l_inf, total.sqrt())
}

/// Checks `|Delta_eta^{-1} div(x)|_inf <= 4 C2 sqrt(C1+1) / C3 * |l| * |V|_l^{1/2}`
/// under the hypotheses `|x_ij| <= C2 l_ij^2` and `eta_ij >= C3`, with `(G,l)`
/// `C1`-isoperimetric. The inequality is a theorem; the report carries the
/// two sides so the margin can be tracked.
pub fn verify_elliptic_estimate(
    g: &Graph,
    l: &EdgeWeight,
    eta: &EdgeWeight,
    x: &Flow,
    c1: f64,
    c2: f64,
    c3: f64,
) -> Result<EllipticReport, GraphError> {
    check_elliptic_hypotheses(g, l, eta, x, c1, c2, c3)?;
    let y = divergence(g, x);
    let z = solve_laplacian_mean_zero(g, eta, &y)?;
    let (l_inf, vol_sqrt) = elliptic_scale(l);
    let lhs = inf_norm(&z);
    let rhs = 4.0 * c2 * (c1 + 1.0).sqrt() / c3 * l_inf * vol_sqrt;
    Ok(EllipticReport { lhs, rhs, holds: lhs <= rhs })
}

/// Shifted variant: `|(D - Delta)^{-1}(div(x) + y)|_inf <=
/// (C4 + 8 C2 sqrt(C1+1)/C3) |l| |V|_l^{1/2}` under the additional
/// hypothesis `|y_i| <= C4 D_ii |l| |V|_l^{1/2}`.
#[allow(clippy::too_many_arguments)]
pub fn verify_elliptic_estimate_shifted(
    g: &Graph,
    l: &EdgeWeight,
    eta: &EdgeWeight,
    x: &Flow,
    shift: &VertexField,
    y: &VertexField,
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
) -> Result<EllipticReport, GraphError> {
    check_elliptic_hypotheses(g, l, eta, x, c1, c2, c3)?;
    let (l_inf, vol_sqrt) = elliptic_scale(l);
    for i in 0..g.vertex_count {
        if y[i].abs() > c4 * shift[i] * l_inf * vol_sqrt {
            return Err(GraphError::HypothesisViolated(format!(
                "|y_{i}| = {} exceeds C4 D_ii |l| |V|^(1/2) = {}",
                y[i].abs(),
                c4 * shift[i] * l_inf * vol_sqrt
            )));
        }
    }
    let mut rhs_vec = divergence(g, x);
    for i in 0..g.vertex_count {
        rhs_vec[i] += y[i];
    }
    let w = solve_shifted(g, eta, shift, &rhs_vec)?;
    let lhs = inf_norm(&w);
    let rhs = (c4 + 8.0 * c2 * (c1 + 1.0).sqrt() / c3) * l_inf * vol_sqrt;
    Ok(EllipticReport { lhs, rhs, holds: lhs <= rhs })
}

fn check_elliptic_hypotheses(
    g: &Graph,
    l: &EdgeWeight,
    eta: &EdgeWeight,
    x: &Flow,
    c1: f64,
    c2: f64,
    c3: f64,
) -> Result<(), GraphError> {
    if c1 < 0.0 || c2 <= 0.0 || c3 <= 0.0 {
        return Err(GraphError::HypothesisViolated(
            "constants must satisfy C1 >= 0, C2 > 0, C3 > 0".into(),
        ));
    }
    for (e, &w) in eta.iter().enumerate() {
        if w < c3 {
            return Err(GraphError::HypothesisViolated(format!(
                "eta on edge {e} is {w}, below C3 = {c3}"
            )));
        }
    }
    let slack = 1.0 + 1e-12;
    for (e, &v) in x.0.iter().enumerate() {
        if v.abs() > c2 * l[e] * l[e] * slack {
            return Err(GraphError::HypothesisViolated(format!(
                "|x| on edge {e} is {}, above C2 l^2 = {}",
                v.abs(),
                c2 * l[e] * l[e]
            )));
        }
    }
    if g.vertex_count <= 22 {
        let c = brute_force_isoperimetric_constant(g, l)?.constant;
        if c > c1 * slack {
            return Err(GraphError::HypothesisViolated(format!(
                "graph is only {c}-isoperimetric, C1 = {c1} too small"
            )));
        }
    }
    Ok(())
}
