//! Geodesic distances on a conformally flat torus by polyline relaxation.
//!
//! The metric is `e^{2 phi} (dx^2 + dy^2)` on the unit square with both
//! directions identified. A path between two cover points is discretized as
//! a polyline; its interior nodes are relaxed by a damped Newton method on
//! the discrete path energy `sum e^{2 phi(mid)} |segment|^2`, whose
//! minimizer is the geodesic polyline with uniformly weighted segments (the
//! energy has a nondegenerate Hessian where the raw length functional is
//! flat along tangential node slides). The reported length is the midpoint
//! rule `sum e^{phi(mid)} |segment|` on the relaxed polyline, which carries
//! the same second-order accuracy; Richardson extrapolation over segment
//! doublings removes the leading error term.
//!
//! Distances on the quotient take the minimum over the nine nearest lattice
//! translates of the target, which rules out wrong homotopy classes near
//! the cut locus.

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GeodesicError {
    #[error("geodesic solver failed: {0}")]
    GeodesicSolverFailed(String),
}

/// A smooth conformal factor on the unit torus, with the derivatives the
/// Newton relaxation needs.
pub trait ConformalFactor2d {
    fn phi(&self, p: [f64; 2]) -> f64;
    fn grad_phi(&self, p: [f64; 2]) -> [f64; 2];
    fn hess_phi(&self, p: [f64; 2]) -> [[f64; 2]; 2];
    /// A global lower bound for `phi`, used to prune covering translates.
    fn phi_lower_bound(&self) -> f64;
}

#[derive(Clone, Copy, Debug)]
pub struct GeodesicSolverOptions {
    /// Initial polyline segment count per path.
    pub segments: usize,
    /// Cap on Newton iterations per relaxation.
    pub max_relaxation_iterations: usize,
    /// Relative tolerance on the extrapolated length across refinements.
    pub tolerance: f64,
    /// Cap on segment doublings.
    pub max_refinements: usize,
}

impl Default for GeodesicSolverOptions {
    fn default() -> Self {
        Self {
            segments: 64,
            max_relaxation_iterations: 200,
            tolerance: 1e-10,
            max_refinements: 8,
        }
    }
}

type Vec2 = [f64; 2];
type Mat2 = [[f64; 2]; 2];

fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

fn midpoint(a: Vec2, b: Vec2) -> Vec2 {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Midpoint-rule length of a polyline under `e^{2 phi} delta`.
fn polyline_length<F: ConformalFactor2d>(phi: &F, nodes: &[Vec2]) -> f64 {
    let mut len = 0.0;
    for s in 0..nodes.len() - 1 {
        let mid = midpoint(nodes[s], nodes[s + 1]);
        len += phi.phi(mid).exp() * norm(sub(nodes[s + 1], nodes[s]));
    }
    len
}

fn path_energy<F: ConformalFactor2d>(phi: &F, nodes: &[Vec2]) -> f64 {
    let mut e = 0.0;
    for s in 0..nodes.len() - 1 {
        let d = sub(nodes[s + 1], nodes[s]);
        let mid = midpoint(nodes[s], nodes[s + 1]);
        e += (2.0 * phi.phi(mid)).exp() * (d[0] * d[0] + d[1] * d[1]);
    }
    e
}

/// Gradient of the path energy with respect to the interior nodes
/// (`out[i]` belongs to node `i + 1`).
fn energy_gradient<F: ConformalFactor2d>(phi: &F, nodes: &[Vec2], out: &mut [Vec2]) {
    for g in out.iter_mut() {
        *g = [0.0, 0.0];
    }
    let m = nodes.len() - 1;
    for s in 0..m {
        let d = sub(nodes[s + 1], nodes[s]);
        let mid = midpoint(nodes[s], nodes[s + 1]);
        let w = (2.0 * phi.phi(mid)).exp();
        let g = phi.grad_phi(mid);
        let r2 = d[0] * d[0] + d[1] * d[1];
        // dE_s/dx_s = w (r^2 g - 2d), dE_s/dx_{s+1} = w (r^2 g + 2d).
        if s >= 1 {
            out[s - 1][0] += w * (r2 * g[0] - 2.0 * d[0]);
            out[s - 1][1] += w * (r2 * g[1] - 2.0 * d[1]);
        }
        if s + 1 < m {
            out[s][0] += w * (r2 * g[0] + 2.0 * d[0]);
            out[s][1] += w * (r2 * g[1] + 2.0 * d[1]);
        }
    }
}

/// 2x2 blocks of the energy Hessian over interior nodes: `diag[i]` couples
/// node `i + 1` with itself, `off[i]` couples nodes `i + 1` and `i + 2`.
fn energy_hessian<F: ConformalFactor2d>(
    phi: &F,
    nodes: &[Vec2],
    diag: &mut [Mat2],
    off: &mut [Mat2],
) {
    for b in diag.iter_mut() {
        *b = [[0.0; 2]; 2];
    }
    for b in off.iter_mut() {
        *b = [[0.0; 2]; 2];
    }
    let m = nodes.len() - 1;
    for s in 0..m {
        let d = sub(nodes[s + 1], nodes[s]);
        let mid = midpoint(nodes[s], nodes[s + 1]);
        let w = (2.0 * phi.phi(mid)).exp();
        let g = phi.grad_phi(mid);
        let h = phi.hess_phi(mid);
        let r2 = d[0] * d[0] + d[1] * d[1];
        let mut m_ll = [[0.0; 2]; 2];
        let mut m_lr = [[0.0; 2]; 2];
        let mut m_rr = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let shared = r2 * g[i] * g[j] + 0.5 * r2 * h[i][j];
                let id = if i == j { 2.0 } else { 0.0 };
                m_ll[i][j] = w * (shared - 2.0 * d[i] * g[j] - 2.0 * g[i] * d[j] + id);
                m_lr[i][j] = w * (shared - 2.0 * d[i] * g[j] + 2.0 * g[i] * d[j] - id);
                m_rr[i][j] = w * (shared + 2.0 * d[i] * g[j] + 2.0 * g[i] * d[j] + id);
            }
        }
        if s >= 1 {
            for i in 0..2 {
                for j in 0..2 {
                    diag[s - 1][i][j] += m_ll[i][j];
                }
            }
        }
        if s + 1 < m {
            for i in 0..2 {
                for j in 0..2 {
                    diag[s][i][j] += m_rr[i][j];
                }
            }
        }
        if s >= 1 && s + 1 < m {
            for i in 0..2 {
                for j in 0..2 {
                    off[s - 1][i][j] += m_lr[i][j];
                }
            }
        }
    }
}

fn mat2_inv(a: Mat2) -> Option<Mat2> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    Some([
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ])
}

fn mat2_mul(a: Mat2, b: Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn mat2_vec(a: Mat2, v: Vec2) -> Vec2 {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

fn transpose(a: Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Block Thomas algorithm for the symmetric block-tridiagonal system
/// `(H + mu I) x = rhs` with diagonal blocks `diag` and upper couplings
/// `off` (the lower couplings are their transposes).
fn block_tridiag_solve(diag: &[Mat2], off: &[Mat2], rhs: &[Vec2], mu: f64) -> Option<Vec<Vec2>> {
    let n = diag.len();
    let shift = |mut b: Mat2| {
        b[0][0] += mu;
        b[1][1] += mu;
        b
    };
    let mut gain = vec![[[0.0; 2]; 2]; n];
    let mut x = vec![[0.0; 2]; n];
    let mut denom = shift(diag[0]);
    let mut r = rhs[0];
    for s in 0..n {
        let inv = mat2_inv(denom)?;
        x[s] = mat2_vec(inv, r);
        if s + 1 < n {
            gain[s] = mat2_mul(inv, off[s]);
            let lower = transpose(off[s]);
            let prod = mat2_mul(lower, gain[s]);
            let mut next = shift(diag[s + 1]);
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] -= prod[i][j];
                }
            }
            let carried = mat2_vec(lower, x[s]);
            r = [rhs[s + 1][0] - carried[0], rhs[s + 1][1] - carried[1]];
            denom = next;
        }
    }
    for s in (0..n.saturating_sub(1)).rev() {
        let correction = mat2_vec(gain[s], x[s + 1]);
        x[s][0] -= correction[0];
        x[s][1] -= correction[1];
    }
    Some(x)
}

/// Relaxes the interior nodes to the energy minimizer: Newton with step
/// halving, Tikhonov shift only if a block pivot fails.
fn relax<F: ConformalFactor2d>(
    phi: &F,
    nodes: &mut Vec<Vec2>,
    opts: &GeodesicSolverOptions,
) -> Result<(), GeodesicError> {
    let m = nodes.len() - 1;
    if m < 2 {
        return Ok(());
    }
    let interior = m - 1;
    let mut grad = vec![[0.0; 2]; interior];
    let mut diag = vec![[[0.0; 2]; 2]; interior];
    let mut off = vec![[[0.0; 2]; 2]; interior.saturating_sub(1)];
    let scale = norm(sub(nodes[m], nodes[0])).max(f64::MIN_POSITIVE);
    let mut energy = path_energy(phi, nodes);
    for _ in 0..opts.max_relaxation_iterations {
        energy_gradient(phi, nodes, &mut grad);
        let gnorm = grad.iter().map(|g| norm(*g)).fold(0.0f64, f64::max);
        if gnorm <= 1e-14 * scale {
            return Ok(());
        }
        energy_hessian(phi, nodes, &mut diag, &mut off);
        let rhs: Vec<Vec2> = grad.iter().map(|g| [-g[0], -g[1]]).collect();
        let mut mu = 0.0;
        let step = loop {
            if let Some(step) = block_tridiag_solve(&diag, &off, &rhs, mu) {
                break step;
            }
            mu = if mu == 0.0 { 1e-12 * energy } else { mu * 100.0 };
            if !(mu < 1e6 * energy) {
                return Err(GeodesicError::GeodesicSolverFailed(
                    "Hessian solve failed at all regularizations".into(),
                ));
            }
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-12 {
            let mut trial = nodes.clone();
            for (i, s) in step.iter().enumerate() {
                trial[i + 1][0] += t * s[0];
                trial[i + 1][1] += t * s[1];
            }
            let e_trial = path_energy(phi, &trial);
            if e_trial <= energy {
                let moved = step.iter().map(|s| t * norm(*s)).fold(0.0f64, f64::max);
                let plateaued = e_trial >= energy * (1.0 - 1e-15) || moved <= 1e-14 * scale;
                *nodes = trial;
                energy = e_trial;
                accepted = true;
                if plateaued {
                    return Ok(());
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No descent direction survives at machine precision.
            return Ok(());
        }
    }
    Ok(())
}

/// Doubles the polyline resolution, keeping relaxed nodes and inserting
/// segment midpoints as the warm start.
fn refine(nodes: &[Vec2]) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(2 * nodes.len() - 1);
    for s in 0..nodes.len() - 1 {
        out.push(nodes[s]);
        out.push(midpoint(nodes[s], nodes[s + 1]));
    }
    out.push(nodes[nodes.len() - 1]);
    out
}

fn straight_polyline(p: Vec2, q: Vec2, m: usize) -> Vec<Vec2> {
    (0..=m)
        .map(|s| {
            let t = s as f64 / m as f64;
            [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
        })
        .collect()
}

/// Geodesic length between two cover points along paths homotopic to the
/// straight segment, Richardson-extrapolated over segment doublings until
/// the length settles to the requested relative tolerance.
pub fn cover_geodesic_length<F: ConformalFactor2d>(
    phi: &F,
    p: Vec2,
    q: Vec2,
    opts: &GeodesicSolverOptions,
) -> Result<f64, GeodesicError> {
    if norm(sub(q, p)) == 0.0 {
        return Ok(0.0);
    }
    let mut nodes = straight_polyline(p, q, opts.segments.max(2));
    relax(phi, &mut nodes, opts)?;
    let mut len_prev = polyline_length(phi, &nodes);
    let mut extrapolated_prev: Option<f64> = None;
    for _ in 0..opts.max_refinements {
        nodes = refine(&nodes);
        relax(phi, &mut nodes, opts)?;
        let len = polyline_length(phi, &nodes);
        let extrapolated = (4.0 * len - len_prev) / 3.0;
        let settled = (len - len_prev).abs() <= opts.tolerance * len.abs()
            || extrapolated_prev
                .is_some_and(|prev| (extrapolated - prev).abs() <= opts.tolerance * extrapolated.abs());
        if settled {
            return Ok(extrapolated);
        }
        extrapolated_prev = Some(extrapolated);
        len_prev = len;
    }
    Err(GeodesicError::GeodesicSolverFailed(format!(
        "length did not settle to {} relative within {} refinements",
        opts.tolerance, opts.max_refinements
    )))
}

/// Geodesic distance on the quotient torus: minimum of the cover lengths
/// over the nine nearest lattice translates of `q`. Translates whose
/// straight-line lower bound already exceeds the best length found are
/// skipped.
pub fn torus_distance<F: ConformalFactor2d>(
    phi: &F,
    p: Vec2,
    q: Vec2,
    opts: &GeodesicSolverOptions,
) -> Result<f64, GeodesicError> {
    let floor = phi.phi_lower_bound().exp();
    let mut translates: Vec<Vec2> = Vec::with_capacity(9);
    for di in -1i32..=1 {
        for dj in -1i32..=1 {
            translates.push([q[0] + di as f64, q[1] + dj as f64]);
        }
    }
    translates
        .sort_by(|a, b| norm(sub(*a, p)).partial_cmp(&norm(sub(*b, p))).unwrap());
    let mut best = f64::INFINITY;
    for t in translates {
        if norm(sub(t, p)) * floor >= best {
            continue;
        }
        best = best.min(cover_geodesic_length(phi, p, t, opts)?);
    }
    Ok(best)
}

/// Exact flat distance on the unit torus, minimum over the nine nearest
/// translates.
pub fn flat_torus_distance(p: Vec2, q: Vec2) -> f64 {
    let mut best = f64::INFINITY;
    for di in -1i32..=1 {
        for dj in -1i32..=1 {
            best = best.min(norm(sub([q[0] + di as f64, q[1] + dj as f64], p)));
        }
    }
    best
}
