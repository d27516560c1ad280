//! Solving `K(u) = 0`: damped Newton with the exact curvature Jacobian, and
//! a curvature-interpolation flow that drives `K` linearly to zero.
//!
//! Newton is the production path. Each step solves the Jacobian system
//! exactly (`dK/du = -Delta_eta` on the mean-zero subspace for Euclidean
//! meshes, the positive definite `D - Delta_eta` for hyperbolic ones) and
//! backtracks until the trial point keeps the triangle inequalities, keeps
//! the minimum angle above the regularity floor, and decreases `|K|_inf`.
//!
//! Flow mode integrates `u'(t) = J(u)^{-1} K(u_0)` signed so that
//! `K(u(t)) = (1 - t) K(u_0)` along the exact flow, with a Newton corrector
//! after every explicit Euler step enforcing that invariant to solver
//! tolerance. It exists as a numerically checkable mirror of the
//! continuation argument behind the solver, not as a faster alternative.

use crate::conformal::{curvature, curvature_jacobian, scaled_lengths};
use crate::graph::{mean, project_mean_zero, VertexField};
use crate::linsolve::GraphMatrix;
use crate::mesh::{check_metric, MeshError, MeshMetric, RegularityReport};
use crate::trigeom::{self, Geometry};
use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Debug, Error)]
pub enum SolveError {
    #[error("expected genus {expected}, mesh has genus {got}")]
    WrongGenus { expected: String, got: usize },
    #[error("expected a {expected:?} metric, got {got:?}")]
    GeometryMismatch { expected: Geometry, got: Geometry },
    #[error("solver diverged: {0}")]
    SolverDiverged(String),
    #[error("regularity fell below the floor: {0}")]
    RegularityLost(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("invalid solve options: {0}")]
    BadOptions(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveMode {
    Newton,
    Flow,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Convergence tolerance on `|K|_inf`, in radians.
    pub tol_curvature: f64,
    pub max_iterations: usize,
    /// Backtracking multiplier applied to a rejected step.
    pub backtrack_factor: f64,
    /// Smallest admissible step fraction before declaring divergence.
    pub min_step: f64,
    /// `(eps1, eps2)`: a trial step must keep every inner angle at least
    /// `eps1`. `eps2` is carried into the reported regularity but is not an
    /// abort criterion; meshes of interest sit exactly at the Delaunay
    /// margin where the opposite-angle sum touches pi.
    pub regularity_floor: (f64, f64),
    pub mode: SolveMode,
    /// Explicit Euler steps for flow mode.
    pub flow_steps: usize,
    pub initial_guess: Option<VertexField>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_curvature: 1e-10,
            max_iterations: 100,
            backtrack_factor: 0.5,
            min_step: (2.0f64).powi(-20),
            regularity_floor: (1e-3, 1e-3),
            mode: SolveMode::Newton,
            flow_steps: 64,
            initial_guess: None,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        let ok = self.tol_curvature > 0.0
            && self.tol_curvature < 1e-2
            && self.max_iterations > 0
            && self.backtrack_factor > 0.0
            && self.backtrack_factor < 1.0
            && self.min_step > 0.0
            && self.regularity_floor.0 > 0.0
            && self.regularity_floor.1 > 0.0
            && self.flow_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(SolveError::BadOptions(format!("{self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
}

/// Everything a solve reports back; serializes to JSON as-is.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    /// `|K|_inf` at the start and after each accepted step.
    pub residual_history: Vec<f64>,
    /// The uniformizing conformal factor (Euclidean: after the area-1
    /// normalization shift).
    pub u: VertexField,
    /// Euclidean only: the mean-zero representative of `u` (constant shifts
    /// are similarities, so this is the scale-free part).
    pub u_mean_zero: Option<VertexField>,
    /// Euclidean only: total scaled area before normalization.
    pub area: Option<f64>,
    /// Regularity of the final scaled mesh.
    pub regularity: RegularityReport,
    /// Flow mode only: max `|u'|_inf` observed across steps.
    pub max_flow_velocity: Option<f64>,
    /// Flow mode only: max `|K(u(t)) - (1-t) K(u_0)|_inf` over accepted
    /// steps, after correction.
    pub flow_invariant_max: Option<f64>,
}

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Solves the Newton system `(dK/du) delta = -r`. Euclidean Jacobians have
/// the constants in their kernel, so one coordinate is pinned and the result
/// projected back to mean zero.
fn newton_direction(m: &MeshMetric, u: &VertexField, r: &[f64]) -> Result<VertexField, SolveError> {
    let tri = m.triangulation();
    let jac = curvature_jacobian(m, u)?;
    let mut diag = jac.shift.clone();
    let mut offdiag = Vec::with_capacity(tri.edge_count());
    for (e, &(i, j)) in tri.edges().iter().enumerate() {
        diag[i] += jac.eta[e];
        diag[j] += jac.eta[e];
        offdiag.push(-jac.eta[e]);
    }
    let a = GraphMatrix { n: tri.vertex_count(), edges: tri.edges(), diag, offdiag };
    let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
    match m.geometry() {
        Geometry::Euclidean => {
            let f = a
                .cholesky(Some(tri.vertex_count() - 1))
                .map_err(|e| SolveError::SolverDiverged(format!("Jacobian factorization: {e}")))?;
            let mut delta = f.solve(&rhs);
            project_mean_zero(&mut delta);
            Ok(delta)
        }
        Geometry::Hyperbolic => {
            let f = a
                .cholesky(None)
                .map_err(|e| SolveError::SolverDiverged(format!("Jacobian factorization: {e}")))?;
            Ok(f.solve(&rhs))
        }
        Geometry::Spherical => unreachable!("no spherical mesh metrics"),
    }
}

enum StepReject {
    TriangleInequality(usize),
    Regularity(usize, f64),
}

/// Curvature of the scaled metric if `u` is admissible: triangle
/// inequalities hold and every angle clears the floor.
fn try_curvature(
    m: &MeshMetric,
    u: &VertexField,
    angle_floor: f64,
) -> Result<VertexField, StepReject> {
    let tri = m.triangulation();
    let lengths = scaled_lengths(m, u);
    let mut k = vec![2.0 * std::f64::consts::PI; tri.vertex_count()];
    for f in 0..tri.face_count() {
        let [ea, eb, ec] = tri.face_edges(f);
        let sides = trigeom::TriangleSides { a: lengths[ea], b: lengths[eb], c: lengths[ec] };
        let ang = match trigeom::angles(sides, m.geometry()) {
            Ok(a) => a,
            Err(_) => return Err(StepReject::TriangleInequality(f)),
        };
        if ang.min() < angle_floor {
            return Err(StepReject::Regularity(f, ang.min()));
        }
        for (slot, &v) in tri.faces()[f].iter().enumerate() {
            k[v] -= ang.as_array()[slot];
        }
    }
    Ok(k)
}

struct NewtonOutcome {
    u: VertexField,
    residuals: Vec<f64>,
    iterations: usize,
}

/// Damped Newton for `K(u) = target`, starting from an admissible `u0`.
fn newton_to_target(
    m: &MeshMetric,
    u0: VertexField,
    target: &[f64],
    opts: &SolveOptions,
) -> Result<NewtonOutcome, SolveError> {
    let mut u = u0;
    let mut r: Vec<f64> = match try_curvature(m, &u, opts.regularity_floor.0) {
        Ok(k) => k.iter().zip(target).map(|(a, b)| a - b).collect(),
        Err(StepReject::TriangleInequality(f)) => {
            return Err(SolveError::Mesh(MeshError::TriangleInequalityViolated(f)))
        }
        Err(StepReject::Regularity(f, a)) => {
            return Err(SolveError::RegularityLost(format!(
                "initial mesh has angle {a} on face {f}, floor {}",
                opts.regularity_floor.0
            )))
        }
    };
    let mut res = inf_norm(&r);
    let mut residuals = vec![res];
    let mut iterations = 0;

    while res > opts.tol_curvature {
        if iterations >= opts.max_iterations {
            return Err(SolveError::SolverDiverged(format!(
                "no convergence after {} iterations, residual {res}",
                opts.max_iterations
            )));
        }
        let delta = newton_direction(m, &u, &r)?;
        let mut step = 1.0;
        let mut last_reject: Option<StepReject> = None;
        loop {
            let trial: VertexField = u.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
            match try_curvature(m, &trial, opts.regularity_floor.0) {
                Ok(kt) => {
                    let rt: Vec<f64> = kt.iter().zip(target).map(|(a, b)| a - b).collect();
                    let rel = inf_norm(&rt);
                    if rel < res {
                        u = trial;
                        r = rt;
                        res = rel;
                        break;
                    }
                }
                Err(reject) => last_reject = Some(reject),
            }
            step *= opts.backtrack_factor;
            if step < opts.min_step {
                return Err(match last_reject {
                    Some(StepReject::Regularity(f, a)) => SolveError::RegularityLost(format!(
                        "steps down to {step} rejected; angle {a} on face {f}"
                    )),
                    _ => SolveError::SolverDiverged(format!(
                        "residual not decreasing at step {step}, residual {res}"
                    )),
                });
            }
        }
        residuals.push(res);
        iterations += 1;
    }
    Ok(NewtonOutcome { u, residuals, iterations })
}

/// Total area of the scaled mesh under its geometry tag.
pub fn mesh_area(m: &MeshMetric, u: &VertexField) -> Result<f64, MeshError> {
    let tri = m.triangulation();
    let lengths = scaled_lengths(m, u);
    let mut sum = 0.0;
    for f in 0..tri.face_count() {
        let [ea, eb, ec] = tri.face_edges(f);
        let sides = trigeom::TriangleSides { a: lengths[ea], b: lengths[eb], c: lengths[ec] };
        sum += trigeom::area(sides, m.geometry())
            .map_err(|_| MeshError::TriangleInequalityViolated(f))?;
    }
    Ok(sum)
}

fn final_report(
    m: &MeshMetric,
    u: VertexField,
    residuals: Vec<f64>,
    iterations: usize,
    area: Option<f64>,
    max_flow_velocity: Option<f64>,
    flow_invariant_max: Option<f64>,
) -> Result<SolveReport, SolveError> {
    let scaled = crate::conformal::scale_lengths(m, &u)?;
    let regularity = check_metric(&scaled)?;
    let u_mean_zero = match m.geometry() {
        Geometry::Euclidean => Some(mean_zero_part(&u)),
        _ => None,
    };
    Ok(SolveReport {
        status: SolveStatus::Converged,
        iterations,
        residual_history: residuals,
        u,
        u_mean_zero,
        area,
        regularity,
        max_flow_velocity,
        flow_invariant_max,
    })
}

/// Shifts `u` by the constant making the scaled Euclidean area exactly 1.
/// Constant shifts are similarities, so `K` is untouched. Returns the area
/// before normalization.
fn normalize_euclidean_area(m: &MeshMetric, u: &mut VertexField) -> Result<f64, SolveError> {
    let area = mesh_area(m, u)?;
    let c = -0.5 * area.ln();
    for v in u.iter_mut() {
        *v += c;
    }
    Ok(area)
}

fn check_euclidean_input(m: &MeshMetric) -> Result<(), SolveError> {
    if m.geometry() != Geometry::Euclidean {
        return Err(SolveError::GeometryMismatch {
            expected: Geometry::Euclidean,
            got: m.geometry(),
        });
    }
    let genus = m.triangulation().genus();
    if genus != 1 {
        return Err(SolveError::WrongGenus { expected: "1".into(), got: genus });
    }
    Ok(())
}

fn check_hyperbolic_input(m: &MeshMetric) -> Result<(), SolveError> {
    if m.geometry() != Geometry::Hyperbolic {
        return Err(SolveError::GeometryMismatch {
            expected: Geometry::Hyperbolic,
            got: m.geometry(),
        });
    }
    let genus = m.triangulation().genus();
    if genus < 2 {
        return Err(SolveError::WrongGenus { expected: ">= 2".into(), got: genus });
    }
    Ok(())
}

fn initial_u(m: &MeshMetric, opts: &SolveOptions) -> VertexField {
    let n = m.triangulation().vertex_count();
    let mut u = opts.initial_guess.clone().unwrap_or_else(|| vec![0.0; n]);
    assert_eq!(u.len(), n);
    if m.geometry() == Geometry::Euclidean {
        project_mean_zero(&mut u);
    }
    u
}

/// Flat uniformization of a genus-1 Euclidean mesh: `K(u) = 0` with the
/// scaled area normalized to 1 by a final constant shift. The reported `u`
/// includes the shift; subtract its mean for the mean-zero representative.
pub fn uniformize_euclidean(m: &MeshMetric, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    opts.validate()?;
    check_euclidean_input(m)?;
    if opts.mode == SolveMode::Flow {
        return flow_solve(m, opts);
    }
    let u0 = initial_u(m, opts);
    let target = vec![0.0; u0.len()];
    let out = newton_to_target(m, u0, &target, opts)?;
    let mut u = out.u;
    let area = normalize_euclidean_area(m, &mut u)?;
    final_report(m, u, out.residuals, out.iterations, Some(area), None, None)
}

/// Hyperbolic uniformization of a genus >= 2 mesh: `K(u) = 0`, no
/// normalization (the hyperbolic factor is unique outright).
pub fn uniformize_hyperbolic(
    m: &MeshMetric,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    opts.validate()?;
    check_hyperbolic_input(m)?;
    if opts.mode == SolveMode::Flow {
        return flow_solve(m, opts);
    }
    let u0 = initial_u(m, opts);
    let target = vec![0.0; u0.len()];
    let out = newton_to_target(m, u0, &target, opts)?;
    final_report(m, out.u, out.residuals, out.iterations, None, None, None)
}

/// Curvature-interpolation flow: from `u(0) = u_0`, integrate the velocity
/// that keeps `K(u(t)) = (1 - t) K(u_0)` (explicit Euler predictor, Newton
/// corrector onto the invariant after each step). Diagnostic mirror of the
/// Newton solver; endpoints agree to solver tolerance.
pub fn flow_solve(m: &MeshMetric, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    opts.validate()?;
    match m.geometry() {
        Geometry::Euclidean => check_euclidean_input(m)?,
        Geometry::Hyperbolic => check_hyperbolic_input(m)?,
        Geometry::Spherical => unreachable!("no spherical mesh metrics"),
    }
    let mut u = initial_u(m, opts);
    let k0 = curvature(m, &u)?;
    let k0_norm = inf_norm(&k0);
    let mut residuals = vec![k0_norm];
    let mut iterations = 0;
    let mut max_velocity = 0.0f64;
    let mut invariant_max = 0.0f64;

    if k0_norm > opts.tol_curvature {
        let steps = opts.flow_steps;
        for s in 0..steps {
            // Velocity at the current point. Solving J d = -K(u_0) makes the
            // curvature derivative along d equal to -K(u_0) in both
            // geometries, which is exactly the linear-elimination rate.
            let direction = newton_direction(m, &u, &k0)?;
            max_velocity = max_velocity.max(inf_norm(&direction));
            let h = 1.0 / steps as f64;
            let predicted: VertexField =
                u.iter().zip(&direction).map(|(a, d)| a + h * d).collect();
            let t_next = (s + 1) as f64 / steps as f64;
            let target: Vec<f64> = k0.iter().map(|v| (1.0 - t_next) * v).collect();
            let corrected = newton_to_target(m, predicted, &target, opts)?;
            u = corrected.u;
            iterations += corrected.iterations;
            let k = curvature(m, &u)?;
            let dev = k
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            invariant_max = invariant_max.max(dev);
            residuals.push(inf_norm(&k));
        }
    }
    let area = if m.geometry() == Geometry::Euclidean {
        Some(normalize_euclidean_area(m, &mut u)?)
    } else {
        None
    };
    final_report(
        m,
        u,
        residuals,
        iterations,
        area,
        Some(max_velocity),
        Some(invariant_max),
    )
}

/// Mean-zero representative of a conformal factor.
pub fn mean_zero_part(u: &VertexField) -> VertexField {
    let m = mean(u);
    u.iter().map(|v| v - m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::scale_lengths;
    use crate::mesh::{grid_torus_faces, Triangulation};
    use rand::{RngExt, SeedableRng};

    /// Flat unit-area torus: lattice lengths 1/n on the axes and sqrt(2)/n
    /// on the diagonals.
    fn flat_torus(n: usize) -> MeshMetric {
        let t = Triangulation::build(grid_torus_faces(n)).unwrap();
        let h = 1.0 / n as f64;
        let lengths: Vec<f64> = t
            .edges()
            .iter()
            .map(|&(i, j)| {
                let (xi, yi) = ((i % n) as i64, (i / n) as i64);
                let (xj, yj) = ((j % n) as i64, (j / n) as i64);
                let wrap = |d: i64| {
                    let d = d.rem_euclid(n as i64);
                    d.min(n as i64 - d) as f64
                };
                let (dx, dy) = (wrap(xj - xi), wrap(yj - yi));
                h * (dx * dx + dy * dy).sqrt()
            })
            .collect();
        MeshMetric::new(t, lengths, Geometry::Euclidean).unwrap()
    }

    fn random_mean_zero(rng: &mut impl RngExt, n: usize, cap: f64) -> VertexField {
        let mut u: VertexField = (0..n).map(|_| rng.random_range(-cap..cap)).collect();
        project_mean_zero(&mut u);
        u
    }

    #[test]
    fn already_flat_mesh_converges_immediately() {
        let m = flat_torus(8);
        let rep = uniformize_euclidean(&m, &SolveOptions::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        assert!(rep.iterations <= 1);
        assert!(inf_norm(&rep.u) < 1e-12);
        assert!((rep.area.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn euclidean_oracle_round_trip() {
        let m = flat_torus(8);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..3 {
            let u_star = random_mean_zero(&mut rng, 64, 0.2);
            let scaled = scale_lengths(&m, &u_star).unwrap();
            let rep = uniformize_euclidean(&scaled, &SolveOptions::default()).unwrap();
            // Uniqueness: u + u* is constant.
            let w: VertexField = rep.u.iter().zip(&u_star).map(|(a, b)| a + b).collect();
            let dev = inf_norm(&mean_zero_part(&w));
            assert!(dev <= 1e-8, "recovery deviation {dev}");
            let k = curvature(&scaled, &rep.u).unwrap();
            assert!(inf_norm(&k) <= 1e-10);
            // Normalization: scaled area is 1.
            assert!((mesh_area(&scaled, &rep.u).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn residuals_decrease_monotonically() {
        let m = flat_torus(8);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(32);
        let u_star = random_mean_zero(&mut rng, 64, 0.2);
        let scaled = scale_lengths(&m, &u_star).unwrap();
        let rep = uniformize_euclidean(&scaled, &SolveOptions::default()).unwrap();
        for pair in rep.residual_history.windows(2) {
            assert!(pair[1] < pair[0]);
        }
    }

    #[test]
    fn scale_invariance_of_normalized_solution() {
        let m = flat_torus(8);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        let u_star = random_mean_zero(&mut rng, 64, 0.15);
        let scaled = scale_lengths(&m, &u_star).unwrap();
        let rep0 = uniformize_euclidean(&scaled, &SolveOptions::default()).unwrap();
        let t = 3.7;
        let stretched = MeshMetric::new(
            scaled.triangulation().clone(),
            scaled.lengths().iter().map(|l| t * l).collect(),
            Geometry::Euclidean,
        )
        .unwrap();
        let rep1 = uniformize_euclidean(&stretched, &SolveOptions::default()).unwrap();
        let final0 = scaled_lengths(&scaled, &rep0.u);
        let final1 = scaled_lengths(&stretched, &rep1.u);
        for (a, b) in final0.iter().zip(&final1) {
            assert!((a - b).abs() <= 1e-10 * a);
        }
    }

    #[test]
    fn wrong_genus_and_geometry_rejected() {
        let tetra =
            Triangulation::build(vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]]).unwrap();
        let m = MeshMetric::new(tetra, vec![1.0; 6], Geometry::Euclidean).unwrap();
        assert!(matches!(
            uniformize_euclidean(&m, &SolveOptions::default()),
            Err(SolveError::WrongGenus { .. })
        ));
        let torus = flat_torus(4);
        assert!(matches!(
            uniformize_hyperbolic(&torus, &SolveOptions::default()),
            Err(SolveError::GeometryMismatch { .. })
        ));
        let hyp = MeshMetric::new(
            torus.triangulation().clone(),
            torus.lengths().to_vec(),
            Geometry::Hyperbolic,
        )
        .unwrap();
        assert!(matches!(
            uniformize_hyperbolic(&hyp, &SolveOptions::default()),
            Err(SolveError::WrongGenus { .. })
        ));
    }

    #[test]
    fn flow_mode_agrees_with_newton_on_torus() {
        let m = flat_torus(8);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(34);
        let u_star = random_mean_zero(&mut rng, 64, 0.15);
        let scaled = scale_lengths(&m, &u_star).unwrap();
        let newton = uniformize_euclidean(&scaled, &SolveOptions::default()).unwrap();
        let flow_opts = SolveOptions { mode: SolveMode::Flow, ..Default::default() };
        let flow = uniformize_euclidean(&scaled, &flow_opts).unwrap();
        let dev: f64 = newton
            .u
            .iter()
            .zip(&flow.u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-8, "flow/newton deviation {dev}");
        assert!(flow.flow_invariant_max.unwrap() <= 1e-10);
        assert!(flow.max_flow_velocity.unwrap() > 0.0);
    }

    #[test]
    fn flow_is_constant_at_fixed_point() {
        let m = flat_torus(6);
        let flow_opts = SolveOptions { mode: SolveMode::Flow, ..Default::default() };
        let rep = flow_solve(&m, &flow_opts).unwrap();
        assert!(inf_norm(&rep.u) < 1e-12);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn mesh_area_scales_as_similarity() {
        let m = flat_torus(6);
        let a0 = mesh_area(&m, &vec![0.0; 36]).unwrap();
        assert!((a0 - 1.0).abs() < 1e-12);
        let c = 0.21;
        let a1 = mesh_area(&m, &vec![c; 36]).unwrap();
        assert!((a1 - (2.0 * c).exp() * a0).abs() < 1e-12 * a1);
    }

    #[test]
    fn bad_options_rejected() {
        let m = flat_torus(4);
        let opts = SolveOptions { tol_curvature: 0.5, ..Default::default() };
        assert!(matches!(
            uniformize_euclidean(&m, &opts),
            Err(SolveError::BadOptions(_))
        ));
    }

    #[test]
    fn octagon_base_is_a_fixed_point() {
        let base = crate::surfaces::octagon_base(3).unwrap();
        let rep = uniformize_hyperbolic(&base.metric, &SolveOptions::default()).unwrap();
        assert!(rep.iterations <= 1);
        assert!(inf_norm(&rep.u) < 1e-11, "|u| = {}", inf_norm(&rep.u));
    }

    #[test]
    fn hyperbolic_oracle_round_trip() {
        let base = crate::surfaces::octagon_base(3).unwrap();
        let n = base.metric.triangulation().vertex_count();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(36);
        let opts = SolveOptions { tol_curvature: 1e-12, ..Default::default() };
        let mut accepted = 0;
        while accepted < 3 {
            let u_star: VertexField = (0..n).map(|_| rng.random_range(-0.2..0.2)).collect();
            let Ok(scaled) = scale_lengths(&base.metric, &u_star) else { continue };
            if check_metric(&scaled).unwrap().min_angle < opts.regularity_floor.0 {
                continue;
            }
            accepted += 1;
            let rep = uniformize_hyperbolic(&scaled, &opts).unwrap();
            let dev = rep
                .u
                .iter()
                .zip(&u_star)
                .map(|(a, b)| (a + b).abs())
                .fold(0.0f64, f64::max);
            assert!(dev <= 1e-8, "recovery deviation {dev}");
            assert!(rep.u_mean_zero.is_none());
        }
    }

    #[test]
    fn hyperbolic_solution_independent_of_initial_guess() {
        let base = crate::surfaces::octagon_base(3).unwrap();
        let n = base.metric.triangulation().vertex_count();
        let u_star = crate::surfaces::synthetic_genus2_factor(&base, 0.06);
        let deformed = scale_lengths(&base.metric, &u_star).unwrap();
        let opts = SolveOptions { tol_curvature: 1e-12, ..Default::default() };
        let from_zero = uniformize_hyperbolic(&deformed, &opts).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(35);
        let guess: VertexField = (0..n).map(|_| rng.random_range(-0.02..0.02)).collect();
        let opts_guessed = SolveOptions { initial_guess: Some(guess), ..opts };
        let from_random = uniformize_hyperbolic(&deformed, &opts_guessed).unwrap();
        let dev = from_zero
            .u
            .iter()
            .zip(&from_random.u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(dev <= 1e-8, "initial-guess dependence {dev}");
    }
}
