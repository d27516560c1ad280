//! Analytic test surfaces with known uniformization factors.
//!
//! Two families:
//!
//! * [`ConformalTorus`]: the unit torus with metric `e^{2 phi} delta` for a
//!   closed-form doubly periodic `phi`. The exact uniformization factor is
//!   `-phi` (the flattened metric is the unit flat torus, already of area 1).
//!   Meshes sample the n x n lattice with geodesic edge lengths from the
//!   polyline solver.
//!
//! * [`octagon_base`]: a genus-2 surface built from the regular hyperbolic
//!   octagon with interior angles pi/4 (all eight corners identified to a
//!   single point, opposite sides glued). The central fan of eight triangles
//!   is subdivided `k` times with exact disk-model hyperbolic midpoints, so
//!   the mesh is globally hyperbolic by construction and `u = 0` is its own
//!   uniformization factor.

use crate::conformal::scale_lengths;
use crate::geodesic::{
    flat_torus_distance, torus_distance, ConformalFactor2d, GeodesicError, GeodesicSolverOptions,
};
use crate::graph::VertexField;
use crate::mesh::{grid_torus_faces, MeshError, MeshMetric, Triangulation};
use crate::trigeom::Geometry;
use crate::uniformize::{self, SolveError, SolveOptions};
use std::collections::HashMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("subdivision too coarse: {0}")]
    SubdivisionTooCoarse(String),
    #[error("{0}")]
    BadArgument(String),
}

/// `phi(x, y) = alpha (cos 2 pi x + sin 2 pi y) + beta cos(2 pi (x + y))`
/// on the unit torus; metric `e^{2 phi} (dx^2 + dy^2)`.
#[derive(Clone, Copy, Debug)]
pub struct ConformalTorus {
    pub alpha: f64,
    pub beta: f64,
}

impl ConformalTorus {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    /// The factor `u` with `e^{2u} g` flat of unit area: `u = -phi`.
    pub fn exact_uniformization_factor(&self, p: [f64; 2]) -> f64 {
        -self.phi(p)
    }
}

impl ConformalFactor2d for ConformalTorus {
    fn phi(&self, p: [f64; 2]) -> f64 {
        let t = std::f64::consts::TAU;
        self.alpha * ((t * p[0]).cos() + (t * p[1]).sin())
            + self.beta * (t * (p[0] + p[1])).cos()
    }

    fn grad_phi(&self, p: [f64; 2]) -> [f64; 2] {
        let t = std::f64::consts::TAU;
        let cross = -self.beta * t * (t * (p[0] + p[1])).sin();
        [
            -self.alpha * t * (t * p[0]).sin() + cross,
            self.alpha * t * (t * p[1]).cos() + cross,
        ]
    }

    fn hess_phi(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let t = std::f64::consts::TAU;
        let cross = -self.beta * t * t * (t * (p[0] + p[1])).cos();
        [
            [-self.alpha * t * t * (t * p[0]).cos() + cross, cross],
            [cross, -self.alpha * t * t * (t * p[1]).sin() + cross],
        ]
    }

    fn phi_lower_bound(&self) -> f64 {
        -2.0 * self.alpha.abs() - self.beta.abs()
    }
}

/// Thread budget for the per-edge geodesic solves: `DU_THREADS` when set,
/// otherwise the machine's parallelism.
fn thread_count(work_items: usize) -> usize {
    let available = std::env::var("DU_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        });
    available.min(work_items.max(1))
}

/// Deterministic parallel map: each output slot is written by exactly one
/// worker, so the result is independent of scheduling.
fn parallel_map<T: Send + Sync, R: Send>(
    items: &[T],
    f: impl Fn(&T) -> R + Send + Sync,
) -> Vec<R> {
    let workers = thread_count(items.len());
    let mut out: Vec<Option<R>> = std::iter::repeat_with(|| None).take(items.len()).collect();
    if workers <= 1 {
        for (slot, item) in out.iter_mut().zip(items) {
            *slot = Some(f(item));
        }
    } else {
        let chunk = items.len().div_ceil(workers);
        std::thread::scope(|scope| {
            for (item_chunk, out_chunk) in items.chunks(chunk).zip(out.chunks_mut(chunk)) {
                let f = &f;
                scope.spawn(move || {
                    for (slot, item) in out_chunk.iter_mut().zip(item_chunk) {
                        *slot = Some(f(item));
                    }
                });
            }
        });
    }
    out.into_iter().map(|r| r.unwrap()).collect()
}

/// Samples the n x n lattice mesh of the torus with geodesic edge lengths in
/// `e^{2 phi} delta`, together with the exact factor `-phi` at the vertices.
pub fn sample_torus_mesh(
    torus: &ConformalTorus,
    n: usize,
    opts: &GeodesicSolverOptions,
) -> Result<(MeshMetric, VertexField), SurfaceError> {
    if n < 4 {
        return Err(SurfaceError::BadArgument(format!(
            "torus resolution must be at least 4, got {n}"
        )));
    }
    let tri = Triangulation::build(grid_torus_faces(n))?;
    let position = |v: usize| -> [f64; 2] {
        [(v % n) as f64 / n as f64, (v / n) as f64 / n as f64]
    };
    let lengths: Vec<Result<f64, GeodesicError>> =
        parallel_map(tri.edges(), |&(i, j)| torus_distance(torus, position(i), position(j), opts));
    let lengths: Vec<f64> = lengths.into_iter().collect::<Result<_, _>>()?;
    let u_exact: VertexField = (0..tri.vertex_count())
        .map(|v| torus.exact_uniformization_factor(position(v)))
        .collect();
    let metric = MeshMetric::new(tri, lengths, Geometry::Euclidean)?;
    Ok((metric, u_exact))
}

// ---------------------------------------------------------------------------
// Genus-2 octagon
// ---------------------------------------------------------------------------

type C = [f64; 2];

fn c_add(a: C, b: C) -> C {
    [a[0] + b[0], a[1] + b[1]]
}

fn c_sub(a: C, b: C) -> C {
    [a[0] - b[0], a[1] - b[1]]
}

fn c_mul(a: C, b: C) -> C {
    [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

fn c_conj(a: C) -> C {
    [a[0], -a[1]]
}

fn c_abs(a: C) -> f64 {
    a[0].hypot(a[1])
}

fn c_div(a: C, b: C) -> C {
    let d = b[0] * b[0] + b[1] * b[1];
    [(a[0] * b[0] + a[1] * b[1]) / d, (a[1] * b[0] - a[0] * b[1]) / d]
}

fn c_scale(t: f64, a: C) -> C {
    [t * a[0], t * a[1]]
}

const ONE: C = [1.0, 0.0];

/// Hyperbolic distance between two points of the unit disk.
pub fn disk_distance(z: C, w: C) -> f64 {
    let num = c_abs(c_sub(w, z));
    let den = c_abs(c_sub(ONE, c_mul(c_conj(z), w)));
    2.0 * (num / den).atanh()
}

/// Hyperbolic midpoint: translate `z` to the origin, walk half the distance
/// toward the image of `w`, translate back.
pub fn disk_midpoint(z: C, w: C) -> C {
    let wp = c_div(c_sub(w, z), c_sub(ONE, c_mul(c_conj(z), w)));
    let r = c_abs(wp);
    if r == 0.0 {
        return z;
    }
    let d = 2.0 * r.atanh();
    let mp = c_scale((0.25 * d).tanh() / r, wp);
    c_div(c_add(mp, z), c_add(ONE, c_mul(c_conj(z), mp)))
}

struct GlueFace {
    ids: [usize; 3],
    coords: [C; 3],
}

/// A closed surface as oriented faces plus an involutive gluing map on
/// (face, slot) pairs; slot `s` is the edge opposite corner `s`, directed
/// from corner `s+1` to corner `s+2`.
struct GlueMesh {
    faces: Vec<GlueFace>,
    glue: Vec<[(usize, usize); 3]>,
    /// Representative disk coordinates per vertex id, from first creation.
    positions: Vec<C>,
}

impl GlueMesh {
    /// Level-0 octagon fan: center at the origin, eight corner triangles,
    /// all eight octagon corners one vertex class, side `j` glued to side
    /// `j + 4`, spokes glued between neighbouring fan faces.
    fn octagon_fan() -> Self {
        let pi = std::f64::consts::PI;
        // cosh(circumradius) = cot^2(pi/8), i.e. disk radius 2^(-1/4).
        let r_disk = 2.0f64.powf(-0.25);
        let corner = |j: usize| -> C {
            let t = pi / 4.0 * j as f64;
            [r_disk * t.cos(), r_disk * t.sin()]
        };
        let faces: Vec<GlueFace> = (0..8)
            .map(|j| GlueFace {
                ids: [0, 1, 1],
                coords: [[0.0, 0.0], corner(j), corner((j + 1) % 8)],
            })
            .collect();
        let mut glue = vec![[(usize::MAX, usize::MAX); 3]; 8];
        for j in 0..8 {
            // Octagon side j (slot 0) is identified with side j+4; both
            // faces run their slot-0 edge forward, so the identification is
            // automatically head-to-tail.
            glue[j][0] = ((j + 4) % 8, 0);
            // Spoke to corner j+1 (slot 1) is shared with face j+1 (slot 2).
            glue[j][1] = ((j + 1) % 8, 2);
            glue[j][2] = ((j + 7) % 8, 1);
        }
        Self {
            faces,
            glue,
            positions: vec![[0.0, 0.0], corner(0)],
        }
    }

    fn check_glue(&self) {
        for f in 0..self.glue.len() {
            for s in 0..3 {
                let (g, t) = self.glue[f][s];
                debug_assert!(self.glue[g][t] == (f, s) && (g, t) != (f, s));
            }
        }
    }

    /// One 4-to-1 midpoint subdivision. Children of face f occupy indices
    /// 4f..4f+3: the three corner children then the central child.
    fn subdivide(&mut self) {
        self.check_glue();
        let nf = self.faces.len();
        // One new vertex per glued edge pair.
        let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();
        for f in 0..nf {
            for s in 0..3 {
                let key = (f, s).min(self.glue[f][s]);
                if !edge_vertex.contains_key(&key) {
                    let (kf, ks) = key;
                    let face = &self.faces[kf];
                    let z = disk_midpoint(face.coords[(ks + 1) % 3], face.coords[(ks + 2) % 3]);
                    edge_vertex.insert(key, self.positions.len());
                    self.positions.push(z);
                }
            }
        }
        let mid_id = |f: usize, s: usize| -> usize { edge_vertex[&(f, s).min(self.glue[f][s])] };

        let mut faces = Vec::with_capacity(4 * nf);
        let mut glue = vec![[(usize::MAX, usize::MAX); 3]; 4 * nf];
        for (f, face) in self.faces.iter().enumerate() {
            let v = face.ids;
            let z = face.coords;
            let m: [usize; 3] = [mid_id(f, 0), mid_id(f, 1), mid_id(f, 2)];
            let mz: [C; 3] = [
                disk_midpoint(z[1], z[2]),
                disk_midpoint(z[2], z[0]),
                disk_midpoint(z[0], z[1]),
            ];
            faces.push(GlueFace { ids: [v[0], m[2], m[1]], coords: [z[0], mz[2], mz[1]] });
            faces.push(GlueFace { ids: [v[1], m[0], m[2]], coords: [z[1], mz[0], mz[2]] });
            faces.push(GlueFace { ids: [v[2], m[1], m[0]], coords: [z[2], mz[1], mz[0]] });
            faces.push(GlueFace { ids: [m[0], m[1], m[2]], coords: [mz[0], mz[1], mz[2]] });
            // Midlines: central child slot s glues to corner child s slot 0.
            for s in 0..3 {
                glue[4 * f + 3][s] = (4 * f + s, 0);
                glue[4 * f + s][0] = (4 * f + 3, s);
            }
        }
        // Halves of parent edges: parent edge (f, s) runs from corner s+1 to
        // corner s+2; its start half is child s+1 slot 2 and its end half is
        // child s+2 slot 1. Glued faces traverse the shared edge in opposite
        // directions, so start glues to end.
        for f in 0..nf {
            for s in 0..3 {
                let (g, t) = self.glue[f][s];
                let start_here = (4 * f + (s + 1) % 3, 2);
                let end_there = (4 * g + (t + 2) % 3, 1);
                glue[start_here.0][start_here.1] = end_there;
                glue[end_there.0][end_there.1] = start_here;
            }
        }
        self.faces = faces;
        self.glue = glue;
        self.check_glue();
    }
}

/// A genus-2 mesh with the disk coordinates that produced it.
pub struct OctagonBase {
    pub metric: MeshMetric,
    /// Representative disk-model position per vertex.
    pub vertex_positions: Vec<[f64; 2]>,
}

/// Smallest subdivision level at which every edge is shorter than 0.1
/// (found empirically; the longest level-k edge is an octagon side halved k
/// times, about 3.06 / 2^k).
pub const OCTAGON_MIN_SUBDIVISION: usize = 5;

/// Builds the subdivided octagon surface at level `k >= 2` (below that the
/// quotient complex is not simplicial). Every vertex has zero angle defect
/// by construction.
pub fn octagon_base(k: usize) -> Result<OctagonBase, SurfaceError> {
    if k < 2 {
        return Err(SurfaceError::BadArgument(format!(
            "octagon subdivision must be at least 2 to be simplicial, got {k}"
        )));
    }
    let mut mesh = GlueMesh::octagon_fan();
    for _ in 0..k {
        mesh.subdivide();
    }
    let tri = Triangulation::build(mesh.faces.iter().map(|f| f.ids).collect())?;
    let mut lengths = vec![f64::NAN; tri.edge_count()];
    for face in &mesh.faces {
        for s in 0..3 {
            let (i, j) = (face.ids[(s + 1) % 3], face.ids[(s + 2) % 3]);
            let l = disk_distance(face.coords[(s + 1) % 3], face.coords[(s + 2) % 3]);
            let e = tri.edge_index(i, j).expect("face side is an edge");
            if lengths[e].is_nan() {
                lengths[e] = l;
            } else {
                // The two representatives are mirror images; their lengths
                // agree to rounding.
                debug_assert!(
                    (lengths[e] - l).abs() <= 1e-11 * l,
                    "inconsistent identified edge lengths: {} vs {l}",
                    lengths[e]
                );
            }
        }
    }
    let metric = MeshMetric::new(tri, lengths, Geometry::Hyperbolic)?;
    Ok(OctagonBase {
        metric,
        vertex_positions: mesh.positions,
    })
}

/// The genus-2 sample mesh at level `k`: globally hyperbolic base, all edge
/// lengths below 0.1, optionally deformed by a synthetic factor (whose
/// exact uniformization factor is then its negation).
pub fn sample_genus2_mesh(
    k: usize,
    u_synthetic: Option<&VertexField>,
) -> Result<MeshMetric, SurfaceError> {
    let base = octagon_base(k)?;
    let max_len = base.metric.max_length();
    if max_len >= 0.1 {
        return Err(SurfaceError::SubdivisionTooCoarse(format!(
            "max edge length {max_len} at level {k}; need level {} or finer",
            OCTAGON_MIN_SUBDIVISION
        )));
    }
    match u_synthetic {
        None => Ok(base.metric),
        Some(u) => Ok(scale_lengths(&base.metric, u)?),
    }
}

// ---------------------------------------------------------------------------
// Cubic estimate and convergence studies
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct CubicRow {
    /// Geodesic distance in the background metric.
    pub d_g: f64,
    /// `|d_flat(x, y) - e^{(u(x)+u(y))/2} d_g(x, y)|` with `u = -phi`; the
    /// flat side is exact.
    pub deviation: f64,
    /// `deviation / d_g^3`.
    pub ratio: f64,
}

/// Measures the third-order accuracy of vertex scaling as a distance
/// approximation: for pairs at shrinking separations, `deviation / d^3`
/// stays bounded.
pub fn verify_cubic_estimate(
    torus: &ConformalTorus,
    pairs: &[([f64; 2], [f64; 2])],
    opts: &GeodesicSolverOptions,
) -> Result<Vec<CubicRow>, SurfaceError> {
    let rows: Vec<Result<CubicRow, GeodesicError>> = parallel_map(pairs, |&(x, y)| {
        let d_g = torus_distance(torus, x, y, opts)?;
        let d_flat = flat_torus_distance(x, y);
        let factor = (-0.5 * (torus.phi(x) + torus.phi(y))).exp();
        let deviation = (d_flat - factor * d_g).abs();
        Ok(CubicRow { d_g, deviation, ratio: deviation / (d_g * d_g * d_g) })
    });
    rows.into_iter()
        .collect::<Result<_, _>>()
        .map_err(SurfaceError::from)
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct StudyRow {
    pub resolution: usize,
    /// Mesh size `|l|_inf`.
    pub h: f64,
    /// `|u - u_exact|_inf` against the sampled exact factor.
    pub error: f64,
    /// Final `|K|_inf` of the solve.
    pub residual: f64,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    /// Least-squares slope of `log error` against `log h`; `None` when the
    /// errors sit at solver precision (nothing to fit).
    pub slope: Option<f64>,
}

fn fit_slope(rows: &[StudyRow]) -> Option<f64> {
    if rows.len() < 2 || rows.iter().any(|r| r.error <= 1e-13) {
        return None;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h.ln(), r.error.ln())).collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    Some((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// Samples the torus at each resolution, uniformizes, and compares with the
/// exact factor.
pub fn torus_convergence_study(
    torus: &ConformalTorus,
    resolutions: &[usize],
    geo_opts: &GeodesicSolverOptions,
    solve_opts: &SolveOptions,
) -> Result<StudyReport, SurfaceError> {
    let mut rows = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let start = Instant::now();
        let (metric, u_exact) = sample_torus_mesh(torus, n, geo_opts)?;
        let report = uniformize::uniformize_euclidean(&metric, solve_opts)?;
        let error = report
            .u
            .iter()
            .zip(&u_exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        rows.push(StudyRow {
            resolution: n,
            h: metric.max_length(),
            error,
            residual: *report.residual_history.last().unwrap(),
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    let slope = fit_slope(&rows);
    Ok(StudyReport { rows, slope })
}

/// Oracle-recovery study on the genus-2 octagon: deform the base mesh by a
/// smooth synthetic factor of the disk coordinates, solve, and report the
/// recovery error (exact up to solver tolerance at every level, unlike the
/// `O(|l|)` torus study).
pub fn genus2_recovery_study(
    levels: &[usize],
    amplitude: f64,
    solve_opts: &SolveOptions,
) -> Result<StudyReport, SurfaceError> {
    let mut rows = Vec::with_capacity(levels.len());
    for &k in levels {
        let start = Instant::now();
        let base = octagon_base(k)?;
        if base.metric.max_length() >= 0.1 {
            return Err(SurfaceError::SubdivisionTooCoarse(format!(
                "level {k} has edges of length {}",
                base.metric.max_length()
            )));
        }
        let u_star = synthetic_genus2_factor(&base, amplitude);
        let deformed = scale_lengths(&base.metric, &u_star)?;
        let report = uniformize::uniformize_hyperbolic(&deformed, solve_opts)?;
        let error = report
            .u
            .iter()
            .zip(&u_star)
            .map(|(a, b)| (a + b).abs())
            .fold(0.0f64, f64::max);
        rows.push(StudyRow {
            resolution: k,
            h: deformed.max_length(),
            error,
            residual: *report.residual_history.last().unwrap(),
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(StudyReport { slope: fit_slope(&rows), rows })
}

/// A smooth-ish deterministic factor from the representative disk
/// coordinates, single-valued on the quotient by construction.
pub fn synthetic_genus2_factor(base: &OctagonBase, amplitude: f64) -> VertexField {
    base.vertex_positions
        .iter()
        .map(|&[x, y]| amplitude * (2.0 * x * y + x * x - y * y))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::curvature;
    use crate::mesh::check_metric;

    const PI: f64 = std::f64::consts::PI;

    /// Level-k mesh without the production length cap, for tests that want
    /// small fast meshes.
    fn genus2_any_level(k: usize, u: Option<&VertexField>) -> Result<MeshMetric, SurfaceError> {
        let base = octagon_base(k)?;
        match u {
            None => Ok(base.metric),
            Some(u) => Ok(scale_lengths(&base.metric, u)?),
        }
    }

    #[test]
    fn flat_torus_sampling_is_exact() {
        let torus = ConformalTorus::new(0.0, 0.0);
        let (m, u) = sample_torus_mesh(&torus, 8, &GeodesicSolverOptions::default()).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
        let h = 1.0 / 8.0;
        for (&(i, j), &l) in m.triangulation().edges().iter().zip(m.lengths()) {
            let expect = if (i % 8 != j % 8) && (i / 8 != j / 8) {
                h * 2.0f64.sqrt()
            } else {
                h
            };
            assert!((l - expect).abs() < 1e-13, "edge ({i},{j}): {l} vs {expect}");
        }
        assert!((m.total_area().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_meshes_are_regular_and_scale() {
        let torus = ConformalTorus::new(0.05, 0.0);
        let opts = GeodesicSolverOptions::default();
        let (m8, _) = sample_torus_mesh(&torus, 8, &opts).unwrap();
        let (m16, _) = sample_torus_mesh(&torus, 16, &opts).unwrap();
        let rep8 = check_metric(&m8).unwrap();
        let rep16 = check_metric(&m16).unwrap();
        // Minimum angles clear 0.1 comfortably; the opposite-angle sums sit
        // at the Delaunay margin pi by the lattice construction.
        assert!(rep8.min_angle >= 0.1, "min angle {}", rep8.min_angle);
        assert!(rep16.min_angle >= 0.1);
        assert!(rep8.max_opposite_angle_sum <= PI + 0.1);
        assert!(rep16.max_opposite_angle_sum <= PI + 0.1);
        let ratio = m8.max_length() / m16.max_length();
        assert!((ratio - 2.0).abs() <= 0.2, "mesh size ratio {ratio}");
    }

    #[test]
    fn octagon_base_counts() {
        let base = octagon_base(2).unwrap();
        let tri = base.metric.triangulation();
        assert_eq!(tri.face_count(), 128);
        assert_eq!(tri.euler_characteristic(), -2);
        assert_eq!(tri.genus(), 2);
        assert_eq!(tri.vertex_count(), 62);
        assert_eq!(base.vertex_positions.len(), 62);
    }

    #[test]
    fn octagon_is_globally_hyperbolic_at_every_level() {
        for k in 2..=4 {
            let base = octagon_base(k).unwrap();
            let n = base.metric.triangulation().vertex_count();
            let k_field = curvature(&base.metric, &vec![0.0; n]).unwrap();
            let max = k_field.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            assert!(max < 1e-9, "level {k}: max |K| = {max}");
            let area = base.metric.total_area().unwrap();
            assert!(
                (area - 4.0 * PI).abs() <= 1e-6 * area,
                "level {k}: area {area}"
            );
        }
    }

    #[test]
    fn octagon_subdivision_threshold() {
        let coarse = octagon_base(OCTAGON_MIN_SUBDIVISION - 1).unwrap();
        assert!(coarse.metric.max_length() >= 0.1);
        assert!(matches!(
            sample_genus2_mesh(OCTAGON_MIN_SUBDIVISION - 1, None),
            Err(SurfaceError::SubdivisionTooCoarse(_))
        ));
        let fine = octagon_base(OCTAGON_MIN_SUBDIVISION).unwrap();
        assert!(fine.metric.max_length() < 0.1);
    }

    #[test]
    fn synthetic_factor_round_trip() {
        let base = octagon_base(3).unwrap();
        let n = base.metric.triangulation().vertex_count();
        let u = synthetic_genus2_factor(&base, 0.05);
        let m0 = genus2_any_level(3, None).unwrap();
        let m1 = genus2_any_level(3, Some(&u)).unwrap();
        let back = scale_lengths(&m1, &u.iter().map(|v| -v).collect()).unwrap();
        for (a, b) in back.lengths().iter().zip(m0.lengths()) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
        let zero = genus2_any_level(3, Some(&vec![0.0; n])).unwrap();
        assert_eq!(zero.lengths(), m0.lengths());
    }

    #[test]
    fn cubic_estimate_flat_cases() {
        let torus = ConformalTorus::new(0.0, 0.0);
        let pairs = [([0.1, 0.2], [0.3, 0.45]), ([0.0, 0.0], [0.5, 0.125])];
        let rows =
            verify_cubic_estimate(&torus, &pairs, &GeodesicSolverOptions::default()).unwrap();
        for r in rows {
            assert!(r.deviation < 1e-12);
        }
    }
}
