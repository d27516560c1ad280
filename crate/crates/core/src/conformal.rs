//! Vertex scaling, discrete curvature, and the curvature Jacobian.
//!
//! A conformal factor `u` assigns one real to each vertex and deforms the
//! edge lengths by `l' = e^{(u_i+u_j)/2} l` (Euclidean) or
//! `sinh(l'/2) = e^{(u_i+u_j)/2} sinh(l/2)` (hyperbolic). The curvature at a
//! vertex is its angle defect. The Jacobian `dK/du` is `-Delta_eta` with the
//! cotangent weights in the Euclidean case, and `D - Delta_eta` with a
//! positive diagonal `D` in the hyperbolic case; both closed forms are
//! assembled here, next to an independent per-triangle assembly used as a
//! cross-check.

use crate::graph::{Graph, VertexField};
use crate::mesh::{MeshError, MeshMetric};
use crate::trigeom::{self, Geometry};

/// Scaled edge lengths under the vertex-scaling rule of the metric's
/// geometry. `u = 0` is the identity and factors compose additively.
pub fn scaled_lengths(m: &MeshMetric, u: &VertexField) -> Vec<f64> {
    assert_eq!(u.len(), m.triangulation().vertex_count());
    let tri = m.triangulation();
    let lengths = m.lengths();
    match m.geometry() {
        Geometry::Euclidean => tri
            .edges()
            .iter()
            .zip(lengths)
            .map(|(&(i, j), &l)| (0.5 * (u[i] + u[j])).exp() * l)
            .collect(),
        Geometry::Hyperbolic => tri
            .edges()
            .iter()
            .zip(lengths)
            .map(|(&(i, j), &l)| {
                let s = 0.5 * (u[i] + u[j]);
                if s == 0.0 {
                    // Exact identity, not asinh(sinh(l/2)) rounded.
                    l
                } else {
                    2.0 * (s.exp() * (0.5 * l).sinh()).asinh()
                }
            })
            .collect(),
        Geometry::Spherical => unreachable!("no spherical mesh metrics"),
    }
}

/// Applies a conformal factor, re-validating the triangle inequalities.
/// A violating face is reported, never clamped.
pub fn scale_lengths(m: &MeshMetric, u: &VertexField) -> Result<MeshMetric, MeshError> {
    MeshMetric::new(m.triangulation().clone(), scaled_lengths(m, u), m.geometry())
}

/// Discrete curvature `K_i = 2 pi - sum of incident angles` of the scaled
/// metric, evaluated without materializing a new mesh.
pub fn curvature(m: &MeshMetric, u: &VertexField) -> Result<VertexField, MeshError> {
    let tri = m.triangulation();
    let lengths = scaled_lengths(m, u);
    let mut k = vec![2.0 * std::f64::consts::PI; tri.vertex_count()];
    for f in 0..tri.face_count() {
        let [ea, eb, ec] = tri.face_edges(f);
        let sides = trigeom::TriangleSides { a: lengths[ea], b: lengths[eb], c: lengths[ec] };
        let ang = trigeom::angles(sides, m.geometry())
            .map_err(|_| MeshError::TriangleInequalityViolated(f))?
            .as_array();
        for (slot, &v) in tri.faces()[f].iter().enumerate() {
            k[v] -= ang[slot];
        }
    }
    Ok(k)
}

/// The curvature Jacobian `dK/du` in graph-operator form.
#[derive(Clone, Debug)]
pub struct CurvatureJacobian {
    pub geometry: Geometry,
    /// Per-edge weight: cotangent weights (Euclidean), or
    /// `w_ij (1 - tanh^2(l'_ij / 2))` (hyperbolic).
    pub eta: Vec<f64>,
    /// Hyperbolic diagonal `D_ii = 2 sum_j w_ij tanh^2(l'_ij / 2)`; all
    /// zeros in the Euclidean case, where `dK/du = -Delta_eta`.
    pub shift: Vec<f64>,
    /// Hyperbolic per-edge `w_ij` from the shifted angles; equals `eta` in
    /// the Euclidean case.
    pub w: Vec<f64>,
}

impl CurvatureJacobian {
    /// Dense symmetric matrix `dK/du` (row-major).
    pub fn to_dense(&self, tri_edges: &[(usize, usize)], n: usize) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.shift[i];
        }
        for (e, &(i, j)) in tri_edges.iter().enumerate() {
            m[i][j] -= self.eta[e];
            m[j][i] -= self.eta[e];
            m[i][i] += self.eta[e];
            m[j][j] += self.eta[e];
        }
        m
    }

    /// `y = (dK/du) x`, i.e. `(D - Delta_eta) x` in the sign convention
    /// where the Euclidean shift is zero.
    pub fn apply(&self, tri_edges: &[(usize, usize)], x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = x.iter().zip(&self.shift).map(|(v, d)| d * v).collect();
        for (e, &(i, j)) in tri_edges.iter().enumerate() {
            let flux = self.eta[e] * (x[j] - x[i]);
            y[i] -= flux;
            y[j] += flux;
        }
        y
    }
}

/// Closed-form Jacobian assembly (the production path).
///
/// Euclidean: `eta_ij = (cot theta^k_ij + cot theta^k'_ij) / 2` over the two
/// angles opposite the edge, and `dK/du = -Delta_eta`.
/// Hyperbolic: with the shifted angles
/// `theta~^i_jk = (pi + theta^i - theta^j - theta^k)/2`,
/// `w_ij = (cot theta~^k_ij + cot theta~^k'_ij)/2`,
/// `eta_ij = w_ij (1 - tanh^2(l'_ij/2))`,
/// `D_ii = 2 sum_j w_ij tanh^2(l'_ij/2)`, and `dK/du = D - Delta_eta`.
pub fn curvature_jacobian(
    m: &MeshMetric,
    u: &VertexField,
) -> Result<CurvatureJacobian, MeshError> {
    let tri = m.triangulation();
    let lengths = scaled_lengths(m, u);
    let ne = tri.edge_count();
    let mut w = vec![0.0; ne];
    let geometry = m.geometry();
    let pi = std::f64::consts::PI;
    for f in 0..tri.face_count() {
        let [ea, eb, ec] = tri.face_edges(f);
        let sides = trigeom::TriangleSides { a: lengths[ea], b: lengths[eb], c: lengths[ec] };
        let ang = trigeom::angles(sides, geometry)
            .map_err(|_| MeshError::TriangleInequalityViolated(f))?
            .as_array();
        // Angle opposite edge slot s is ang[s]; hyperbolic uses the shifted
        // angle instead.
        let total = ang[0] + ang[1] + ang[2];
        for (s, &edge) in [ea, eb, ec].iter().enumerate() {
            let theta = match geometry {
                Geometry::Euclidean => ang[s],
                Geometry::Hyperbolic => 0.5 * (pi + 2.0 * ang[s] - total),
                Geometry::Spherical => unreachable!("no spherical mesh metrics"),
            };
            w[edge] += 0.5 * theta.cos() / theta.sin();
        }
    }
    match geometry {
        Geometry::Euclidean => Ok(CurvatureJacobian {
            geometry,
            eta: w.clone(),
            shift: vec![0.0; tri.vertex_count()],
            w,
        }),
        Geometry::Hyperbolic => {
            let mut eta = vec![0.0; ne];
            let mut shift = vec![0.0; tri.vertex_count()];
            for (e, &(i, j)) in tri.edges().iter().enumerate() {
                let t = (0.5 * lengths[e]).tanh();
                let t2 = t * t;
                eta[e] = w[e] * (1.0 - t2);
                shift[i] += 2.0 * w[e] * t2;
                shift[j] += 2.0 * w[e] * t2;
            }
            Ok(CurvatureJacobian { geometry, eta, shift, w })
        }
        Geometry::Spherical => unreachable!("no spherical mesh metrics"),
    }
}

/// Alternative Jacobian assembly straight from the per-triangle conformal
/// angle partials. Row `i`, column `j` of `dK/du` accumulates
/// `-d theta^i / d u_j` over the faces containing both vertices. Kept as an
/// independent route for cross-checking the closed forms.
pub fn curvature_jacobian_dense_from_partials(
    m: &MeshMetric,
    u: &VertexField,
) -> Result<Vec<Vec<f64>>, MeshError> {
    let tri = m.triangulation();
    let lengths = scaled_lengths(m, u);
    let n = tri.vertex_count();
    let mut jac = vec![vec![0.0; n]; n];
    for f in 0..tri.face_count() {
        let [ea, eb, ec] = tri.face_edges(f);
        let sides = trigeom::TriangleSides { a: lengths[ea], b: lengths[eb], c: lengths[ec] };
        let partials = trigeom::conformal_angle_partials(sides, m.geometry())
            .map_err(|_| MeshError::TriangleInequalityViolated(f))?;
        let corners = tri.faces()[f];
        for (r, &vi) in corners.iter().enumerate() {
            for (c, &vj) in corners.iter().enumerate() {
                jac[vi][vj] -= partials[r][c];
            }
        }
    }
    Ok(jac)
}

/// The edge graph of a mesh as a calculus [`Graph`]; vertex and edge
/// indices coincide with the triangulation's.
pub fn edge_graph(m: &MeshMetric) -> Graph {
    Graph::new(
        m.triangulation().vertex_count(),
        m.triangulation().edges().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{grid_torus_faces, Triangulation};
    use rand::{RngExt, SeedableRng};


    fn equilateral_torus(n: usize) -> MeshMetric {
        let t = Triangulation::build(grid_torus_faces(n)).unwrap();
        let e = t.edge_count();
        MeshMetric::new(t, vec![1.0; e], Geometry::Euclidean).unwrap()
    }

    fn random_u(rng: &mut impl RngExt, n: usize, cap: f64) -> VertexField {
        (0..n).map(|_| rng.random_range(-cap..cap)).collect()
    }

    #[test]
    fn zero_factor_is_identity() {
        let m = equilateral_torus(4);
        let u = vec![0.0; 16];
        assert_eq!(scaled_lengths(&m, &u), m.lengths());
    }

    #[test]
    fn constant_factor_scales_euclidean_lengths() {
        let m = equilateral_torus(4);
        let c = 0.3;
        let u = vec![c; 16];
        for (l1, l0) in scaled_lengths(&m, &u).iter().zip(m.lengths()) {
            assert!((l1 - c.exp() * l0).abs() < 1e-14);
        }
    }

    #[test]
    fn hyperbolic_round_trip() {
        let t = Triangulation::build(grid_torus_faces(4)).unwrap();
        let e = t.edge_count();
        let m = MeshMetric::new(t, vec![0.05; e], Geometry::Hyperbolic).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let u = random_u(&mut rng, 16, 0.3);
        let forward = scale_lengths(&m, &u).unwrap();
        let back = scale_lengths(&forward, &u.iter().map(|v| -v).collect()).unwrap();
        for (l1, l0) in back.lengths().iter().zip(m.lengths()) {
            assert!((l1 - l0).abs() <= 1e-12 * l0);
        }
    }

    #[test]
    fn factors_compose_additively() {
        let t = Triangulation::build(grid_torus_faces(4)).unwrap();
        let e = t.edge_count();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        for geometry in [Geometry::Euclidean, Geometry::Hyperbolic] {
            let m = MeshMetric::new(t.clone(), vec![0.4; e], geometry).unwrap();
            let u1 = random_u(&mut rng, 16, 0.2);
            let u2 = random_u(&mut rng, 16, 0.2);
            let two_step =
                scale_lengths(&scale_lengths(&m, &u1).unwrap(), &u2).unwrap();
            let sum: VertexField = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
            let one_step = scale_lengths(&m, &sum).unwrap();
            for (a, b) in two_step.lengths().iter().zip(one_step.lengths()) {
                assert!((a - b).abs() <= 1e-12 * b);
            }
        }
    }

    #[test]
    fn scaling_violation_is_reported() {
        let m = equilateral_torus(4);
        // Blowing up both ends of one edge stretches it by e^3 while the
        // other sides of its triangles only grow by e^{3/2}.
        let mut u = vec![0.0; 16];
        u[0] = 3.0;
        u[1] = 3.0;
        assert!(matches!(
            scale_lengths(&m, &u),
            Err(MeshError::TriangleInequalityViolated(_))
        ));
    }

    #[test]
    fn equilateral_torus_is_flat() {
        let m = equilateral_torus(5);
        let k = curvature(&m, &vec![0.0; 25]).unwrap();
        for v in k {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn euclidean_gauss_bonnet() {
        let m = equilateral_torus(6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let u = random_u(&mut rng, 36, 0.15);
        let k = curvature(&m, &u).unwrap();
        let total: f64 = k.iter().sum();
        // chi = 0 for the torus.
        assert!(total.abs() < 1e-9);
    }

    #[test]
    fn curvature_invariant_under_constant_shift() {
        let m = equilateral_torus(5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(24);
        let u = random_u(&mut rng, 25, 0.1);
        let shifted: VertexField = u.iter().map(|v| v + 0.7).collect();
        let k0 = curvature(&m, &u).unwrap();
        let k1 = curvature(&m, &shifted).unwrap();
        for (a, b) in k0.iter().zip(&k1) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn equilateral_cotangent_weights() {
        let m = equilateral_torus(4);
        let jac = curvature_jacobian(&m, &vec![0.0; 16]).unwrap();
        for w in &jac.eta {
            assert!((w - 1.0 / 3.0f64.sqrt()).abs() < 1e-13);
        }
        assert!(jac.shift.iter().all(|&d| d == 0.0));
    }

    /// On a regular mesh the cotangent weight is bounded below by half the
    /// sine of the worse of the two regularity margins: eta = sin(t + t') /
    /// (2 sin t sin t') >= sin(t + t') / 2 with 2 eps1 <= t + t' <= pi - eps2.
    #[test]
    fn regular_mesh_weight_lower_bounds() {
        let t = Triangulation::build(grid_torus_faces(5)).unwrap();
        let ne = t.edge_count();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(28);
        // Euclidean family: equilateral plus small conformal deformations.
        let m = MeshMetric::new(t.clone(), vec![1.0; ne], Geometry::Euclidean).unwrap();
        for _ in 0..50 {
            let u = random_u(&mut rng, 25, 0.08);
            let scaled = crate::conformal::scale_lengths(&m, &u).unwrap();
            let rep = crate::mesh::check_metric(&scaled).unwrap();
            let bound = 0.5
                * (2.0 * rep.min_angle)
                    .sin()
                    .min((std::f64::consts::PI - rep.max_opposite_angle_sum).sin());
            assert!(bound > 0.0, "mesh left the regular region");
            let jac = curvature_jacobian(&m, &u).unwrap();
            for &w in &jac.eta {
                assert!(w >= bound - 1e-12, "eta {w} below bound {bound}");
            }
        }
        // Hyperbolic family: small near-equilateral lengths. The shifted
        // angles exceed the raw ones by half the triangle area, so the same
        // sine bound holds up to that O(l^2) slack; the diagonal keeps a
        // positive quadratic-in-length floor.
        let mh = MeshMetric::new(t, vec![0.05; ne], Geometry::Hyperbolic).unwrap();
        let mut min_w = f64::MAX;
        let mut min_shift_ratio = f64::MAX;
        for _ in 0..50 {
            let u = random_u(&mut rng, 25, 0.08);
            let scaled = crate::conformal::scale_lengths(&mh, &u).unwrap();
            let rep = crate::mesh::check_metric(&scaled).unwrap();
            let bound = 0.5
                * (2.0 * rep.min_angle)
                    .sin()
                    .min((std::f64::consts::PI - rep.max_opposite_angle_sum).sin());
            let jac = curvature_jacobian(&mh, &u).unwrap();
            let max_l = scaled.max_length();
            for &w in &jac.w {
                min_w = min_w.min(w);
                assert!(w >= 0.5 * bound, "w {w} below half bound {bound}");
            }
            for (v, &d) in jac.shift.iter().enumerate() {
                min_shift_ratio = min_shift_ratio.min(d / (max_l * max_l));
                assert!(d > 0.0, "shift at vertex {v} not positive");
            }
        }
        // Empirical minima, recorded rather than asserted sharply.
        println!("hyperbolic grid family: min w = {min_w:.4}, min D/l^2 = {min_shift_ratio:.4}");
    }

    /// Delaunay-regular hyperbolic metrics give a positive definite
    /// Jacobian: eta > 0, D > 0, and the Cholesky factorization goes
    /// through without pivoting trouble.
    #[test]
    fn hyperbolic_jacobian_positive_definite_when_delaunay() {
        let t = Triangulation::build(grid_torus_faces(4)).unwrap();
        let ne = t.edge_count();
        let m = MeshMetric::new(t, vec![0.05; ne], Geometry::Hyperbolic).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let u = random_u(&mut rng, 16, 0.1);
            let rep = crate::mesh::check_metric(&crate::conformal::scale_lengths(&m, &u).unwrap())
                .unwrap();
            assert!(rep.is_regular(0.3, 0.3), "instance left the Delaunay region");
            let jac = curvature_jacobian(&m, &u).unwrap();
            assert!(jac.eta.iter().all(|&w| w > 0.0));
            assert!(jac.shift.iter().all(|&d| d > 0.0));
            let tri = m.triangulation();
            let mut diag = jac.shift.clone();
            let mut offdiag = Vec::with_capacity(ne);
            for (e, &(i, j)) in tri.edges().iter().enumerate() {
                diag[i] += jac.eta[e];
                diag[j] += jac.eta[e];
                offdiag.push(-jac.eta[e]);
            }
            let a = crate::linsolve::GraphMatrix { n: 16, edges: tri.edges(), diag, offdiag };
            assert!(a.cholesky(None).is_ok(), "Jacobian not positive definite");
        }
    }

    #[test]
    fn euclidean_jacobian_rows_sum_to_zero() {
        let m = equilateral_torus(5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(25);
        let u = random_u(&mut rng, 25, 0.15);
        let jac = curvature_jacobian(&m, &u).unwrap();
        let dense = jac.to_dense(m.triangulation().edges(), 25);
        for row in &dense {
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    fn fd_jacobian(m: &MeshMetric, u: &VertexField, h: f64) -> Vec<Vec<f64>> {
        let n = u.len();
        let mut out = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut up = u.clone();
            up[j] += h;
            let mut um = u.clone();
            um[j] -= h;
            let kp = curvature(m, &up).unwrap();
            let km = curvature(m, &um).unwrap();
            for i in 0..n {
                out[i][j] = (kp[i] - km[i]) / (2.0 * h);
            }
        }
        out
    }

    fn max_abs(m: &[Vec<f64>]) -> f64 {
        m.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }

    #[test]
    fn jacobian_matches_finite_differences_euclidean() {
        let m = equilateral_torus(4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(26);
        for _ in 0..5 {
            let u = random_u(&mut rng, 16, 0.2);
            let dense = curvature_jacobian(&m, &u)
                .unwrap()
                .to_dense(m.triangulation().edges(), 16);
            let fd = fd_jacobian(&m, &u, 1e-6);
            let scale = max_abs(&dense);
            for i in 0..16 {
                for j in 0..16 {
                    assert!(
                        (dense[i][j] - fd[i][j]).abs() <= 1e-6 * scale,
                        "entry ({i},{j}): {} vs {}",
                        dense[i][j],
                        fd[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn jacobian_paths_agree_and_are_symmetric() {
        let t = Triangulation::build(grid_torus_faces(4)).unwrap();
        let e = t.edge_count();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(27);
        for geometry in [Geometry::Euclidean, Geometry::Hyperbolic] {
            let base = if geometry == Geometry::Euclidean { 1.0 } else { 0.4 };
            let m = MeshMetric::new(t.clone(), vec![base; e], geometry).unwrap();
            let u = random_u(&mut rng, 16, 0.15);
            let closed = curvature_jacobian(&m, &u)
                .unwrap()
                .to_dense(m.triangulation().edges(), 16);
            let partials = curvature_jacobian_dense_from_partials(&m, &u).unwrap();
            let scale = max_abs(&closed);
            for i in 0..16 {
                for j in 0..16 {
                    assert!((closed[i][j] - partials[i][j]).abs() <= 1e-12 * scale);
                    assert!((closed[i][j] - closed[j][i]).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}
