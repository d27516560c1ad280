//! Combinatorial and metric representation of closed oriented triangle
//! meshes.
//!
//! A [`Triangulation`] is purely combinatorial: faces are ordered vertex
//! triples with a globally consistent orientation, every edge bounds exactly
//! two faces, and the whole complex is connected and simplicial. Edge
//! lengths live in a [`MeshMetric`] together with a background geometry tag;
//! the same combinatorics can carry either a piecewise Euclidean or a
//! piecewise hyperbolic metric.

use crate::trigeom::{self, Geometry, TriangleSides, TRIANGLE_INEQ_SLACK};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("edge ({0}, {1}) is incident to {2} faces, expected 2")]
    NonManifoldEdge(usize, usize, usize),
    #[error("no consistent global orientation: edge ({0}, {1}) is traversed twice in the same direction")]
    NonOrientable(usize, usize),
    #[error("the edge graph is disconnected")]
    Disconnected,
    #[error("face ({0}, {1}, {2}) is listed twice")]
    DuplicateFace(usize, usize, usize),
    #[error("face ({0}, {1}, {2}) repeats a vertex")]
    DegenerateFace(usize, usize, usize),
    #[error("vertex index {0} out of range for vertex count {1}")]
    VertexOutOfRange(usize, usize),
    #[error("no faces given")]
    Empty,
    #[error("edge {0} has non-positive length {1}")]
    NonPositiveLength(usize, f64),
    #[error("triangle inequality violated on face {0}")]
    TriangleInequalityViolated(usize),
}

/// A closed, connected, oriented simplicial surface.
#[derive(Clone, Debug)]
pub struct Triangulation {
    vertex_count: usize,
    faces: Vec<[usize; 3]>,
    /// Canonical edges (lo, hi) with lo < hi, sorted lexicographically.
    edges: Vec<(usize, usize)>,
    /// Per face, the edge index opposite each corner: entry `m` is the edge
    /// joining the other two corners of face slot `m`.
    face_edges: Vec<[usize; 3]>,
    /// The two faces incident to each edge.
    edge_faces: Vec<[usize; 2]>,
    /// Edges incident to each vertex.
    vertex_edges: Vec<Vec<usize>>,
    /// Faces incident to each vertex.
    vertex_faces: Vec<Vec<usize>>,
    genus: usize,
}

impl Triangulation {
    /// Builds the full adjacency structure and verifies every invariant:
    /// simplicial, closed, consistently oriented, connected.
    ///
    /// Vertex indices must be dense in `0..V` where `V` is one more than the
    /// largest index used.
    pub fn build(faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::Empty);
        }
        let vertex_count = faces.iter().flatten().copied().max().unwrap() + 1;

        let mut seen_faces: HashMap<[usize; 3], ()> = HashMap::with_capacity(faces.len());
        for &f in &faces {
            let [i, j, k] = f;
            if i == j || j == k || i == k {
                return Err(MeshError::DegenerateFace(i, j, k));
            }
            // Canonical key up to cyclic rotation; the reversed triple is a
            // different oriented face, not a duplicate.
            let rotations = [[i, j, k], [j, k, i], [k, i, j]];
            let key = *rotations.iter().min().unwrap();
            if seen_faces.insert(key, ()).is_some() {
                return Err(MeshError::DuplicateFace(i, j, k));
            }
        }

        // Collect canonical edges and the direction each face traverses them.
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        // Per edge: [seen lo->hi, seen hi->lo] counts.
        let mut traversals: Vec<[u32; 2]> = Vec::new();
        let mut incident: Vec<Vec<usize>> = Vec::new();
        let mut face_edges = vec![[usize::MAX; 3]; faces.len()];

        for (fi, &[i, j, k]) in faces.iter().enumerate() {
            for (slot, (u, v)) in [(j, k), (k, i), (i, j)].into_iter().enumerate() {
                let key = (u.min(v), u.max(v));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(key);
                    traversals.push([0, 0]);
                    incident.push(Vec::new());
                    edges.len() - 1
                });
                traversals[id][if u < v { 0 } else { 1 }] += 1;
                incident[id].push(fi);
                face_edges[fi][slot] = id;
            }
        }

        for (id, inc) in incident.iter().enumerate() {
            let (lo, hi) = edges[id];
            if inc.len() != 2 {
                return Err(MeshError::NonManifoldEdge(lo, hi, inc.len()));
            }
            if traversals[id] != [1, 1] {
                return Err(MeshError::NonOrientable(lo, hi));
            }
        }

        // Re-sort edges into canonical lexicographic order, remapping ids.
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_unstable_by_key(|&e| edges[e]);
        let mut remap = vec![0usize; edges.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let edges: Vec<(usize, usize)> = order.iter().map(|&e| edges[e]).collect();
        let mut edge_faces = vec![[usize::MAX; 2]; edges.len()];
        for (old, inc) in incident.iter().enumerate() {
            edge_faces[remap[old]] = [inc[0], inc[1]];
        }
        for fe in &mut face_edges {
            for e in fe.iter_mut() {
                *e = remap[*e];
            }
        }

        let mut vertex_edges = vec![Vec::new(); vertex_count];
        for (e, &(lo, hi)) in edges.iter().enumerate() {
            vertex_edges[lo].push(e);
            vertex_edges[hi].push(e);
        }
        // A dense vertex range means no isolated vertices.
        if let Some(v) = vertex_edges.iter().position(|es| es.is_empty()) {
            return Err(MeshError::VertexOutOfRange(v, vertex_count));
        }
        let mut vertex_faces = vec![Vec::new(); vertex_count];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }

        // Connectivity over the edge graph.
        let mut seen = vec![false; vertex_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &e in &vertex_edges[v] {
                let (lo, hi) = edges[e];
                let w = if lo == v { hi } else { lo };
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        if count != vertex_count {
            return Err(MeshError::Disconnected);
        }

        let chi = vertex_count as i64 - edges.len() as i64 + faces.len() as i64;
        debug_assert!(chi <= 2 && (2 - chi) % 2 == 0);
        let genus = ((2 - chi) / 2) as usize;

        Ok(Self {
            vertex_count,
            faces,
            edges,
            face_edges,
            edge_faces,
            vertex_edges,
            vertex_faces,
            genus,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Canonical edge list, `(lo, hi)` pairs sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edge indices of a face; slot `m` holds the edge opposite corner `m`.
    pub fn face_edges(&self, face: usize) -> [usize; 3] {
        self.face_edges[face]
    }

    pub fn edge_faces(&self, edge: usize) -> [usize; 2] {
        self.edge_faces[edge]
    }

    pub fn vertex_edges(&self, v: usize) -> &[usize] {
        &self.vertex_edges[v]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    /// For face `f` and local corner slot `m`, the corner vertex opposite
    /// edge `face_edges(f)[m]`.
    pub fn face_corner(&self, face: usize, slot: usize) -> usize {
        self.faces[face][slot]
    }
}

/// A triangulation together with positive edge lengths and a geometry tag.
#[derive(Clone, Debug)]
pub struct MeshMetric {
    tri: Triangulation,
    lengths: Vec<f64>,
    geometry: Geometry,
}

impl MeshMetric {
    /// Validates positivity and the strict triangle inequality on every face
    /// (with relative slack `TRIANGLE_INEQ_SLACK`); for both geometry tags
    /// the inequality is on the raw lengths. Spherical triangles exist only
    /// in the single-triangle kernel, never as a mesh geometry.
    pub fn new(
        tri: Triangulation,
        lengths: Vec<f64>,
        geometry: Geometry,
    ) -> Result<Self, MeshError> {
        assert_eq!(lengths.len(), tri.edge_count(), "one length per edge");
        assert!(
            geometry != Geometry::Spherical,
            "mesh metrics are Euclidean or hyperbolic"
        );
        for (e, &l) in lengths.iter().enumerate() {
            if !(l > 0.0 && l.is_finite()) {
                return Err(MeshError::NonPositiveLength(e, l));
            }
        }
        for f in 0..tri.face_count() {
            let [ea, eb, ec] = tri.face_edges(f);
            let (a, b, c) = (lengths[ea], lengths[eb], lengths[ec]);
            let m = a.max(b).max(c);
            if a + b - c < TRIANGLE_INEQ_SLACK * m
                || b + c - a < TRIANGLE_INEQ_SLACK * m
                || c + a - b < TRIANGLE_INEQ_SLACK * m
            {
                return Err(MeshError::TriangleInequalityViolated(f));
            }
        }
        Ok(Self { tri, lengths, geometry })
    }

    pub fn triangulation(&self) -> &Triangulation {
        &self.tri
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn max_length(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max)
    }

    /// Side lengths of a face ordered so side `m` is opposite corner `m`.
    pub fn face_sides(&self, face: usize) -> TriangleSides {
        let [ea, eb, ec] = self.tri.face_edges(face);
        TriangleSides {
            a: self.lengths[ea],
            b: self.lengths[eb],
            c: self.lengths[ec],
        }
    }

    /// Inner angles of a face under the metric's geometry tag.
    pub fn face_angles(&self, face: usize) -> Result<trigeom::TriangleAngles, MeshError> {
        trigeom::angles(self.face_sides(face), self.geometry)
            .map_err(|_| MeshError::TriangleInequalityViolated(face))
    }

    /// Total area under the geometry tag.
    pub fn total_area(&self) -> Result<f64, MeshError> {
        let mut sum = 0.0;
        for f in 0..self.tri.face_count() {
            sum += trigeom::area(self.face_sides(f), self.geometry)
                .map_err(|_| MeshError::TriangleInequalityViolated(f))?;
        }
        Ok(sum)
    }
}

/// Worst-case angle statistics of a metric, against the two regularity
/// conditions: a lower bound on every inner angle and an upper bound on the
/// sum of the two angles opposite a common edge (a uniform Delaunay margin).
#[derive(Clone, Debug, serde::Serialize)]
pub struct RegularityReport {
    pub min_angle: f64,
    pub max_opposite_angle_sum: f64,
    /// Face holding the minimal inner angle.
    pub worst_angle_face: usize,
    /// Edge holding the maximal opposite-angle sum.
    pub worst_sum_edge: usize,
}

impl RegularityReport {
    pub fn is_regular(&self, eps1: f64, eps2: f64) -> bool {
        self.min_angle >= eps1 && self.max_opposite_angle_sum <= std::f64::consts::PI - eps2
    }
}

/// Exact per-geometry angle scan of the whole mesh.
pub fn check_metric(m: &MeshMetric) -> Result<RegularityReport, MeshError> {
    let tri = m.triangulation();
    let mut min_angle = f64::INFINITY;
    let mut worst_angle_face = 0;
    // Angle opposite each edge in each of its two faces.
    let mut opposite = vec![[0.0f64; 2]; tri.edge_count()];
    let mut filled = vec![0u8; tri.edge_count()];
    for f in 0..tri.face_count() {
        let ang = m.face_angles(f)?.as_array();
        for (slot, &e) in tri.face_edges(f).iter().enumerate() {
            let a = ang[slot];
            if a < min_angle {
                min_angle = a;
                worst_angle_face = f;
            }
            opposite[e][filled[e] as usize] = a;
            filled[e] += 1;
        }
    }
    let mut max_sum = f64::NEG_INFINITY;
    let mut worst_sum_edge = 0;
    for (e, pair) in opposite.iter().enumerate() {
        let s = pair[0] + pair[1];
        if s > max_sum {
            max_sum = s;
            worst_sum_edge = e;
        }
    }
    Ok(RegularityReport {
        min_angle,
        max_opposite_angle_sum: max_sum,
        worst_angle_face,
        worst_sum_edge,
    })
}

/// Faces of the n x n grid torus: vertices at lattice points of the unit
/// square with both directions identified, each cell split along the same
/// diagonal. `n >= 3` keeps the complex simplicial.
pub fn grid_torus_faces(n: usize) -> Vec<[usize; 3]> {
    assert!(n >= 3, "grid torus needs n >= 3 to stay simplicial");
    let v = |i: usize, j: usize| (i % n) + n * (j % n);
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
            faces.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    faces
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    fn tetrahedron() -> Vec<[usize; 3]> {
        vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]]
    }

    #[test]
    fn grid_torus_counts_and_genus() {
        let t = Triangulation::build(grid_torus_faces(3)).unwrap();
        assert_eq!(t.vertex_count(), 9);
        assert_eq!(t.face_count(), 18);
        assert_eq!(t.edge_count(), 27);
        assert_eq!(t.euler_characteristic(), 0);
        assert_eq!(t.genus(), 1);
        let t8 = Triangulation::build(grid_torus_faces(8)).unwrap();
        assert_eq!(t8.vertex_count(), 64);
        assert_eq!(t8.face_count(), 128);
        assert_eq!(t8.edge_count(), 192);
    }

    #[test]
    fn tetrahedron_is_genus_zero() {
        let t = Triangulation::build(tetrahedron()).unwrap();
        assert_eq!(t.euler_characteristic(), 2);
        assert_eq!(t.genus(), 0);
    }

    #[test]
    fn directed_edges_traversed_once_each_way() {
        // Already enforced by the builder; spot-check the bookkeeping on a
        // valid mesh: every edge has exactly two distinct incident faces.
        let t = Triangulation::build(grid_torus_faces(4)).unwrap();
        for e in 0..t.edge_count() {
            let [f0, f1] = t.edge_faces(e);
            assert_ne!(f0, f1);
        }
    }

    #[test]
    fn non_manifold_edge_rejected() {
        // Two faces sharing all three edges plus an extra face on one edge.
        let faces = vec![[0, 1, 2], [2, 1, 0], [0, 1, 3]];
        assert!(matches!(
            Triangulation::build(faces),
            Err(MeshError::NonManifoldEdge(0, 1, 3))
        ));
    }

    #[test]
    fn inconsistent_orientation_rejected() {
        let mut faces = grid_torus_faces(3);
        faces[0].swap(0, 1);
        assert!(matches!(
            Triangulation::build(faces),
            Err(MeshError::NonOrientable(..))
        ));
    }

    #[test]
    fn duplicate_and_degenerate_faces_rejected() {
        assert!(matches!(
            Triangulation::build(vec![[0, 1, 2], [1, 2, 0]]),
            Err(MeshError::DuplicateFace(..))
        ));
        assert!(matches!(
            Triangulation::build(vec![[0, 1, 1]]),
            Err(MeshError::DegenerateFace(..))
        ));
        // The doubled triangle is two distinct oriented faces: a valid
        // (genus 0) complex, rejected later by the solvers, not here.
        let pillow = Triangulation::build(vec![[0, 1, 2], [2, 1, 0]]).unwrap();
        assert_eq!(pillow.genus(), 0);
    }

    #[test]
    fn disconnected_rejected() {
        let mut faces = tetrahedron();
        faces.extend(tetrahedron().iter().map(|f| f.map(|v| v + 4)));
        assert!(matches!(
            Triangulation::build(faces),
            Err(MeshError::Disconnected)
        ));
    }

    #[test]
    fn equilateral_grid_torus_regularity() {
        let t = Triangulation::build(grid_torus_faces(4)).unwrap();
        let e = t.edge_count();
        let m = MeshMetric::new(t, vec![1.0; e], Geometry::Euclidean).unwrap();
        let rep = check_metric(&m).unwrap();
        assert!((rep.min_angle - PI / 3.0).abs() < 1e-12);
        assert!((rep.max_opposite_angle_sum - 2.0 * PI / 3.0).abs() < 1e-12);
        assert!(rep.is_regular(0.5, 0.5));
    }

    #[test]
    fn near_degenerate_face_fails_regularity() {
        // One face stretched to lengths (1, 1, 1.999): a tiny minimal angle.
        let t = Triangulation::build(tetrahedron()).unwrap();
        let mut lengths = vec![1.0; t.edge_count()];
        // Edge (1,2) is shared by faces [0,1,2] and [1,3,2].
        let e = t.edge_index(1, 2).unwrap();
        lengths[e] = 1.999;
        let m = MeshMetric::new(t, lengths, Geometry::Euclidean).unwrap();
        let rep = check_metric(&m).unwrap();
        assert!(rep.min_angle < 0.05);
        assert!(!rep.is_regular(0.1, 0.1));
    }

    #[test]
    fn triangle_inequality_violation_detected() {
        let t = Triangulation::build(tetrahedron()).unwrap();
        let mut lengths = vec![1.0; t.edge_count()];
        lengths[0] = 2.5;
        assert!(matches!(
            MeshMetric::new(t, lengths, Geometry::Euclidean),
            Err(MeshError::TriangleInequalityViolated(_))
        ));
    }

    #[test]
    fn hyperbolic_angles_smaller_than_euclidean() {
        let t = Triangulation::build(grid_torus_faces(4)).unwrap();
        let e = t.edge_count();
        let me = MeshMetric::new(t.clone(), vec![0.05; e], Geometry::Euclidean).unwrap();
        let mh = MeshMetric::new(t, vec![0.05; e], Geometry::Hyperbolic).unwrap();
        for f in 0..me.triangulation().face_count() {
            let ae = me.face_angles(f).unwrap().as_array();
            let ah = mh.face_angles(f).unwrap().as_array();
            for (x, y) in ae.iter().zip(ah) {
                assert!(y < *x);
            }
        }
    }
}
