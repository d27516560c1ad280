//! Independent shortest-path oracle for the geodesic solver: Dijkstra on a
//! dense graph over a 10x finer lattice, with Simpson-rule edge weights.
//! The graph length overestimates the true distance by the directional
//! quantization of its neighbourhood stencil (about 4e-5 relative for
//! coprime offsets up to Chebyshev radius 8), which is what makes the 1e-4
//! agreement check meaningful.

use duni_core::geodesic::{torus_distance, ConformalFactor2d, GeodesicSolverOptions};
use duni_core::surfaces::ConformalTorus;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

struct State {
    dist: f64,
    node: usize,
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist
    }
}
impl Eq for State {}
impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap via reversed comparison.
        other.dist.partial_cmp(&self.dist).unwrap()
    }
}
impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// All coprime direction offsets within Chebyshev radius `r`.
fn stencil(r: i32) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for dx in -r..=r {
        for dy in -r..=r {
            if (dx, dy) == (0, 0) {
                continue;
            }
            if gcd(dx.unsigned_abs(), dy.unsigned_abs()) == 1 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Simpson-rule length of the straight segment from `p` to `q` in the
/// metric `e^{2 phi} delta`.
fn segment_length(torus: &ConformalTorus, p: [f64; 2], q: [f64; 2]) -> f64 {
    let chord = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
    let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    chord / 6.0 * (torus.phi(p).exp() + 4.0 * torus.phi(mid).exp() + torus.phi(q).exp())
}

/// Single-source distances on the fine periodic lattice.
fn dijkstra(torus: &ConformalTorus, fine: usize, source: usize) -> Vec<f64> {
    let offsets = stencil(8);
    let pos = |v: usize| -> [f64; 2] {
        [(v % fine) as f64 / fine as f64, (v / fine) as f64 / fine as f64]
    };
    let mut dist = vec![f64::INFINITY; fine * fine];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(State { dist: 0.0, node: source });
    while let Some(State { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        let (x, y) = (node % fine, node / fine);
        let p = pos(node);
        for &(dx, dy) in &offsets {
            let nx = (x as i32 + dx).rem_euclid(fine as i32) as usize;
            let ny = (y as i32 + dy).rem_euclid(fine as i32) as usize;
            let next = nx + fine * ny;
            // Work in the cover so the segment is genuinely straight.
            let q = [
                p[0] + dx as f64 / fine as f64,
                p[1] + dy as f64 / fine as f64,
            ];
            let nd = d + segment_length(torus, p, q);
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(State { dist: nd, node: next });
            }
        }
    }
    dist
}

#[test]
fn polyline_solver_matches_fine_graph_dijkstra() {
    let torus = ConformalTorus::new(0.05, 0.0);
    let n = 16;
    let fine = 10 * n;
    let opts = GeodesicSolverOptions::default();
    // A sample of coarse lattice vertices; each Dijkstra covers all edges
    // incident to its source.
    let sources = [(0usize, 0usize), (5, 7), (11, 3), (9, 14)];
    let mut checked = 0;
    let mut worst = 0.0f64;
    for (si, sj) in sources {
        let fine_source = 10 * si + fine * (10 * sj);
        let dist = dijkstra(&torus, fine, fine_source);
        let p = [si as f64 / n as f64, sj as f64 / n as f64];
        // Lattice neighbours in the mesh: axis and same-diagonal steps.
        for (di, dj) in [(1i32, 0i32), (0, 1), (1, 1)] {
            for sign in [1i32, -1] {
                let ti = (si as i32 + sign * di).rem_euclid(n as i32) as usize;
                let tj = (sj as i32 + sign * dj).rem_euclid(n as i32) as usize;
                let q = [ti as f64 / n as f64, tj as f64 / n as f64];
                let solver = torus_distance(&torus, p, q, &opts).unwrap();
                let oracle = dist[10 * ti + fine * (10 * tj)];
                let rel = (solver - oracle).abs() / oracle;
                worst = worst.max(rel);
                assert!(
                    rel <= 1e-4,
                    "edge ({si},{sj})->({ti},{tj}): solver {solver}, dijkstra {oracle}, rel {rel}"
                );
                checked += 1;
            }
        }
    }
    println!("checked {checked} edges against the fine-graph oracle, worst relative gap {worst:.2e}");
    assert_eq!(checked, 24);
}
