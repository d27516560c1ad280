//! Discrete uniformization of closed triangle meshes of genus >= 1.
//!
//! Given a mesh with positive edge lengths, the library computes the
//! per-vertex conformal factor that scales the lengths to a globally flat
//! metric (genus 1, Euclidean vertex scaling, unit total area) or a globally
//! hyperbolic metric (genus > 1, hyperbolic vertex scaling). Around the
//! solver sit the pieces needed to validate it at desk scale: a
//! single-triangle geometry kernel for three background geometries, discrete
//! vector calculus on weighted graphs with an exact isoperimetric
//! enumeration, and analytic test surfaces (conformally flat tori, a
//! genus-2 hyperbolic octagon) with known uniformization factors.

pub mod conformal;
pub mod geodesic;
pub mod graph;
pub mod io;
pub mod linsolve;
pub mod mesh;
pub mod surfaces;
pub mod trigeom;
pub mod uniformize;

pub use mesh::{MeshError, MeshMetric, RegularityReport, Triangulation};
pub use trigeom::{Geometry, TriangleError};
