//! Mesh file formats.
//!
//! TML ("triangle mesh with lengths") is the native text format:
//!
//! ```text
//! tml 1
//! V F
//! i j k        (F face lines, 0-based, orientation-consistent)
//! i j length   (E edge lines in canonical order: i < j, sorted)
//! ```
//!
//! Whitespace-separated; `#` starts a comment anywhere on a line. The writer
//! emits canonical form with shortest round-trip float formatting, so
//! write(parse(f)) is the identity on canonical files.
//!
//! The OFF reader takes standard OFF with 3D vertex coordinates and
//! triangular faces; edge lengths are chordal Euclidean distances, an
//! approximation of geodesic lengths that is adequate for dense meshes.

use crate::mesh::{MeshError, MeshMetric, Triangulation};
use crate::trigeom::Geometry;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse { line, message: message.into() }
}

/// Token stream over non-comment content, tracking line numbers.
struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut items = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let content = raw.split('#').next().unwrap_or("");
            for tok in content.split_whitespace() {
                items.push((ln + 1, tok));
            }
        }
        Self { items, pos: 0 }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str), IoError> {
        if self.pos < self.items.len() {
            let item = self.items[self.pos];
            self.pos += 1;
            Ok(item)
        } else {
            let line = self.items.last().map_or(0, |&(l, _)| l);
            Err(parse_err(line, format!("unexpected end of input, expected {what}")))
        }
    }

    fn usize(&mut self, what: &str) -> Result<usize, IoError> {
        let (line, tok) = self.next(what)?;
        tok.parse()
            .map_err(|_| parse_err(line, format!("expected {what}, got '{tok}'")))
    }

    fn f64(&mut self, what: &str) -> Result<f64, IoError> {
        let (line, tok) = self.next(what)?;
        tok.parse()
            .map_err(|_| parse_err(line, format!("expected {what}, got '{tok}'")))
    }

    fn finished(&self) -> bool {
        self.pos >= self.items.len()
    }
}

/// Parses TML text into a validated metric under the given geometry tag.
pub fn parse_tml(text: &str, geometry: Geometry) -> Result<MeshMetric, IoError> {
    let (tri, lengths) = parse_tml_raw(text)?;
    Ok(MeshMetric::new(tri, lengths, geometry)?)
}

/// Parses TML text into the triangulation and raw edge lengths, without
/// choosing a geometry tag.
pub fn parse_tml_raw(text: &str) -> Result<(Triangulation, Vec<f64>), IoError> {
    let mut t = Tokens::new(text);
    let (line, magic) = t.next("header 'tml'")?;
    if magic != "tml" {
        return Err(parse_err(line, format!("expected header 'tml', got '{magic}'")));
    }
    let version = t.usize("format version")?;
    if version != 1 {
        return Err(parse_err(line, format!("unsupported tml version {version}")));
    }
    let nv = t.usize("vertex count")?;
    let nf = t.usize("face count")?;
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let i = t.usize("face vertex")?;
        let j = t.usize("face vertex")?;
        let k = t.usize("face vertex")?;
        faces.push([i, j, k]);
    }
    for f in &faces {
        for &v in f {
            if v >= nv {
                return Err(parse_err(0, format!("face vertex {v} out of range (V = {nv})")));
            }
        }
    }
    let tri = Triangulation::build(faces)?;
    if tri.vertex_count() != nv {
        return Err(parse_err(
            0,
            format!("header says {nv} vertices, faces reference {}", tri.vertex_count()),
        ));
    }
    let mut lengths = vec![f64::NAN; tri.edge_count()];
    for _ in 0..tri.edge_count() {
        let i = t.usize("edge endpoint")?;
        let j = t.usize("edge endpoint")?;
        let l = t.f64("edge length")?;
        let e = tri
            .edge_index(i, j)
            .ok_or_else(|| parse_err(0, format!("({i}, {j}) is not an edge of the mesh")))?;
        if !lengths[e].is_nan() {
            return Err(parse_err(0, format!("duplicate length for edge ({i}, {j})")));
        }
        lengths[e] = l;
    }
    if !t.finished() {
        let (line, tok) = t.next("end of file").unwrap();
        return Err(parse_err(line, format!("trailing content '{tok}'")));
    }
    Ok((tri, lengths))
}

/// Canonical TML text for a metric.
pub fn write_tml(m: &MeshMetric) -> String {
    let tri = m.triangulation();
    let mut out = String::new();
    out.push_str("tml 1\n");
    let _ = writeln!(out, "{} {}", tri.vertex_count(), tri.face_count());
    for f in tri.faces() {
        let _ = writeln!(out, "{} {} {}", f[0], f[1], f[2]);
    }
    for (e, &(i, j)) in tri.edges().iter().enumerate() {
        let _ = writeln!(out, "{} {} {}", i, j, m.lengths()[e]);
    }
    out
}

/// Reads standard OFF with 3D vertex coordinates and triangular faces,
/// producing chordal edge lengths.
pub fn parse_off(text: &str, geometry: Geometry) -> Result<MeshMetric, IoError> {
    let mut t = Tokens::new(text);
    let (line, magic) = t.next("header 'OFF'")?;
    if magic != "OFF" {
        return Err(parse_err(line, format!("expected header 'OFF', got '{magic}'")));
    }
    let nv = t.usize("vertex count")?;
    let nf = t.usize("face count")?;
    let _ne = t.usize("edge count")?;
    let mut coords = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = t.f64("x coordinate")?;
        let y = t.f64("y coordinate")?;
        let z = t.f64("z coordinate")?;
        coords.push([x, y, z]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, arity) = {
            let peek = t.items.get(t.pos).map_or(0, |&(l, _)| l);
            (peek, t.usize("face arity")?)
        };
        if arity != 3 {
            return Err(parse_err(line, format!("only triangular faces supported, got {arity}")));
        }
        let i = t.usize("face vertex")?;
        let j = t.usize("face vertex")?;
        let k = t.usize("face vertex")?;
        for v in [i, j, k] {
            if v >= nv {
                return Err(parse_err(line, format!("face vertex {v} out of range")));
            }
        }
        faces.push([i, j, k]);
    }
    let tri = Triangulation::build(faces)?;
    let lengths: Vec<f64> = tri
        .edges()
        .iter()
        .map(|&(i, j)| {
            let (p, q) = (coords[i], coords[j]);
            let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
        })
        .collect();
    Ok(MeshMetric::new(tri, lengths, geometry)?)
}
