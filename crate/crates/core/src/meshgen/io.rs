//! Line-oriented text format for meshes.
//!
//! ```text
//! domain <name>
//! vertex <id> <x> <y>
//! element <id> <v0> <v1> <v2> <v3> <patch> <local> <x0> <y0> … <x3> <y3>
//! bedge <v0> <v1>
//! ```
//!
//! Element corner coordinates are redundant with the vertex table and are
//! checked on import.

use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::domain::{BuiltinDomain, PolygonDomain};
use super::mesh2d::{Element, Mesh2D, Provenance};

pub fn write_mesh(mesh: &Mesh2D) -> String {
    let mut out = String::new();
    writeln!(out, "domain {}", mesh.domain().name()).unwrap();
    for (i, p) in mesh.points().iter().enumerate() {
        writeln!(out, "vertex {i} {:e} {:e}", p[0], p[1]).unwrap();
    }
    for (i, el) in mesh.elements().iter().enumerate() {
        let v = el.vertices;
        write!(out, "element {i} {} {} {} {} {} {}", v[0], v[1], v[2], v[3], el.provenance.patch, el.provenance.local)
            .unwrap();
        for c in mesh.corners(i) {
            write!(out, " {:e} {:e}", c[0], c[1]).unwrap();
        }
        out.push('\n');
    }
    for e in mesh.boundary_edges() {
        let [a, b] = mesh.edges()[e].vertices;
        writeln!(out, "bedge {a} {b}").unwrap();
    }
    out
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::Parse { line, msg: format!("missing {what}") })?
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("bad {what}") })
}

/// Reads a mesh written by [`write_mesh`]. Only builtin domains can be
/// restored, since the boundary description is not part of the format.
pub fn read_mesh(text: &str) -> Result<Mesh2D> {
    let mut domain = None;
    let mut points = Vec::new();
    let mut elements = Vec::new();
    let mut coords = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let mut it = raw.split_whitespace();
        match it.next() {
            None => continue,
            Some("domain") => {
                let name: String = field(it.next(), line, "domain name")?;
                let b: BuiltinDomain = name.parse().map_err(|_| Error::Parse { line, msg: format!("unknown domain {name}") })?;
                domain = Some(PolygonDomain::builtin(b));
            }
            Some("vertex") => {
                let id: usize = field(it.next(), line, "vertex id")?;
                if id != points.len() {
                    return Err(Error::Parse { line, msg: "vertex ids must be consecutive".into() });
                }
                points.push([field(it.next(), line, "x")?, field(it.next(), line, "y")?]);
            }
            Some("element") => {
                let id: usize = field(it.next(), line, "element id")?;
                if id != elements.len() {
                    return Err(Error::Parse { line, msg: "element ids must be consecutive".into() });
                }
                let mut v = [0usize; 4];
                for x in v.iter_mut() {
                    *x = field(it.next(), line, "vertex index")?;
                }
                let patch = field(it.next(), line, "patch")?;
                let local = field(it.next(), line, "local index")?;
                let mut c = [[0.0; 2]; 4];
                for p in c.iter_mut() {
                    *p = [field(it.next(), line, "corner x")?, field(it.next(), line, "corner y")?];
                }
                coords.push((line, c));
                elements.push(Element { vertices: v, provenance: Provenance { patch, local } });
            }
            Some("bedge") => {}
            Some(other) => return Err(Error::Parse { line, msg: format!("unknown record '{other}'") }),
        }
    }
    let domain = domain.ok_or(Error::Parse { line: 1, msg: "missing domain record".into() })?;
    for ((line, c), el) in coords.iter().zip(&elements) {
        for k in 0..4 {
            let p: &[f64; 2] = points.get(el.vertices[k]).ok_or(Error::Parse { line: *line, msg: "vertex out of range".into() })?;
            if (p[0] - c[k][0]).abs() + (p[1] - c[k][1]).abs() > 1e-12 * (1.0 + p[0].abs() + p[1].abs()) {
                return Err(Error::Parse { line: *line, msg: "corner coordinates disagree with vertex table".into() });
            }
        }
    }
    Mesh2D::from_parts(domain, points, elements, vec![])
}
