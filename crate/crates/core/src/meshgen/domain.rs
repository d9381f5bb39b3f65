use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinDomain {
    Square,
    Lshape,
    Slit,
}

impl fmt::Display for BuiltinDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuiltinDomain::Square => "square",
            BuiltinDomain::Lshape => "lshape",
            BuiltinDomain::Slit => "slit",
        })
    }
}

impl FromStr for BuiltinDomain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Self::Square),
            "lshape" => Ok(Self::Lshape),
            "slit" => Ok(Self::Slit),
            other => Err(Error::UnsupportedDomain(format!("unknown builtin domain '{other}'"))),
        }
    }
}

/// A polygon given by vertex loops.
///
/// Edges run counterclockwise around the domain. A slit is a pair of
/// edges traversed in both directions, with its points on the outer
/// boundary listed twice; vertices on the slit are duplicated in meshes so
/// that the two sides stay disconnected.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonDomain {
    pub vertices: Vec<Point>,
    pub edges: Vec<[usize; 2]>,
    pub slit_edges: Vec<usize>,
    pub builtin: Option<BuiltinDomain>,
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Whether `p` lies on the closed segment `[a, b]` up to `tol`.
pub(crate) fn on_segment(p: Point, a: Point, b: Point, tol: f64) -> bool {
    let ab = sub(b, a);
    let len = ab[0].hypot(ab[1]);
    let ap = sub(p, a);
    if (cross(ab, ap) / len).abs() > tol {
        return false;
    }
    let t = (ap[0] * ab[0] + ap[1] * ab[1]) / len;
    t >= -tol && t <= len + tol
}

impl PolygonDomain {
    pub fn new(vertices: Vec<Point>, edges: Vec<[usize; 2]>, slit_edges: Vec<usize>) -> Result<Self> {
        let d = Self { vertices, edges, slit_edges, builtin: None };
        d.validate()?;
        Ok(d)
    }

    /// A simple polygon from its counterclockwise vertex list.
    pub fn from_polygon(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        let edges = (0..n).map(|i| [i, (i + 1) % n]).collect();
        Self::new(vertices, edges, vec![])
    }

    pub fn square() -> Self {
        let mut d = Self::from_polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        d.builtin = Some(BuiltinDomain::Square);
        d
    }

    pub fn lshape() -> Self {
        let mut d = Self::from_polygon(vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [-1.0, 1.0],
            [-1.0, -1.0],
            [0.0, -1.0],
        ])
        .unwrap();
        d.builtin = Some(BuiltinDomain::Lshape);
        d
    }

    /// `(-1, 1)²` minus `(-1, 0] × {0}`.
    pub fn slit() -> Self {
        let vertices = vec![
            [-1.0, -1.0],
            [1.0, -1.0],
            [1.0, 1.0],
            [-1.0, 1.0],
            [-1.0, 0.0],
            [0.0, 0.0],
            [-1.0, 0.0],
        ];
        let edges = (0..7).map(|i| [i, (i + 1) % 7]).collect();
        let mut d = Self::new(vertices, edges, vec![4, 5]).unwrap();
        d.builtin = Some(BuiltinDomain::Slit);
        d
    }

    pub fn builtin(b: BuiltinDomain) -> Self {
        match b {
            BuiltinDomain::Square => Self::square(),
            BuiltinDomain::Lshape => Self::lshape(),
            BuiltinDomain::Slit => Self::slit(),
        }
    }

    pub fn name(&self) -> String {
        self.builtin.map_or_else(|| "custom".to_string(), |b| b.to_string())
    }

    fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if nv < 3 || self.edges.len() < 3 {
            return Err(Error::Geometry("a polygon needs at least three edges".into()));
        }
        let mut outgoing = vec![0usize; nv];
        let mut incoming = vec![0usize; nv];
        for &[a, b] in &self.edges {
            if a >= nv || b >= nv {
                return Err(Error::Geometry(format!("edge ({a}, {b}) references a missing vertex")));
            }
            if dist(self.vertices[a], self.vertices[b]) == 0.0 {
                return Err(Error::Geometry(format!("edge ({a}, {b}) has zero length")));
            }
            outgoing[a] += 1;
            incoming[b] += 1;
        }
        if outgoing.iter().chain(&incoming).any(|&c| c != 1) {
            return Err(Error::Geometry("edges do not form closed loops".into()));
        }
        if self.slit_edges.iter().any(|&e| e >= self.edges.len()) {
            return Err(Error::Geometry("slit edge index out of range".into()));
        }
        if !(self.signed_area() > 0.0) {
            return Err(Error::Geometry("boundary loops must run counterclockwise".into()));
        }
        // proper crossings between non-slit edges
        for i in 0..self.edges.len() {
            for j in i + 1..self.edges.len() {
                if self.slit_edges.contains(&i) || self.slit_edges.contains(&j) {
                    continue;
                }
                let [a, b] = self.segment(i);
                let [c, d] = self.segment(j);
                let d1 = cross(sub(b, a), sub(c, a));
                let d2 = cross(sub(b, a), sub(d, a));
                let d3 = cross(sub(d, c), sub(a, c));
                let d4 = cross(sub(d, c), sub(b, c));
                if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                    return Err(Error::Geometry(format!("edges {i} and {j} intersect")));
                }
            }
        }
        Ok(())
    }

    pub fn segment(&self, e: usize) -> [Point; 2] {
        let [a, b] = self.edges[e];
        [self.vertices[a], self.vertices[b]]
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * self.edges.iter().map(|&[a, b]| cross(self.vertices[a], self.vertices[b])).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn is_axis_aligned(&self) -> bool {
        (0..self.edges.len()).all(|e| {
            let [a, b] = self.segment(e);
            a[0] == b[0] || a[1] == b[1]
        })
    }

    pub fn shortest_edge(&self) -> f64 {
        (0..self.edges.len()).map(|e| {
            let [a, b] = self.segment(e);
            dist(a, b)
        }).fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_box(&self) -> [Point; 2] {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        [lo, hi]
    }

    pub fn diameter(&self) -> f64 {
        let [lo, hi] = self.bounding_box();
        dist(lo, hi)
    }

    /// Sorted distinct vertex coordinates along axis `k`.
    pub fn coordinate_lines(&self, k: usize) -> Vec<f64> {
        let mut c: Vec<f64> = self.vertices.iter().map(|v| v[k]).collect();
        c.sort_by(f64::total_cmp);
        c.dedup();
        c
    }

    /// Open-interior test (even–odd rule; slit edges cancel out).
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for e in 0..self.edges.len() {
            let [a, b] = self.segment(e);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if x > p[0] {
                    inside = !inside;
                }
            }
        }
        inside && !self.on_boundary(p, 1e-14 * self.diameter())
    }

    pub fn on_boundary(&self, p: Point, tol: f64) -> bool {
        (0..self.edges.len()).any(|e| {
            let [a, b] = self.segment(e);
            on_segment(p, a, b, tol)
        })
    }

    /// Whether the segment `[p, q]` is contained in a single boundary edge.
    pub fn segment_on_boundary(&self, p: Point, q: Point, tol: f64) -> bool {
        (0..self.edges.len()).any(|e| {
            let [a, b] = self.segment(e);
            on_segment(p, a, b, tol) && on_segment(q, a, b, tol)
        })
    }

    pub fn is_vertex(&self, p: Point, tol: f64) -> bool {
        self.vertices.iter().any(|&v| dist(v, p) <= tol)
    }

    fn is_slit_tip(&self, v: usize) -> bool {
        let mut n = 0;
        for &e in &self.slit_edges {
            if self.edges[e].contains(&v) {
                n += 1;
            }
        }
        n == 2
    }

    /// For a point on a slit (tips excluded), the side on which `interior`
    /// lies: 1 left of the slit segment, 2 right. `None` elsewhere.
    pub fn slit_side(&self, p: Point, interior: Point, tol: f64) -> Option<u8> {
        for &e in &self.slit_edges {
            let [ia, ib] = self.edges[e];
            let [a, b] = self.segment(e);
            if !on_segment(p, a, b, tol) {
                continue;
            }
            if (self.is_slit_tip(ia) && dist(p, a) <= tol) || (self.is_slit_tip(ib) && dist(p, b) <= tol) {
                return None;
            }
            return Some(if cross(sub(b, a), sub(interior, a)) > 0.0 { 1 } else { 2 });
        }
        None
    }

    pub fn has_slit(&self) -> bool {
        !self.slit_edges.is_empty()
    }
}
