use std::collections::HashMap;

use crate::error::{Error, Result};

use super::builder::MacroPatch;
use super::domain::{dist, on_segment, Point, PolygonDomain};

/// Origin of an element: macro patch index and position within the patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub patch: usize,
    pub local: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    /// Counterclockwise; local vertex `k` is the image of reference corner
    /// `(-1,-1), (1,-1), (1,1), (-1,1)` respectively.
    pub vertices: [usize; 4],
    pub provenance: Provenance,
}

/// Local edges as (start, end) local vertices. Edges 0 and 2 are
/// parametrised by `ξ`, edges 1 and 3 by `η`, all in increasing direction.
pub const LOCAL_EDGES: [[usize; 2]; 4] = [[0, 1], [1, 2], [3, 2], [0, 3]];

#[derive(Debug, Clone, PartialEq)]
pub struct MeshEdge {
    /// Global vertices, lower index first.
    pub vertices: [usize; 2],
    /// Elements using the edge, with their local edge index.
    pub elements: Vec<(usize, u8)>,
}

/// Conforming quadrilateral mesh of a polygon.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    domain: PolygonDomain,
    points: Vec<Point>,
    elements: Vec<Element>,
    edges: Vec<MeshEdge>,
    element_edges: Vec<[usize; 4]>,
    bboxes: Vec<[Point; 2]>,
    patches: Vec<MacroPatch>,
}

fn shape(xi: f64, eta: f64) -> [f64; 4] {
    [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ]
}

impl Mesh2D {
    /// Builds adjacency; fails on elements with a non-positive Jacobian.
    pub fn from_parts(
        domain: PolygonDomain,
        points: Vec<Point>,
        elements: Vec<Element>,
        patches: Vec<MacroPatch>,
    ) -> Result<Self> {
        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges: Vec<MeshEdge> = Vec::new();
        let mut element_edges = Vec::with_capacity(elements.len());
        let mut bboxes = Vec::with_capacity(elements.len());
        for (e, el) in elements.iter().enumerate() {
            if el.vertices.iter().any(|&v| v >= points.len()) {
                return Err(Error::Geometry(format!("element {e} references a missing vertex")));
            }
            let c = el.vertices.map(|v| points[v]);
            // bilinear maps of convex quads are bijective iff the corner
            // Jacobians are positive
            for k in 0..4 {
                let a = c[k];
                let b = c[(k + 1) % 4];
                let z = c[(k + 3) % 4];
                let det = (b[0] - a[0]) * (z[1] - a[1]) - (b[1] - a[1]) * (z[0] - a[0]);
                if !(det > 0.0) {
                    return Err(Error::Geometry(format!("element {e} is degenerate or clockwise at corner {k}")));
                }
            }
            let mut ee = [0usize; 4];
            for (k, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                let (va, vb) = (el.vertices[*a], el.vertices[*b]);
                let key = [va.min(vb), va.max(vb)];
                let idx = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(MeshEdge { vertices: key, elements: Vec::new() });
                    edges.len() - 1
                });
                edges[idx].elements.push((e, k as u8));
                ee[k] = idx;
            }
            element_edges.push(ee);
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for p in c {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            bboxes.push([lo, hi]);
        }
        Ok(Self { domain, points, elements, edges, element_edges, bboxes, patches })
    }

    pub fn domain(&self) -> &PolygonDomain {
        &self.domain
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn edges(&self) -> &[MeshEdge] {
        &self.edges
    }

    pub fn element_edges(&self, e: usize) -> [usize; 4] {
        self.element_edges[e]
    }

    pub fn patches(&self) -> &[MacroPatch] {
        &self.patches
    }

    pub fn corners(&self, e: usize) -> [Point; 4] {
        self.elements[e].vertices.map(|v| self.points[v])
    }

    /// Edges with a single adjacent element. On a conforming mesh these are
    /// exactly the edges on the domain boundary, each slit side separately.
    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.edges[edge].elements.len() == 1
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&i| self.is_boundary_edge(i))
    }

    /// Bilinear element map from `[-1, 1]²`.
    pub fn map(&self, e: usize, xi: f64, eta: f64) -> Point {
        let c = self.corners(e);
        let n = shape(xi, eta);
        let mut p = [0.0; 2];
        for a in 0..4 {
            p[0] += n[a] * c[a][0];
            p[1] += n[a] * c[a][1];
        }
        p
    }

    /// `[[∂x/∂ξ, ∂x/∂η], [∂y/∂ξ, ∂y/∂η]]`.
    pub fn jacobian(&self, e: usize, xi: f64, eta: f64) -> [[f64; 2]; 2] {
        jacobian_of(&self.corners(e), xi, eta)
    }

    pub fn element_area(&self, e: usize) -> f64 {
        // half the cross product of the diagonals; differences keep tiny
        // elements far from the origin accurate
        let c = self.corners(e);
        let d1 = [c[2][0] - c[0][0], c[2][1] - c[0][1]];
        let d2 = [c[3][0] - c[1][0], c[3][1] - c[1][1]];
        0.5 * (d1[0] * d2[1] - d1[1] * d2[0])
    }

    pub fn area(&self) -> f64 {
        let mut s = crate::special::KahanSum::new();
        for e in 0..self.elements.len() {
            s.add(self.element_area(e));
        }
        s.value()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|ed| dist(self.points[ed.vertices[0]], self.points[ed.vertices[1]]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Element and reference coordinates of a point of the domain closure.
    pub fn locate(&self, p: Point) -> Result<(usize, f64, f64)> {
        let scale = self.domain.diameter();
        for (e, bb) in self.bboxes.iter().enumerate() {
            let tol = 1e-12 * scale;
            if p[0] < bb[0][0] - tol || p[0] > bb[1][0] + tol || p[1] < bb[0][1] - tol || p[1] > bb[1][1] + tol {
                continue;
            }
            if let Some((xi, eta)) = self.inverse_map(e, p) {
                return Ok((e, xi, eta));
            }
        }
        Err(Error::Location { x: p[0], y: p[1] })
    }

    fn inverse_map(&self, e: usize, p: Point) -> Option<(f64, f64)> {
        let c = self.corners(e);
        let (mut xi, mut eta) = (0.0, 0.0);
        for _ in 0..60 {
            let q = self.map(e, xi, eta);
            let r = [p[0] - q[0], p[1] - q[1]];
            let j = jacobian_of(&c, xi, eta);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let dxi = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
            let deta = (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
            xi += dxi;
            eta += deta;
            if dxi.abs() + deta.abs() < 1e-15 {
                break;
            }
        }
        let lim = 1.0 + 1e-10;
        (xi.abs() <= lim && eta.abs() <= lim).then(|| (xi.clamp(-1.0, 1.0), eta.clamp(-1.0, 1.0)))
    }
}

pub(crate) fn jacobian_of(c: &[Point; 4], xi: f64, eta: f64) -> [[f64; 2]; 2] {
    let mut j = [[0.0; 2]; 2];
    for k in 0..2 {
        j[k][0] = 0.25 * ((1.0 - eta) * (c[1][k] - c[0][k]) + (1.0 + eta) * (c[2][k] - c[3][k]));
        j[k][1] = 0.25 * ((1.0 - xi) * (c[3][k] - c[0][k]) + (1.0 + xi) * (c[2][k] - c[1][k]));
    }
    j
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformityViolation {
    pub edge: [Point; 2],
    /// An overlapping edge of a neighbouring element, when one exists.
    pub other: Option<[Point; 2]>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConformityReport {
    pub violations: Vec<ConformityViolation>,
}

impl ConformityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every interior edge must be shared by exactly two elements; edges with a
/// single element must lie on the boundary. T-junctions are reported with
/// the overlapping edge.
pub fn check_conformity(mesh: &Mesh2D) -> ConformityReport {
    let tol = 1e-10 * mesh.domain.diameter();
    let seg = |ed: &MeshEdge| [mesh.points[ed.vertices[0]], mesh.points[ed.vertices[1]]];
    let mut violations = Vec::new();
    for ed in &mesh.edges {
        let [a, b] = seg(ed);
        if ed.elements.len() > 2 {
            violations.push(ConformityViolation {
                edge: [a, b],
                other: None,
                reason: format!("edge shared by {} elements", ed.elements.len()),
            });
        } else if ed.elements.len() == 1 && !mesh.domain.segment_on_boundary(a, b, tol) {
            let other = mesh
                .edges
                .iter()
                .filter(|o| o.vertices != ed.vertices)
                .map(seg)
                .find(|&[c, d]| {
                    let collinear = on_segment(c, a, b, tol) as u8
                        + on_segment(d, a, b, tol) as u8
                        + on_segment(a, c, d, tol) as u8
                        + on_segment(b, c, d, tol) as u8;
                    collinear >= 2 && dist(c, d) > tol && !(dist(a, c) <= tol && dist(b, d) <= tol)
                });
            violations.push(ConformityViolation {
                edge: [a, b],
                other,
                reason: "interior edge with a single element (hanging node)".into(),
            });
        }
    }
    ConformityReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(v: [usize; 4]) -> Element {
        Element { vertices: v, provenance: Provenance { patch: 0, local: 0 } }
    }

    #[test]
    fn t_junction_is_reported() {
        // left: one unit cell; right: two half cells -> hanging node at (1, 0.5)
        let pts = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [2.0, 0.0],
            [0.0, 1.0],
            [1.0, 1.0],
            [2.0, 1.0],
            [1.0, 0.5],
            [2.0, 0.5],
        ];
        let dom = PolygonDomain::from_polygon(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]]).unwrap();
        let m = Mesh2D::from_parts(dom, pts, vec![el([0, 1, 4, 3]), el([1, 2, 7, 6]), el([6, 7, 5, 4])], vec![])
            .unwrap();
        let r = check_conformity(&m);
        assert!(!r.passed());
        assert!(r.violations.iter().any(|v| v.other.is_some()));
    }

    #[test]
    fn clockwise_element_rejected() {
        let dom = PolygonDomain::square();
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(Mesh2D::from_parts(dom, pts, vec![el([0, 3, 2, 1])], vec![]).is_err());
    }

    #[test]
    fn locate_and_map_round_trip() {
        let dom = PolygonDomain::square();
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 0.6]];
        let m = Mesh2D::from_parts(dom, pts, vec![el([0, 1, 2, 3])], vec![]).unwrap();
        let p = m.map(0, 0.3, -0.7);
        let (e, xi, eta) = m.locate(p).unwrap();
        assert_eq!(e, 0);
        assert!((xi - 0.3).abs() < 1e-13 && (eta + 0.7).abs() < 1e-13);
        assert!(matches!(m.locate([0.1, 0.9]), Err(Error::Location { .. })));
    }
}
