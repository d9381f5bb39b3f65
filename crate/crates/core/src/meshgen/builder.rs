use std::collections::HashMap;

use crate::error::{param_err, Error, Result};

use super::domain::{dist, on_segment, Point, PolygonDomain};
use super::mesh2d::{check_conformity, Element, Mesh2D, Provenance};
use super::pattern::{geometric_breaks, grid_quads, refine_pattern, Pattern, RefQuad};

/// A macro cell with its refinement pattern and the affine map
/// `x = origin + x̂ ex + ŷ ey` from the reference square.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroPatch {
    /// Counterclockwise, starting at the lower-left corner.
    pub corners: [Point; 4],
    pub pattern: Pattern,
    /// Local edge `k` runs from corner `k` to corner `k + 1`.
    pub boundary_edges: [bool; 4],
    pub boundary_corners: [bool; 4],
    pub origin: Point,
    pub ex: Point,
    pub ey: Point,
    /// Reference grid lines of tensor-product patterns, including lines
    /// added to restore conformity with refined neighbours.
    grid: Option<(Vec<f64>, Vec<f64>)>,
}

impl MacroPatch {
    pub fn map(&self, r: Point) -> Point {
        [
            self.origin[0] + r[0] * self.ex[0] + r[1] * self.ey[0],
            self.origin[1] + r[0] * self.ex[1] + r[1] * self.ey[1],
        ]
    }

    fn inverse(&self, p: Point) -> Point {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1]];
        let nx = self.ex[0] * self.ex[0] + self.ex[1] * self.ex[1];
        let ny = self.ey[0] * self.ey[0] + self.ey[1] * self.ey[1];
        [(d[0] * self.ex[0] + d[1] * self.ex[1]) / nx, (d[0] * self.ey[0] + d[1] * self.ey[1]) / ny]
    }

    fn reference_quads(&self, sigma: f64) -> Result<Vec<RefQuad>> {
        match &self.grid {
            Some((xs, ys)) => Ok(grid_quads(xs, ys)),
            None => refine_pattern(self.pattern, sigma),
        }
    }
}

/// Refinement depths used when assigning patterns to macro cells.
#[derive(Debug, Clone, Copy)]
struct Depths {
    /// Boundary-layer layers.
    layers: usize,
    /// Corner levels at domain vertices.
    levels: usize,
}

/// Macro cells of an axis-aligned domain: the tensor grid through all
/// vertex coordinates and the lines at distance `d` from them, keeping the
/// cells whose centre lies inside. Cells of width `d` then line every
/// boundary edge.
fn strip_layout(domain: &PolygonDomain, d: f64) -> Vec<[Point; 4]> {
    let lines = |k: usize| {
        let base = domain.coordinate_lines(k);
        let (lo, hi) = (base[0], *base.last().unwrap());
        let mut all = base.clone();
        for &c in &base {
            for x in [c - d, c + d] {
                if x > lo && x < hi {
                    all.push(x);
                }
            }
        }
        all.sort_by(f64::total_cmp);
        all.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (hi - lo));
        all
    };
    let (xs, ys) = (lines(0), lines(1));
    let mut cells = Vec::new();
    for j in 0..ys.len() - 1 {
        for i in 0..xs.len() - 1 {
            let c = [0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])];
            if domain.contains(c) {
                cells.push([[xs[i], ys[j]], [xs[i + 1], ys[j]], [xs[i + 1], ys[j + 1]], [xs[i], ys[j + 1]]]);
            }
        }
    }
    cells
}

fn minimum_line_gap(domain: &PolygonDomain) -> f64 {
    let mut gap = f64::INFINITY;
    for k in 0..2 {
        for w in domain.coordinate_lines(k).windows(2) {
            gap = gap.min(w[1] - w[0]);
        }
    }
    gap
}

fn vsub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

/// Pattern and orientation of a macro cell from its boundary contact:
/// interior cells are trivial, cells touching at one point get corner
/// rings, cells on one boundary edge get a boundary layer (ending in a
/// vertex: mixed), cells on two adjacent boundary edges the tensor pattern.
fn assign(domain: &PolygonDomain, corners: [Point; 4], depth: Depths, tol: f64) -> Result<MacroPatch> {
    let mut boundary_edges = [false; 4];
    let mut boundary_corners = [false; 4];
    let mut vertex = [false; 4];
    for k in 0..4 {
        boundary_edges[k] = domain.segment_on_boundary(corners[k], corners[(k + 1) % 4], tol);
        boundary_corners[k] = domain.on_boundary(corners[k], tol);
        vertex[k] = domain.is_vertex(corners[k], tol);
    }
    let at = |k: usize| corners[k % 4];
    let oriented = |o: usize, x: usize, y: usize| (at(o), vsub(at(x), at(o)), vsub(at(y), at(o)));
    let nb = boundary_edges.iter().filter(|&&b| b).count();
    let edge_corners = |k: usize| [k, (k + 1) % 4];
    let (pattern, (origin, ex, ey)) = match nb {
        0 => {
            let touching: Vec<usize> = (0..4).filter(|&k| boundary_corners[k]).collect();
            match touching.as_slice() {
                [] => (Pattern::Trivial, oriented(0, 1, 3)),
                &[k] => {
                    let levels = if vertex[k] { depth.levels } else { depth.layers };
                    (Pattern::Corner { levels }, oriented(k, k + 1, k + 3))
                }
                _ => {
                    return Err(Error::Conformity(format!(
                        "macro cell {corners:?} touches the boundary in several isolated points"
                    )))
                }
            }
        }
        1 => {
            let j = boundary_edges.iter().position(|&b| b).unwrap();
            let [a, b] = edge_corners(j);
            if (0..4).any(|k| boundary_corners[k] && k != a && k != b) {
                return Err(Error::Conformity(format!(
                    "macro cell {corners:?} touches the boundary away from its boundary edge"
                )));
            }
            match (vertex[a], vertex[b]) {
                (false, false) => (Pattern::BoundaryLayer { layers: depth.layers }, oriented(a, b, a + 3)),
                (true, false) => {
                    (Pattern::Mixed { layers: depth.layers, levels: depth.levels }, oriented(a, b, a + 3))
                }
                (false, true) => {
                    (Pattern::Mixed { layers: depth.layers, levels: depth.levels }, oriented(b, a, b + 1))
                }
                (true, true) => {
                    return Err(Error::Conformity(format!(
                        "macro cell {corners:?} spans a whole boundary edge; the layout is too coarse"
                    )))
                }
            }
        }
        2 => {
            let shared = (0..4).find(|&k| boundary_edges[k] && boundary_edges[(k + 3) % 4]);
            match shared {
                Some(k) if vertex[k] => {
                    (Pattern::Tensor { layers: depth.layers, levels: depth.levels }, oriented(k, k + 1, k + 3))
                }
                _ => {
                    return Err(Error::Conformity(format!(
                        "macro cell {corners:?} has two boundary edges not meeting at a vertex"
                    )))
                }
            }
        }
        _ => {
            return Err(Error::Conformity(format!("macro cell {corners:?} has {nb} boundary edges")));
        }
    };
    let grid = match pattern {
        Pattern::Trivial => Some((vec![0.0, 1.0], vec![0.0, 1.0])),
        _ => None,
    };
    Ok(MacroPatch { corners, pattern, boundary_edges, boundary_corners, origin, ex, ey, grid })
}

/// Coordinates along the shared edge (axis `axis`) of all element vertices
/// of `patch` on the segment `[a, b]`.
fn edge_nodes(patch: &MacroPatch, sigma: f64, a: Point, b: Point, axis: usize, tol: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for q in patch.reference_quads(sigma)? {
        for r in q {
            let p = patch.map(r);
            if on_segment(p, a, b, tol) {
                out.push(p[axis]);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() <= tol);
    Ok(out)
}

/// Adds grid lines to tensor-product patches until every shared macro edge
/// carries the same nodes from both sides.
fn close(domain: &PolygonDomain, patches: &mut [MacroPatch], sigma: f64, tol: f64) -> Result<()> {
    for p in patches.iter_mut() {
        if let Pattern::BoundaryLayer { layers } = p.pattern {
            p.grid = Some((vec![0.0, 1.0], geometric_breaks(layers, sigma)));
        }
    }
    let mut shared = Vec::new();
    for i in 0..patches.len() {
        for j in i + 1..patches.len() {
            for k in 0..4 {
                let (a, b) = (patches[i].corners[k], patches[i].corners[(k + 1) % 4]);
                let hit = (0..4).any(|l| {
                    let (c, d) = (patches[j].corners[l], patches[j].corners[(l + 1) % 4]);
                    dist(a, d) <= tol && dist(b, c) <= tol
                });
                // cells across a slit touch geometrically but are not adjacent
                if hit && !domain.segment_on_boundary(a, b, tol) {
                    shared.push((i, j, a, b));
                }
            }
        }
    }
    for _ in 0..1000 {
        let mut changed = false;
        for &(i, j, a, b) in &shared {
            let axis = if (a[0] - b[0]).abs() <= tol { 1 } else { 0 };
            let ni = edge_nodes(&patches[i], sigma, a, b, axis, tol)?;
            let nj = edge_nodes(&patches[j], sigma, a, b, axis, tol)?;
            for (target, missing_from) in [(i, &nj), (j, &ni)] {
                let own = if target == i { &ni } else { &nj };
                let missing: Vec<f64> =
                    missing_from.iter().copied().filter(|x| !own.iter().any(|y| (x - y).abs() <= tol)).collect();
                if missing.is_empty() {
                    continue;
                }
                let patch = &mut patches[target];
                let refs: Vec<Point> = missing
                    .iter()
                    .map(|&x| {
                        let mut p = a;
                        p[axis] = x;
                        patch.inverse(p)
                    })
                    .collect();
                let pattern = patch.pattern;
                let Some((xs, ys)) = patch.grid.as_mut() else {
                    return Err(Error::Conformity(format!(
                        "patch {target} ({pattern}) would need extra nodes on edge {a:?}-{b:?}"
                    )));
                };
                for r in refs {
                    // a node on an x̂ = const edge adds a ŷ line and vice versa
                    let on_x_edge = r[0].abs() < 1e-9 || (r[0] - 1.0).abs() < 1e-9;
                    let (list, v) = if on_x_edge { (&mut *ys, r[1]) } else { (&mut *xs, r[0]) };
                    list.push(v.clamp(0.0, 1.0));
                    list.sort_by(f64::total_cmp);
                    list.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
                }
                changed = true;
            }
        }
        if !changed {
            return Ok(());
        }
    }
    Err(Error::Conformity("closure did not terminate".into()))
}

/// Maps all patches, merges coincident vertices and builds the mesh.
/// Vertices on a slit are merged only with vertices of the same side.
fn realize(domain: &PolygonDomain, patches: Vec<MacroPatch>, sigma: f64) -> Result<Mesh2D> {
    let h = 1e-11 * domain.diameter();
    let mut lookup: HashMap<(i64, i64, u8), Vec<usize>> = HashMap::new();
    let mut points: Vec<Point> = Vec::new();
    let mut elements = Vec::new();
    for (pi, patch) in patches.iter().enumerate() {
        for (li, q) in patch.reference_quads(sigma)?.into_iter().enumerate() {
            let mut phys = q.map(|r| patch.map(r));
            let signed: f64 = (0..4)
                .map(|k| phys[k][0] * phys[(k + 1) % 4][1] - phys[k][1] * phys[(k + 1) % 4][0])
                .sum();
            if signed < 0.0 {
                phys = [phys[0], phys[3], phys[2], phys[1]];
            }
            // keep local vertex 0 at the lower-left-most corner for a stable layout
            let start = (0..4)
                .min_by(|&a, &b| {
                    (phys[a][0] + phys[a][1]).total_cmp(&(phys[b][0] + phys[b][1])).then(phys[a][0].total_cmp(&phys[b][0]))
                })
                .unwrap();
            let phys = [phys[start], phys[(start + 1) % 4], phys[(start + 2) % 4], phys[(start + 3) % 4]];
            let centroid = [
                0.25 * phys.iter().map(|p| p[0]).sum::<f64>(),
                0.25 * phys.iter().map(|p| p[1]).sum::<f64>(),
            ];
            let mut ids = [0usize; 4];
            for (k, p) in phys.iter().enumerate() {
                let side = domain.slit_side(*p, centroid, 1e3 * h).unwrap_or(0);
                let key = ((p[0] / h).round() as i64, (p[1] / h).round() as i64, side);
                let mut found = None;
                'search: for dx in -1..=1 {
                    for dy in -1..=1 {
                        if let Some(list) = lookup.get(&(key.0 + dx, key.1 + dy, side)) {
                            for &id in list {
                                if dist(points[id], *p) <= h {
                                    found = Some(id);
                                    break 'search;
                                }
                            }
                        }
                    }
                }
                ids[k] = match found {
                    Some(id) => id,
                    None => {
                        points.push(*p);
                        lookup.entry(key).or_default().push(points.len() - 1);
                        points.len() - 1
                    }
                };
            }
            elements.push(Element { vertices: ids, provenance: Provenance { patch: pi, local: li } });
        }
    }
    let mesh = Mesh2D::from_parts(domain.clone(), points, elements, patches)?;
    let report = check_conformity(&mesh);
    if let Some(v) = report.violations.first() {
        return Err(Error::Conformity(format!(
            "{} violations; first: {} at {:?} (overlaps {:?})",
            report.violations.len(),
            v.reason,
            v.edge,
            v.other
        )));
    }
    Ok(mesh)
}

fn build(domain: &PolygonDomain, cell_width: f64, depth: Depths, sigma: f64) -> Result<Mesh2D> {
    if !domain.is_axis_aligned() {
        return Err(Error::UnsupportedDomain("only axis-aligned polygons can be meshed".into()));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return param_err(format!("grading factor {sigma} must lie in (0, 1)"));
    }
    let tol = 1e-12 * domain.diameter();
    let cells = strip_layout(domain, cell_width);
    let mut patches = cells.into_iter().map(|c| assign(domain, c, depth, tol)).collect::<Result<Vec<_>>>()?;
    close(domain, &mut patches, sigma, 1e-12 * domain.diameter().max(1.0))?;
    realize(domain, patches, sigma)
}

/// Width of the macro cells along the boundary of the geometric mesh.
pub fn macro_cell_width(domain: &PolygonDomain) -> f64 {
    minimum_line_gap(domain) / 3.0
}

/// Geometric boundary-layer mesh with `layers` anisotropic layers towards
/// every boundary edge and `levels` isotropic levels towards every vertex.
pub fn build_geometric_bl_mesh(domain: &PolygonDomain, layers: usize, levels: usize, sigma: f64) -> Result<Mesh2D> {
    if levels < layers {
        return param_err(format!("corner levels {levels} must be at least the layer count {layers}"));
    }
    build(domain, macro_cell_width(domain), Depths { layers, levels }, sigma)
}

/// Parameters of an `ε`-adapted minimal mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimalMeshParams {
    /// Geometric levels towards each vertex.
    pub levels: usize,
    /// Polynomial degree the strip width is scaled with.
    pub degree: usize,
    pub lambda: f64,
    pub eps: f64,
    /// Cap on the strip width.
    pub kappa0: f64,
    pub sigma: f64,
}

impl MinimalMeshParams {
    /// Strip width `min(κ₀, λ q ε)`.
    pub fn strip_width(&self) -> f64 {
        self.kappa0.min(self.lambda * self.degree as f64 * self.eps)
    }
}

/// Default strip cap: a quarter of the shortest boundary edge.
pub fn default_kappa0(domain: &PolygonDomain) -> f64 {
    0.25 * domain.shortest_edge()
}

/// One strip of thin elements of width `min(κ₀, λqε)` along every boundary
/// edge, with `levels` geometric levels towards the vertices inside the
/// corner cells of the strip.
pub fn build_minimal_mesh(domain: &PolygonDomain, params: &MinimalMeshParams) -> Result<Mesh2D> {
    let p = params;
    if !(p.eps > 0.0) || !(p.lambda > 0.0) || p.degree == 0 {
        return param_err("minimal mesh needs eps > 0, lambda > 0 and q >= 1");
    }
    if !(p.kappa0 > 0.0 && p.kappa0 <= 0.5 * domain.shortest_edge() * (1.0 + 1e-12)) {
        return param_err(format!("kappa0 = {} must lie in (0, half the shortest edge]", p.kappa0));
    }
    let w = p.strip_width();
    if w >= 0.5 * minimum_line_gap(domain) {
        return Err(Error::Geometry(format!("strip width {w} exceeds half the local feature size")));
    }
    // thinner strips than this cannot be told apart from their edge
    if w * p.sigma.powi(p.levels as i32) < 1e-9 * domain.diameter() {
        return Err(Error::Geometry(format!("strip width {w:e} is below the representable resolution")));
    }
    build(domain, w, Depths { layers: 0, levels: p.levels }, p.sigma)
}
