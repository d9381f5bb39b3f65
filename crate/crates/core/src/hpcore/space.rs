use std::sync::Arc;

use crate::error::{param_err, Error, Result};
use crate::linsolve::SparsityPattern;
use crate::meshgen::{Mesh2D, LOCAL_EDGES};

use super::basis::MAX_DEGREE;

/// Polynomial degrees of a space: uniform, or `(q_x, q_y)` per element.
#[derive(Debug, Clone, PartialEq)]
pub enum Degrees {
    Uniform(usize),
    PerElement(Vec<(usize, usize)>),
}

/// One local shape function: the tensor product of 1D functions `ix` in
/// `ξ` and `iy` in `η`, contributing `sign` times to global dof `dof`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalDof {
    pub ix: u8,
    pub iy: u8,
    pub dof: usize,
    pub sign: f64,
}

const NONE: usize = usize::MAX;

/// Continuous piecewise polynomials on a quadrilateral mesh.
///
/// Global dofs are numbered vertices first, then edge modes, then interior
/// modes. Edge modes are oriented from the lower to the higher global
/// vertex id; odd modes flip sign on elements traversing the edge the
/// other way. A shared edge carries the smaller of the adjacent degrees.
#[derive(Debug, Clone)]
pub struct HpSpace {
    mesh: Arc<Mesh2D>,
    degrees: Vec<(usize, usize)>,
    edge_degree: Vec<usize>,
    local: Vec<Vec<LocalDof>>,
    ndof: usize,
    dirichlet: Vec<bool>,
    free_index: Vec<usize>,
    free_dofs: Vec<usize>,
    pattern: Arc<SparsityPattern>,
}

impl HpSpace {
    /// The space with homogeneous Dirichlet conditions on the whole boundary.
    pub fn new(mesh: Arc<Mesh2D>, degrees: Degrees) -> Result<Self> {
        Self::build(mesh, degrees, true)
    }

    /// The space without boundary constraints.
    pub fn unconstrained(mesh: Arc<Mesh2D>, degrees: Degrees) -> Result<Self> {
        Self::build(mesh, degrees, false)
    }

    fn build(mesh: Arc<Mesh2D>, degrees: Degrees, constrain: bool) -> Result<Self> {
        let ne = mesh.num_elements();
        let degrees = match degrees {
            Degrees::Uniform(q) => vec![(q, q); ne],
            Degrees::PerElement(d) => {
                if d.len() != ne {
                    return param_err(format!("{} degree pairs for {ne} elements", d.len()));
                }
                d
            }
        };
        if let Some(&(a, b)) = degrees.iter().find(|&&(a, b)| a == 0 || b == 0 || a > MAX_DEGREE || b > MAX_DEGREE) {
            return param_err(format!("degree ({a}, {b}) outside 1..={MAX_DEGREE}"));
        }
        let nv = mesh.points().len();
        let edges = mesh.edges();
        let mut edge_degree = vec![usize::MAX; edges.len()];
        for (i, ed) in edges.iter().enumerate() {
            for &(e, k) in &ed.elements {
                let (qx, qy) = degrees[e];
                let q = if k % 2 == 0 { qx } else { qy };
                edge_degree[i] = edge_degree[i].min(q);
            }
            if edge_degree[i] == usize::MAX {
                return Err(Error::Geometry(format!("edge {i} has no element")));
            }
        }
        let mut edge_offset = vec![0usize; edges.len()];
        let mut next = nv;
        for (i, &q) in edge_degree.iter().enumerate() {
            edge_offset[i] = next;
            next += q - 1;
        }
        let mut dirichlet_vertex = vec![false; nv];
        let mut dirichlet_edge = vec![false; edges.len()];
        if constrain {
            for i in mesh.boundary_edges() {
                dirichlet_edge[i] = true;
                for v in edges[i].vertices {
                    dirichlet_vertex[v] = true;
                }
            }
        }
        let mut local = Vec::with_capacity(ne);
        for (e, el) in mesh.elements().iter().enumerate() {
            let (qx, qy) = degrees[e];
            let v = el.vertices;
            let mut l = vec![
                LocalDof { ix: 0, iy: 0, dof: v[0], sign: 1.0 },
                LocalDof { ix: 1, iy: 0, dof: v[1], sign: 1.0 },
                LocalDof { ix: 1, iy: 1, dof: v[2], sign: 1.0 },
                LocalDof { ix: 0, iy: 1, dof: v[3], sign: 1.0 },
            ];
            let ee = mesh.element_edges(e);
            for (k, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                let reversed = v[*a] > v[*b];
                let ed = ee[k];
                for m in 2..=edge_degree[ed] {
                    let sign = if reversed && m % 2 == 1 { -1.0 } else { 1.0 };
                    let dof = edge_offset[ed] + m - 2;
                    let (ix, iy) = match k {
                        0 => (m, 0),
                        1 => (1, m),
                        2 => (m, 1),
                        _ => (0, m),
                    };
                    l.push(LocalDof { ix: ix as u8, iy: iy as u8, dof, sign });
                }
            }
            for iy in 2..=qy {
                for ix in 2..=qx {
                    l.push(LocalDof { ix: ix as u8, iy: iy as u8, dof: next, sign: 1.0 });
                    next += 1;
                }
            }
            local.push(l);
        }
        let ndof = next;
        let mut dirichlet = vec![false; ndof];
        dirichlet[..nv].copy_from_slice(&dirichlet_vertex[..nv]);
        for (i, &c) in dirichlet_edge.iter().enumerate() {
            if c {
                for m in 0..edge_degree[i] - 1 {
                    dirichlet[edge_offset[i] + m] = true;
                }
            }
        }
        let mut free_index = vec![NONE; ndof];
        let mut free_dofs = Vec::new();
        for d in 0..ndof {
            if !dirichlet[d] {
                free_index[d] = free_dofs.len();
                free_dofs.push(d);
            }
        }
        let mut columns = vec![Vec::new(); free_dofs.len()];
        for l in &local {
            let f: Vec<usize> = l.iter().map(|d| free_index[d.dof]).filter(|&i| i != NONE).collect();
            for &j in &f {
                columns[j].extend_from_slice(&f);
            }
        }
        let pattern = Arc::new(SparsityPattern::from_columns(columns));
        Ok(Self { mesh, degrees, edge_degree, local, ndof, dirichlet, free_index, free_dofs, pattern })
    }

    pub fn mesh(&self) -> &Arc<Mesh2D> {
        &self.mesh
    }

    /// Total number of global dofs, constrained ones included.
    pub fn dim(&self) -> usize {
        self.ndof
    }

    /// Number of unconstrained dofs, the size of the linear systems.
    pub fn num_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn degrees(&self, e: usize) -> (usize, usize) {
        self.degrees[e]
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(1)
    }

    pub fn edge_degree(&self, edge: usize) -> usize {
        self.edge_degree[edge]
    }

    pub fn local_dofs(&self, e: usize) -> &[LocalDof] {
        &self.local[e]
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.dirichlet[dof]
    }

    /// Position of `dof` among the free dofs.
    pub fn free_index(&self, dof: usize) -> Option<usize> {
        let i = self.free_index[dof];
        (i != NONE).then_some(i)
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Sparsity of the free-dof system matrices.
    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    /// Full coefficient vector from free-dof values (constrained dofs zero).
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ndof];
        for (i, &d) in self.free_dofs.iter().enumerate() {
            out[d] = free[i];
        }
        out
    }

    /// Free-dof values of a full coefficient vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&d| full[d]).collect()
    }
}
