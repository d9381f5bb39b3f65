use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{param_err, Error, Result};
use crate::linsolve::SymSparse;
use crate::meshgen::Point;

use super::basis::{tabulate, Tabulation};
use super::quadrature::gauss_legendre;
use super::space::HpSpace;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type TensorFn = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;

/// Coefficients of `-div(A grad u) + c u`; `None` means `A = I`, `c = 1`.
#[derive(Clone, Default)]
pub struct Coefficients {
    pub diffusion: Option<TensorFn>,
    pub reaction: Option<ScalarFn>,
}

impl std::fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Coefficients")
            .field("diffusion", &self.diffusion.as_ref().map(|_| "fn"))
            .field("reaction", &self.reaction.as_ref().map(|_| "fn"))
            .finish()
    }
}

impl Coefficients {
    fn diffusion_at(&self, x: Point) -> Result<[[f64; 2]; 2]> {
        let Some(a) = &self.diffusion else {
            return Ok([[1.0, 0.0], [0.0, 1.0]]);
        };
        let a = a(x);
        let asym = (a[0][1] - a[1][0]).abs();
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if !(a[0][0] > 0.0 && det > 0.0) || asym > 1e-12 * (a[0][0].abs() + a[1][1].abs()) {
            return Err(Error::Data(format!("diffusion tensor {a:?} at {x:?} is not symmetric positive definite")));
        }
        Ok(a)
    }

    fn reaction_at(&self, x: Point) -> Result<f64> {
        let Some(c) = &self.reaction else {
            return Ok(1.0);
        };
        let c = c(x);
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Data(format!("reaction coefficient {c} at {x:?} is not positive")));
        }
        Ok(c)
    }
}

/// Quadrature data of one element: tensor Gauss points, physical points,
/// weights times Jacobian determinant, and inverse Jacobians.
pub(crate) struct ElementQuadrature {
    pub n: usize,
    pub points: Vec<Point>,
    pub wdet: Vec<f64>,
    pub jinv: Vec<[[f64; 2]; 2]>,
    pub tab_x: Tabulation,
    pub tab_y: Tabulation,
}

impl ElementQuadrature {
    /// `n × n` Gauss points; point `(i, j)` has index `j n + i`.
    pub fn new(space: &HpSpace, e: usize, n: usize) -> Self {
        let mesh = space.mesh();
        let rule = gauss_legendre(n).expect("n >= 1");
        let (qx, qy) = space.degrees(e);
        let mut points = Vec::with_capacity(n * n);
        let mut wdet = Vec::with_capacity(n * n);
        let mut jinv = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let (xi, eta) = (rule.nodes[i], rule.nodes[j]);
                points.push(mesh.map(e, xi, eta));
                let jac = mesh.jacobian(e, xi, eta);
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                wdet.push(rule.weights[i] * rule.weights[j] * det);
                jinv.push([[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]]);
            }
        }
        Self { n, points, wdet, jinv, tab_x: tabulate(qx, &rule.nodes), tab_y: tabulate(qy, &rule.nodes) }
    }

    /// Values of all local shape functions at point `(i, j)`.
    pub fn values(&self, space: &HpSpace, e: usize, i: usize, j: usize, out: &mut Vec<f64>) {
        out.clear();
        for d in space.local_dofs(e) {
            out.push(d.sign * self.tab_x.vals[d.ix as usize][i] * self.tab_y.vals[d.iy as usize][j]);
        }
    }
}

/// Element stiffness and mass matrices (row major, local dof order,
/// orientation signs applied).
fn element_matrices(space: &HpSpace, e: usize, coeffs: &Coefficients) -> Result<(Vec<f64>, Vec<f64>)> {
    let (qx, qy) = space.degrees(e);
    let eq = ElementQuadrature::new(space, e, qx.max(qy) + 2);
    let local = space.local_dofs(e);
    let nl = local.len();
    let mut k = vec![0.0; nl * nl];
    let mut m = vec![0.0; nl * nl];
    let mut gx = vec![0.0; nl];
    let mut gy = vec![0.0; nl];
    let mut v = vec![0.0; nl];
    for j in 0..eq.n {
        for i in 0..eq.n {
            let p = j * eq.n + i;
            let x = eq.points[p];
            let a = coeffs.diffusion_at(x)?;
            let c = coeffs.reaction_at(x)?;
            let ji = eq.jinv[p];
            let w = eq.wdet[p];
            // C = w det J⁻¹ A J⁻ᵀ acts on reference gradients
            let mut cm = [[0.0; 2]; 2];
            for r in 0..2 {
                for s in 0..2 {
                    let mut acc = 0.0;
                    for u in 0..2 {
                        for t in 0..2 {
                            acc += ji[r][u] * a[u][t] * ji[s][t];
                        }
                    }
                    cm[r][s] = w * acc;
                }
            }
            for (l, d) in local.iter().enumerate() {
                let (ix, iy) = (d.ix as usize, d.iy as usize);
                gx[l] = d.sign * eq.tab_x.ders[ix][i] * eq.tab_y.vals[iy][j];
                gy[l] = d.sign * eq.tab_x.vals[ix][i] * eq.tab_y.ders[iy][j];
                v[l] = d.sign * eq.tab_x.vals[ix][i] * eq.tab_y.vals[iy][j];
            }
            let wc = w * c;
            for a_ in 0..nl {
                let ca0 = cm[0][0] * gx[a_] + cm[1][0] * gy[a_];
                let ca1 = cm[0][1] * gx[a_] + cm[1][1] * gy[a_];
                let va = wc * v[a_];
                let row = a_ * nl;
                for b in a_..nl {
                    k[row + b] += ca0 * gx[b] + ca1 * gy[b];
                    m[row + b] += va * v[b];
                }
            }
        }
    }
    for a_ in 0..nl {
        for b in 0..a_ {
            k[a_ * nl + b] = k[b * nl + a_];
            m[a_ * nl + b] = m[b * nl + a_];
        }
    }
    Ok((k, m))
}

/// Stiffness `a(u, v) = ∫ A ∇u·∇v` and mass `∫ c u v` on the free dofs.
#[derive(Debug, Clone)]
pub struct RdOperators {
    pub stiffness: SymSparse,
    pub mass: SymSparse,
}

impl RdOperators {
    /// `μ K + M`.
    pub fn shifted(&self, mu: f64) -> SymSparse {
        self.stiffness.combine(mu, &self.mass, 1.0).expect("operators share a pattern")
    }
}

const CHUNK: usize = 256;

/// Assembles stiffness and mass matrices over the free dofs. Element
/// matrices are computed in parallel and summed in element order, so the
/// result does not depend on the thread count.
pub fn assemble_operators(space: &HpSpace, coeffs: &Coefficients) -> Result<RdOperators> {
    let mut k = SymSparse::zeros(space.pattern().clone());
    let mut m = SymSparse::zeros(space.pattern().clone());
    let ne = space.mesh().num_elements();
    let mut start = 0;
    while start < ne {
        let end = (start + CHUNK).min(ne);
        let mats: Vec<(Vec<f64>, Vec<f64>)> =
            (start..end).into_par_iter().map(|e| element_matrices(space, e, coeffs)).collect::<Result<_>>()?;
        for (off, (ke, me)) in mats.iter().enumerate() {
            let e = start + off;
            let local = space.local_dofs(e);
            let nl = local.len();
            let idx: Vec<Option<usize>> = local.iter().map(|d| space.free_index(d.dof)).collect();
            for a in 0..nl {
                let Some(i) = idx[a] else { continue };
                for b in 0..nl {
                    let Some(j) = idx[b] else { continue };
                    let pos = space.pattern().find(i, j).expect("pattern covers element couplings");
                    k.values_mut()[pos] += ke[a * nl + b];
                    m.values_mut()[pos] += me[a * nl + b];
                }
            }
        }
        start = end;
    }
    Ok(RdOperators { stiffness: k, mass: m })
}

/// Load vector `∫ f v` over the free dofs.
pub fn assemble_load(space: &HpSpace, f: &(dyn Fn(Point) -> f64 + Sync)) -> Vec<f64> {
    let ne = space.mesh().num_elements();
    let parts: Vec<Vec<f64>> = (0..ne)
        .into_par_iter()
        .map(|e| {
            let (qx, qy) = space.degrees(e);
            let eq = ElementQuadrature::new(space, e, qx.max(qy) + 2);
            let mut out = vec![0.0; space.local_dofs(e).len()];
            let mut v = Vec::new();
            for j in 0..eq.n {
                for i in 0..eq.n {
                    let p = j * eq.n + i;
                    let wf = eq.wdet[p] * f(eq.points[p]);
                    eq.values(space, e, i, j, &mut v);
                    for (o, vi) in out.iter_mut().zip(&v) {
                        *o += wf * vi;
                    }
                }
            }
            out
        })
        .collect();
    let mut load = vec![0.0; space.num_free()];
    for (e, part) in parts.iter().enumerate() {
        for (d, val) in space.local_dofs(e).iter().zip(part) {
            if let Some(i) = space.free_index(d.dof) {
                load[i] += val;
            }
        }
    }
    load
}

/// System `μ a(u, v) + (c u, v)` and load `∫ f v` with Dirichlet dofs
/// eliminated.
pub fn assemble_rd(
    space: &HpSpace,
    mu: f64,
    coeffs: &Coefficients,
    f: &(dyn Fn(Point) -> f64 + Sync),
) -> Result<(SymSparse, Vec<f64>)> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return param_err(format!("diffusion scale {mu} must be non-negative"));
    }
    let ops = assemble_operators(space, coeffs)?;
    Ok((ops.shifted(mu), assemble_load(space, f)))
}
