use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{param_err, Result, SolverMode};
use crate::hpcore::{assemble_rd, gauss_legendre, Coefficients, Degrees, Field, HpSpace};
use crate::linsolve::factor_spd;
use crate::meshgen::{BuiltinDomain, Mesh2D, Point};

/// Exact solutions of `-ε² Δu + u = f` on the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Manufactured {
    /// `sin(πx) sin(πy)`.
    SineProduct,
    /// `g(x) g(y)` with `-ε² g'' + g = 1`, `g(0) = g(1) = 0`, which has
    /// boundary layers of width `ε`.
    LayerProduct,
}

impl Manufactured {
    /// The layer solution for small `ε`, the sine product otherwise.
    pub fn for_scale(eps: f64) -> Self {
        if eps < 0.05 {
            Manufactured::LayerProduct
        } else {
            Manufactured::SineProduct
        }
    }

    pub fn solution(self, eps: f64, p: Point) -> f64 {
        match self {
            Manufactured::SineProduct => (PI * p[0]).sin() * (PI * p[1]).sin(),
            Manufactured::LayerProduct => layer(eps, p[0]) * layer(eps, p[1]),
        }
    }

    pub fn source(self, eps: f64, p: Point) -> f64 {
        match self {
            Manufactured::SineProduct => (1.0 + 2.0 * PI * PI * eps * eps) * self.solution(eps, p),
            Manufactured::LayerProduct => {
                let (gx, gy) = (layer(eps, p[0]), layer(eps, p[1]));
                gx + gy - gx * gy
            }
        }
    }
}

fn layer(eps: f64, t: f64) -> f64 {
    if eps == 0.0 {
        return 1.0;
    }
    let d = 1.0 + (-1.0 / eps).exp();
    1.0 - (((t - 1.0) / eps).exp() + (-t / eps).exp()) / d
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsRow {
    pub degree: usize,
    pub num_dofs: usize,
    pub l2_error: f64,
    /// `(ε² ‖∇(u - u_h)‖² + ‖u - u_h‖²)^{1/2}` from Galerkin orthogonality.
    pub energy_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsReport {
    pub eps: f64,
    pub solution: Manufactured,
    pub rows: Vec<MmsRow>,
}

impl MmsReport {
    /// `err(q + 2) / err(q)` in `L²` for consecutive entries two apart.
    pub fn l2_ratios(&self) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter_map(|r| {
                let next = self.rows.iter().find(|n| n.degree == r.degree + 2)?;
                Some((r.degree, next.l2_error / r.l2_error))
            })
            .collect()
    }
}

const GRADING: usize = 12;

/// Solves `-ε² Δu + u = f` for a manufactured `u` on a mesh of the unit
/// square with every degree in `degrees`.
pub fn mms_check(eps: f64, degrees: &[usize], mesh: Arc<Mesh2D>, solution: Manufactured) -> Result<MmsReport> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return param_err(format!("scale {eps} must be non-negative"));
    }
    if mesh.domain().builtin != Some(BuiltinDomain::Square) {
        return param_err("manufactured solutions are defined on the unit square");
    }
    let exact = move |p: Point| solution.solution(eps, p);
    let f = move |p: Point| solution.source(eps, p);
    let exact_energy = graded_integral(&mesh, &|p| f(p) * exact(p))?;
    let mut rows = Vec::new();
    for &q in degrees {
        let space = Arc::new(HpSpace::new(mesh.clone(), Degrees::Uniform(q))?);
        let (a, b) = assemble_rd(&space, eps * eps, &Coefficients::default(), &f)?;
        let x = factor_spd(&a, SolverMode::Direct, 1e-10)?.solve(&b)?;
        let discrete_energy: f64 = x.iter().zip(&b).map(|(u, v)| u * v).sum();
        let field = Field::from_free(space.clone(), &x)?;
        rows.push(MmsRow {
            degree: q,
            num_dofs: space.num_free(),
            l2_error: field.l2_error(&exact, GRADING),
            energy_error: (exact_energy - discrete_energy).abs().sqrt(),
        });
    }
    Ok(MmsReport { eps, solution, rows })
}

/// `∫ g` over the mesh, with composite quadrature graded towards the
/// element edges.
fn graded_integral(mesh: &Mesh2D, g: &(dyn Fn(Point) -> f64 + Sync)) -> Result<f64> {
    let rule = gauss_legendre(12)?;
    let mut breaks = vec![-1.0, 1.0];
    for k in 1..=GRADING {
        let h = 0.5f64.powi(k as i32);
        breaks.push(-1.0 + h);
        breaks.push(1.0 - h);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for w in breaks.windows(2) {
        let (x, ww) = rule.mapped(w[0], w[1]);
        pts.extend(x);
        wts.extend(ww);
    }
    let mut acc = crate::special::KahanSum::new();
    for e in 0..mesh.num_elements() {
        for (j, &eta) in pts.iter().enumerate() {
            for (i, &xi) in pts.iter().enumerate() {
                let jac = mesh.jacobian(e, xi, eta);
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                acc.add(wts[i] * wts[j] * det * g(mesh.map(e, xi, eta)));
            }
        }
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_solves_its_ode() {
        let eps = 0.1;
        let h = 1e-4;
        for t in [0.1, 0.5, 0.93] {
            let d2 = (layer(eps, t + h) - 2.0 * layer(eps, t) + layer(eps, t - h)) / (h * h);
            assert!((-eps * eps * d2 + layer(eps, t) - 1.0).abs() < 1e-5);
        }
        assert!(layer(eps, 0.0).abs() < 1e-15);
        assert!(layer(eps, 1.0).abs() < 1e-15);
    }
}
