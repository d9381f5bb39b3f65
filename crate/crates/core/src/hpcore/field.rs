use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{param_err, Result, SolverMode};
use crate::linsolve::factor_spd;
use crate::meshgen::Point;
use crate::special::KahanSum;

use super::assembly::{assemble_load, assemble_operators, Coefficients, ElementQuadrature};
use super::basis::eval;
use super::quadrature::gauss_legendre;
use super::space::HpSpace;

/// A function of an [`HpSpace`] given by its global coefficients.
#[derive(Debug, Clone)]
pub struct Field {
    space: Arc<HpSpace>,
    coeffs: Vec<f64>,
}

impl Field {
    pub fn new(space: Arc<HpSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.dim() {
            return param_err(format!("{} coefficients for a space of dimension {}", coeffs.len(), space.dim()));
        }
        if (0..coeffs.len()).any(|d| space.is_dirichlet(d) && coeffs[d] != 0.0) {
            return param_err("constrained coefficients must vanish");
        }
        Ok(Self { space, coeffs })
    }

    pub fn zero(space: Arc<HpSpace>) -> Self {
        let n = space.dim();
        Self { space, coeffs: vec![0.0; n] }
    }

    /// Field from the values of the free dofs.
    pub fn from_free(space: Arc<HpSpace>, free: &[f64]) -> Result<Self> {
        if free.len() != space.num_free() {
            return param_err(format!("{} free values for {} free dofs", free.len(), space.num_free()));
        }
        let coeffs = space.expand(free);
        Ok(Self { space, coeffs })
    }

    /// `L²` projection of `g` onto the space.
    pub fn project(space: Arc<HpSpace>, g: &(dyn Fn(Point) -> f64 + Sync)) -> Result<Self> {
        let ops = assemble_operators(&space, &Coefficients::default())?;
        let b = assemble_load(&space, g);
        let x = factor_spd(&ops.mass, SolverMode::Direct, 1e-12)?.solve(&b)?;
        Self::from_free(space, &x)
    }

    pub fn space(&self) -> &Arc<HpSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn free_values(&self) -> Vec<f64> {
        self.space.restrict(&self.coeffs)
    }

    /// Value on element `e` at reference point `(ξ, η)`.
    pub fn eval_local(&self, e: usize, xi: f64, eta: f64) -> f64 {
        let (qx, qy) = self.space.degrees(e);
        let mut vx = vec![0.0; qx.max(1) + 1];
        let mut dx = vx.clone();
        let mut vy = vec![0.0; qy.max(1) + 1];
        let mut dy = vy.clone();
        eval(qx, xi, &mut vx, &mut dx);
        eval(qy, eta, &mut vy, &mut dy);
        self.space
            .local_dofs(e)
            .iter()
            .map(|d| d.sign * self.coeffs[d.dof] * vx[d.ix as usize] * vy[d.iy as usize])
            .sum()
    }

    /// Point values; fails for points outside the mesh.
    pub fn evaluate(&self, points: &[Point]) -> Result<Vec<f64>> {
        points
            .iter()
            .map(|&p| {
                let (e, xi, eta) = self.space.mesh().locate(p)?;
                Ok(self.eval_local(e, xi, eta))
            })
            .collect()
    }

    /// `∫ f u` by Gauss quadrature with `q + 4` points per direction.
    pub fn integrate_f_dot(&self, f: &(dyn Fn(Point) -> f64 + Sync)) -> f64 {
        let ne = self.space.mesh().num_elements();
        let parts: Vec<f64> = (0..ne)
            .into_par_iter()
            .map(|e| {
                let (qx, qy) = self.space.degrees(e);
                let eq = ElementQuadrature::new(&self.space, e, qx.max(qy) + 4);
                let local = self.space.local_dofs(e);
                let mut v = Vec::new();
                let mut acc = 0.0;
                for j in 0..eq.n {
                    for i in 0..eq.n {
                        let p = j * eq.n + i;
                        eq.values(&self.space, e, i, j, &mut v);
                        let u: f64 = local.iter().zip(&v).map(|(d, vi)| self.coeffs[d.dof] * vi).sum();
                        acc += eq.wdet[p] * f(eq.points[p]) * u;
                    }
                }
                acc
            })
            .collect();
        let mut s = KahanSum::new();
        for x in parts {
            s.add(x);
        }
        s.value()
    }

    /// `‖u - exact‖_{L²}` with composite Gauss quadrature on every element,
    /// subintervals graded geometrically towards the element edges so that
    /// boundary layers of the exact solution are resolved.
    pub fn l2_error(&self, exact: &(dyn Fn(Point) -> f64 + Sync), grading_levels: usize) -> f64 {
        // subintervals of [-1, 1]: geometric towards both ends
        let mut breaks = vec![-1.0, 1.0];
        for k in 1..=grading_levels {
            let h = 0.5f64.powi(k as i32);
            breaks.push(-1.0 + h);
            breaks.push(1.0 - h);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let ne = self.space.mesh().num_elements();
        let parts: Vec<f64> = (0..ne)
            .into_par_iter()
            .map(|e| {
                let (qx, qy) = self.space.degrees(e);
                let rule = gauss_legendre(qx.max(qy) + 4).unwrap();
                let mut pts = Vec::new();
                let mut wts = Vec::new();
                for w in breaks.windows(2) {
                    let (x, ww) = rule.mapped(w[0], w[1]);
                    pts.extend(x);
                    wts.extend(ww);
                }
                let mesh = self.space.mesh();
                let mut acc = 0.0;
                for (j, &eta) in pts.iter().enumerate() {
                    for (i, &xi) in pts.iter().enumerate() {
                        let jac = mesh.jacobian(e, xi, eta);
                        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                        let d = self.eval_local(e, xi, eta) - exact(mesh.map(e, xi, eta));
                        acc += wts[i] * wts[j] * det * d * d;
                    }
                }
                acc
            })
            .collect();
        parts.iter().sum::<f64>().sqrt()
    }

    /// Coefficients followed by values on a uniform `n × n` grid over the
    /// domain's bounding box (points outside the domain are skipped).
    pub fn export(&self, n: usize) -> String {
        let mut out = String::new();
        writeln!(out, "# dof value").unwrap();
        for (i, c) in self.coeffs.iter().enumerate() {
            writeln!(out, "dof {i} {c:e}").unwrap();
        }
        writeln!(out, "# x y value").unwrap();
        let [lo, hi] = self.space.mesh().domain().bounding_box();
        let n = n.max(2);
        for j in 0..n {
            for i in 0..n {
                let p = [
                    lo[0] + (hi[0] - lo[0]) * i as f64 / (n - 1) as f64,
                    lo[1] + (hi[1] - lo[1]) * j as f64 / (n - 1) as f64,
                ];
                if let Ok(v) = self.evaluate(&[p]) {
                    writeln!(out, "sample {:e} {:e} {:e}", p[0], p[1], v[0]).unwrap();
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpcore::space::Degrees;
    use crate::meshgen::{build_geometric_bl_mesh, PolygonDomain};

    fn square_space(q: usize, constrained: bool) -> Arc<HpSpace> {
        let mesh = Arc::new(build_geometric_bl_mesh(&PolygonDomain::square(), 1, 2, 0.5).unwrap());
        Arc::new(if constrained {
            HpSpace::new(mesh, Degrees::Uniform(q)).unwrap()
        } else {
            HpSpace::unconstrained(mesh, Degrees::Uniform(q)).unwrap()
        })
    }

    #[test]
    fn constant_projection() {
        let s = square_space(2, false);
        let f = Field::project(s, &|_| 1.0).unwrap();
        for v in f.evaluate(&[[0.3, 0.7], [0.0, 0.0], [0.999, 0.5]]).unwrap() {
            assert!((v - 1.0).abs() < 1e-11);
        }
        assert!((f.integrate_f_dot(&|_| 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polynomial_integral() {
        let s = square_space(2, false);
        let f = Field::project(s, &|p| p[0] * (1.0 - p[0])).unwrap();
        assert!((f.integrate_f_dot(&|_| 1.0) - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn vertex_hat() {
        let s = square_space(1, false);
        let mesh = s.mesh().clone();
        let v = mesh.points().len() / 2;
        let mut c = vec![0.0; s.dim()];
        c[v] = 1.0;
        let f = Field::new(s, c).unwrap();
        let vals = f.evaluate(mesh.points()).unwrap();
        for (i, x) in vals.iter().enumerate() {
            assert!((x - if i == v { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }

    #[test]
    fn nonzero_dirichlet_coefficient_rejected() {
        let s = square_space(1, true);
        let mut c = vec![0.0; s.dim()];
        c[0] = 1.0;
        assert!(Field::new(s, c).is_err());
    }
}
