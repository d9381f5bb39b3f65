//! Independent reference computations shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::sync::Arc;

use fracdiff::extension::{diagonalize, solve_extension_on, ExtensionSolution, YExtensionSetup};
use fracdiff::hpcore::{assemble_load, assemble_operators, Coefficients, Degrees, HpSpace};
use fracdiff::meshgen::{build_geometric_bl_mesh, DegreeVector, Mesh1D, PolygonDomain};
use fracdiff::shifted::DomainParams;

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// P1 stiffness and mass on `(0, Y)` with weight 1 and `v(Y) = 0`.
pub fn p1_matrices(breaks: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = breaks.len() - 1;
    let mut s = vec![vec![0.0; n]; n];
    let mut m = vec![vec![0.0; n]; n];
    for e in 0..n {
        let h = breaks[e + 1] - breaks[e];
        let loc_s = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
        let loc_m = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        for a in 0..2 {
            for b in 0..2 {
                let (i, j) = (e + a, e + b);
                if i < n && j < n {
                    s[i][j] += loc_s[a][b];
                    m[i][j] += loc_m[a][b];
                }
            }
        }
    }
    (s, m)
}

/// The tiny instance: unit square, 3×3 macro mesh, `q = 1`, `s = 1/2`,
/// P1 in `y` on `0 < 1/4 < 1`.
pub struct TinyInstance {
    pub solution: ExtensionSolution,
    /// Tensor coefficients `C[a][k]` of the direct solve.
    pub direct: Vec<Vec<f64>>,
    pub direct_energy: f64,
}

pub fn tiny_instance() -> TinyInstance {
    let breaks = vec![0.0, 0.25, 1.0];
    let setup =
        YExtensionSetup::new(0.5, Mesh1D::new(breaks.clone()).unwrap(), DegreeVector::uniform(2, 1).unwrap()).unwrap();
    let mesh = Arc::new(build_geometric_bl_mesh(&PolygonDomain::square(), 0, 0, 0.25).unwrap());
    let space = Arc::new(HpSpace::new(mesh, Degrees::Uniform(1)).unwrap());
    let f = |p: [f64; 2]| 1.0 + p[0] * p[1];
    let params = DomainParams { tol: 1e-13, ..DomainParams::steering(1) };
    let diag = Arc::new(diagonalize(&setup).unwrap());
    let solution = solve_extension_on(diag, space.clone(), &f, &params, true).unwrap();

    let ops = assemble_operators(&space, &Coefficients::default()).unwrap();
    let kx = ops.stiffness.to_dense();
    let mx = ops.mass.to_dense();
    let load = assemble_load(&space, &f);
    let (sy, my) = p1_matrices(&breaks);
    let nx = space.num_free();
    let ny = sy.len();
    let d_s = 1.0; // s = 1/2
    let n = nx * ny;
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..nx {
        for j in 0..nx {
            for k in 0..ny {
                for l in 0..ny {
                    a[i * ny + k][j * ny + l] = kx[(i, j)] * my[k][l] + mx[(i, j)] * sy[k][l];
                }
            }
        }
    }
    let mut rhs = vec![0.0; n];
    for i in 0..nx {
        rhs[i * ny] = d_s * load[i];
    }
    let c = dense_solve(a.clone(), rhs);
    let mut energy = 0.0;
    for r in 0..n {
        for q in 0..n {
            energy += c[r] * a[r][q] * c[q];
        }
    }
    let direct = (0..nx).map(|i| (0..ny).map(|k| c[i * ny + k]).collect()).collect();
    TinyInstance { solution, direct, direct_energy: energy }
}

impl TinyInstance {
    /// `Σ_i U_i ⊗ v_i` from the diagonalised solve.
    pub fn diagonalized(&self) -> Vec<Vec<f64>> {
        let sol = &self.solution;
        let v = &sol.diag.eig.vectors;
        let fields: Vec<Vec<f64>> = sol.modes.iter().map(|m| m.solve.field.as_ref().unwrap().free_values()).collect();
        let nx = fields[0].len();
        let ny = v.nrows();
        (0..nx)
            .map(|a| (0..ny).map(|k| (0..fields.len()).map(|i| fields[i][a] * v[(k, i)]).sum()).collect())
            .collect()
    }

    pub fn max_abs_difference(&self) -> f64 {
        let d = self.diagonalized();
        d.iter()
            .zip(&self.direct)
            .flat_map(|(x, y)| x.iter().zip(y).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

/// Least-squares line through `(x, y)`: slope and `R²`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// `⌈π²/(2(1-s)k²)⌉` and `⌈π²/(s k²)⌉` evaluated independently.
pub fn practical_counts(s: f64, k: f64) -> (usize, usize) {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let k1 = pi2 / (2.0 * (1.0 - s) * k * k);
    let k2 = pi2 / (s * k * k);
    (k1.ceil() as usize, k2.ceil() as usize)
}
