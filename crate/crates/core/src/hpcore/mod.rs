//! Quadrature, hierarchical shape functions, continuous hp spaces on
//! quadrilateral meshes and reaction–diffusion assembly.

mod assembly;
pub mod basis;
mod field;
mod quadrature;
mod space;

pub use assembly::{
    assemble_load, assemble_operators, assemble_rd, Coefficients, RdOperators, ScalarFn, TensorFn,
};
pub use field::Field;
pub use quadrature::{gauss_jacobi, gauss_legendre, QuadKind, QuadRule1D};
pub use space::{Degrees, HpSpace, LocalDof};

use crate::error::{Result, SolverMode};
use crate::linsolve::factor_spd;
use crate::meshgen::Point;

/// Solves `μ a(u, v) + (c u, v) = (f, v)` on `space`.
pub fn solve_rd(
    space: std::sync::Arc<HpSpace>,
    mu: f64,
    coeffs: &Coefficients,
    f: &(dyn Fn(Point) -> f64 + Sync),
    mode: SolverMode,
    tol: f64,
) -> Result<Field> {
    let (a, b) = assemble_rd(&space, mu, coeffs, f)?;
    let x = factor_spd(&a, mode, tol)?.solve(&b)?;
    Field::from_free(space, &x)
}
