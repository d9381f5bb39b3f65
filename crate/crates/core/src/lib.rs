//! hp finite element solvers for the spectral fractional diffusion problem
//! `L^s u = f` on straight-edged polygons, `L = -div(A grad) + c` with
//! homogeneous Dirichlet data and `0 < s < 1`.
//!
//! Two discretisations are provided:
//!
//! * [`extension`]: the Caffarelli–Silvestre extension to a half-cylinder,
//!   discretised by hp-FEM in the extended variable and diagonalised into
//!   independent singularly perturbed reaction–diffusion problems;
//! * [`sincbk`]: a sinc quadrature of the Balakrishnan integral, again a sum
//!   of reaction–diffusion solves.
//!
//! Both reduce to solves on geometric boundary-layer meshes from
//! [`meshgen`] with the high order spaces of [`hpcore`]. [`harness`] runs
//! convergence studies against an analytic reference on the unit square.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod extension;
pub mod harness;
pub mod hpcore;
pub mod linsolve;
pub mod meshgen;
pub mod shifted;
pub mod sincbk;
pub mod special;

pub use error::{Error, Result, SolverMode};
pub use extension::{DiagSystem, ExtensionParams, ExtensionSolution, YExtensionSetup};
pub use shifted::{Case, DomainParams};
pub use harness::{ConvergenceRecord, Method, SquareSeriesOracle, StudyConfig};
pub use hpcore::{Field, HpSpace, QuadRule1D};
pub use linsolve::{EigSystem, FactorHandle, SymSparse};
pub use meshgen::{Mesh1D, Mesh2D, PolygonDomain};
pub use sincbk::{SincParams, SincRule, SincSolution};
