//! Sparse SPD solves and the dense generalized eigensolver.

mod dense;
mod sparse;

pub use dense::{cholesky, gen_eig_sym, solve_spd, EigSystem};
pub use faer::Mat;
pub use sparse::{
    analyze, factor_spd, factor_spd_with, FactorHandle, SolveStats, SparsityPattern, SymSparse,
    SymbolicCholesky,
};
