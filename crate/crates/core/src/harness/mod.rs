//! Convergence studies: the series reference on the unit square, the error
//! functional, manufactured-solution checks of the reaction–diffusion
//! solver and CSV output.

mod mms;
mod oracle;
mod study;

pub use mms::{mms_check, Manufactured, MmsReport, MmsRow};
pub use oracle::{raw_series, SquareSeriesOracle};
pub use study::{
    run_method, run_study, Method, MethodRun, ReferencePolicy, Steering, StudyConfig, StudyReport, StudyRow,
    ConvergenceRecord, CSV_HEADER,
};

/// `|J_ref - J|^{1/2}`, both functionals including `d_s`.
pub fn error_functional(j_ref: f64, candidate: f64) -> f64 {
    (j_ref - candidate).abs().sqrt()
}
