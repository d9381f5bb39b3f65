//! Special functions needed by the fractional solvers.

use std::f64::consts::PI;

use crate::error::{param_err, Result};

/// The gamma function for real arguments that are not non-positive integers.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Normalisation constant of the extension problem,
/// `d_s = 2^(1-2s) Γ(1-s) / Γ(s)`.
pub fn extension_constant(s: f64) -> Result<f64> {
    check_order(s)?;
    Ok(2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s))
}

/// Prefactor `sin(πs)/π` of the Balakrishnan integral.
pub fn balakrishnan_constant(s: f64) -> Result<f64> {
    check_order(s)?;
    Ok((PI * s).sin() / PI)
}

pub(crate) fn check_order(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        param_err(format!("fractional order s = {s} must lie in (0, 1)"))
    }
}

/// Neumaier's variant of compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
