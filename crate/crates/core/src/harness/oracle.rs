use std::f64::consts::PI;

use crate::error::{param_err, Result};
use crate::hpcore::{gauss_jacobi, gauss_legendre};
use crate::meshgen::Point;
use crate::special::{check_order, extension_constant, KahanSum};

/// Sine-series solution of `(-Δ)^s u = 1` on the unit square with
/// homogeneous Dirichlet data.
///
/// Eigenpairs are `λ_mn = π²(m² + n²)`, `2 sin(mπx) sin(nπy)`; only odd
/// `m, n` appear in `f ≡ 1`, with coefficients `8/(mnπ²)`.
#[derive(Debug, Clone)]
pub struct SquareSeriesOracle {
    s: f64,
    truncation: usize,
    raw: f64,
    j_ref: f64,
}

impl SquareSeriesOracle {
    /// `truncation` is the largest odd index kept in the explicit sum.
    pub fn new(s: f64, truncation: usize) -> Result<Self> {
        check_order(s)?;
        let raw = raw_series(s, truncation)?;
        Ok(Self { s, truncation, raw, j_ref: extension_constant(s)? * raw })
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// `Σ λ^{-s} f²`, i.e. `∫ f u`.
    pub fn raw(&self) -> f64 {
        self.raw
    }

    /// `d_s Σ λ^{-s} f²`.
    pub fn j_ref(&self) -> f64 {
        self.j_ref
    }

    /// Truncated series for `u(x)`.
    pub fn evaluate(&self, x: Point) -> f64 {
        let n_tr = self.truncation;
        let mut acc = KahanSum::new();
        let sx: Vec<(f64, f64)> = (1..=n_tr).step_by(2).map(|m| (m as f64, (m as f64 * PI * x[0]).sin())).collect();
        let sy: Vec<(f64, f64)> = (1..=n_tr).step_by(2).map(|n| (n as f64, (n as f64 * PI * x[1]).sin())).collect();
        for &(m, a) in &sx {
            for &(n, b) in &sy {
                let lam = PI * PI * (m * m + n * n);
                acc.add(lam.powf(-self.s) * 8.0 / (m * n * PI * PI) * 2.0 * a * b);
            }
        }
        acc.value()
    }
}

/// `Σ_{m,n odd} λ_mn^{-s} f_mn²` for `0 < s ≤ 1`: the explicit sum over
/// indices up to `truncation` plus an asymptotic tail.
///
/// The strips `m > N ≥ n` use the Euler–Maclaurin formula in `m` with
/// the integral evaluated by Gauss–Jacobi quadrature; the corner
/// `m, n > N` uses the midpoint approximation by a double integral.
pub fn raw_series(s: f64, truncation: usize) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return param_err(format!("series order {s} must lie in (0, 1]"));
    }
    if truncation == 0 || truncation.is_multiple_of(2) {
        return param_err(format!("truncation {truncation} must be a positive odd integer"));
    }
    let big_n = truncation as f64;
    let core = |m: f64, n: f64| (m * m * n * n).recip() * (m * m + n * n).powf(-s);
    let mut sum = KahanSum::new();
    // explicit part, small terms first
    let odd: Vec<f64> = (1..=truncation).step_by(2).map(|m| m as f64).collect();
    for &m in odd.iter().rev() {
        for &n in odd.iter().rev() {
            sum.add(core(m, n));
        }
    }
    let a = big_n + 2.0;
    let rule = gauss_jacobi(30, 2.0 * s)?;
    let mut strip = KahanSum::new();
    for &n in odd.iter().rev() {
        let r = n / a;
        let integral = a.powf(-1.0 - 2.0 * s) * rule.integrate(|t| (1.0 + r * r * t * t).powf(-s));
        let h = a.powi(-2) * (a * a + n * n).powf(-s);
        let dh = -2.0 * a.powi(-3) * (a * a + n * n).powf(-s) - 2.0 * s * a.powi(-1) * (a * a + n * n).powf(-s - 1.0);
        strip.add(n.powi(-2) * (0.5 * integral + 0.5 * h - dh / 6.0));
    }
    let b = big_n + 1.0;
    let corner = 0.25 * b.powf(-2.0 - 2.0 * s) * corner_integral(s)?;
    sum.add(2.0 * strip.value());
    sum.add(corner);
    Ok(64.0 / PI.powi(4) * PI.powf(-2.0 * s) * sum.value())
}

/// `∫∫_{[0,1]²} (u²v²/(u²+v²))^s`, on panels graded towards the origin.
fn corner_integral(s: f64) -> Result<f64> {
    let rule = gauss_legendre(12)?;
    let mut breaks = vec![0.0];
    breaks.extend((0..=20).rev().map(|k| 0.5f64.powi(k)));
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for w in breaks.windows(2) {
        let (x, ww) = rule.mapped(w[0], w[1]);
        pts.extend(x);
        wts.extend(ww);
    }
    let mut acc = KahanSum::new();
    for (i, &u) in pts.iter().enumerate() {
        for (j, &v) in pts.iter().enumerate() {
            acc.add(wts[i] * wts[j] * (u * u * v * v / (u * u + v * v)).powf(s));
        }
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_term() {
        let s = 0.3;
        let lam = 2.0 * PI * PI;
        let f = 8.0 / (PI * PI);
        let explicit_only = lam.powf(-s) * f * f;
        let raw = raw_series(s, 1).unwrap();
        // the tail adds a positive amount
        assert!(raw > explicit_only);
    }

    #[test]
    fn tail_correction_is_consistent() {
        for s in [0.2, 0.5, 0.8] {
            let a = raw_series(s, 101).unwrap();
            let b = raw_series(s, 401).unwrap();
            assert!(((a - b) / b).abs() < 1e-7, "s = {s}: {a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(raw_series(0.5, 10).is_err());
        assert!(raw_series(1.5, 11).is_err());
        assert!(SquareSeriesOracle::new(1.0, 11).is_err());
    }
}
