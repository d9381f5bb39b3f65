//! Sinc quadrature of the Balakrishnan integral
//! `L^{-s} = (sin(πs)/π) ∫_ℝ e^{(1-s)y} (e^y + L)^{-1} dy`.
//!
//! In the scaled form used here node `y_ℓ = ℓk` contributes the weight
//! `k (sin(πs)/π) e^{-s y_ℓ}` and the resolvent `(1 + e^{-y_ℓ} L)^{-1}`,
//! i.e. one reaction–diffusion problem `ε_ℓ² L w + w = f`, `ε_ℓ = e^{-y_ℓ/2}`.

use crate::error::{param_err, Error, Result};
use crate::linsolve::{solve_spd, Mat};
use crate::meshgen::PolygonDomain;
use crate::shifted::{common_space, scale_resolved, solve_common, solve_minimal, Case, DomainParams, ShiftedSolve, Source};
use crate::special::{balakrishnan_constant, check_order, KahanSum};

/// Choice of the node range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SincVariant {
    /// `K1 = ⌈π²/(2(1-s)k²)⌉`, `K2 = ⌈π²/(s k²)⌉`.
    Practical,
    /// `K1 = K2 = K` and `k = 1/√K`.
    Symmetric(usize),
}

/// Nodes, weights and shifts of a sinc rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SincRule {
    pub s: f64,
    pub k: f64,
    pub k1: usize,
    pub k2: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `e^{-y_ℓ}`, the squared scales.
    pub shifts: Vec<f64>,
}

/// Builds the rule with step `k`; the symmetric variant derives its step
/// from `K` and ignores `k`.
pub fn build_sinc_rule(s: f64, k: f64, variant: SincVariant) -> Result<SincRule> {
    check_order(s)?;
    let (k, k1, k2) = match variant {
        SincVariant::Practical => {
            if !(k > 0.0) || !k.is_finite() {
                return param_err(format!("sinc step {k} must be positive"));
            }
            let pi2 = std::f64::consts::PI.powi(2);
            let k1 = (pi2 / (2.0 * (1.0 - s) * k * k)).ceil();
            let k2 = (pi2 / (s * k * k)).ceil();
            if k1 + k2 > 1e8 {
                return param_err(format!("sinc step {k} needs too many nodes"));
            }
            (k, k1 as usize, k2 as usize)
        }
        SincVariant::Symmetric(kk) => {
            if kk == 0 {
                return param_err("symmetric sinc rule needs K >= 1");
            }
            (1.0 / (kk as f64).sqrt(), kk, kk)
        }
    };
    let c_b = balakrishnan_constant(s)?;
    let nodes: Vec<f64> = (-(k1 as i64)..=k2 as i64).map(|l| l as f64 * k).collect();
    let weights = nodes.iter().map(|y| c_b * k * (-s * y).exp()).collect();
    let shifts = nodes.iter().map(|y| (-y).exp()).collect();
    Ok(SincRule { s, k, k1, k2, nodes, weights, shifts })
}

impl SincRule {
    /// Number of nodes, the number of linear systems.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ_ℓ w_ℓ / (1 + ε_ℓ² λ) ≈ λ^{-s}`.
    pub fn scalar_apply(&self, lambda: f64) -> f64 {
        let mut acc = KahanSum::new();
        for (w, e2) in self.weights.iter().zip(&self.shifts) {
            acc.add(w / (1.0 + e2 * lambda));
        }
        acc.value()
    }

    /// `Σ_ℓ w_ℓ (I + ε_ℓ² A)^{-1} b` for a dense SPD matrix `A`.
    pub fn apply_matrix(&self, a: &Mat<f64>, b: &[f64]) -> Result<Vec<f64>> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n {
            return param_err("matrix and vector sizes differ");
        }
        let mut acc = vec![KahanSum::new(); n];
        for (w, e2) in self.weights.iter().zip(&self.shifts) {
            let shifted = Mat::from_fn(n, n, |i, j| e2 * a[(i, j)] + if i == j { 1.0 } else { 0.0 });
            let x = solve_spd(&shifted, b)?;
            for (s, xi) in acc.iter_mut().zip(x) {
                s.add(w * xi);
            }
        }
        Ok(acc.iter().map(|s| s.value()).collect())
    }

    /// `K` of the scale-resolution condition `σ^L ≤ c₁ e^{-K/2}`.
    pub fn resolution_index(&self) -> usize {
        self.k1.max(self.k2)
    }
}

/// Parameters of [`solve_sinc`].
#[derive(Debug, Clone, PartialEq)]
pub struct SincParams {
    /// Step; default `(4/3)/p`.
    pub k: Option<f64>,
    pub variant: SincVariant,
    /// Domain discretisation; default [`DomainParams::steering`]`(p)`.
    pub domain: Option<DomainParams>,
    pub keep_fields: bool,
}

impl Default for SincParams {
    fn default() -> Self {
        Self { k: None, variant: SincVariant::Practical, domain: None, keep_fields: true }
    }
}

/// One node of the rule and its solved problem.
#[derive(Debug, Clone)]
pub struct SincNode {
    pub weight: f64,
    pub solve: ShiftedSolve,
}

/// Result of [`solve_sinc`]: `Σ_ℓ w_ℓ w_ℓ^{hp} ≈ L^{-s} f`.
#[derive(Debug, Clone)]
pub struct SincSolution {
    pub rule: SincRule,
    pub case: Case,
    pub nodes: Vec<SincNode>,
    pub warnings: Vec<String>,
}

impl SincSolution {
    pub fn num_systems(&self) -> usize {
        self.nodes.len()
    }

    /// Free dofs summed over all problems.
    pub fn total_dofs(&self) -> usize {
        self.nodes.iter().map(|n| n.solve.num_dofs).sum()
    }

    /// `∫ f Σ w_ℓ w_ℓ^{hp}` for the source the problems were solved with,
    /// reduced in node order.
    pub fn functional(&self) -> f64 {
        let mut acc = KahanSum::new();
        for n in &self.nodes {
            acc.add(n.weight * n.solve.f_dot);
        }
        acc.value()
    }
}

/// `Σ_ℓ w_ℓ ∫ f w_ℓ^{hp}`; needs the fields.
pub fn sinc_functional(solution: &SincSolution, f: Source<'_>) -> Result<f64> {
    let mut acc = KahanSum::new();
    for (i, n) in solution.nodes.iter().enumerate() {
        let field = n.solve.field.as_ref().ok_or_else(|| Error::Parameter(format!("field of node {i} was not kept")))?;
        acc.add(n.weight * field.integrate_f_dot(f));
    }
    Ok(acc.value())
}

/// The sinc method with steering parameter `p`.
pub fn solve_sinc(
    domain: &PolygonDomain,
    f: Source<'_>,
    s: f64,
    p: usize,
    case: Case,
    params: &SincParams,
) -> Result<SincSolution> {
    if p == 0 {
        return param_err("p must be at least 1");
    }
    let k = params.k.unwrap_or(4.0 / (3.0 * p as f64));
    let rule = build_sinc_rule(s, k, params.variant)?;
    let dp = params.domain.clone().unwrap_or_else(|| DomainParams::steering(p));
    let problems: Vec<(f64, f64)> = rule.shifts.iter().map(|&e2| (e2, 1.0)).collect();
    let mut warnings = Vec::new();
    let solves = match case {
        Case::B => {
            let kk = rule.resolution_index() as f64;
            if !scale_resolved(&dp, (-0.5 * kk).exp()) {
                warnings.push(format!(
                    "scale resolution violated: sigma^L = {:.3e} > c1 * exp(-K/2) = {:.3e}",
                    dp.sigma.powi(dp.layers as i32),
                    dp.c1 * (-0.5 * kk).exp()
                ));
            }
            solve_common(common_space(domain, &dp)?, &problems, f, &dp, params.keep_fields)?
        }
        Case::A => {
            let scales: Vec<f64> = rule.nodes.iter().map(|y| (-0.5 * y).exp()).collect();
            solve_minimal(domain, &problems, &scales, f, &dp, params.keep_fields)?
        }
    };
    let nodes = rule.weights.iter().zip(solves).map(|(&weight, solve)| SincNode { weight, solve }).collect();
    Ok(SincSolution { rule, case, nodes, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn practical_counts() {
        let r = build_sinc_rule(0.5, 4.0 / 9.0, SincVariant::Practical).unwrap();
        assert_eq!((r.k1, r.k2, r.len()), (50, 100, 151));
    }

    #[test]
    fn symmetric_rule() {
        let r = build_sinc_rule(0.3, 0.0, SincVariant::Symmetric(4)).unwrap();
        assert_eq!(r.k, 0.5);
        let expect: Vec<f64> = (-4..=4).map(|l| l as f64 * 0.5).collect();
        assert_eq!(r.nodes, expect);
        let r = build_sinc_rule(0.3, 0.0, SincVariant::Symmetric(16)).unwrap();
        assert_eq!(r.len(), 33);
    }

    #[test]
    fn weights_and_shifts() {
        let r = build_sinc_rule(0.5, 0.5, SincVariant::Practical).unwrap();
        assert!(r.weights.iter().all(|&w| w > 0.0));
        assert!(r.shifts.windows(2).all(|w| w[1] < w[0]));
        let mid = r.k1;
        assert!((r.weights[mid] - 0.5 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn scalar_powers() {
        let r = build_sinc_rule(0.5, 0.1, SincVariant::Practical).unwrap();
        assert!((r.scalar_apply(4.0) - 0.5).abs() < 1e-12);
        assert!((r.scalar_apply(1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_order_rejected() {
        assert!(build_sinc_rule(1.0, 0.5, SincVariant::Practical).is_err());
        assert!(build_sinc_rule(0.5, 0.0, SincVariant::Practical).is_err());
    }
}
