use std::f64::consts::PI;

use faer::{Mat, Side};

use crate::error::{param_err, Result};
use crate::special::gamma;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadKind {
    /// Unit weight on `(-1, 1)`.
    Legendre,
    /// Weight `t^alpha` on `(0, 1)`.
    Jacobi(f64),
}

/// A Gauss rule on its reference interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule1D {
    pub kind: QuadKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to `f` (the weight is implicit).
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Nodes and weights of a Legendre rule transplanted to `(a, b)`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        debug_assert!(matches!(self.kind, QuadKind::Legendre));
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        (self.nodes.iter().map(|x| m + h * x).collect(), self.weights.iter().map(|w| h * w).collect())
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule on `(-1, 1)`, exact up to degree `2n-1`.
pub fn gauss_legendre(n: usize) -> Result<QuadRule1D> {
    if n == 0 {
        return param_err("Gauss-Legendre rule needs at least one node");
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos() * (1.0 - (nf - 1.0) / (8.0 * nf.powi(3)));
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadRule1D { kind: QuadKind::Legendre, nodes, weights })
}

/// `n`-point Gauss–Jacobi rule for `∫₀¹ t^alpha g(t) dt`, exact when `g` is a
/// polynomial of degree up to `2n-1`.
///
/// Golub–Welsch: eigen-decomposition of the Jacobi matrix of the weight
/// `(1+x)^alpha` on `(-1, 1)`, then the affine map to `(0, 1)`.
pub fn gauss_jacobi(n: usize, alpha: f64) -> Result<QuadRule1D> {
    if n == 0 {
        return param_err("Gauss-Jacobi rule needs at least one node");
    }
    if !(alpha > -1.0) || !alpha.is_finite() {
        return param_err(format!("Jacobi exponent {alpha} must exceed -1"));
    }
    let (a, b) = (0.0f64, alpha);
    let ab = a + b;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    diag[0] = (b - a) / (ab + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let t = 2.0 * kf + ab;
        diag[k] = (b * b - a * a) / (t * (t + 2.0));
        let beta = 4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (t * t * (t + 1.0) * (t - 1.0));
        off[k - 1] = beta.sqrt();
    }
    let jac = Mat::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i == j + 1 {
            off[j]
        } else if j == i + 1 {
            off[i]
        } else {
            0.0
        }
    });
    let evd = jac
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| crate::Error::Parameter(format!("Jacobi matrix eigensolve failed: {e:?}")))?;
    let mu0 = 2f64.powf(ab + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(ab + 2.0);
    let scale = 2f64.powf(b + 1.0);
    let ev = evd.S().column_vector();
    let u = evd.U();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let x = ev[k];
            let w = mu0 * u[(0, k)] * u[(0, k)];
            (0.5 * (1.0 + x), w / scale)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(QuadRule1D {
        kind: QuadKind::Jacobi(alpha),
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}
