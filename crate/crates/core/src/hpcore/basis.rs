//! Hierarchical 1D shape functions on `[-1, 1]`.
//!
//! Index 0 and 1 are the hats `(1 - t)/2` and `(1 + t)/2`; index `k >= 2` is
//! the integrated Legendre polynomial
//! `N_k = (P_k - P_{k-2}) / sqrt(2(2k - 1))`, which vanishes at both ends
//! and has derivative `sqrt((2k - 1)/2) P_{k-1}`.

/// Values and derivatives of the shape functions `0..=q` at `t`.
pub fn eval(q: usize, t: f64, vals: &mut [f64], ders: &mut [f64]) {
    vals[0] = 0.5 * (1.0 - t);
    vals[1] = 0.5 * (1.0 + t);
    ders[0] = -0.5;
    ders[1] = 0.5;
    if q < 2 {
        return;
    }
    // P_0 .. P_q by the three-term recurrence
    let mut p = [0.0f64; 64];
    p[0] = 1.0;
    p[1] = t;
    for k in 2..=q {
        let kf = k as f64;
        p[k] = ((2.0 * kf - 1.0) * t * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
    }
    for k in 2..=q {
        let kf = k as f64;
        vals[k] = (p[k] - p[k - 2]) / (2.0 * (2.0 * kf - 1.0)).sqrt();
        ders[k] = ((2.0 * kf - 1.0) / 2.0).sqrt() * p[k - 1];
    }
}

/// Largest supported 1D degree.
pub const MAX_DEGREE: usize = 60;

/// Shape function values (`vals[i][k]`) and derivatives at a set of points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub vals: Vec<Vec<f64>>,
    pub ders: Vec<Vec<f64>>,
}

pub fn tabulate(q: usize, points: &[f64]) -> Tabulation {
    let mut vals = vec![vec![0.0; points.len()]; q + 1];
    let mut ders = vec![vec![0.0; points.len()]; q + 1];
    let mut v = vec![0.0; q.max(1) + 1];
    let mut d = vec![0.0; q.max(1) + 1];
    for (j, &t) in points.iter().enumerate() {
        eval(q, t, &mut v, &mut d);
        for k in 0..=q {
            vals[k][j] = v[k];
            ders[k][j] = d[k];
        }
    }
    Tabulation { vals, ders }
}
