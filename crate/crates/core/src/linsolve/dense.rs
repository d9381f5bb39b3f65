use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Eigenpairs of the pencil `μ S v = M v`.
///
/// Columns of `vectors` are normalised so that `VᵀSV = I` and
/// `VᵀMV = diag(μ)`. Eigenvalues are sorted in descending order and every
/// column is signed so that its first coefficient is non-negative; `trace`
/// holds those first coefficients.
#[derive(Debug, Clone)]
pub struct EigSystem {
    pub mu: Vec<f64>,
    pub vectors: Mat<f64>,
    pub trace: Vec<f64>,
    /// Ratio of the extreme squared pivots of the scaled Cholesky factor of `S`.
    pub cond_estimate: f64,
}

impl EigSystem {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// `max |VᵀSV − I|` and `max |VᵀMV − diag(μ)|`.
    pub fn normalization_residuals(&self, s: &Mat<f64>, m: &Mat<f64>) -> (f64, f64) {
        let v = &self.vectors;
        let vsv = v.transpose() * s * v;
        let vmv = v.transpose() * m * v;
        let n = self.len();
        let mut rs = 0.0f64;
        let mut rm = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                let mu = if i == j { self.mu[i] } else { 0.0 };
                rs = rs.max((vsv[(i, j)] - id).abs());
                rm = rm.max((vmv[(i, j)] - mu).abs());
            }
        }
        (rs, rm)
    }
}

/// Dense Cholesky factor `A = L Lᵀ`, lower triangle returned.
pub fn cholesky(a: &Mat<f64>) -> Result<Mat<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Parameter("cholesky needs a square matrix".into()));
    }
    let mut l = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Definiteness(format!("non-positive pivot {d:e} at row {j}")));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut x = a[(i, j)];
            for k in 0..j {
                x -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = x / d;
        }
    }
    Ok(l)
}

/// Solves `L X = B` in place for lower-triangular `L`.
fn forward_subst(l: &Mat<f64>, b: &mut Mat<f64>) {
    let n = l.nrows();
    for c in 0..b.ncols() {
        for i in 0..n {
            let mut x = b[(i, c)];
            for k in 0..i {
                x -= l[(i, k)] * b[(k, c)];
            }
            b[(i, c)] = x / l[(i, i)];
        }
    }
}

/// Solves `Lᵀ X = B` in place for lower-triangular `L`.
fn backward_subst_transposed(l: &Mat<f64>, b: &mut Mat<f64>) {
    let n = l.nrows();
    for c in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut x = b[(i, c)];
            for k in i + 1..n {
                x -= l[(k, i)] * b[(k, c)];
            }
            b[(i, c)] = x / l[(i, i)];
        }
    }
}

/// Solves `A x = b` with a dense Cholesky factorisation.
pub fn solve_spd(a: &Mat<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let l = cholesky(a)?;
    let mut x = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    forward_subst(&l, &mut x);
    backward_subst_transposed(&l, &mut x);
    Ok((0..b.len()).map(|i| x[(i, 0)]).collect())
}

fn check_symmetric(a: &Mat<f64>, name: &str) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Parameter(format!("{name} is not square")));
    }
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for j in 0..n {
        for i in j + 1..n {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale.max(a[(i, j)].abs()) {
                return Err(Error::Parameter(format!("{name} is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Full spectrum of the symmetric-definite pencil `μ S v = M v`.
///
/// `S` is Jacobi-scaled, reduced with its Cholesky factor to a standard
/// symmetric problem and handed to a dense QR-type eigensolver. On strongly
/// graded meshes the spectrum spans many more orders of magnitude than the
/// reduction resolves, so eigenvalues below `1e-6` of the largest are
/// recomputed by Rayleigh–Ritz on the subspace of their eigenvectors,
/// recursively.
pub fn gen_eig_sym(s: &Mat<f64>, m: &Mat<f64>) -> Result<EigSystem> {
    check_symmetric(s, "S")?;
    check_symmetric(m, "M")?;
    let n = s.nrows();
    if m.nrows() != n {
        return Err(Error::Parameter(format!(
            "pencil dimensions differ: {} vs {}",
            n,
            m.nrows()
        )));
    }
    if n == 0 {
        return Ok(EigSystem { mu: vec![], vectors: Mat::zeros(0, 0), trace: vec![], cond_estimate: 1.0 });
    }
    let (_, q0, cond_estimate) = eig_refined(s, m, 0)?;
    // one more pass in the computed basis, where S is close to the identity
    let s1 = symmetrized(&(q0.transpose() * s * &q0));
    let m1 = symmetrized(&(q0.transpose() * m * &q0));
    let (mut lambda, q1, _) = eig_refined(&s1, &m1, 0)?;
    let mut q = &q0 * &q1;
    // Rayleigh quotients are second-order accurate in the vector error
    let sq = s * &q;
    let mq = m * &q;
    for k in 0..n {
        let (mut vsv, mut vmv) = (0.0, 0.0);
        for i in 0..n {
            vsv += q[(i, k)] * sq[(i, k)];
            vmv += q[(i, k)] * mq[(i, k)];
        }
        if vsv > 0.0 {
            lambda[k] = vmv / vsv;
            let scale = 1.0 / vsv.sqrt();
            for i in 0..n {
                q[(i, k)] *= scale;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lambda[b].total_cmp(&lambda[a]));
    let mut vectors = Mat::<f64>::zeros(n, n);
    let mut mu = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        mu.push(lambda[k]);
        let sign = if q[(0, k)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, col)] = sign * q[(i, k)];
        }
    }
    if let Some(bad) = mu.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::Definiteness(format!("pencil has non-positive eigenvalue {bad:e}")));
    }
    let trace = (0..n).map(|j| vectors[(0, j)]).collect();
    Ok(EigSystem { mu, vectors, trace, cond_estimate })
}

fn symmetrized(a: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

const DEFLATION_RATIO: f64 = 1e-6;

/// Unsorted eigenpairs with `S`-normalised vectors, plus the pivot ratio
/// of the scaled Cholesky factor.
fn eig_refined(s: &Mat<f64>, m: &Mat<f64>, depth: usize) -> Result<(Vec<f64>, Mat<f64>, f64)> {
    let n = s.nrows();
    if n == 1 {
        if !(s[(0, 0)] > 0.0) {
            return Err(Error::Definiteness(format!("S = {:e} is not positive", s[(0, 0)])));
        }
        let v = 1.0 / s[(0, 0)].sqrt();
        return Ok((vec![m[(0, 0)] / s[(0, 0)]], Mat::from_fn(1, 1, |_, _| v), 1.0));
    }
    let (lambda, mut q, cond) = eig_reduced(s, m)?;
    let top = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let small: Vec<usize> = (0..n).filter(|&k| lambda[k] < DEFLATION_RATIO * top).collect();
    if small.is_empty() || small.len() == n || depth >= 40 {
        return Ok((lambda, q, cond));
    }
    let w = Mat::from_fn(n, small.len(), |i, j| q[(i, small[j])]);
    let sw = w.transpose() * s * &w;
    let mw = w.transpose() * m * &w;
    let sw = symmetrized(&sw);
    let mw = symmetrized(&mw);
    let (sub_lambda, sub_q, _) = eig_refined(&sw, &mw, depth + 1)?;
    let refined = &w * &sub_q;
    let mut lambda = lambda;
    for (j, &col) in small.iter().enumerate() {
        lambda[col] = sub_lambda[j];
        for i in 0..n {
            q[(i, col)] = refined[(i, j)];
        }
    }
    Ok((lambda, q, cond))
}

/// One Cholesky reduction: `C = L⁻¹ D M D L⁻ᵀ` with `D S D = L Lᵀ`.
fn eig_reduced(s: &Mat<f64>, m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>, f64)> {
    let n = s.nrows();
    let mut d = vec![0.0; n];
    for i in 0..n {
        if !(s[(i, i)] > 0.0) {
            return Err(Error::Definiteness(format!("S has non-positive diagonal at {i}")));
        }
        d[i] = 1.0 / s[(i, i)].sqrt();
    }
    let s_hat = Mat::from_fn(n, n, |i, j| d[i] * s[(i, j)] * d[j]);
    let l = cholesky(&s_hat)?;
    let (mut pmin, mut pmax) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let p = l[(i, i)] * l[(i, i)];
        pmin = pmin.min(p);
        pmax = pmax.max(p);
    }
    let mut c = Mat::from_fn(n, n, |i, j| d[i] * m[(i, j)] * d[j]);
    forward_subst(&l, &mut c);
    let mut ct = c.transpose().to_owned();
    forward_subst(&l, &mut ct);
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (ct[(i, j)] + ct[(j, i)]));
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Definiteness(format!("symmetric eigensolver failed: {e:?}")))?;
    let lambda: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    let mut q = evd.U().to_owned();
    backward_subst_transposed(&l, &mut q);
    for i in 0..n {
        for j in 0..n {
            q[(i, j)] *= d[i];
        }
    }
    Ok((lambda, q, pmax / pmin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
        let a = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mut s = a.transpose() * &a;
        for i in 0..n {
            s[(i, i)] += n as f64 * 0.1;
        }
        s
    }

    #[test]
    fn identity_and_diagonal() {
        let s = Mat::<f64>::identity(2, 2);
        let mut m = Mat::<f64>::zeros(2, 2);
        m[(0, 0)] = 2.0;
        m[(1, 1)] = 3.0;
        let e = gen_eig_sym(&s, &m).unwrap();
        assert!((e.mu[0] - 3.0).abs() < 1e-14);
        assert!((e.mu[1] - 2.0).abs() < 1e-14);
        assert!((e.vectors[(1, 0)].abs() - 1.0).abs() < 1e-14);
        assert!((e.vectors[(0, 1)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_hat_pencil() {
        // S = 1/Y, M = Y/3 for the hat (1 - y/Y) on (0, Y)
        let y = 2.5;
        let s = Mat::from_fn(1, 1, |_, _| 1.0 / y);
        let m = Mat::from_fn(1, 1, |_, _| y / 3.0);
        let e = gen_eig_sym(&s, &m).unwrap();
        assert!((e.mu[0] - y * y / 3.0).abs() < 1e-14);
        assert!((e.trace[0] - y.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn random_pair_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20;
        let s = random_spd(n, &mut rng);
        let m = random_spd(n, &mut rng);
        let e = gen_eig_sym(&s, &m).unwrap();
        for k in 0..n {
            let v = e.vectors.col(k);
            let r = &m * v - (&s * v) * faer::Scale(e.mu[k]);
            let norm = r.norm_max();
            assert!(norm <= 1e-10, "pair {k}: residual {norm:e}");
        }
        let (rs, rm) = e.normalization_residuals(&s, &m);
        assert!(rs <= 1e-10 && rm <= 1e-10, "{rs:e} {rm:e}");
        for w in e.mu.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(e.trace.iter().all(|&t| t >= 0.0));
    }

    #[test]
    fn spectrum_invariant_under_congruence() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 12;
        let s = random_spd(n, &mut rng);
        let m = random_spd(n, &mut rng);
        let mut c = Mat::from_fn(n, n, |_, _| rng.random_range(-0.2..0.2));
        for i in 0..n {
            c[(i, i)] += 1.0;
        }
        let s2 = c.transpose() * &s * &c;
        let m2 = c.transpose() * &m * &c;
        let s2 = Mat::from_fn(n, n, |i, j| 0.5 * (s2[(i, j)] + s2[(j, i)]));
        let m2 = Mat::from_fn(n, n, |i, j| 0.5 * (m2[(i, j)] + m2[(j, i)]));
        let a = gen_eig_sym(&s, &m).unwrap();
        let b = gen_eig_sym(&s2, &m2).unwrap();
        for (x, y) in a.mu.iter().zip(&b.mu) {
            assert!(((x - y) / x).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn indefinite_s_is_rejected() {
        let mut s = Mat::<f64>::identity(2, 2);
        s[(0, 1)] = 2.0;
        s[(1, 0)] = 2.0;
        let m = Mat::<f64>::identity(2, 2);
        assert!(matches!(gen_eig_sym(&s, &m), Err(Error::Definiteness(_))));
    }

    #[test]
    fn dense_spd_solve() {
        let a = Mat::from_fn(3, 3, |i, j| match (i as i64 - j as i64).abs() {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let x = solve_spd(&a, &[1.0, 1.0, 1.0]).unwrap();
        for (xi, ei) in x.iter().zip([1.5, 2.0, 1.5]) {
            assert!((xi - ei).abs() < 1e-14);
        }
    }
}
