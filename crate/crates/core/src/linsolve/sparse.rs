use std::sync::{Arc, Once};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Par, Side};

use crate::error::{Error, Result, SolverMode};

static SEQUENTIAL: Once = Once::new();

// Parallelism lives one level up (across shifts and modes); inside a
// factorisation we want bitwise reproducible results.
fn init_backend() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Column-compressed sparsity structure holding both triangles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Builds the pattern from per-column row lists. Lists are sorted and
    /// deduplicated; the caller is responsible for symmetry.
    pub fn from_columns(mut columns: Vec<Vec<usize>>) -> Self {
        let n = columns.len();
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for col in columns.iter_mut() {
            col.sort_unstable();
            col.dedup();
            row_idx.extend_from_slice(col);
            col_ptr.push(row_idx.len());
        }
        Self { n, col_ptr, row_idx }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    /// Position of entry `(i, j)` in the value array.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        self.row_idx[a..b].binary_search(&i).ok().map(|k| a + k)
    }

    fn symbolic(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx)
    }
}

/// Symmetric sparse matrix stored with both triangles.
///
/// Matrices assembled on the same space share one [`SparsityPattern`], so
/// linear combinations are cheap and a symbolic factorisation can be reused.
#[derive(Debug, Clone)]
pub struct SymSparse {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl SymSparse {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn identity(n: usize) -> Self {
        let pattern = Arc::new(SparsityPattern::from_columns((0..n).map(|j| vec![j]).collect()));
        Self { pattern, values: vec![1.0; n] }
    }

    /// Sums duplicate triplets. Every off-diagonal entry must be given in
    /// both triangles.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut columns = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            if i >= n || j >= n {
                return Err(Error::Parameter(format!("triplet ({i}, {j}) outside {n}x{n}")));
            }
            columns[j].push(i);
        }
        let mut m = Self::zeros(Arc::new(SparsityPattern::from_columns(columns)));
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        let asym = m.max_asymmetry();
        if asym > 0.0 {
            return Err(Error::Parameter(format!("triplets are not symmetric (gap {asym:e})")));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Adds `v` to entry `(i, j)`. Panics if the entry is not in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.pattern.find(i, j).expect("entry outside sparsity pattern");
        self.values[k] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        let p = &self.pattern;
        for j in 0..p.n {
            let xj = x[j];
            for k in p.col_ptr[j]..p.col_ptr[j + 1] {
                y[p.row_idx[k]] += self.values[k] * xj;
            }
        }
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let p = &self.pattern;
        let mut acc = 0.0;
        for j in 0..p.n {
            let mut col = 0.0;
            for k in p.col_ptr[j]..p.col_ptr[j + 1] {
                col += self.values[k] * x[p.row_idx[k]];
            }
            acc += col * y[j];
        }
        acc
    }

    /// `a·self + b·other`; both operands must share one pattern.
    pub fn combine(&self, a: f64, other: &SymSparse, b: f64) -> Result<SymSparse> {
        if !Arc::ptr_eq(&self.pattern, &other.pattern) && *self.pattern != *other.pattern {
            return Err(Error::Parameter("combined matrices have different patterns".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(SymSparse { pattern: self.pattern.clone(), values })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let p = &self.pattern;
        let mut worst = 0.0f64;
        for j in 0..p.n {
            for k in p.col_ptr[j]..p.col_ptr[j + 1] {
                let i = p.row_idx[k];
                let t = p.find(j, i).map_or(f64::INFINITY, |kt| (self.values[k] - self.values[kt]).abs());
                worst = worst.max(t);
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let p = &self.pattern;
        let mut m = Mat::zeros(p.n, p.n);
        for j in 0..p.n {
            for k in p.col_ptr[j]..p.col_ptr[j + 1] {
                m[(p.row_idx[k], j)] = self.values[k];
            }
        }
        m
    }
}

/// Fill-reducing ordering and elimination structure for one pattern.
#[derive(Debug, Clone)]
pub struct SymbolicCholesky {
    pattern: Arc<SparsityPattern>,
    inner: SymbolicLlt<usize>,
}

pub fn analyze(pattern: &Arc<SparsityPattern>) -> Result<SymbolicCholesky> {
    init_backend();
    let inner = SymbolicLlt::try_new(pattern.symbolic(), Side::Lower).map_err(|e| Error::Solver {
        mode: SolverMode::Direct,
        msg: format!("symbolic analysis failed: {e:?}"),
    })?;
    Ok(SymbolicCholesky { pattern: pattern.clone(), inner })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

enum Backend {
    Direct(Llt<usize, f64>),
    Cg { inv_diag: Vec<f64>, max_iter: usize },
}

/// A factorised (direct) or preconditioned (CG) SPD operator.
///
/// Solves only read the handle, so one handle may serve many threads.
pub struct FactorHandle {
    matrix: SymSparse,
    backend: Backend,
    tol: f64,
}

impl std::fmt::Debug for FactorHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FactorHandle")
            .field("dim", &self.dim())
            .field("mode", &self.mode())
            .field("tol", &self.tol)
            .finish()
    }
}

pub fn factor_spd(matrix: &SymSparse, mode: SolverMode, tol: f64) -> Result<FactorHandle> {
    factor_spd_with(matrix, None, mode, tol)
}

/// As [`factor_spd`], reusing a symbolic analysis of the matrix pattern.
pub fn factor_spd_with(
    matrix: &SymSparse,
    symbolic: Option<&SymbolicCholesky>,
    mode: SolverMode,
    tol: f64,
) -> Result<FactorHandle> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("solver tolerance {tol} must be positive")));
    }
    let backend = match mode {
        SolverMode::Direct => {
            let owned;
            let symbolic = match symbolic {
                Some(s) if Arc::ptr_eq(&s.pattern, &matrix.pattern) || *s.pattern == *matrix.pattern => s,
                Some(_) => return Err(Error::Parameter("symbolic factor belongs to another pattern".into())),
                None => {
                    owned = analyze(&matrix.pattern)?;
                    &owned
                }
            };
            let p = &matrix.pattern;
            let a = SparseColMatRef::new(p.symbolic(), &matrix.values);
            let llt = Llt::try_new_with_symbolic(symbolic.inner.clone(), a, Side::Lower).map_err(|e| Error::Solver {
                mode: SolverMode::Direct,
                msg: format!("Cholesky breakdown (non-positive pivot): {e:?}"),
            })?;
            Backend::Direct(llt)
        }
        SolverMode::Cg => {
            let diag = matrix.diagonal();
            if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
                return Err(Error::Solver { mode: SolverMode::Cg, msg: format!("non-positive diagonal at {i}") });
            }
            let n = matrix.dim();
            Backend::Cg { inv_diag: diag.iter().map(|d| 1.0 / d).collect(), max_iter: (10 * n).max(1000) }
        }
    };
    Ok(FactorHandle { matrix: matrix.clone(), backend, tol })
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

impl FactorHandle {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn mode(&self) -> SolverMode {
        match self.backend {
            Backend::Direct(_) => SolverMode::Direct,
            Backend::Cg { .. } => SolverMode::Cg,
        }
    }

    pub fn matrix(&self) -> &SymSparse {
        &self.matrix
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_with_stats(b).map(|(x, _)| x)
    }

    pub fn solve_with_stats(&self, b: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Parameter(format!("right-hand side has length {} (expected {n})", b.len())));
        }
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok((vec![0.0; n], SolveStats { iterations: 0, relative_residual: 0.0 }));
        }
        match &self.backend {
            Backend::Direct(llt) => self.solve_direct(llt, b, bnorm),
            Backend::Cg { inv_diag, max_iter } => self.solve_cg(inv_diag, *max_iter, b, bnorm),
        }
    }

    fn solve_direct(&self, llt: &Llt<usize, f64>, b: &[f64], bnorm: f64) -> Result<(Vec<f64>, SolveStats)> {
        let n = b.len();
        let apply = |r: &[f64]| {
            let mut m = Mat::from_fn(n, 1, |i, _| r[i]);
            llt.solve_in_place(m.as_mut());
            (0..n).map(|i| m[(i, 0)]).collect::<Vec<f64>>()
        };
        let mut x = apply(b);
        let mut ax = vec![0.0; n];
        let mut rel = f64::INFINITY;
        // a few steps of iterative refinement for badly scaled systems
        for step in 0..4 {
            self.matrix.matvec_into(&x, &mut ax);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            rel = norm(&r) / bnorm;
            if rel <= self.tol {
                return Ok((x, SolveStats { iterations: step, relative_residual: rel }));
            }
            if step < 3 {
                let dx = apply(&r);
                x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
            }
        }
        if !rel.is_finite() {
            return Err(Error::Solver { mode: SolverMode::Direct, msg: "non-finite solution".into() });
        }
        Err(Error::Solver {
            mode: SolverMode::Direct,
            msg: format!("relative residual {rel:e} above tolerance {:e} after refinement", self.tol),
        })
    }

    fn solve_cg(&self, inv_diag: &[f64], max_iter: usize, b: &[f64], bnorm: f64) -> Result<(Vec<f64>, SolveStats)> {
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        for it in 1..=max_iter {
            self.matrix.matvec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Solver { mode: SolverMode::Cg, msg: format!("curvature {pap:e} at iteration {it}") });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rel = norm(&r) / bnorm;
            if rel <= self.tol {
                // confirm with the true residual
                self.matrix.matvec_into(&x, &mut ap);
                let true_rel = norm(&b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / bnorm;
                if true_rel <= self.tol * 10.0 {
                    return Ok((x, SolveStats { iterations: it, relative_residual: true_rel }));
                }
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::Solver {
            mode: SolverMode::Cg,
            msg: format!("stagnated: no convergence to {:e} in {max_iter} iterations", self.tol),
        })
    }
}
