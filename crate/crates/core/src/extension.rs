//! The extension method: hp-FEM in the extended variable `y ∈ (0, Y)`,
//! diagonalisation of the weighted 1D pencil and the decoupled
//! reaction–diffusion solves in the domain.
//!
//! The discrete extension solution is `Σ_i U_i(x) v_i(y)` where
//! `(v_i, μ_i)` solve `μ ∫ y^α v' w' = ∫ y^α v w` and
//! `μ_i a(U_i, V) + (U_i, V) = d_s v_i(0) (f, V)`.

use std::sync::Arc;

use crate::error::{param_err, Error, Result};
use crate::hpcore::basis::eval;
use crate::hpcore::{gauss_jacobi, gauss_legendre, HpSpace};
use crate::linsolve::{gen_eig_sym, EigSystem, Mat};
use crate::meshgen::{build_1d_geo_mesh, linear_degree_vector, DegreeVector, Mesh1D, PolygonDomain};
use crate::shifted::{common_space, scale_resolved, solve_common, solve_minimal, Case, DomainParams, ShiftedSolve, Source};
use crate::special::{check_order, extension_constant, KahanSum};

/// Order, weight and the discrete space in the extended variable.
#[derive(Debug, Clone)]
pub struct YExtensionSetup {
    s: f64,
    alpha: f64,
    d_s: f64,
    mesh: Mesh1D,
    degrees: DegreeVector,
}

impl YExtensionSetup {
    pub fn new(s: f64, mesh: Mesh1D, degrees: DegreeVector) -> Result<Self> {
        check_order(s)?;
        if degrees.len() != mesh.num_elements() {
            return param_err(format!(
                "{} degrees for {} elements in y",
                degrees.len(),
                mesh.num_elements()
            ));
        }
        if degrees.0.iter().any(|&r| r == 0 || r > crate::hpcore::basis::MAX_DEGREE) {
            return param_err("y degrees must lie in 1..=60");
        }
        Ok(Self { s, alpha: 1.0 - 2.0 * s, d_s: extension_constant(s)?, mesh, degrees })
    }

    /// `Y = p/2`, `M = round(0.79 p/s)` elements graded with `σ_y = 1/4`,
    /// degree `p` on every element (or the linear vector with `slope`).
    pub fn steering(s: f64, p: usize, slope: Option<f64>) -> Result<Self> {
        YSteering { slope, ..YSteering::default() }.setup(s, p)
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    /// Weight exponent `α = 1 - 2s`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `d_s = 2^(1-2s) Γ(1-s)/Γ(s)`.
    pub fn d_s(&self) -> f64 {
        self.d_s
    }

    pub fn truncation(&self) -> f64 {
        self.mesh.length()
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn degrees(&self) -> &DegreeVector {
        &self.degrees
    }

    /// Dimension of the space of continuous piecewise polynomials vanishing
    /// at `Y`.
    pub fn num_dofs(&self) -> usize {
        self.mesh.num_elements() + self.degrees.0.iter().map(|r| r - 1).sum::<usize>()
    }

    /// Global dof of local function `k` on element `i`; `None` for the hat at `Y`.
    fn dof(&self, i: usize, k: usize) -> Option<usize> {
        let m = self.mesh.num_elements();
        match k {
            0 => Some(i),
            1 => (i + 1 < m).then_some(i + 1),
            _ => Some(m + self.degrees.0[..i].iter().map(|r| r - 1).sum::<usize>() + k - 2),
        }
    }

    /// Value at `y ∈ [0, Y]` of the function with coefficients `c`.
    pub fn evaluate(&self, c: &[f64], y: f64) -> f64 {
        let b = self.mesh.breakpoints();
        let i = match b.iter().rposition(|&x| x <= y) {
            Some(i) => i.min(self.mesh.num_elements() - 1),
            None => return 0.0,
        };
        let (a, bb) = self.mesh.element(i);
        let r = self.degrees.0[i];
        let t = (2.0 * (y - a) / (bb - a) - 1.0).clamp(-1.0, 1.0);
        let mut v = vec![0.0; r.max(1) + 1];
        let mut d = v.clone();
        eval(r, t, &mut v, &mut d);
        (0..=r).filter_map(|k| self.dof(i, k).map(|g| c[g] * v[k])).sum()
    }
}

/// Overrides of the `y` discretisation.
#[derive(Debug, Clone, PartialEq)]
pub struct YSteering {
    /// Truncation `Y`; default `p/2`.
    pub truncation: Option<f64>,
    /// Number of elements `M`; default `round(0.79 p/s)`.
    pub elements: Option<usize>,
    pub sigma: f64,
    /// Uniform degree; default `p`.
    pub degree: Option<usize>,
    /// Use the linear degree vector with this slope instead.
    pub slope: Option<f64>,
}

impl Default for YSteering {
    fn default() -> Self {
        Self { truncation: None, elements: None, sigma: 0.25, degree: None, slope: None }
    }
}

impl YSteering {
    pub fn setup(&self, s: f64, p: usize) -> Result<YExtensionSetup> {
        check_order(s)?;
        if p == 0 {
            return param_err("p must be at least 1");
        }
        let y_max = self.truncation.unwrap_or(0.5 * p as f64);
        let m = self.elements.unwrap_or_else(|| ((0.79 * p as f64 / s).round() as usize).max(1));
        let mesh = build_1d_geo_mesh(y_max, m, self.sigma)?;
        let degrees = match self.slope {
            Some(b) => linear_degree_vector(m, b)?,
            None => DegreeVector::uniform(m, self.degree.unwrap_or(p))?,
        };
        YExtensionSetup::new(s, mesh, degrees)
    }
}

/// Weighted stiffness `S_kl = ∫ y^α φ_k' φ_l'` and mass
/// `M_kl = ∫ y^α φ_k φ_l` on `(0, Y)`.
///
/// The element touching `y = 0` is integrated exactly by Gauss–Jacobi
/// quadrature for the weight; the others by Gauss–Legendre with twenty
/// points more than needed for the polynomial part.
pub fn assemble_y_matrices(setup: &YExtensionSetup) -> Result<(Mat<f64>, Mat<f64>)> {
    let n = setup.num_dofs();
    let mut s = Mat::<f64>::zeros(n, n);
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..setup.mesh.num_elements() {
        let h = setup.mesh.element(i).1 - setup.mesh.element(i).0;
        let r = setup.degrees.0[i];
        let (pts, wts) = element_rule(setup, i)?;
        let dofs: Vec<Option<usize>> = (0..=r).map(|k| setup.dof(i, k)).collect();
        let mut v = vec![0.0; r.max(1) + 1];
        let mut d = v.clone();
        for (&t, &w) in pts.iter().zip(&wts) {
            eval(r, t, &mut v, &mut d);
            for k in 0..=r {
                let Some(gk) = dofs[k] else { continue };
                for l in 0..=r {
                    let Some(gl) = dofs[l] else { continue };
                    s[(gk, gl)] += w * d[k] * d[l] * 4.0 / (h * h);
                    m[(gk, gl)] += w * v[k] * v[l];
                }
            }
        }
    }
    Ok((s, m))
}

/// Points in `[-1, 1]` and weights including `y^α dy` on element `i`.
fn element_rule(setup: &YExtensionSetup, i: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (a, b) = setup.mesh.element(i);
    let h = b - a;
    let r = setup.degrees.0[i];
    let alpha = setup.alpha;
    Ok(if i == 0 {
        let rule = gauss_jacobi(r + 1, alpha)?;
        let scale = h.powf(alpha + 1.0);
        rule.nodes.iter().zip(&rule.weights).map(|(&tau, &w)| (2.0 * tau - 1.0, w * scale)).unzip()
    } else {
        let rule = gauss_legendre(r + 20)?;
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| {
                let y = a + 0.5 * h * (t + 1.0);
                (t, w * 0.5 * h * y.powf(alpha))
            })
            .unzip()
    })
}

/// The pencil in the ramp basis: vertex function `j` is one on `(0, y_j)`
/// and falls linearly to zero on element `j`; bubbles are unchanged.
///
/// Ramps have disjoint derivative supports, so the stiffness matrix is
/// block diagonal over elements and stays well conditioned on strongly
/// graded meshes, unlike the nodal one. Nodal coefficients are suffix sums
/// of ramp coefficients.
fn ramp_matrices(setup: &YExtensionSetup) -> Result<(Mat<f64>, Mat<f64>)> {
    let n = setup.num_dofs();
    let nv = setup.mesh.num_elements();
    let mut s = Mat::<f64>::zeros(n, n);
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..nv {
        let h = setup.mesh.element(i).1 - setup.mesh.element(i).0;
        let r = setup.degrees.0[i];
        let (pts, wts) = element_rule(setup, i)?;
        // local functions: the ramp (hat 0) and the bubbles; ramps j > i are one here
        let mut dofs = vec![i];
        dofs.extend((2..=r).map(|k| setup.dof(i, k).expect("bubbles are free")));
        let nl = dofs.len();
        let mut sl = vec![0.0; nl * nl];
        let mut ml = vec![0.0; nl * nl];
        let mut ones = vec![0.0; nl];
        let mut vol = 0.0;
        let mut v = vec![0.0; r.max(1) + 1];
        let mut d = v.clone();
        for (&t, &w) in pts.iter().zip(&wts) {
            eval(r, t, &mut v, &mut d);
            let idx = |a: usize| if a == 0 { 0 } else { a + 1 };
            vol += w;
            for a in 0..nl {
                ones[a] += w * v[idx(a)];
                for b in 0..nl {
                    sl[a * nl + b] += w * d[idx(a)] * d[idx(b)] * 4.0 / (h * h);
                    ml[a * nl + b] += w * v[idx(a)] * v[idx(b)];
                }
            }
        }
        for a in 0..nl {
            for b in 0..nl {
                s[(dofs[a], dofs[b])] += sl[a * nl + b];
                m[(dofs[a], dofs[b])] += ml[a * nl + b];
            }
        }
        for j in i + 1..nv {
            for a in 0..nl {
                m[(j, dofs[a])] += ones[a];
                m[(dofs[a], j)] += ones[a];
            }
            for k in i + 1..nv {
                m[(j, k)] += vol;
            }
        }
    }
    Ok((s, m))
}

/// The eigenpairs of the `y` pencil together with their setup.
#[derive(Debug, Clone)]
pub struct DiagSystem {
    pub setup: YExtensionSetup,
    pub eig: EigSystem,
}

impl DiagSystem {
    pub fn len(&self) -> usize {
        self.eig.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eig.is_empty()
    }

    pub fn mu(&self) -> &[f64] {
        &self.eig.mu
    }

    /// `v_i(0)`.
    pub fn trace(&self) -> &[f64] {
        &self.eig.trace
    }

    /// `v_i(y)`.
    pub fn eval_mode(&self, i: usize, y: f64) -> f64 {
        let c: Vec<f64> = (0..self.len()).map(|k| self.eig.vectors[(k, i)]).collect();
        self.setup.evaluate(&c, y)
    }
}

/// Solves the weighted eigenproblem in `y`. Only the hat at `y = 0` is
/// nonzero there, so `v_i(0)` is the first coefficient of `v_i`.
///
/// The pencil is solved in the ramp basis and the eigenvectors are mapped
/// back to the nodal basis of [`assemble_y_matrices`].
pub fn diagonalize(setup: &YExtensionSetup) -> Result<DiagSystem> {
    let (s, m) = ramp_matrices(setup)?;
    let mut eig = gen_eig_sym(&s, &m)?;
    let nv = setup.mesh.num_elements();
    let v = &mut eig.vectors;
    for col in 0..v.ncols() {
        for row in (0..nv - 1).rev() {
            v[(row, col)] += v[(row + 1, col)];
        }
        if v[(0, col)] < 0.0 {
            for row in 0..v.nrows() {
                v[(row, col)] = -v[(row, col)];
            }
        }
    }
    eig.trace = (0..v.ncols()).map(|col| v[(0, col)]).collect();
    Ok(DiagSystem { setup: setup.clone(), eig })
}

/// Parameters of [`solve_extension`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionParams {
    pub y: YSteering,
    /// Domain discretisation; default [`DomainParams::steering`]`(p)`.
    pub domain: Option<DomainParams>,
    /// Keep the fields `U_i` (needed for [`trace_functional`] with a new `f`).
    pub keep_fields: bool,
    /// Condition estimate of the `y` pencil above which a warning is issued.
    pub cond_warning: f64,
}

impl Default for ExtensionParams {
    fn default() -> Self {
        Self { y: YSteering::default(), domain: None, keep_fields: true, cond_warning: 1e12 }
    }
}

/// One decoupled problem and its solution.
#[derive(Debug, Clone)]
pub struct ExtensionMode {
    pub mu: f64,
    pub v0: f64,
    pub solve: ShiftedSolve,
}

/// Result of [`solve_extension`].
#[derive(Debug, Clone)]
pub struct ExtensionSolution {
    pub diag: Arc<DiagSystem>,
    pub case: Case,
    pub modes: Vec<ExtensionMode>,
    pub warnings: Vec<String>,
}

impl ExtensionSolution {
    /// Number of linear systems solved.
    pub fn num_systems(&self) -> usize {
        self.modes.len()
    }

    /// Free dofs summed over all decoupled problems.
    pub fn total_dofs(&self) -> usize {
        self.modes.iter().map(|m| m.solve.num_dofs).sum()
    }

    /// `∫ f tr ũ` for the source the problem was solved with.
    pub fn functional(&self) -> f64 {
        let mut acc = KahanSum::new();
        for m in &self.modes {
            acc.add(m.v0 * m.solve.f_dot);
        }
        acc.value()
    }

    /// `d_s ∫ f tr ũ`.
    pub fn scaled_functional(&self) -> f64 {
        self.diag.setup.d_s() * self.functional()
    }
}

/// `∫ f tr ũ = Σ_i v_i(0) ∫ f U_i`; needs the fields.
pub fn trace_functional(solution: &ExtensionSolution, f: Source<'_>) -> Result<f64> {
    let mut acc = KahanSum::new();
    for (i, m) in solution.modes.iter().enumerate() {
        let field = m.solve.field.as_ref().ok_or_else(|| Error::Parameter(format!("field of mode {i} was not kept")))?;
        acc.add(m.v0 * field.integrate_f_dot(f));
    }
    Ok(acc.value())
}

/// `Σ_i (μ_i a(U_i, U_i) + ‖U_i‖²)`, the energy of the extension solution.
pub fn energy_pythagoras(solution: &ExtensionSolution) -> f64 {
    let mut acc = KahanSum::new();
    for m in &solution.modes {
        acc.add(m.solve.energy);
    }
    acc.value()
}

fn diag_warnings(diag: &DiagSystem, params: &ExtensionParams) -> Vec<String> {
    let mut w = Vec::new();
    if diag.eig.cond_estimate > params.cond_warning {
        w.push(format!("y pencil condition estimate {:.3e} exceeds {:.1e}", diag.eig.cond_estimate, params.cond_warning));
    }
    w
}

fn modes_from(diag: &DiagSystem) -> Vec<(f64, f64)> {
    let d_s = diag.setup.d_s();
    diag.mu().iter().zip(diag.trace()).map(|(&mu, &v0)| (mu, d_s * v0)).collect()
}

/// Case B on a given space: every `U_i` in `space`.
pub fn solve_extension_on(
    diag: Arc<DiagSystem>,
    space: Arc<HpSpace>,
    f: Source<'_>,
    domain: &DomainParams,
    keep_fields: bool,
) -> Result<ExtensionSolution> {
    let problems = modes_from(&diag);
    let solves = solve_common(space, &problems, f, domain, keep_fields)?;
    let mut warnings = Vec::new();
    let eps_min = diag.mu().iter().copied().fold(f64::INFINITY, f64::min).sqrt();
    if !scale_resolved(domain, eps_min) {
        warnings.push(format!(
            "scale resolution violated: sigma^L = {:.3e} > c1 * min sqrt(mu) = {:.3e}",
            domain.sigma.powi(domain.layers as i32),
            domain.c1 * eps_min
        ));
    }
    Ok(assemble_solution(diag, Case::B, solves, warnings))
}

fn assemble_solution(diag: Arc<DiagSystem>, case: Case, solves: Vec<ShiftedSolve>, warnings: Vec<String>) -> ExtensionSolution {
    let modes = solves
        .into_iter()
        .enumerate()
        .map(|(i, solve)| ExtensionMode { mu: diag.mu()[i], v0: diag.trace()[i], solve })
        .collect();
    ExtensionSolution { diag, case, modes, warnings }
}

/// The extension method with steering parameter `p`.
pub fn solve_extension(
    domain: &PolygonDomain,
    f: Source<'_>,
    s: f64,
    p: usize,
    case: Case,
    params: &ExtensionParams,
) -> Result<ExtensionSolution> {
    let setup = params.y.setup(s, p)?;
    let diag = Arc::new(diagonalize(&setup)?);
    let dp = params.domain.clone().unwrap_or_else(|| DomainParams::steering(p));
    let mut warnings = diag_warnings(&diag, params);
    let mut sol = match case {
        Case::B => solve_extension_on(diag, common_space(domain, &dp)?, f, &dp, params.keep_fields)?,
        Case::A => {
            let problems = modes_from(&diag);
            let scales: Vec<f64> = diag.mu().iter().map(|m| m.sqrt()).collect();
            let solves = solve_minimal(domain, &problems, &scales, f, &dp, params.keep_fields)?;
            assemble_solution(diag, Case::A, solves, Vec::new())
        }
    };
    warnings.append(&mut sol.warnings);
    sol.warnings = warnings;
    Ok(sol)
}
