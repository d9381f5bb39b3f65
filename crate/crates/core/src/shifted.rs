//! Families of shifted reaction–diffusion problems `(μ K + M) U = c F`,
//! the common back end of the extension and sinc drivers.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result, SolverMode};
use crate::hpcore::{assemble_load, assemble_operators, Coefficients, Degrees, Field, HpSpace, RdOperators};
use crate::linsolve::{analyze, factor_spd_with, SolveStats};
use crate::meshgen::{build_geometric_bl_mesh, build_minimal_mesh, default_kappa0, MinimalMeshParams, Point, PolygonDomain};

/// Source term `f`.
pub type Source<'a> = &'a (dyn Fn(Point) -> f64 + Sync);

/// Mesh strategy for the family of shifted problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// One minimal mesh adapted to each scale.
    A,
    /// One geometric boundary-layer mesh shared by all scales.
    B,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::A => "A",
            Case::B => "B",
        })
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Case::A),
            "B" | "b" => Ok(Case::B),
            _ => Err(Error::Parameter(format!("unknown case '{s}' (expected A or B)"))),
        }
    }
}

/// Discretisation of the domain problems.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainParams {
    /// Polynomial degree `q`.
    pub degree: usize,
    /// Anisotropic layers towards the edges of the geometric mesh.
    pub layers: usize,
    /// Geometric levels towards the vertices.
    pub levels: usize,
    pub sigma: f64,
    /// Strip scaling of minimal meshes, width `min(κ₀, λ q ε)`.
    pub lambda: f64,
    /// Strip cap; `None` means a quarter of the shortest edge.
    pub kappa0: Option<f64>,
    /// Constant of the scale-resolution check.
    pub c1: f64,
    pub solver: SolverMode,
    pub tol: f64,
}

impl DomainParams {
    /// `q = L = n = p`, `σ = 1/4`, `λ = 1`, `c₁ = 1`, direct solver.
    pub fn steering(p: usize) -> Self {
        Self {
            degree: p,
            layers: p,
            levels: p,
            sigma: 0.25,
            lambda: 1.0,
            kappa0: None,
            c1: 1.0,
            solver: SolverMode::Direct,
            tol: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return param_err("polynomial degree must be at least 1");
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return param_err(format!("grading factor {} must lie in (0, 1)", self.sigma));
        }
        if !(self.lambda > 0.0) || !(self.c1 > 0.0) || !(self.tol > 0.0) {
            return param_err("lambda, c1 and the solver tolerance must be positive");
        }
        Ok(())
    }

    fn kappa0(&self, domain: &PolygonDomain) -> f64 {
        self.kappa0.unwrap_or_else(|| default_kappa0(domain))
    }
}

/// The space on the common geometric boundary-layer mesh.
pub fn common_space(domain: &PolygonDomain, params: &DomainParams) -> Result<Arc<HpSpace>> {
    params.validate()?;
    let mesh = build_geometric_bl_mesh(domain, params.layers, params.levels, params.sigma)?;
    Ok(Arc::new(HpSpace::new(Arc::new(mesh), Degrees::Uniform(params.degree))?))
}

/// Smallest strip width that [`build_minimal_mesh`] resolves with `levels`
/// vertex levels.
fn strip_floor(domain: &PolygonDomain, params: &DomainParams) -> f64 {
    1.000001e-9 * domain.diameter() / params.sigma.powi(params.levels as i32)
}

/// Scale actually used for a minimal mesh: `eps` raised so that the strip
/// stays above the representable resolution. Thinner layers than that carry
/// a negligible part of the solution.
pub fn effective_scale(domain: &PolygonDomain, params: &DomainParams, eps: f64) -> f64 {
    let q = params.degree as f64;
    eps.max(strip_floor(domain, params) / (params.lambda * q))
}

fn minimal_params(domain: &PolygonDomain, params: &DomainParams, eps: f64) -> MinimalMeshParams {
    MinimalMeshParams {
        levels: params.levels,
        degree: params.degree,
        lambda: params.lambda,
        eps: effective_scale(domain, params, eps),
        kappa0: params.kappa0(domain),
        sigma: params.sigma,
    }
}

/// The space on the minimal mesh for scale `eps`.
pub fn minimal_space(domain: &PolygonDomain, params: &DomainParams, eps: f64) -> Result<Arc<HpSpace>> {
    params.validate()?;
    if !(eps > 0.0) {
        return param_err(format!("scale {eps} must be positive"));
    }
    let mesh = build_minimal_mesh(domain, &minimal_params(domain, params, eps))?;
    Ok(Arc::new(HpSpace::new(Arc::new(mesh), Degrees::Uniform(params.degree))?))
}

/// `σ^L ≤ c₁ ε_min`, the boundary-layer scale resolution of the common mesh.
pub fn scale_resolved(params: &DomainParams, eps_min: f64) -> bool {
    params.sigma.powi(params.layers as i32) <= params.c1 * eps_min
}

/// One solved shifted problem.
#[derive(Debug, Clone)]
pub struct ShiftedSolve {
    pub shift: f64,
    pub scale: f64,
    pub num_dofs: usize,
    /// `∫ f U`.
    pub f_dot: f64,
    /// `μ a(U, U) + ‖U‖²`.
    pub energy: f64,
    pub stats: SolveStats,
    pub field: Option<Field>,
}

struct Discrete {
    space: Arc<HpSpace>,
    ops: RdOperators,
    load: Vec<f64>,
    symbolic: Option<crate::linsolve::SymbolicCholesky>,
}

impl Discrete {
    fn new(space: Arc<HpSpace>, f: Source<'_>, mode: SolverMode) -> Result<Self> {
        let ops = assemble_operators(&space, &Coefficients::default())?;
        let load = assemble_load(&space, f);
        let symbolic = match mode {
            SolverMode::Direct if space.num_free() > 0 => Some(analyze(space.pattern())?),
            _ => None,
        };
        Ok(Self { space, ops, load, symbolic })
    }

    fn solve(&self, shift: f64, scale: f64, f: Source<'_>, params: &DomainParams, keep: bool) -> Result<ShiftedSolve> {
        let n = self.space.num_free();
        let (x, stats) = if n == 0 || scale == 0.0 {
            (vec![0.0; n], SolveStats { iterations: 0, relative_residual: 0.0 })
        } else {
            let a = self.ops.shifted(shift);
            let b: Vec<f64> = self.load.iter().map(|v| scale * v).collect();
            factor_spd_with(&a, self.symbolic.as_ref(), params.solver, params.tol)?.solve_with_stats(&b)?
        };
        let energy = shift * self.ops.stiffness.bilinear(&x, &x) + self.ops.mass.bilinear(&x, &x);
        let field = Field::from_free(self.space.clone(), &x)?;
        let f_dot = field.integrate_f_dot(f);
        Ok(ShiftedSolve {
            shift,
            scale,
            num_dofs: n,
            f_dot,
            energy,
            stats,
            field: keep.then_some(field),
        })
    }
}

fn tag(index: usize, e: Error) -> Error {
    match e {
        Error::Solver { mode, msg } => Error::Solver { mode, msg: format!("problem {index}: {msg}") },
        other => other,
    }
}

/// Solves `(shift_i K + M) U_i = scale_i F` for every `(shift_i, scale_i)`
/// on one space. Results are in input order.
pub fn solve_common(
    space: Arc<HpSpace>,
    problems: &[(f64, f64)],
    f: Source<'_>,
    params: &DomainParams,
    keep_fields: bool,
) -> Result<Vec<ShiftedSolve>> {
    let disc = Discrete::new(space, f, params.solver)?;
    problems
        .par_iter()
        .enumerate()
        .map(|(i, &(shift, scale))| disc.solve(shift, scale, f, params, keep_fields).map_err(|e| tag(i, e)))
        .collect()
}

/// Solves problem `i` on the minimal mesh for scale `scales[i]`. Problems
/// whose effective scales give the same strip share one discretisation.
pub fn solve_minimal(
    domain: &PolygonDomain,
    problems: &[(f64, f64)],
    scales: &[f64],
    f: Source<'_>,
    params: &DomainParams,
    keep_fields: bool,
) -> Result<Vec<ShiftedSolve>> {
    if problems.len() != scales.len() {
        return param_err("one scale per problem required");
    }
    let mut groups: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut order = Vec::new();
    for (i, &eps) in scales.iter().enumerate() {
        let key = minimal_params(domain, params, eps).strip_width().to_bits();
        let g = groups.entry(key).or_default();
        if g.is_empty() {
            order.push(key);
        }
        g.push(i);
    }
    let mut out: Vec<Option<ShiftedSolve>> = vec![None; problems.len()];
    for key in order {
        let members = &groups[&key];
        let space = minimal_space(domain, params, scales[members[0]])?;
        let disc = Discrete::new(space, f, params.solver)?;
        let solved: Vec<ShiftedSolve> = members
            .par_iter()
            .map(|&i| {
                let (shift, scale) = problems[i];
                disc.solve(shift, scale, f, params, keep_fields).map_err(|e| tag(i, e))
            })
            .collect::<Result<_>>()?;
        for (&i, s) in members.iter().zip(solved) {
            out[i] = Some(s);
        }
    }
    Ok(out.into_iter().map(|s| s.expect("every problem belongs to a group")).collect())
}
