use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{solve_extension, ExtensionParams, YSteering};
use crate::meshgen::{BuiltinDomain, PolygonDomain};
use crate::shifted::{Case, DomainParams};
use crate::sincbk::{solve_sinc, SincParams};
use crate::special::extension_constant;

use super::error_functional;
use super::oracle::SquareSeriesOracle;

/// Column order of the study CSV.
pub const CSV_HEADER: &str = "domain,method,case,s,p,N_dof,N_ls,error,seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Extension,
    Sinc,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Extension => "extension",
            Method::Sinc => "sinc",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extension" => Ok(Method::Extension),
            "sinc" => Ok(Method::Sinc),
            _ => Err(Error::Parameter(format!("unknown method '{s}' (expected extension or sinc)"))),
        }
    }
}

/// Where `J_ref` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferencePolicy {
    /// Series oracle on the square, fine solve elsewhere.
    #[default]
    Auto,
    Oracle,
    /// The same method and case at `p_ref`.
    Fine,
}

/// Overrides of the default steering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Steering {
    pub sigma_x: f64,
    pub sigma_y: f64,
    /// Linear degree vector in `y` instead of uniform degree `p`.
    pub slope: Option<f64>,
    pub lambda: f64,
    pub kappa0: Option<f64>,
    pub c1: f64,
    /// Sinc step; default `(4/3)/p`.
    pub k: Option<f64>,
}

impl Default for Steering {
    fn default() -> Self {
        Self { sigma_x: 0.25, sigma_y: 0.25, slope: None, lambda: 1.0, kappa0: None, c1: 1.0, k: None }
    }
}

impl Steering {
    fn domain_params(&self, p: usize) -> DomainParams {
        DomainParams {
            sigma: self.sigma_x,
            lambda: self.lambda,
            kappa0: self.kappa0,
            c1: self.c1,
            ..DomainParams::steering(p)
        }
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::Extension, Method::Sinc]
}

fn default_cases() -> Vec<Case> {
    vec![Case::B]
}

fn default_truncation() -> usize {
    2001
}

fn yes() -> bool {
    true
}

/// A convergence study, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub domains: Vec<BuiltinDomain>,
    pub s_values: Vec<f64>,
    pub p_min: usize,
    pub p_max: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_cases")]
    pub cases: Vec<Case>,
    #[serde(default)]
    pub reference: ReferencePolicy,
    /// Steering parameter of fine references; default `p_max + 2`.
    #[serde(default)]
    pub p_ref: Option<usize>,
    #[serde(default = "default_truncation")]
    pub oracle_truncation: usize,
    /// Also solve at `p_ref - 1` and note when the reference's own last
    /// increment exceeds a hundredth of the smallest error.
    #[serde(default)]
    pub check_reference: bool,
    #[serde(default)]
    pub steering: Steering,
    /// Write `0` for the timings so that the CSV is reproducible.
    #[serde(default = "yes")]
    pub deterministic: bool,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.p_min == 0 || self.p_min > self.p_max {
            return fail(format!("empty p-range {}..={}", self.p_min, self.p_max));
        }
        if self.domains.is_empty() || self.s_values.is_empty() || self.methods.is_empty() || self.cases.is_empty() {
            return fail("domains, s_values, methods and cases must be nonempty".into());
        }
        if let Some(s) = self.s_values.iter().find(|&&s| !(s > 0.0 && s < 1.0)) {
            return fail(format!("s = {s} outside (0, 1)"));
        }
        if self.reference == ReferencePolicy::Oracle && self.domains.iter().any(|&d| d != BuiltinDomain::Square) {
            return fail("the series oracle exists only for the square".into());
        }
        if self.oracle_truncation.is_multiple_of(2) {
            return fail("oracle_truncation must be odd".into());
        }
        if let Some(r) = self.p_ref {
            if r <= self.p_max {
                return fail(format!("p_ref = {r} must exceed p_max = {}", self.p_max));
            }
        }
        Ok(())
    }

    fn p_ref(&self) -> usize {
        self.p_ref.unwrap_or(self.p_max + 2)
    }

    fn uses_oracle(&self, d: BuiltinDomain) -> bool {
        match self.reference {
            ReferencePolicy::Auto => d == BuiltinDomain::Square,
            ReferencePolicy::Oracle => true,
            ReferencePolicy::Fine => false,
        }
    }
}

/// One line of the study CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub domain: BuiltinDomain,
    pub method: Method,
    pub case: Case,
    pub s: f64,
    pub p: usize,
    #[serde(rename = "N_dof")]
    pub n_dof: Option<usize>,
    #[serde(rename = "N_ls")]
    pub n_ls: Option<usize>,
    pub error: Option<f64>,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub record: ConvergenceRecord,
    pub failure: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub notes: Vec<String>,
}

impl StudyReport {
    /// Rows in config order, then comment lines (`#`) for failures,
    /// warnings and notes.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(&r.record).map_err(|e| Error::Data(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        let mut out = String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))?;
        for (i, r) in self.rows.iter().enumerate() {
            if let Some(f) = &r.failure {
                out.push_str(&format!("# row {}: error: {}\n", i + 1, f.replace('\n', " ")));
            }
            for wmsg in &r.warnings {
                out.push_str(&format!("# row {}: warning: {}\n", i + 1, wmsg));
            }
        }
        for n in &self.notes {
            out.push_str(&format!("# note: {n}\n"));
        }
        Ok(out)
    }
}

/// Outcome of one method run with `f ≡ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    /// `d_s ∫ f ũ`.
    pub functional: f64,
    pub n_dof: usize,
    pub n_ls: usize,
    pub warnings: Vec<String>,
}

/// Solves with `f ≡ 1` and returns the scaled functional.
pub fn run_method(
    domain: &PolygonDomain,
    method: Method,
    case: Case,
    s: f64,
    p: usize,
    steering: &Steering,
) -> Result<MethodRun> {
    let f = |_: [f64; 2]| 1.0;
    let dp = steering.domain_params(p);
    match method {
        Method::Extension => {
            let params = ExtensionParams {
                y: YSteering { sigma: steering.sigma_y, slope: steering.slope, ..YSteering::default() },
                domain: Some(dp),
                keep_fields: false,
                ..ExtensionParams::default()
            };
            let sol = solve_extension(domain, &f, s, p, case, &params)?;
            Ok(MethodRun {
                functional: sol.scaled_functional(),
                n_dof: sol.total_dofs(),
                n_ls: sol.num_systems(),
                warnings: sol.warnings,
            })
        }
        Method::Sinc => {
            let params = SincParams { k: steering.k, domain: Some(dp), keep_fields: false, ..SincParams::default() };
            let sol = solve_sinc(domain, &f, s, p, case, &params)?;
            Ok(MethodRun {
                functional: extension_constant(s)? * sol.functional(),
                n_dof: sol.total_dofs(),
                n_ls: sol.num_systems(),
                warnings: sol.warnings,
            })
        }
    }
}

/// Runs every `(domain, s, method, case, p)` of the config. A failing row
/// is recorded with its error and the study continues.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for &d in &config.domains {
        let domain = PolygonDomain::builtin(d);
        for &s in &config.s_values {
            for &method in &config.methods {
                for &case in &config.cases {
                    let reference: std::result::Result<f64, String> = if config.uses_oracle(d) {
                        SquareSeriesOracle::new(s, config.oracle_truncation).map(|o| o.j_ref()).map_err(|e| e.to_string())
                    } else {
                        run_method(&domain, method, case, s, config.p_ref(), &config.steering)
                            .map(|r| r.functional)
                            .map_err(|e| format!("reference solve failed: {e}"))
                    };
                    let first = rows.len();
                    for p in config.p_min..=config.p_max {
                        rows.push(run_row(config, &domain, d, method, case, s, p, &reference));
                    }
                    if config.check_reference && !config.uses_oracle(d) {
                        if let Ok(j_fine) = reference {
                            let min_e = rows[first..].iter().filter_map(|r| r.record.error).fold(f64::INFINITY, f64::min);
                            match run_method(&domain, method, case, s, config.p_ref() - 1, &config.steering) {
                                Ok(r) => {
                                    let inc = error_functional(j_fine, r.functional);
                                    if inc > 1e-2 * min_e {
                                        notes.push(format!(
                                            "{d} {method} {case} s={s}: reference increment {inc:.3e} exceeds 1e-2 x smallest error {min_e:.3e}"
                                        ));
                                    }
                                }
                                Err(e) => notes.push(format!("{d} {method} {case} s={s}: reference check failed: {e}")),
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(StudyReport { rows, notes })
}

#[allow(clippy::too_many_arguments)]
fn run_row(
    config: &StudyConfig,
    domain: &PolygonDomain,
    d: BuiltinDomain,
    method: Method,
    case: Case,
    s: f64,
    p: usize,
    reference: &std::result::Result<f64, String>,
) -> StudyRow {
    let mut record =
        ConvergenceRecord { domain: d, method, case, s, p, n_dof: None, n_ls: None, error: None, seconds: None };
    let j_ref = match reference {
        Ok(j) => *j,
        Err(e) => return StudyRow { record, failure: Some(e.clone()), warnings: vec![] },
    };
    let start = Instant::now();
    match run_method(domain, method, case, s, p, &config.steering) {
        Ok(run) => {
            let secs = start.elapsed().as_secs_f64();
            record.n_dof = Some(run.n_dof);
            record.n_ls = Some(run.n_ls);
            record.error = Some(error_functional(j_ref, run.functional));
            record.seconds = Some(if config.deterministic { 0.0 } else { secs });
            StudyRow { record, failure: None, warnings: run.warnings }
        }
        Err(e) => StudyRow { record, failure: Some(e.to_string()), warnings: vec![] },
    }
}
