use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fracdiff::extension::{solve_extension, ExtensionParams, YSteering};
use fracdiff::harness::{run_study, SquareSeriesOracle, StudyConfig};
use fracdiff::meshgen::io::write_mesh;
use fracdiff::meshgen::{build_geometric_bl_mesh, build_minimal_mesh, default_kappa0, BuiltinDomain, MinimalMeshParams};
use fracdiff::sincbk::{solve_sinc, SincParams};
use fracdiff::{Case, DomainParams, Method, PolygonDomain};

#[derive(Parser)]
#[command(name = "fracdiff", version, about = "hp-FEM for spectral fractional diffusion on polygons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeshType {
    /// Geometric boundary-layer mesh.
    Geo,
    /// Minimal mesh for one scale.
    Min,
}

#[derive(Subcommand)]
enum Command {
    /// Build a mesh and write it as text.
    Mesh {
        #[arg(long)]
        domain: BuiltinDomain,
        #[arg(long = "type", value_enum, default_value = "geo")]
        kind: MeshType,
        /// Boundary layers (geo).
        #[arg(long = "L", default_value_t = 2)]
        layers: usize,
        /// Vertex levels.
        #[arg(long = "n", default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 0.25)]
        sigma: f64,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long)]
        kappa0: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve with `f = 1` and report the per-problem records.
    Solve {
        #[arg(long)]
        method: Method,
        #[arg(long, default_value = "B")]
        case: Case,
        #[arg(long)]
        domain: BuiltinDomain,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        p: usize,
        /// Linear degree vector in `y` (extension).
        #[arg(long)]
        slope: Option<f64>,
        /// Strip scaling of minimal meshes (Case A).
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Sinc step.
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a convergence study from a TOML config and write the CSV.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reference functional on the unit square from the sine series.
    Oracle {
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 2001)]
        trunc: usize,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn solve(
    method: Method,
    case: Case,
    domain: BuiltinDomain,
    s: f64,
    p: usize,
    slope: Option<f64>,
    lambda: f64,
    k: Option<f64>,
) -> Result<String> {
    let d = PolygonDomain::builtin(domain);
    let f = |_: [f64; 2]| 1.0;
    let dp = DomainParams { lambda, ..DomainParams::steering(p) };
    let mut out = String::new();
    writeln!(out, "# {method} case {case} on {domain}, s = {s}, p = {p}")?;
    match method {
        Method::Extension => {
            let params = ExtensionParams {
                y: YSteering { slope, ..YSteering::default() },
                domain: Some(dp),
                keep_fields: false,
                ..ExtensionParams::default()
            };
            let sol = solve_extension(&d, &f, s, p, case, &params)?;
            writeln!(out, "# mode mu v0 N_dof iterations residual")?;
            for (i, m) in sol.modes.iter().enumerate() {
                writeln!(
                    out,
                    "mode {i} {:e} {:e} {} {} {:e}",
                    m.mu, m.v0, m.solve.num_dofs, m.solve.stats.iterations, m.solve.stats.relative_residual
                )?;
            }
            for w in &sol.warnings {
                writeln!(out, "# warning: {w}")?;
            }
            writeln!(out, "N_ls {}", sol.num_systems())?;
            writeln!(out, "N_dof {}", sol.total_dofs())?;
            writeln!(out, "functional {:e}", sol.scaled_functional())?;
        }
        Method::Sinc => {
            let params = SincParams { k, domain: Some(dp), keep_fields: false, ..SincParams::default() };
            let sol = solve_sinc(&d, &f, s, p, case, &params)?;
            writeln!(out, "# node y weight N_dof iterations residual")?;
            for (i, (n, y)) in sol.nodes.iter().zip(&sol.rule.nodes).enumerate() {
                writeln!(
                    out,
                    "node {i} {y:e} {:e} {} {} {:e}",
                    n.weight, n.solve.num_dofs, n.solve.stats.iterations, n.solve.stats.relative_residual
                )?;
            }
            for w in &sol.warnings {
                writeln!(out, "# warning: {w}")?;
            }
            writeln!(out, "N_ls {}", sol.num_systems())?;
            writeln!(out, "N_dof {}", sol.total_dofs())?;
            let d_s = fracdiff::special::extension_constant(s)?;
            writeln!(out, "functional {:e}", d_s * sol.functional())?;
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mesh { domain, kind, layers, levels, sigma, eps, lambda, q, kappa0, out } => {
            let d = PolygonDomain::builtin(domain);
            let mesh = match kind {
                MeshType::Geo => build_geometric_bl_mesh(&d, layers, levels, sigma)?,
                MeshType::Min => {
                    let kappa0 = kappa0.unwrap_or_else(|| default_kappa0(&d));
                    build_minimal_mesh(&d, &MinimalMeshParams { levels, degree: q, lambda, eps, kappa0, sigma })?
                }
            };
            emit(&write_mesh(&mesh), Some(&out))?;
            eprintln!("{} elements written to {}", mesh.num_elements(), out.display());
        }
        Command::Solve { method, case, domain, s, p, slope, lambda, k, out } => {
            let text = solve(method, case, domain, s, p, slope, lambda, k)?;
            emit(&text, out.as_ref())?;
        }
        Command::Converge { config, out } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = StudyConfig::from_toml(&text)?;
            let report = run_study(&cfg)?;
            emit(&report.to_csv()?, Some(&out))?;
            let failed = report.rows.iter().filter(|r| r.failure.is_some()).count();
            if failed > 0 {
                bail!("{failed} of {} rows failed; see the comment lines in {}", report.rows.len(), out.display());
            }
        }
        Command::Oracle { s, trunc } => {
            let o = SquareSeriesOracle::new(s, trunc)?;
            println!("s {s}");
            println!("truncation {trunc}");
            println!("raw {:.16e}", o.raw());
            println!("J_ref {:.16e}", o.j_ref());
        }
    }
    Ok(())
}

fn main() -> std::process::ExitCode {
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
