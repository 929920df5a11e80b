//! Command line runner: `radial`, `shape-opt`, `phase-field` and `analyze`.
//!
//! Every run writes its artifacts, the resolved configuration and a
//! `manifest.json` with SHA-256 checksums into the output directory
//! (`--out`, else `$INSULATE_OUT`, else `output.dir`).

pub mod config;
pub mod io;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    blowup_scan, check_lower_bound, component_masks, density_profile, hole_geometry, sample_points, BlowupOptions,
};
use crate::error::{Error, Result};
use crate::model::{FaceSet, Grid, GridField, OmegaSpec, ProblemConfig};
use crate::phase_field::{at_minimize, label_components};
use crate::radial::{optimize_radius, radial_energy, radial_profile};
use crate::robin::StarShape;
use crate::shape_opt::{optimize_shape, Minimizer};

pub use config::RunConfig;
pub use io::{read_grid, write_grid, ArtifactWriter, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "insulate", version, about = "Thermal insulation free-boundary optimizer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides $INSULATE_OUT and output.dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Override a configuration value, e.g. `--set problem.robin_h=2.5`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Reject unknown configuration keys.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate concentric optima for the configured Robin coefficients.
    Radial,
    /// Optimize a star-shaped insulator by shape-gradient descent.
    ShapeOpt,
    /// Minimize the phase-field relaxation on a Cartesian grid.
    PhaseField,
    /// Measure structural properties of a stored field.
    Analyze {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, value_enum)]
        op: AnalyzeOp,
        /// Region labels (`regions.grid` of a phase-field run); jump faces are
        /// then the faces between different labels instead of thresholded
        /// differences of the field.
        #[arg(long)]
        regions: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeOp {
    LowerBound,
    Density,
    Blowup,
    Holes,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Radial => "radial",
            Command::ShapeOpt => "shape-opt",
            Command::PhaseField => "phase-field",
            Command::Analyze { .. } => "analyze",
        }
    }
}

/// Parses arguments, runs, and maps failures to exit codes: 0 success,
/// 1 I/O, 2 precondition or configuration, 3 solver fault.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::SolverFault { history, .. } = &e {
                if !history.is_empty() {
                    eprintln!("history: {history:?}");
                }
            }
            e.exit_code()
        }
    }
}

fn resolve_out(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("INSULATE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

/// Executes one subcommand and returns its manifest.
pub fn run(cli: &Cli) -> Result<RunManifest> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path, &cli.overrides, cli.strict)?,
        None => RunConfig::from_toml_str("", &cli.overrides, cli.strict)?,
    };
    let out = resolve_out(cli, &cfg);
    let mut resolved = cfg.clone();
    resolved.output.dir = out.display().to_string();
    let echo = resolved.to_toml_string()?;
    let start = Instant::now();
    let mut w = ArtifactWriter::create(&out)?;
    match &cli.command {
        Command::Radial => run_radial(&cfg, &mut w)?,
        Command::ShapeOpt => run_shape_opt(&cfg, &mut w)?,
        Command::PhaseField => run_phase_field(&cfg, cli.seed, &mut w)?,
        Command::Analyze { field, op, regions } => run_analyze(&cfg, field, *op, regions.as_deref(), &mut w)?,
    }
    w.write("config.resolved.toml", echo.as_bytes())?;
    let manifest = w.finish(cli.command.name(), cli.seed, start.elapsed().as_secs_f64(), echo)?;
    println!("wrote {} artifacts to {}", manifest.artifacts.len(), out.display());
    Ok(manifest)
}

fn disk_of(omega: &OmegaSpec, what: &str) -> Result<crate::model::Disk> {
    match omega {
        OmegaSpec::Disk(d) => Ok(*d),
        _ => Err(Error::precondition(format!("{what} needs a disk-shaped Ω"))),
    }
}

fn run_radial(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<()> {
    let p = &cfg.problem;
    let disk = disk_of(&cfg.omega_spec()?, "radial")?;
    let rho0 = disk.radius;
    let mut hs = vec![p.robin_h];
    hs.extend(&cfg.problem.sweep_h);
    let mut table = String::from("h,volume_cost,rho0,n,r_star,f_star,u_outer,dirichlet,surface,volume,attained,r_max\n");
    println!("{:>10} {:>10} {:>14} {:>14} {:>10}", "h", "C0", "R*", "F*", "u(R*)");
    for &h in &hs {
        let opt = optimize_radius(p.dim, h, p.volume_cost, rho0)?;
        if let Some(msg) = &opt.warning {
            log::warn!("h = {h}: {msg}");
        }
        let u_outer = if h > 0.0 {
            radial_profile(p.dim, h, rho0, opt.r_star)?.u_outer
        } else {
            1.0
        };
        let _ = writeln!(
            table,
            "{h:.16e},{:.16e},{rho0:.16e},{},{:.16e},{:.16e},{u_outer:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            p.volume_cost,
            p.dim,
            opt.r_star,
            opt.f_star,
            opt.energy.dirichlet,
            opt.energy.surface,
            opt.energy.volume,
            opt.attained,
            opt.r_max
        );
        println!("{h:>10.4} {:>10.4} {:>14.8} {:>14.8} {u_outer:>10.6}", p.volume_cost, opt.r_star, opt.f_star);
    }
    w.write("radial.csv", table.as_bytes())?;

    let base = optimize_radius(p.dim, p.robin_h, p.volume_cost, rho0)?;
    let r_hi = (2.0 * base.r_star).max(2.0 * rho0).min(base.r_max.max(2.0 * rho0));
    let mut curve = String::from("r,total\n");
    for k in 0..=200 {
        let r = rho0 + (r_hi - rho0) * k as f64 / 200.0;
        let e = radial_energy(p.dim, p.robin_h, p.volume_cost, rho0, r)?;
        let _ = writeln!(curve, "{r:.16e},{:.16e}", e.total);
    }
    w.write("energy_curve.csv", curve.as_bytes())?;
    Ok(())
}

/// Largest distance from `center` to `∂Ω` over 256 directions.
fn omega_reach(omega: &OmegaSpec, center: [f64; 2]) -> Result<f64> {
    let mut reach: f64 = 0.0;
    for j in 0..256 {
        let t = 2.0 * std::f64::consts::PI * j as f64 / 256.0;
        reach = reach.max(omega.radial_function(center, t)?.0);
    }
    Ok(reach)
}

fn omega_center(omega: &OmegaSpec) -> [f64; 2] {
    match omega {
        OmegaSpec::Disk(d) => d.center,
        OmegaSpec::StarDomain { center, .. } => *center,
        _ => omega.primary_disk().map_or_else(
            || {
                let b = omega.bounding_box();
                [0.5 * (b[0] + b[2]), 0.5 * (b[1] + b[3])]
            },
            |d| d.center,
        ),
    }
}

#[derive(Serialize)]
struct ShapeSummary {
    minimizer: Minimizer,
    converged: bool,
    iterations: usize,
    final_energy: f64,
    attached_energy: f64,
    detached_energy: f64,
    stationarity_residual: f64,
    coefficients: Vec<f64>,
    center: [f64; 2],
    oracle_r_star: Option<f64>,
    oracle_f_star: Option<f64>,
    message: Option<String>,
}

fn run_shape_opt(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<()> {
    let problem = cfg.problem()?;
    problem.require_planar()?;
    let s = &cfg.shape;
    let center = omega_center(&problem.omega);
    let reach = omega_reach(&problem.omega, center)?;
    let mut init = StarShape::circle(center, s.init_scale * reach, s.modes);
    let mode = s.init_perturbation[0].round() as usize;
    if mode > 0 {
        if mode > s.modes {
            return Err(Error::Config(format!(
                "shape.init_perturbation mode {mode} exceeds shape.modes = {}",
                s.modes
            )));
        }
        init.radius.cos[mode - 1] = s.init_perturbation[1];
    }
    let result = optimize_shape(&problem, &init, &cfg.opt_options())?;

    let mut trace = format!("{}\n", io::TRACE_HEADER);
    for row in &result.trace {
        trace.push_str(&io::trace_row(row.iter, &row.energy, Some(row.grad_norm)));
        trace.push('\n');
    }
    w.write("trace.csv", trace.as_bytes())?;

    let mut boundary = String::from("theta,x,y,r\n");
    let n = s.boundary_samples.max(8);
    for j in 0..n {
        let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let r = result.reported_radius(&problem, t)?;
        let c = result.shape.center;
        let _ = writeln!(
            boundary,
            "{t:.16e},{:.16e},{:.16e},{r:.16e}",
            c[0] + r * t.cos(),
            c[1] + r * t.sin()
        );
    }
    w.write("boundary.csv", boundary.as_bytes())?;

    let oracle = match &problem.omega {
        OmegaSpec::Disk(d) => Some(optimize_radius(2, problem.robin_h, problem.volume_cost, d.radius)?),
        _ => None,
    };
    let summary = ShapeSummary {
        minimizer: result.minimizer,
        converged: result.converged,
        iterations: result.trace.len().saturating_sub(1),
        final_energy: result.final_energy,
        attached_energy: result.attached_energy.total,
        detached_energy: result.detached_energy,
        stationarity_residual: result.stationarity_residual,
        coefficients: result.shape.radius.to_vec(),
        center: result.shape.center,
        oracle_r_star: oracle.as_ref().map(|o| o.r_star),
        oracle_f_star: oracle.as_ref().map(|o| o.f_star),
        message: result.message.clone(),
    };
    w.write_json("result.json", &summary)?;
    println!(
        "{:?} minimizer, energy {:.10}, converged {}",
        summary.minimizer, summary.final_energy, summary.converged
    );
    if let Some(o) = &oracle {
        println!("radial oracle: R* = {:.10}, F* = {:.10}", o.r_star, o.f_star);
    }
    Ok(())
}

/// Square grid for a phase-field run.
pub fn phase_field_grid(cfg: &RunConfig, problem: &ProblemConfig) -> Result<Grid> {
    let s = &cfg.phase_field;
    if s.n < 8 {
        return Err(Error::Config("phase_field.n must be at least 8".into()));
    }
    let half = if s.half_width > 0.0 {
        s.half_width
    } else {
        let b = problem.omega.bounding_box();
        let c = s.center;
        let mut reach = [b[0] - c[0], b[2] - c[0], b[1] - c[1], b[3] - c[1]]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(d) = problem.omega.primary_disk() {
            if problem.robin_h > 0.0 {
                let opt = optimize_radius(2, problem.robin_h, problem.volume_cost, d.radius)?;
                let off = (d.center[0] - c[0]).abs().max((d.center[1] - c[1]).abs());
                reach = reach.max(off + 1.25 * opt.r_star);
            }
        }
        reach * (1.0 + 16.0 / s.n as f64)
    };
    Ok(Grid::square(s.n, s.center, half))
}

#[derive(Serialize)]
struct PhaseFieldSummary {
    positive_components: usize,
    zero_components: usize,
    touching_pairs: Vec<(u32, u32)>,
    multiplicity_two_length: f64,
    extracted_total: f64,
    threshold_total: f64,
    raw_total: f64,
    final_f_eps: f64,
    oracle_f_star: Option<f64>,
}

fn run_phase_field(cfg: &RunConfig, seed: u64, w: &mut ArtifactWriter) -> Result<()> {
    let problem = cfg.problem()?;
    problem.require_planar()?;
    let grid = phase_field_grid(cfg, &problem)?;
    let p = cfg.pf_params(grid.spacing[0]);
    let result = at_minimize(&problem, &grid, &p, seed)?;

    let mut trace = format!("{}\n", io::TRACE_HEADER);
    let mut stages = String::from("stage,epsilon,alternations,converged,relaxation_halvings,f_eps,extracted_total,extracted_dirichlet,extracted_surface,extracted_volume\n");
    let mut iter = 0;
    for (k, st) in result.stages.iter().enumerate() {
        for e in &st.energies {
            trace.push_str(&io::trace_row(iter, e, None));
            trace.push('\n');
            iter += 1;
        }
        let x = &st.extracted;
        let _ = writeln!(
            stages,
            "{k},{:.16e},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            st.epsilon,
            st.energies.len() - 1,
            st.converged,
            st.relaxation_halvings,
            st.final_energy.total,
            x.total,
            x.dirichlet,
            x.surface,
            x.volume
        );
    }
    w.write("trace.csv", trace.as_bytes())?;
    w.write("stages.csv", stages.as_bytes())?;
    let ex = &result.extraction;
    if cfg.output.write_fields {
        w.write_grid("u.grid", &result.u)?;
        w.write_grid("z.grid", &result.z)?;
        w.write_grid("classical.grid", &ex.classical)?;
        w.write_grid("a_mask.grid", &ex.a_mask.to_field())?;
        w.write_grid("k_mask.grid", &ex.k_mask.to_field())?;
        let regions = GridField::from_values(grid, ex.regions.iter().map(|&r| r as f64).collect())?;
        w.write_grid("regions.grid", &regions)?;
    }
    let oracle = match problem.omega {
        OmegaSpec::Disk(d) if problem.robin_h > 0.0 => {
            Some(optimize_radius(2, problem.robin_h, problem.volume_cost, d.radius)?.f_star)
        }
        _ => None,
    };
    let summary = PhaseFieldSummary {
        positive_components: ex.positive_components,
        zero_components: ex.zero_components,
        touching_pairs: ex.touching_pairs.clone(),
        multiplicity_two_length: ex.multiplicity_two_length,
        extracted_total: ex.energy.total,
        threshold_total: ex.threshold_energy.total,
        raw_total: result.raw_energy.total,
        final_f_eps: result.stages.last().map_or(f64::NAN, |s| s.final_energy.total),
        oracle_f_star: oracle,
    };
    w.write_json("summary.json", &summary)?;
    println!(
        "extracted energy {:.8} ({} positive components, {} zero components)",
        summary.extracted_total, summary.positive_components, summary.zero_components
    );
    if let Some(f) = oracle {
        println!("radial oracle F* = {f:.8}, ratio {:.4}", summary.extracted_total / f);
    }
    Ok(())
}

fn analysis_radii(cfg: &RunConfig, dx: f64) -> Vec<f64> {
    let mut cells = cfg.analysis.radii_cells.clone();
    if cells.is_empty() {
        cells = vec![32.0, 24.0, 16.0, 12.0, 8.0];
    }
    cells.sort_by(|a, b| b.total_cmp(a));
    cells.dedup();
    cells.into_iter().map(|c| c * dx).collect()
}

fn run_analyze(
    cfg: &RunConfig,
    field_path: &Path,
    op: AnalyzeOp,
    regions_path: Option<&Path>,
    w: &mut ArtifactWriter,
) -> Result<()> {
    let field = read_grid(field_path)?;
    let a = &cfg.analysis;
    let dx = field.spacing[0].max(field.spacing[1]);
    let jumps = match regions_path {
        None => FaceSet::jumps_of(&field, a.jump_threshold),
        Some(p) => {
            let labels = read_grid(p)?;
            if !labels.same_grid(&field) {
                return Err(Error::precondition(format!(
                    "{} and {} live on different grids",
                    p.display(),
                    field_path.display()
                )));
            }
            let grid = field.grid();
            let mut k = FaceSet::empty(grid);
            for f in grid.faces() {
                if labels.values[f.a] != labels.values[f.b] {
                    k.insert(&f);
                }
            }
            k
        }
    };
    match op {
        AnalyzeOp::LowerBound => {
            let r = check_lower_bound(&field, a.positivity_cut)?;
            w.write_json("lower_bound.json", &r)?;
            println!(
                "delta_obs = {}, delta_core = {}, gap_mass = {:.3e} (budget {:.3e}){}",
                r.delta_obs.map_or("none".into(), |d| format!("{d}")),
                r.delta_core.map_or("none".into(), |d| format!("{d}")),
                r.gap_mass,
                r.halo_budget,
                if r.violation { ", VIOLATION" } else { "" }
            );
        }
        AnalyzeOp::Density => {
            let points = sample_points(&jumps, a.density_points);
            let r = density_profile(&jumps, &points, &analysis_radii(cfg, dx))?;
            w.write_json("density.json", &r)?;
            println!(
                "{} samples, ratio range [{:.4}, {:.4}], {} skipped",
                r.samples.len(),
                r.min_ratio,
                r.max_ratio,
                r.skipped.len()
            );
        }
        AnalyzeOp::Blowup => {
            let point = match a.point.as_slice() {
                [x, y] => [*x, *y],
                [] => *sample_points(&jumps, 1)
                    .first()
                    .ok_or_else(|| Error::precondition("field has no jump faces to blow up at"))?,
                _ => return Err(Error::Config("analysis.point must have two entries".into())),
            };
            let opts = BlowupOptions {
                flat_tol: a.flat_tol,
                directions: a.directions,
                ..BlowupOptions::default()
            };
            let r = blowup_scan(&field, &jumps, point, &analysis_radii(cfg, dx), &opts)?;
            w.write_json("blowup.json", &r)?;
            println!("{:?} at {:?}, energy floor {:.4e}", r.classification, r.point, r.energy_floor);
        }
        AnalyzeOp::Holes => {
            let grid = field.grid();
            let zero: Vec<bool> = field.values.iter().map(|&v| v <= a.positivity_cut).collect();
            let (labels, _) = label_components(&grid, &zero);
            let reports = hole_geometry(&component_masks(grid, &labels), Some(&jumps));
            w.write_json("holes.json", &reports)?;
            let bounded = reports.iter().flatten().count();
            println!("{} zero components, {bounded} bounded holes", reports.len());
            for h in reports.iter().flatten() {
                println!(
                    "  area {:.4e}: convexity defect {:.4}, roundness {:.4}",
                    h.area, h.convexity_defect, h.roundness
                );
            }
        }
    }
    Ok(())
}
