//! The `nao` command-line tool.
//!
//! Exit codes: 0 on success, 2 for invalid input or flags, 3 for numerical
//! degeneracy or non-convergence (outputs are still written where possible).
//! Every report is JSON with a `schema_version` field and echoes the resolved
//! configuration; wall-clock figures live under the `timing` key only.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::adam::AdamSettings;
use crate::baselines;
use crate::centroid::{self, CentroidProblem};
use crate::error::{NaoError, Result};
use crate::metric::{self, AuditTolerances};
use crate::oracle2d::{self, GridSpec, Stencil};
use crate::path::{self, Delta, OptimReport, PathConfig, PiecewisePath};
use crate::prior::{PriorSpec, SeedPoint};
use crate::rng::RngState;
use crate::seedio::{self, Dtype, SeedSet};
use crate::vector;

pub const SCHEMA_VERSION: u32 = 1;
pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "nao",
    version,
    about = "Norm-aware seed interpolation, distances and centroids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw Gaussian seeds into a seed-set file.
    Sample(SampleArgs),
    /// Interpolate between the two seeds of a seed-set file.
    Interpolate(InterpolateArgs),
    /// Compute a centroid of a seed set.
    Centroid(CentroidArgs),
    /// Estimate the prior-induced distance between two seeds.
    Distance(DistanceArgs),
    /// Empirically audit the metric axioms on random triples.
    Audit(AuditArgs),
    /// Dump log-pdf values over a 2D grid as CSV (optionally SVG).
    PriorGrid(PriorGridArgs),
    /// Sweep the segment cap δ for one seed pair.
    DeltaSweep(DeltaSweepArgs),
    /// Shortest weighted path on a 2D grid.
    Oracle2d(OracleArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DtypeArg {
    F64,
    F32,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "f64")]
    pub dtype: DtypeArg,
}

/// Optimizer flags shared by the path-based commands.
#[derive(Debug, Clone, Args)]
pub struct OptimArgs {
    /// Number of path segments.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Segment cap: `auto` (‖z1 − z2‖/n), `inf`, or a positive number.
    #[arg(long, default_value = "auto")]
    pub delta: String,
    #[arg(long, default_value_t = crate::path::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub grad_tol: f64,
}

impl OptimArgs {
    pub fn path_config(&self) -> Result<PathConfig> {
        let cfg = PathConfig {
            n: self.n,
            delta: self.delta.parse()?,
            alpha: self.alpha,
            optimizer: AdamSettings {
                step_size: self.lr,
                max_iters: self.iters,
                grad_tol: self.grad_tol,
                ..AdamSettings::default()
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterpMethod {
    Lerp,
    Slerp,
    Nao,
}

#[derive(Debug, Args)]
pub struct InterpolateArgs {
    #[arg(long, value_enum)]
    pub method: InterpMethod,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Number of seeds sampled at uniform arc-length fractions.
    #[arg(long, default_value_t = 3)]
    pub samples: usize,
    /// Path output: CSV when the name ends in `.csv`, binary seed set otherwise.
    #[arg(long)]
    pub out_path: Option<PathBuf>,
    #[arg(long)]
    pub out_samples: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CentroidMethod {
    Euclidean,
    NormEuclidean,
    Sphere,
    Nao,
}

#[derive(Debug, Args)]
pub struct CentroidArgs {
    #[arg(long, value_enum)]
    pub method: CentroidMethod,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Drop the centroid's own `−ln P(c)` term from the objective.
    #[arg(long)]
    pub no_centroid_prior: bool,
    /// Convergence tolerance of the spherical iterate.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[arg(long, default_value_t = 0.01)]
    pub symmetry_tol: f64,
    #[arg(long, default_value_t = 0.02)]
    pub triangle_tol: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PriorGridArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub min: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub max: f64,
    #[arg(long)]
    pub res: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also render filled contours to this SVG file.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DeltaSweepArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Comma-separated δ values (`auto`, `inf`, or numbers). `auto` is always included.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Vec<String>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 512)]
    pub res: usize,
    #[arg(long, default_value_t = 16)]
    pub stencil: u32,
    /// Lower grid corner on both axes; defaults to a square around the mode circle.
    #[arg(long, allow_negative_numbers = true)]
    pub min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub max: Option<f64>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Sample(a) => cmd_sample(&a),
        Command::Interpolate(a) => cmd_interpolate(&a),
        Command::Centroid(a) => cmd_centroid(&a),
        Command::Distance(a) => cmd_distance(&a),
        Command::Audit(a) => cmd_audit(&a),
        Command::PriorGrid(a) => cmd_prior_grid(&a),
        Command::DeltaSweep(a) => cmd_delta_sweep(&a),
        Command::Oracle2d(a) => cmd_oracle2d(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("nao: {e}");
            e.exit_code()
        }
    }
}

fn envelope(command: &str, body: Value, started: Instant) -> Value {
    let mut v = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
    });
    if let (Value::Object(out), Value::Object(extra)) = (&mut v, body) {
        out.extend(extra);
        out.insert(
            "timing".into(),
            json!({ "elapsed_ms": started.elapsed().as_secs_f64() * 1e3 }),
        );
    }
    v
}

fn write_report(path: &Option<PathBuf>, report: &Value) -> Result<()> {
    match path {
        Some(p) => seedio::write_json(p, report),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{}", serde_json::to_string_pretty(report)?)?;
            Ok(())
        }
    }
}

fn read_pair(file: &Path) -> Result<(PriorSpec, SeedPoint, SeedPoint)> {
    let set = seedio::read_seedset(file)?;
    if set.count() != 2 {
        return Err(NaoError::invalid(format!(
            "expected exactly 2 seeds in {}, found {}",
            file.display(),
            set.count()
        )));
    }
    let spec = PriorSpec::new(set.d)?;
    let mut it = set.seeds.into_iter();
    let a = it.next().expect("two seeds");
    let b = it.next().expect("two seeds");
    Ok((spec, a, b))
}

fn optim_json(report: &OptimReport) -> Value {
    serde_json::to_value(report).expect("reports always serialize")
}

fn path_stats(spec: &PriorSpec, p: &PiecewisePath) -> Value {
    json!({
        "points": p.len(),
        "objective": path::path_objective(spec, p).expect("dimension checked"),
        "arc_length": p.arc_length(),
        "segment_lengths": p.segment_lengths(),
        "point_norms": p.point_norms(),
        "point_nll": p.point_nll(spec),
        "mean_point_nll": p.mean_point_nll(spec),
    })
}

fn seed_stats(spec: &PriorSpec, seeds: &[SeedPoint]) -> Value {
    let norms: Vec<f64> = seeds.iter().map(SeedPoint::norm).collect();
    let nll: Vec<f64> = norms.iter().map(|&r| spec.nll_at_radius(r)).collect();
    json!({ "norms": norms, "nll": nll })
}

pub fn cmd_sample(a: &SampleArgs) -> Result<i32> {
    if a.count == 0 {
        return Err(NaoError::invalid("--count must be >= 1"));
    }
    let spec = PriorSpec::new(a.dim)?;
    let mut rng = RngState::new(a.rng_seed);
    let seeds: Vec<SeedPoint> = (0..a.count).map(|_| spec.sample_seed(&mut rng)).collect();
    let dtype = match a.dtype {
        DtypeArg::F64 => Dtype::F64,
        DtypeArg::F32 => Dtype::F32,
    };
    seedio::write_seedset(&a.out, &SeedSet::new(seeds, dtype)?)?;
    Ok(EXIT_OK)
}

pub fn cmd_interpolate(a: &InterpolateArgs) -> Result<i32> {
    let started = Instant::now();
    let cfg = a.optim.path_config()?;
    if a.samples == 0 {
        return Err(NaoError::invalid("--samples must be >= 1"));
    }
    let (spec, z1, z2) = read_pair(&a.input)?;
    let (path, optim) = match a.method {
        InterpMethod::Lerp => (path::linear_init(&z1, &z2, cfg.n)?, None),
        InterpMethod::Slerp => (baselines::slerp_path(&z1, &z2, cfg.n)?, None),
        InterpMethod::Nao => {
            let (p, r) = path::optimize_path(&spec, &z1, &z2, &cfg)?;
            (p, Some(r))
        }
    };
    let samples = path::sample_along(&path, a.samples)?;
    if let Some(out) = &a.out_path {
        seedio::write_path(out, &path)?;
    }
    if let Some(out) = &a.out_samples {
        seedio::write_seedset(out, &SeedSet::new(samples.clone(), Dtype::F64)?)?;
    }
    let objective = path::path_objective(&spec, &path)?;
    let converged = optim.as_ref().is_none_or(|r| r.converged);
    let body = json!({
        "method": format!("{:?}", a.method).to_lowercase(),
        "dim": spec.dim(),
        "config": cfg,
        "final_objective": objective,
        "path": path_stats(&spec, &path),
        "samples": seed_stats(&spec, &samples),
        "optimizer": optim.as_ref().map(optim_json),
    });
    write_report(&a.report, &envelope("interpolate", body, started))?;
    Ok(if converged { EXIT_OK } else { EXIT_DEGENERATE })
}

pub fn cmd_centroid(a: &CentroidArgs) -> Result<i32> {
    let started = Instant::now();
    let set = seedio::read_seedset(&a.input)?;
    let spec = PriorSpec::new(set.d)?;
    let seeds = set.seeds;
    let cfg = a.optim.path_config()?;
    let mut warnings: Vec<String> = Vec::new();
    let mut exit = EXIT_OK;

    let (c, diagnostics) = match a.method {
        CentroidMethod::Euclidean => {
            let c = baselines::euclidean_centroid(&seeds)?;
            if c.norm() <= crate::prior::NORM_FLOOR {
                warnings.push("Euclidean centroid is at the origin, where the prior density vanishes".into());
            }
            (c, json!({}))
        }
        CentroidMethod::NormEuclidean => (baselines::normalized_euclidean_centroid(&spec, &seeds)?, json!({})),
        CentroidMethod::Sphere => {
            let out = baselines::sphere_projection_centroid(&spec, &seeds, a.tol, a.max_iter)?;
            if !out.converged {
                warnings.push("spherical iterate did not converge".into());
                exit = EXIT_DEGENERATE;
            }
            let diag = json!({
                "iterations": out.iterations,
                "converged": out.converged,
                "arc_trace": out.arc_trace,
                "tol": a.tol,
                "max_iter": a.max_iter,
            });
            (out.centroid, diag)
        }
        CentroidMethod::Nao => {
            let problem = CentroidProblem {
                per_path_n: cfg.n,
                delta: match cfg.delta {
                    Delta::Auto => centroid::CentroidDelta::Auto,
                    Delta::Value(v) => centroid::CentroidDelta::PerPath(vec![v; seeds.len()]),
                },
                centroid_prior: !a.no_centroid_prior,
                alpha: cfg.alpha,
                optimizer: cfg.optimizer,
                ..CentroidProblem::new(seeds.clone())
            };
            let out = centroid::optimize_centroid(&spec, &problem)?;
            if !out.report.converged {
                exit = EXIT_DEGENERATE;
            }
            let joint = centroid::centroid_objective(&spec, &out.centroid, &out.paths, problem.centroid_prior)?;
            let diag = json!({
                "joint_objective": joint,
                "centroid_prior": problem.centroid_prior,
                "deltas": out.deltas,
                "path_violations": out.path_violations,
                "initial_centroid_norm": out.initial_centroid.norm(),
                "optimizer": optim_json(&out.report),
            });
            (out.centroid, diag)
        }
    };
    seedio::write_seedset(&a.out, &SeedSet::new(vec![c.clone()], Dtype::F64)?)?;
    let body = json!({
        "method": format!("{:?}", a.method).to_lowercase(),
        "dim": spec.dim(),
        "seeds": seeds.len(),
        "config": cfg,
        "centroid_norm": c.norm(),
        "centroid_nll": spec.nll_at_radius(c.norm()),
        "mode_radius": spec.mode_radius(),
        "diagnostics": diagnostics,
        "warnings": warnings,
    });
    write_report(&a.report, &envelope("centroid", body, started))?;
    Ok(exit)
}

pub fn cmd_distance(a: &DistanceArgs) -> Result<i32> {
    let started = Instant::now();
    let cfg = a.optim.path_config()?;
    let (spec, x, y) = read_pair(&a.input)?;
    let (_, report) = path::optimize_path(&spec, &x, &y, &cfg)?;
    let body = json!({
        "dim": spec.dim(),
        "config": cfg,
        "distance": report.final_objective,
        "euclidean_distance": vector::distance(x.as_slice(), y.as_slice()),
        "optimizer": optim_json(&report),
    });
    write_report(&a.report, &envelope("distance", body, started))?;
    Ok(if report.converged { EXIT_OK } else { EXIT_DEGENERATE })
}

/// Thread cap for audit trials from `NAO_THREADS`; `None` means rayon's default.
fn audit_threads() -> Result<Option<usize>> {
    match std::env::var("NAO_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(NaoError::invalid(format!(
                "NAO_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}

pub fn cmd_audit(a: &AuditArgs) -> Result<i32> {
    let started = Instant::now();
    if a.trials == 0 {
        return Err(NaoError::invalid("--trials must be >= 1"));
    }
    let cfg = a.optim.path_config()?;
    let spec = PriorSpec::new(a.dim)?;
    let tolerances = AuditTolerances {
        symmetry_rel: a.symmetry_tol,
        triangle_rel: a.triangle_tol,
        ..AuditTolerances::default()
    };
    let rng = RngState::new(a.rng_seed);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = audit_threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| NaoError::invalid(format!("cannot start worker threads: {e}")))?;
    let report = pool.install(|| metric::audit_metric(&spec, a.trials, &cfg, &rng, tolerances))?;
    let body = json!({
        "passed": report.passed(),
        "audit": report,
    });
    write_report(&a.report, &envelope("audit", body, started))?;
    Ok(EXIT_OK)
}

/// `res × res` log-pdf values at cell centres; row `j` holds `y = min + (j + ½)·h`.
pub fn prior_grid(spec: &PriorSpec, min: f64, max: f64, res: usize) -> Result<Vec<Vec<f64>>> {
    if res == 0 {
        return Err(NaoError::invalid("--res must be >= 1"));
    }
    if !(min.is_finite() && max.is_finite() && max > min) {
        return Err(NaoError::invalid("need finite --min < --max"));
    }
    let h = (max - min) / res as f64;
    let centre = |i: usize| min + (i as f64 + 0.5) * h;
    (0..res)
        .map(|j| {
            (0..res)
                .map(|i| spec.log_pdf(centre(i).hypot(centre(j))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

fn grid_csv(values: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in values {
        let line: Vec<String> = row
            .iter()
            .map(|v| if v.is_finite() { format!("{v}") } else { "-inf".into() })
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

const CONTOUR_COLOURS: [&str; 10] = [
    "#440154", "#482878", "#3e4989", "#31688e", "#26828e", "#1f9e89", "#35b779", "#6ece58", "#b5de2b", "#fde725",
];

/// Filled contours on ten equal-width levels between the smallest and largest
/// finite values. One rectangle per cell, y axis pointing up.
fn grid_svg(values: &[Vec<f64>]) -> String {
    let finite = values.iter().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let res = values.len();
    let cell = 2usize;
    let side = res * cell;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{side}\" height=\"{side}\" viewBox=\"0 0 {side} {side}\" shape-rendering=\"crispEdges\">\n"
    );
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    for (j, row) in values.iter().enumerate() {
        let y = (res - 1 - j) * cell;
        for (i, v) in row.iter().enumerate() {
            let level = if v.is_finite() {
                (((v - lo) / span * 10.0).floor() as usize).min(9)
            } else {
                0
            };
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"{}\"/>\n",
                i * cell,
                CONTOUR_COLOURS[level]
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

pub fn cmd_prior_grid(a: &PriorGridArgs) -> Result<i32> {
    let spec = PriorSpec::new(a.dim)?;
    let values = prior_grid(&spec, a.min, a.max, a.res)?;
    seedio::write_text(&a.out, &grid_csv(&values))?;
    if let Some(svg) = &a.svg {
        seedio::write_text(svg, &grid_svg(&values))?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_delta_sweep(a: &DeltaSweepArgs) -> Result<i32> {
    let started = Instant::now();
    let base = a.optim.path_config()?;
    let (spec, z1, z2) = read_pair(&a.input)?;
    let mut deltas: Vec<Delta> = a.deltas.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?;
    if !deltas.contains(&Delta::Auto) {
        deltas.insert(0, Delta::Auto);
    }
    let auto = Delta::Auto.resolve(z1.as_slice(), z2.as_slice(), base.n);
    let mut rows = Vec::with_capacity(deltas.len());
    let mut all_converged = true;
    for delta in deltas {
        let cfg = PathConfig { delta, ..base };
        let (p, r) = path::optimize_path(&spec, &z1, &z2, &cfg)?;
        all_converged &= r.converged;
        let nll = p.point_nll(&spec);
        let max_nll = nll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        rows.push(json!({
            "delta": delta,
            "resolved_delta": r.delta,
            "relative_to_auto": r.delta / auto,
            "final_objective": r.final_objective,
            "final_penalty": r.final_penalty,
            "max_segment_violation": r.max_segment_violation,
            "max_penalty_over_run": r.penalty_trace.iter().copied().fold(0.0, f64::max),
            "mean_point_nll": p.mean_point_nll(&spec),
            "max_point_nll": max_nll,
            "converged": r.converged,
            "iterations_used": r.iterations_used,
        }));
    }
    let body = json!({
        "dim": spec.dim(),
        "config": base,
        "auto_delta": auto,
        "sweep": rows,
    });
    write_report(&a.report, &envelope("delta-sweep", body, started))?;
    Ok(if all_converged { EXIT_OK } else { EXIT_DEGENERATE })
}

pub fn cmd_oracle2d(a: &OracleArgs) -> Result<i32> {
    let started = Instant::now();
    let (spec, x, y) = read_pair(&a.input)?;
    let stencil = Stencil::from_count(a.stencil)?;
    let grid = match (a.min, a.max) {
        (Some(lo), Some(hi)) => GridSpec::new([lo, lo], [hi, hi], a.res, stencil)?,
        (None, None) => GridSpec::around(&spec, x.as_slice(), y.as_slice(), a.res, stencil)?,
        _ => return Err(NaoError::invalid("--min and --max must be given together")),
    };
    let out = oracle2d::grid_shortest_path(&spec, &grid, &x, &y)?;
    let body = json!({
        "dim": spec.dim(),
        "cost": out.cost,
        "snap_error": out.snap_error,
        "cell_diagonal": grid.cell_diagonal(),
        "grid": grid,
        "polyline": out.polyline,
    });
    write_report(&a.report, &envelope("oracle2d", body, started))?;
    Ok(EXIT_OK)
}

/// Report fields that vary run to run; everything else is deterministic.
pub fn strip_timing(report: &mut Value) {
    if let Value::Object(m) = report {
        m.remove("timing");
    }
}
