use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bisbs_core::parse::parse_complex;
use bisbs_core::verify::{run_suite, Suite};
use bisbs_core::{
    backward_conjugation, backward_orbit_with, classify_from, forward_conjugation, forward_orbit,
    parse_map, Backward, BackwardOptions, Complex64, Grid, Model, ModelPoint, SelfMap, Tolerances,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Forward and backward iteration, classification and conjugation fields
/// for analytic self-maps of the disk and the upper half-plane.
#[derive(Parser)]
#[command(name = "bisbs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward orbit z_{n+1} = phi(z_n) as CSV.
    Orbit(OrbitArgs),
    /// Backward sequence with bounded steps as CSV.
    Backward(BackwardArgs),
    /// Denjoy-Wolff point, multiplier and taxonomy label.
    Classify(ClassifyArgs),
    /// Sampled conjugation field and its JSON sidecar.
    Conjugate(ConjugateArgs),
    /// Invariant suites; exits 0 iff every property passes.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Atlas name (ia_empty, ib_empty, iib_empty, ia_1, iib_1, iib_2) or an
    /// inline family: disk-scale:<c>, disk-dilation:<k>, half-affine:<a>,<b>.
    #[arg(long)]
    map: String,
    /// Flat key = value file overriding tolerances.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OrbitArgs {
    #[command(flatten)]
    common: Common,
    /// Starting point, e.g. 0.5+2i.
    #[arg(long, allow_hyphen_values = true)]
    start: String,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
}

#[derive(Args)]
struct BackwardArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    start: String,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Bound a < 1 on pseudo-hyperbolic steps; defaults to the configured value.
    #[arg(long)]
    step_bound: Option<f64>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    /// Forward probe start; defaults to i (half-plane) or 0 (disk).
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// Print the full JSON report instead of a summary.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Forward,
    Backward,
}

#[derive(Args)]
struct ConjugateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Orbit start (forward) or BISBS start (backward); defaults to i.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    #[arg(long, default_value_t = 4096)]
    depth: usize,
    /// re_min,re_max,im_min,im_max[,pitch]; defaults to the configured grid.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long)]
    step_bound: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// metric, atlas, parabolic or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the results as a JSON array.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn tolerances(path: Option<&Path>) -> Result<Tolerances> {
    let tol = match path {
        Some(p) => {
            let text =
                fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            Tolerances::default().with_overrides(&text)?
        }
        None => Tolerances::default(),
    };
    tol.validate()?;
    Ok(tol)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn start_point(m: &SelfMap, text: Option<&str>) -> Result<ModelPoint> {
    let z = match text {
        Some(t) => parse_complex(t)?,
        None if m.model() == Model::Disk => Complex64::new(0.0, 0.0),
        None => Complex64::new(0.0, 1.0),
    };
    Ok(ModelPoint::new(z, m.model())?)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Orbit(a) => {
            let m = parse_map(&a.common.map)?;
            let z0 = start_point(&m, Some(&a.start))?;
            let orbit = forward_orbit(&m, &z0, a.steps)?;
            let mut out = output(a.common.out.as_deref())?;
            orbit.write_csv(&mut out)?;
            out.flush()?;
            if let Some(stop) = &orbit.stop {
                eprintln!("orbit stopped early: {stop}");
            }
            Ok(true)
        }
        Command::Backward(a) => {
            let tol = tolerances(a.common.config.as_deref())?;
            let m = parse_map(&a.common.map)?;
            let w0 = start_point(&m, Some(&a.start))?;
            let opts = BackwardOptions::from_tolerances(&tol)
                .with_step_bound(a.step_bound.unwrap_or(tol.step_bound));
            let mut out = output(a.common.out.as_deref())?;
            match backward_orbit_with(&m, &w0, a.steps, &opts, &tol)? {
                Backward::Orbit(o) => {
                    o.write_csv(&mut out)?;
                    out.flush()?;
                    Ok(true)
                }
                Backward::Failure(e) => {
                    e.partial.write_csv(&mut out)?;
                    out.flush()?;
                    let best = e.best_step.map_or("none".to_string(), |s| s.to_string());
                    anyhow::bail!(bisbs_core::Error::Domain(format!(
                        "no bounded-step preimage at level {} ({}; smallest rejected step {best})",
                        e.level, e.reason
                    )))
                }
            }
        }
        Command::Classify(a) => {
            let tol = tolerances(a.common.config.as_deref())?;
            let m = parse_map(&a.common.map)?;
            let z0 = start_point(&m, a.start.as_deref())?;
            let report = classify_from(&m, z0.value(), &tol)?;
            let mut out = output(a.common.out.as_deref())?;
            if a.json {
                writeln!(out, "{}", report.to_json())?;
            } else {
                writeln!(out, "map: {}", report.map)?;
                writeln!(out, "label: {}", report.label())?;
                writeln!(
                    out,
                    "denjoy-wolff point: {}",
                    serde_json::to_value(report.dw_point)?["text"]
                        .as_str()
                        .unwrap_or("?")
                )?;
                writeln!(out, "multiplier: {}", report.multiplier)?;
                for note in &report.diagnostics.notes {
                    writeln!(out, "note: {note}")?;
                }
            }
            out.flush()?;
            Ok(true)
        }
        Command::Conjugate(a) => {
            let tol = tolerances(a.common.config.as_deref())?;
            let m = parse_map(&a.common.map)?;
            let grid = match &a.grid {
                Some(g) => g.parse::<Grid>()?,
                None => Grid::from_tolerances(&tol)?,
            };
            let start = start_point(&m, a.start.as_deref())?;
            let field = match a.mode {
                Mode::Forward => forward_conjugation(&m, &start, a.depth, &grid)?,
                Mode::Backward => {
                    let opts = BackwardOptions::from_tolerances(&tol)
                        .with_step_bound(a.step_bound.unwrap_or(tol.step_bound));
                    let seq = match backward_orbit_with(&m, &start, a.depth + 1, &opts, &tol)? {
                        Backward::Orbit(o) => o,
                        Backward::Failure(e) => anyhow::bail!(bisbs_core::Error::Domain(format!(
                            "no bounded-step backward sequence from the start (failed at level {}: {})",
                            e.level, e.reason
                        ))),
                    };
                    backward_conjugation(&m, &seq, a.depth, &grid)?
                }
            };
            let mut out = output(a.common.out.as_deref())?;
            field.write_csv(&mut out)?;
            out.flush()?;
            let sidecar = serde_json::to_string_pretty(&field.sidecar())?;
            match &a.common.out {
                Some(p) => {
                    let mut path = p.clone().into_os_string();
                    path.push(".json");
                    fs::write(&path, sidecar + "\n").context("writing sidecar")?;
                }
                None => eprintln!("{sidecar}"),
            }
            Ok(true)
        }
        Command::Verify(a) => {
            let tol = tolerances(a.config.as_deref())?;
            let suite: Suite = a.suite.parse()?;
            let results = run_suite(suite, a.seed, &tol);
            let mut out = output(a.out.as_deref())?;
            if a.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&results)?)?;
            } else {
                for r in &results {
                    writeln!(out, "{r}")?;
                }
            }
            out.flush()?;
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                eprintln!("{failed} of {} properties failed", results.len());
            }
            Ok(failed == 0)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<bisbs_core::Error>() {
        Some(bisbs_core::Error::Usage(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
