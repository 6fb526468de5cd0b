//! `mhdlab`: simulation, ensemble analysis, cover and cutoff tooling on top
//! of the `mhd-enstrophy` library.
//!
//! Exit codes: 0 success, 1 usage, 2 validation or format failure,
//! 3 numerical divergence.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use mhd_enstrophy::covers::{generate_cover, verify_cover, Cover};
use mhd_enstrophy::cutoffs::{cutoffs_for_cover, make_integral_cutoff, verify_cutoff_bounds, BoundReport};
use mhd_enstrophy::ensemble::{cascade_check, EnsembleReport};
use mhd_enstrophy::io::{RunConfig, SnapshotDir, SnapshotWriter};
use mhd_enstrophy::kinematics::check_assumptions;
use mhd_enstrophy::solver::{run_with, SnapshotSource};
use mhd_enstrophy::Error;
use serde::Serialize;

mod selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mhdlab", version, about = "MHD enstrophy-flux laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the solver and write a snapshot directory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integral quantities, assumption checks, cascade and locality report.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        snapshots: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Flux-vs-scale CSV; defaults to the report path with `.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Generate or verify covers of the integral domain.
    Cover {
        #[command(subcommand)]
        action: CoverAction,
    },
    /// Sampled ratio bounds for the integral, interior and boundary cutoffs.
    VerifyCutoffs {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Built-in checks with one pass/fail line each.
    Selftest,
}

#[derive(Debug, Subcommand)]
enum CoverAction {
    /// Covers for every configured scale, `covers_per_scale` each.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Count, coverage and multiplicity checks of a cover file.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        cover: PathBuf,
    },
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Diverged { .. } | Error::CflViolation { .. } => EXIT_DIVERGED,
            _ => EXIT_INVALID,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

type Outcome = Result<(), Failure>;

pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}

fn execute(cmd: Command) -> Outcome {
    match cmd {
        Command::Simulate { config, out } => simulate(&config, out),
        Command::Analyze { config, snapshots, out, csv } => analyze(&config, snapshots, out, csv),
        Command::Cover { action: CoverAction::Gen { config, out } } => cover_gen(&config, &out),
        Command::Cover { action: CoverAction::Verify { config, cover } } => cover_verify(&config, &cover),
        Command::VerifyCutoffs { config, samples } => verify_cutoffs(&config, samples),
        Command::Selftest => {
            if selftest::run() {
                Ok(())
            } else {
                Err(Failure::invalid("selftest failed"))
            }
        }
    }
}

fn pick(flag: Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf, Failure> {
    flag.or_else(|| configured.clone())
        .ok_or_else(|| Failure { code: EXIT_USAGE, message: format!("no {what} path given") })
}

fn write_json(path: &Path, value: &impl Serialize) -> Outcome {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn simulate(config: &Path, out: Option<PathBuf>) -> Outcome {
    let cfg = RunConfig::load(config)?;
    let out = pick(out, &cfg.output.snapshots, "snapshot directory")?;
    let init = cfg.initial_state()?;
    let mut writer = SnapshotWriter::create(&out, cfg.solver.viscosity, cfg.solver.resistivity)?;
    let report = run_with(&init, &cfg.solver, |s| writer.push(&s))?;
    let meta = writer.finish(Some(serde_json::to_value(&cfg)?), Some(report.clone()))?;
    println!(
        "wrote {} snapshots to {} (max energy residual {:e})",
        meta.files.len(),
        out.display(),
        report.max_energy_residual
    );
    Ok(())
}

/// Runs the analysis pipeline on a snapshot directory.
pub fn analysis_report(cfg: &RunConfig, source: &SnapshotDir) -> Result<EnsembleReport, Failure> {
    let mut params = cfg.analysis_params()?;
    if cfg.analysis.horizon.is_none() {
        let t = source.times();
        params.horizon = t[t.len() - 1] - t[0];
        params.validate()?;
    }
    let mut report = cascade_check(source, &params, cfg.covers.covers_per_scale, cfg.covers.seed)?;
    if cfg.assumptions.enabled {
        report.assumptions =
            Some(check_assumptions(source, &params, cfg.assumptions.pair_samples, cfg.assumptions.seed)?);
    }
    Ok(report)
}

fn analyze(config: &Path, snapshots: Option<PathBuf>, out: Option<PathBuf>, csv: Option<PathBuf>) -> Outcome {
    let cfg = RunConfig::load(config)?;
    let dir = pick(snapshots, &cfg.output.snapshots, "snapshot directory")?;
    let out = pick(out, &cfg.output.report, "report")?;
    let csv = csv.or_else(|| cfg.output.csv.clone()).unwrap_or_else(|| out.with_extension("csv"));
    let source = SnapshotDir::open(&dir)?;
    let report = analysis_report(&cfg, &source)?;
    std::fs::write(&out, report.to_json()? + "\n")?;
    std::fs::write(&csv, report.flux_csv())?;
    let band = report.scales.iter().filter(|s| s.in_band).count();
    println!(
        "sigma0 = {:e}, P0 = {:e}; {band}/{} scales in band; report {} csv {}",
        report.integral.sigma0,
        report.integral.p0,
        report.scales.len(),
        out.display(),
        csv.display()
    );
    Ok(())
}

fn configured_covers(cfg: &RunConfig) -> Result<Vec<Cover<f64>>, Failure> {
    let params = cfg.analysis_params()?;
    let mut covers = Vec::new();
    for &r in &params.scales {
        for i in 0..cfg.covers.covers_per_scale {
            covers.push(generate_cover(params.cover_params(r)?, cfg.covers.seed.wrapping_add(i as u64))?);
        }
    }
    Ok(covers)
}

fn cover_gen(config: &Path, out: &Path) -> Outcome {
    let cfg = RunConfig::load(config)?;
    let covers = configured_covers(&cfg)?;
    write_json(out, &covers)?;
    println!("wrote {} covers to {}", covers.len(), out.display());
    Ok(())
}

fn cover_verify(config: &Path, path: &Path) -> Outcome {
    let cfg = RunConfig::load(config)?;
    let text = std::fs::read_to_string(path)?;
    let raw: Vec<Cover<f64>> = match serde_json::from_str::<Vec<Cover<f64>>>(&text) {
        Ok(v) => v,
        Err(_) => vec![serde_json::from_str(&text)?],
    };
    let mut reports = Vec::new();
    for c in raw {
        let c = Cover::new(c.params, c.centers)?;
        reports.push(verify_cover(&c, cfg.covers.sample_density));
    }
    println!("{}", serde_json::to_string_pretty(&reports)?);
    let bad = reports.iter().filter(|r| !r.is_valid()).count();
    if bad > 0 {
        return Err(Failure::invalid(format!("{bad} of {} covers failed", reports.len())));
    }
    Ok(())
}

#[derive(Serialize)]
struct CutoffSummary {
    #[serde(rename = "R")]
    r: f64,
    center: [f64; 3],
    passed: bool,
    bounds: BoundReport,
}

fn verify_cutoffs(config: &Path, samples: usize) -> Outcome {
    let cfg = RunConfig::load(config)?;
    let params = cfg.analysis_params()?;
    let cp = params.cutoff_params()?;
    let mut cutoffs = vec![make_integral_cutoff(params.r0, cp)?];
    for &r in &params.scales {
        cutoffs.extend(cutoffs_for_cover(&generate_cover(params.cover_params(r)?, cfg.covers.seed)?, cp)?);
    }
    let summary: Vec<CutoffSummary> = cutoffs
        .iter()
        .map(|c| {
            let bounds = verify_cutoff_bounds(c, samples);
            CutoffSummary { r: c.r, center: c.center, passed: bounds.passed(), bounds }
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&summary)?);
    let bad = summary.iter().filter(|s| !s.passed).count();
    if bad > 0 {
        return Err(Failure::invalid(format!("{bad} of {} cutoffs failed", summary.len())));
    }
    Ok(())
}
