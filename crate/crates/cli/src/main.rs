//! `ossrf`: synthesize stable random fields with matrix (operator) scaling and check
//! their properties.

mod config;
mod error;
mod report;
mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use ossrf::synthesis::output::{write_bin, write_csv, write_pgm, Format};
use ossrf::Synthesizer;

use crate::config::{Run, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ossrf", version, about = "Stable random fields with matrix scaling exponents")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; output does not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Output format: bin, csv or pgm. The binary grid and sidecar are always written.
    #[arg(long, global = true, value_name = "FORMAT")]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize one realization on the configured grid.
    Synth,
    /// Run a verification suite: polar, homogeneous, scaling, stationarity, holder, dimension or all.
    Verify {
        #[arg(default_value = "all")]
        suite: String,
    },
    /// Print the radial part, direction and function value at a point.
    Tau {
        #[arg(required = true, allow_negative_numbers = true, num_args = 1..)]
        point: Vec<f64>,
    },
    /// Describe the resolved field, discretization and oracle comparison.
    Report,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OSSRF_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Prints a line; a closed stdout is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn load(cli: &Cli) -> Result<Run, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate(cli.format.as_deref())
}

fn execute(cli: &Cli) -> Result<u8, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let run = load(cli)?;
    match &cli.command {
        Command::Synth => synth(&run, cli.out.as_deref()),
        Command::Verify { suite } => {
            let out = cli.out.clone().unwrap_or_else(|| run.config.output.dir.clone());
            let report = verify::run(&run, suite, Some(&out))?;
            emit(&report.to_string());
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("{}-verify.json", run.config.output.stem));
                std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
            }
            Ok(if report.failures() > 0 { 1 } else { 0 })
        }
        Command::Tau { point } => {
            tau(&run, point)?;
            Ok(0)
        }
        Command::Report => {
            let report = report::build(&run)?;
            emit(report.text().trim_end());
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("{}-report.json", run.config.output.stem));
                std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
            }
            Ok(0)
        }
    }
}

fn synth(run: &Run, out: Option<&Path>) -> Result<u8, CliError> {
    let dir = out.unwrap_or(&run.config.output.dir);
    let stem = &run.config.output.stem;
    let synth = Synthesizer::new(&run.spec, &run.config.grid, &run.config.discretization)?;
    for w in synth.warnings() {
        log::warn!("{w}");
    }
    let sample = synth.field(run.config.seed);
    if let Some(k) = sample.values.iter().position(|v| !v.is_finite()) {
        return Err(ossrf::Error::Numerical(format!("non-finite value at grid index {k}")).into());
    }
    let mut paths = write_bin(&sample, dir, stem)?;
    match run.format {
        Format::Bin => {}
        Format::Csv => paths.push(write_csv(&sample, dir, stem)?),
        Format::Pgm => paths.push(write_pgm(&sample, dir, stem)?),
    }
    for p in paths {
        emit(&p.display().to_string());
    }
    Ok(0)
}

fn tau(run: &Run, point: &[f64]) -> Result<(), CliError> {
    let d = run.exponent.dim();
    if point.len() != d {
        return Err(CliError::Config(format!("point needs {d} coordinates, got {}", point.len())));
    }
    let x = DVector::from_column_slice(point);
    let norm = ossrf::AnisoNorm::new(run.exponent.clone());
    let p = norm.polar(&x)?;
    emit(&format!("tau  {:.15e}", p.radius));
    match &p.direction {
        Some(l) => emit(&format!("l    {:?}", l.as_slice())),
        None => emit("l    undefined (origin)"),
    }
    let f = run.spec.function();
    emit(&format!("phi  {:.15e}  ({}, {})", f.eval(&x)?, f.kind(), run.spec.representation().as_str()));
    Ok(())
}
