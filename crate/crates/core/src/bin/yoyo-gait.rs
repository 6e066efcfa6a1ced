use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use yoyo_gait::io::{read_profile, read_recording, write_velocities, Recording};
use yoyo_gait::pipeline::{run_benchmark, run_estimate, run_simulate, velocities_for_filter, write_estimates, PipelineError};
use yoyo_gait::spectral::{validate_recording_in_band, DEFAULT_BAND};
use yoyo_gait::{PipelineConfig, WalkProfile, YoyoParams};

#[derive(Parser)]
#[command(name = "yoyo-gait", version, about = "Online gait-frequency and cycloid-radius estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the estimator over a position or velocity CSV.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Key-value config file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write error metrics here instead of stdout.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Exclude this many leading seconds from the metrics.
        #[arg(long, default_value_t = 0.0)]
        skip_seconds: f64,
    },
    /// Generate a synthetic velocity CSV.
    Simulate {
        #[arg(long = "R")]
        big_r: f64,
        #[arg(long = "r")]
        small_r: f64,
        #[arg(long, default_value_t = 1.0)]
        z0: f64,
        /// CSV with header `duration,omega`; one cadence segment per row.
        #[arg(long, conflicts_with_all = ["omega", "duration"])]
        profile: Option<PathBuf>,
        /// Constant cadence (rad/s) when no profile is given.
        #[arg(long)]
        omega: Option<f64>,
        /// Length in seconds when no profile is given.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        phase0: f64,
        /// Velocity noise standard deviation, m/s, on both axes.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sampling rate in Hz.
        #[arg(long, default_value_t = 25.0)]
        rate: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a recording for a dominant gait oscillation and the quarter-period lag.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BAND.0)]
        band_lo: f64,
        #[arg(long, default_value_t = DEFAULT_BAND.1)]
        band_hi: f64,
    },
    /// Time the per-sample filter and tracker update.
    Benchmark {
        #[arg(long, default_value_t = 1_000_000)]
        iters: usize,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<PipelineConfig, PipelineError> {
    match path {
        Some(p) => Ok(PipelineConfig::from_file(p)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn load_recording(path: &PathBuf) -> Result<Recording, PipelineError> {
    Ok(read_recording(BufReader::new(File::open(path)?))?)
}

fn run(cli: Cli) -> Result<ExitCode, PipelineError> {
    match cli.command {
        Command::Estimate { input, output, config, metrics, skip_seconds } => {
            let cfg = load_config(config.as_ref())?;
            let recording = load_recording(&input)?;
            let run = run_estimate(&recording, &cfg, skip_seconds)?;
            let mut out = BufWriter::new(File::create(&output)?);
            write_estimates(&mut out, &run.rows)?;
            out.flush()?;
            let record = run.metrics.to_key_values();
            match metrics {
                Some(p) => std::fs::write(p, record)?,
                None => print!("{record}"),
            }
        }
        Command::Simulate { big_r, small_r, z0, profile, omega, duration, phase0, noise, seed, rate, out } => {
            let params = YoyoParams::new(big_r, small_r, z0)?;
            let profile = match profile {
                Some(p) => read_profile(BufReader::new(File::open(p)?), phase0)?,
                None => WalkProfile::new(
                    vec![yoyo_gait::WalkSegment { duration: duration.unwrap_or(60.0), omega: omega.unwrap_or(2.5) }],
                    phase0,
                )?,
            };
            let samples = run_simulate(&params, &profile, rate, noise, seed)?;
            let mut w = BufWriter::new(File::create(&out)?);
            write_velocities(&mut w, &samples)?;
            w.flush()?;
        }
        Command::Validate { input, config, band_lo, band_hi } => {
            let cfg = load_config(config.as_ref())?;
            let recording = load_recording(&input)?;
            let samples = match &recording {
                Recording::Velocities(v) => v.clone(),
                Recording::Positions(_) => velocities_for_filter(&recording, &cfg)?,
            };
            match validate_recording_in_band(&samples, (band_lo, band_hi)) {
                Ok(report) => {
                    print!("{}", report.to_key_values());
                    if !report.passed {
                        return Ok(ExitCode::from(1));
                    }
                }
                Err(e) => {
                    println!("passed = false\nreason = {e}");
                    return Ok(ExitCode::from(1));
                }
            }
        }
        Command::Benchmark { iters } => {
            print!("{}", run_benchmark(iters)?.to_key_values());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
