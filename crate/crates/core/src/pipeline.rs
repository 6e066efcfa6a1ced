//! End-to-end runs: ingestion, estimation, error metrics, simulation and
//! benchmarking.

use std::io::Write;
use std::time::Instant;

use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::ekf::{EkfError, EkfState, SinusoidEkf};
use crate::io::{IoError, Recording};
use crate::model::{simulate_walk, ModelError, VelocitySample, WalkProfile, YoyoParams};
use crate::params::{reconstruct_velocity, ParamFilterConfig, ParamTracker};
use crate::preprocess::{preprocess, resample, uniform_spacing, PreprocessError};

pub const ESTIMATE_HEADER: [&str; 11] = [
    "t", "vx_meas", "vz_meas", "omega_hat", "A0_hat", "A1_hat", "R_hat", "r_hat", "vx_hat", "vz_hat", "gate_active",
];

/// Smallest accepted benchmark length.
pub const MIN_BENCH_ITERATIONS: usize = 100_000;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Filter(#[from] EkfError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("metrics need equal, non-empty sequences (got {0} and {1})")]
    MetricsLength(usize, usize),
    #[error("benchmark needs at least {MIN_BENCH_ITERATIONS} iterations (got {0})")]
    TooFewIterations(usize),
    #[error("writing output: {0}")]
    Write(#[from] std::io::Error),
}

/// One output row of an estimation run. Rates are in rad/s, `a0`/`a1` and
/// velocities in m/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRow {
    pub t: f64,
    pub vx_meas: f64,
    pub vz_meas: f64,
    pub omega_hat: f64,
    pub a0_hat: f64,
    pub a1_hat: f64,
    pub big_r_hat: f64,
    pub small_r_hat: f64,
    pub vx_hat: f64,
    pub vz_hat: f64,
    pub gate_active: bool,
}

impl EstimateRow {
    fn fields(&self) -> [String; 11] {
        [
            self.t.to_string(),
            self.vx_meas.to_string(),
            self.vz_meas.to_string(),
            self.omega_hat.to_string(),
            self.a0_hat.to_string(),
            self.a1_hat.to_string(),
            self.big_r_hat.to_string(),
            self.small_r_hat.to_string(),
            self.vx_hat.to_string(),
            self.vz_hat.to_string(),
            u8::from(self.gate_active).to_string(),
        ]
    }
}

/// Streaming filter + radius tracker fed with velocities in m/s.
#[derive(Debug, Clone)]
pub struct GaitEstimator {
    ekf: SinusoidEkf,
    tracker: ParamTracker,
    params: ParamFilterConfig,
}

impl GaitEstimator {
    pub fn new(config: &PipelineConfig) -> Result<Self, PipelineError> {
        config.params.validate().map_err(ConfigError::Invalid)?;
        Ok(Self {
            ekf: SinusoidEkf::new(config.ekf)?,
            tracker: ParamTracker::new(&config.params),
            params: config.params,
        })
    }

    pub fn state(&self) -> &EkfState {
        self.ekf.state()
    }

    pub fn filter(&self) -> &SinusoidEkf {
        &self.ekf
    }

    pub fn tracker(&self) -> &ParamTracker {
        &self.tracker
    }

    pub fn sample_time(&self) -> f64 {
        self.ekf.config().sample_time
    }

    /// Filter step plus radius update, without building an output row.
    #[inline]
    pub fn advance(&mut self, vx: f64, vz: f64) -> Result<bool, EkfError> {
        let state = *self.ekf.step_velocity(vx, vz)?;
        Ok(self.tracker.update(&state, &self.params))
    }

    pub fn push(&mut self, sample: &VelocitySample) -> Result<EstimateRow, EkfError> {
        let gate_active = self.advance(sample.vx, sample.vz)?;
        let dt = self.sample_time();
        let s = self.ekf.state();
        let v = reconstruct_velocity(s, &self.tracker, dt);
        Ok(EstimateRow {
            t: sample.t,
            vx_meas: sample.vx,
            vz_meas: sample.vz,
            omega_hat: s.x3() / dt,
            a0_hat: s.x4() / dt,
            a1_hat: s.amplitude() / dt,
            big_r_hat: self.tracker.big_r(),
            small_r_hat: self.tracker.small_r(),
            vx_hat: v.vx,
            vz_hat: v.vz,
            gate_active,
        })
    }
}

/// Table-style error summary: mean and standard deviation of the squared
/// error per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub mse_vx: f64,
    pub std_vx: f64,
    pub mse_vz: f64,
    pub std_vz: f64,
    pub n_samples: usize,
}

impl ErrorMetrics {
    pub fn to_key_values(&self) -> String {
        format!(
            "mse_vx = {}\nstd_vx = {}\nmse_vz = {}\nstd_vz = {}\nn_samples = {}\n",
            self.mse_vx, self.std_vx, self.mse_vz, self.std_vz, self.n_samples
        )
    }
}

fn mean_and_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Compares `(vx, vz)` sequences. The standard deviation is the population
/// deviation of the squared errors.
pub fn compute_metrics(measured: &[(f64, f64)], estimated: &[(f64, f64)]) -> Result<ErrorMetrics, PipelineError> {
    if measured.len() != estimated.len() || measured.is_empty() {
        return Err(PipelineError::MetricsLength(measured.len(), estimated.len()));
    }
    let pairs = measured.iter().zip(estimated);
    let (mse_vx, std_vx) = mean_and_std(pairs.clone().map(|(m, e)| (m.0 - e.0).powi(2)));
    let (mse_vz, std_vz) = mean_and_std(pairs.map(|(m, e)| (m.1 - e.1).powi(2)));
    Ok(ErrorMetrics { mse_vx, std_vx, mse_vz, std_vz, n_samples: measured.len() })
}

/// Metrics between measured and reconstructed velocities for rows at least
/// `skip_seconds` after the first.
pub fn metrics_for_rows(rows: &[EstimateRow], skip_seconds: f64) -> Result<ErrorMetrics, PipelineError> {
    let start = rows.first().map_or(0.0, |r| r.t) + skip_seconds;
    let kept: Vec<&EstimateRow> = rows.iter().filter(|r| r.t >= start - 1e-9).collect();
    let meas: Vec<(f64, f64)> = kept.iter().map(|r| (r.vx_meas, r.vz_meas)).collect();
    let est: Vec<(f64, f64)> = kept.iter().map(|r| (r.vx_hat, r.vz_hat)).collect();
    compute_metrics(&meas, &est)
}

/// Brings a recording onto the filter's sampling grid.
pub fn velocities_for_filter(recording: &Recording, config: &PipelineConfig) -> Result<Vec<VelocitySample>, PipelineError> {
    match recording {
        Recording::Positions(p) => Ok(preprocess(p, &config.preprocess)?),
        Recording::Velocities(v) => {
            if v.is_empty() {
                return Err(IoError::Empty.into());
            }
            if v.len() == 1 {
                return Ok(v.clone());
            }
            let times: Vec<f64> = v.iter().map(|s| s.t).collect();
            let on_grid = uniform_spacing(&times)
                .map(|dt| (dt - config.sample_time()).abs() <= 0.01 * config.sample_time())
                .unwrap_or(false);
            if on_grid {
                return Ok(v.clone());
            }
            let rate = 1.0 / config.sample_time();
            let (grid, vx) = resample(&times, &v.iter().map(|s| s.vx).collect::<Vec<_>>(), rate)?;
            let (_, vz) = resample(&times, &v.iter().map(|s| s.vz).collect::<Vec<_>>(), rate)?;
            Ok(grid.into_iter().zip(vx.into_iter().zip(vz)).map(|(t, (vx, vz))| VelocitySample { t, vx, vz }).collect())
        }
    }
}

/// Output of [`run_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRun {
    pub rows: Vec<EstimateRow>,
    pub metrics: ErrorMetrics,
}

/// Runs the estimator over `samples` (already on the filter grid).
pub fn estimate_velocities(
    samples: &[VelocitySample],
    config: &PipelineConfig,
    skip_seconds: f64,
) -> Result<EstimateRun, PipelineError> {
    if samples.is_empty() {
        return Err(IoError::Empty.into());
    }
    let mut est = GaitEstimator::new(config)?;
    let rows = samples.iter().map(|s| est.push(s)).collect::<Result<Vec<_>, _>>()?;
    let metrics = metrics_for_rows(&rows, skip_seconds)?;
    Ok(EstimateRun { rows, metrics })
}

pub fn run_estimate(recording: &Recording, config: &PipelineConfig, skip_seconds: f64) -> Result<EstimateRun, PipelineError> {
    config.validate()?;
    let samples = velocities_for_filter(recording, config)?;
    estimate_velocities(&samples, config, skip_seconds)
}

pub fn write_estimates(out: impl Write, rows: &[EstimateRow]) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ESTIMATE_HEADER).map_err(IoError::from)?;
    for r in rows {
        w.write_record(r.fields()).map_err(IoError::from)?;
    }
    w.flush()?;
    Ok(())
}

/// Synthetic velocity recording at `rate` Hz for the whole profile.
pub fn run_simulate(
    params: &YoyoParams,
    profile: &WalkProfile,
    rate: f64,
    noise_std: f64,
    seed: u64,
) -> Result<Vec<VelocitySample>, PipelineError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(ModelError::InvalidTiming { t: 1.0 / rate, duration: profile.total_duration() }.into());
    }
    Ok(simulate_walk(params, profile, 1.0 / rate, profile.total_duration(), (noise_std, noise_std), seed)?)
}

/// Per-step timing of filter + tracker updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchReport {
    pub iterations: usize,
    pub mean_us: f64,
    pub p99_us: f64,
    /// Sampling period divided by the mean step time.
    pub real_time_factor: f64,
}

impl BenchReport {
    pub fn to_key_values(&self) -> String {
        format!(
            "iterations = {}\nmean_us = {}\np99_us = {}\nreal_time_factor = {}\n",
            self.iterations, self.mean_us, self.p99_us, self.real_time_factor
        )
    }
}

/// Times `iterations` estimator steps on a noisy synthetic walk. Input
/// generation happens before the clock starts.
pub fn run_benchmark(iterations: usize) -> Result<BenchReport, PipelineError> {
    if iterations < MIN_BENCH_ITERATIONS {
        return Err(PipelineError::TooFewIterations(iterations));
    }
    let config = PipelineConfig::default();
    let dt = config.sample_time();
    let params = YoyoParams::new(2.0, 0.2, 1.0)?;
    let profile = WalkProfile::constant(2.5, 400.0);
    let data = simulate_walk(&params, &profile, dt, 400.0, (0.02, 0.02), 0)?;

    let mut est = GaitEstimator::new(&config)?;
    let mut nanos: Vec<u64> = Vec::with_capacity(iterations);
    let mut total = 0u128;
    for i in 0..iterations {
        let s = &data[i % data.len()];
        let start = Instant::now();
        let gate = est.advance(std::hint::black_box(s.vx), std::hint::black_box(s.vz))?;
        let elapsed = start.elapsed().as_nanos();
        std::hint::black_box(gate);
        total += elapsed;
        nanos.push(elapsed as u64);
    }
    let mean_us = total as f64 / iterations as f64 / 1e3;
    let idx = ((iterations as f64 * 0.99).ceil() as usize).clamp(1, iterations) - 1;
    let (_, p99, _) = nanos.select_nth_unstable(idx);
    let p99_us = *p99 as f64 / 1e3;
    Ok(BenchReport {
        iterations,
        mean_us,
        p99_us,
        real_time_factor: dt * 1e6 / mean_us.max(f64::MIN_POSITIVE),
    })
}
