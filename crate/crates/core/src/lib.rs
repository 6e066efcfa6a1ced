//! Online estimation of human walking kinematics.
//!
//! Walking velocity is modelled as a biased sinusoid (the Yoyo-model: a point
//! on a curtate cycloid). A four-state extended Kalman filter tracks the
//! oscillation, its frequency and its bias from forward/vertical velocity
//! samples; a gated moving average turns the filter state into slowly varying
//! cycloid radii `R̂`, `r̂` and a reconstructed velocity.
//!
//! ```
//! use yoyo_gait::{simulate_walk, GaitEstimator, PipelineConfig, WalkProfile, YoyoParams};
//!
//! let walker = YoyoParams::new(2.0, 0.2, 1.0).unwrap();
//! let samples = simulate_walk(&walker, &WalkProfile::constant(2.5, 20.0), 0.04, 20.0, (0.0, 0.0), 0).unwrap();
//! let mut est = GaitEstimator::new(&PipelineConfig::default()).unwrap();
//! for s in &samples {
//!     est.push(s).unwrap();
//! }
//! let omega = est.state().x3() / est.sample_time();
//! assert!((omega.abs() - 2.5).abs() < 0.05);
//! ```

pub mod config;
pub mod ekf;
pub mod io;
pub mod model;
pub mod params;
pub mod pipeline;
pub mod preprocess;
pub mod spectral;

pub use config::{ConfigError, PipelineConfig};
pub use ekf::{EkfConfig, EkfCovariance, EkfError, EkfState, Measurement, SinusoidEkf};
pub use model::{simulate_walk, ModelError, VelocitySample, WalkProfile, WalkSegment, YoyoParams};
pub use params::{decompose, reconstruct_velocity, ParamFilterConfig, ParamTracker};
pub use pipeline::{
    compute_metrics, run_benchmark, run_estimate, run_simulate, BenchReport, ErrorMetrics, EstimateRow, GaitEstimator,
    PipelineError,
};
pub use preprocess::{forward_speed, preprocess, resample, savgol_derivative, PositionSample, PreprocessConfig};
pub use spectral::{dft_peak, phase_offset, validate_recording, SpectrumReport};
