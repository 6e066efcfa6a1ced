//! Python bindings for `yoyo_gait`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use yoyo_gait::pipeline::{estimate_velocities, EstimateRow};
use yoyo_gait::preprocess::PositionSample;
use yoyo_gait::spectral::DEFAULT_BAND;
use yoyo_gait::{EkfConfig, PipelineConfig, VelocitySample, WalkProfile, WalkSegment};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn config_from(text: Option<&str>) -> PyResult<PipelineConfig> {
    match text {
        Some(t) => PipelineConfig::parse(t).map_err(err),
        None => Ok(PipelineConfig::default()),
    }
}

fn velocity_samples(t: &[f64], vx: &[f64], vz: &[f64]) -> PyResult<Vec<VelocitySample>> {
    if t.len() != vx.len() || t.len() != vz.len() {
        return Err(PyValueError::new_err("t, vx and vz must have equal length"));
    }
    Ok(t.iter().zip(vx).zip(vz).map(|((&t, &vx), &vz)| VelocitySample { t, vx, vz }).collect())
}

type Columns = (Vec<f64>, Vec<f64>, Vec<f64>);

fn columns(samples: &[VelocitySample]) -> Columns {
    (
        samples.iter().map(|s| s.t).collect(),
        samples.iter().map(|s| s.vx).collect(),
        samples.iter().map(|s| s.vz).collect(),
    )
}

/// Cycloid walker: forward radius `big_r`, vertical radius `small_r`, hip height `z0`.
#[pyclass(name = "YoyoParams", frozen)]
struct PyYoyoParams(yoyo_gait::YoyoParams);

#[pymethods]
impl PyYoyoParams {
    #[new]
    #[pyo3(signature = (big_r, small_r, z0 = 1.0))]
    fn new(big_r: f64, small_r: f64, z0: f64) -> PyResult<Self> {
        yoyo_gait::YoyoParams::new(big_r, small_r, z0).map(Self).map_err(err)
    }

    #[getter]
    fn big_r(&self) -> f64 {
        self.0.big_r
    }

    #[getter]
    fn small_r(&self) -> f64 {
        self.0.small_r
    }

    #[getter]
    fn z0(&self) -> f64 {
        self.0.z0
    }

    fn position(&self, theta: f64) -> (f64, f64) {
        self.0.position(theta)
    }

    fn velocity(&self, omega: f64, theta: f64) -> (f64, f64) {
        self.0.velocity(omega, theta)
    }

    fn __repr__(&self) -> String {
        format!("YoyoParams(big_r={}, small_r={}, z0={})", self.0.big_r, self.0.small_r, self.0.z0)
    }
}

/// Synthetic walk. `segments` is a list of `(duration_s, omega_rad_s)`.
/// Returns `(t, vx, vz)` lists.
#[pyfunction]
#[pyo3(signature = (params, segments, sample_time = 0.04, noise = 0.0, seed = 0, phase0 = 0.0))]
fn simulate_walk(
    params: PyRef<'_, PyYoyoParams>,
    segments: Vec<(f64, f64)>,
    sample_time: f64,
    noise: f64,
    seed: u64,
    phase0: f64,
) -> PyResult<Columns> {
    let profile = WalkProfile::new(
        segments.into_iter().map(|(duration, omega)| WalkSegment { duration, omega }).collect(),
        phase0,
    )
    .map_err(err)?;
    let samples =
        yoyo_gait::simulate_walk(&params.0, &profile, sample_time, profile.total_duration(), (noise, noise), seed)
            .map_err(err)?;
    Ok(columns(&samples))
}

/// The four-state biased-sinusoid filter, fed with velocities in m/s.
#[pyclass(name = "SinusoidEkf")]
struct PySinusoidEkf(yoyo_gait::SinusoidEkf);

#[pymethods]
impl PySinusoidEkf {
    #[new]
    #[pyo3(signature = (config = None))]
    fn new(config: Option<&str>) -> PyResult<Self> {
        let ekf: EkfConfig = config_from(config)?.ekf;
        yoyo_gait::SinusoidEkf::new(ekf).map(Self).map_err(err)
    }

    /// Feeds one velocity sample and returns the state `(x1, x2, x3, x4)`.
    fn step(&mut self, vx: f64, vz: f64) -> PyResult<(f64, f64, f64, f64)> {
        let s = self.0.step_velocity(vx, vz).map_err(err)?;
        Ok((s.x1(), s.x2(), s.x3(), s.x4()))
    }

    #[getter]
    fn state(&self) -> (f64, f64, f64, f64) {
        let s = self.0.state();
        (s.x1(), s.x2(), s.x3(), s.x4())
    }

    #[getter]
    fn covariance(&self) -> Vec<Vec<f64>> {
        let p = &self.0.covariance().0;
        (0..4).map(|i| (0..4).map(|j| p[(i, j)]).collect()).collect()
    }

    fn reset(&mut self) {
        self.0.reset();
    }
}

fn row_dict<'py>(py: Python<'py>, r: &EstimateRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("t", r.t)?;
    d.set_item("vx_meas", r.vx_meas)?;
    d.set_item("vz_meas", r.vz_meas)?;
    d.set_item("omega_hat", r.omega_hat)?;
    d.set_item("A0_hat", r.a0_hat)?;
    d.set_item("A1_hat", r.a1_hat)?;
    d.set_item("R_hat", r.big_r_hat)?;
    d.set_item("r_hat", r.small_r_hat)?;
    d.set_item("vx_hat", r.vx_hat)?;
    d.set_item("vz_hat", r.vz_hat)?;
    d.set_item("gate_active", r.gate_active)?;
    Ok(d)
}

/// Filter plus gated radius tracker, one sample at a time.
#[pyclass(name = "GaitEstimator")]
struct PyGaitEstimator(yoyo_gait::GaitEstimator);

#[pymethods]
impl PyGaitEstimator {
    #[new]
    #[pyo3(signature = (config = None))]
    fn new(config: Option<&str>) -> PyResult<Self> {
        yoyo_gait::GaitEstimator::new(&config_from(config)?).map(Self).map_err(err)
    }

    fn push<'py>(&mut self, py: Python<'py>, t: f64, vx: f64, vz: f64) -> PyResult<Bound<'py, PyDict>> {
        let row = self.0.push(&VelocitySample { t, vx, vz }).map_err(err)?;
        row_dict(py, &row)
    }

    #[getter]
    fn big_r(&self) -> f64 {
        self.0.tracker().big_r()
    }

    #[getter]
    fn small_r(&self) -> f64 {
        self.0.tracker().small_r()
    }
}

/// Runs the estimator over a velocity series on the filter grid. Returns
/// `(rows, metrics)`.
#[pyfunction]
#[pyo3(signature = (t, vx, vz, config = None, skip_seconds = 0.0))]
fn estimate<'py>(
    py: Python<'py>,
    t: Vec<f64>,
    vx: Vec<f64>,
    vz: Vec<f64>,
    config: Option<&str>,
    skip_seconds: f64,
) -> PyResult<(Vec<Bound<'py, PyDict>>, Bound<'py, PyDict>)> {
    let cfg = config_from(config)?;
    let run = estimate_velocities(&velocity_samples(&t, &vx, &vz)?, &cfg, skip_seconds).map_err(err)?;
    let rows = run.rows.iter().map(|r| row_dict(py, r)).collect::<PyResult<Vec<_>>>()?;
    Ok((rows, metrics_dict(py, &run.metrics)?))
}

/// Tracked 3-D positions to `(t, vx, vz)` on the target grid.
#[pyfunction]
#[pyo3(signature = (t, px, py, pz, sg_window = 11, sg_order = 3, target_rate = 25.0))]
fn preprocess(
    t: Vec<f64>,
    px: Vec<f64>,
    py: Vec<f64>,
    pz: Vec<f64>,
    sg_window: usize,
    sg_order: usize,
    target_rate: f64,
) -> PyResult<Columns> {
    if [px.len(), py.len(), pz.len()].iter().any(|&n| n != t.len()) {
        return Err(PyValueError::new_err("position columns must have equal length"));
    }
    let positions: Vec<PositionSample> =
        (0..t.len()).map(|i| PositionSample { t: t[i], px: px[i], py: py[i], pz: pz[i] }).collect();
    let cfg = yoyo_gait::PreprocessConfig { sg_window, sg_order, target_rate };
    yoyo_gait::preprocess(&positions, &cfg).map(|v| columns(&v)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (series, dt, sg_window = 11, sg_order = 3))]
fn savgol_derivative(series: Vec<f64>, dt: f64, sg_window: usize, sg_order: usize) -> PyResult<Vec<f64>> {
    let cfg = yoyo_gait::PreprocessConfig { sg_window, sg_order, ..Default::default() };
    yoyo_gait::savgol_derivative(&series, dt, &cfg).map_err(err)
}

/// Strongest in-band spectral line: `(frequency_hz, amplitude, phase_rad)`.
#[pyfunction]
#[pyo3(signature = (series, rate, band = DEFAULT_BAND))]
fn dft_peak(series: Vec<f64>, rate: f64, band: (f64, f64)) -> PyResult<(f64, f64, f64)> {
    let p = yoyo_gait::dft_peak(&series, rate, band).map_err(err)?;
    Ok((p.frequency, p.amplitude, p.phase))
}

/// Phase of `vx` relative to `vz` in degrees.
#[pyfunction]
fn phase_offset(vx: Vec<f64>, vz: Vec<f64>, rate: f64) -> PyResult<f64> {
    yoyo_gait::phase_offset(&vx, &vz, rate).map_err(err)
}

#[pyfunction]
fn validate_recording<'py>(py: Python<'py>, t: Vec<f64>, vx: Vec<f64>, vz: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = yoyo_gait::validate_recording(&velocity_samples(&t, &vx, &vz)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("peak_frequency", r.peak_frequency)?;
    d.set_item("peak_amplitude", r.peak_amplitude)?;
    d.set_item("phase_offset_deg", r.phase_offset_deg)?;
    d.set_item("resolution", r.resolution)?;
    d.set_item("passed", r.passed)?;
    Ok(d)
}

fn metrics_dict<'py>(py: Python<'py>, m: &yoyo_gait::ErrorMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mse_vx", m.mse_vx)?;
    d.set_item("std_vx", m.std_vx)?;
    d.set_item("mse_vz", m.mse_vz)?;
    d.set_item("std_vz", m.std_vz)?;
    d.set_item("n_samples", m.n_samples)?;
    Ok(d)
}

/// Squared-error statistics between measured and estimated `(vx, vz)` pairs.
#[pyfunction]
fn compute_metrics<'py>(
    py: Python<'py>,
    measured: Vec<(f64, f64)>,
    estimated: Vec<(f64, f64)>,
) -> PyResult<Bound<'py, PyDict>> {
    let m = yoyo_gait::compute_metrics(&measured, &estimated).map_err(err)?;
    metrics_dict(py, &m)
}

#[pyfunction]
#[pyo3(signature = (iterations = 1_000_000))]
fn run_benchmark<'py>(py: Python<'py>, iterations: usize) -> PyResult<Bound<'py, PyDict>> {
    let r = py.detach(|| yoyo_gait::run_benchmark(iterations)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("iterations", r.iterations)?;
    d.set_item("mean_us", r.mean_us)?;
    d.set_item("p99_us", r.p99_us)?;
    d.set_item("real_time_factor", r.real_time_factor)?;
    Ok(d)
}

#[pymodule]
fn yoyo_gait_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyYoyoParams>()?;
    m.add_class::<PySinusoidEkf>()?;
    m.add_class::<PyGaitEstimator>()?;
    m.add_function(wrap_pyfunction!(simulate_walk, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess, m)?)?;
    m.add_function(wrap_pyfunction!(savgol_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(dft_peak, m)?)?;
    m.add_function(wrap_pyfunction!(phase_offset, m)?)?;
    m.add_function(wrap_pyfunction!(validate_recording, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    Ok(())
}
