//! Position-to-velocity conditioning: Savitzky–Golay differentiation,
//! horizontal speed, and linear resampling onto the filter rate.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::model::VelocitySample;

/// Allowed deviation of any sample gap from the nominal spacing, as a
/// fraction of that spacing.
pub const UNIFORMITY_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("series has {len} samples but the window needs {window}")]
    TooShort { len: usize, window: usize },
    #[error("non-uniform sampling at index {index}: gap {gap} s vs nominal {dt} s")]
    NonUniform { index: usize, gap: f64, dt: f64 },
    #[error("timestamps must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("empty input")]
    Empty,
    #[error("resampled span is empty")]
    EmptySpan,
    #[error("input rate {input} Hz is below twice the target rate {target} Hz")]
    RateTooLow { input: f64, target: f64 },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid preprocessing config: {0}")]
    InvalidConfig(String),
}

/// A tracked marker position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionSample {
    pub t: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    /// Odd window length in samples, at least 5.
    pub sg_window: usize,
    /// Fit polynomial order, at least 2 and below the window length.
    pub sg_order: usize,
    /// Output rate in Hz.
    pub target_rate: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { sg_window: 11, sg_order: 3, target_rate: 25.0 }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        let bad = |m: String| Err(PreprocessError::InvalidConfig(m));
        if self.sg_window < 5 || self.sg_window % 2 == 0 {
            return bad(format!("sg_window must be odd and >= 5 (got {})", self.sg_window));
        }
        if self.sg_order < 2 || self.sg_order >= self.sg_window {
            return bad(format!(
                "sg_order must be >= 2 and < sg_window (got {})",
                self.sg_order
            ));
        }
        if !(self.target_rate.is_finite() && self.target_rate > 0.0) {
            return bad(format!("target_rate must be positive (got {})", self.target_rate));
        }
        Ok(())
    }
}

/// Least-squares first-derivative weights for a window of `window` samples
/// evaluated at position `at` (0-based within the window), in units of
/// one sample spacing.
fn derivative_weights(window: usize, order: usize, at: usize) -> Vec<f64> {
    // Offsets are scaled into [-1, 1] to keep the Vandermonde well conditioned.
    let half = ((window - 1) as f64).max(1.0);
    let a = DMatrix::from_fn(window, order + 1, |i, j| {
        let u = (i as f64 - at as f64) / half;
        u.powi(j as i32)
    });
    let pinv = a
        .pseudo_inverse(1e-14)
        .expect("Vandermonde of distinct nodes has full column rank");
    // Row 1 of the pseudo-inverse gives the linear coefficient in u.
    pinv.row(1).iter().map(|w| w / half).collect()
}

/// Precomputed Savitzky–Golay derivative weights for every window position.
#[derive(Debug, Clone)]
pub struct SavGolDerivative {
    window: usize,
    /// `weights[p]` evaluates the derivative at position `p` of the window.
    weights: Vec<Vec<f64>>,
}

impl SavGolDerivative {
    pub fn new(window: usize, order: usize) -> Result<Self, PreprocessError> {
        PreprocessConfig { sg_window: window, sg_order: order, target_rate: 1.0 }.validate()?;
        let weights = (0..window).map(|at| derivative_weights(window, order, at)).collect();
        Ok(Self { window, weights })
    }

    /// Derivative of a uniformly sampled series with spacing `dt`. Edge
    /// samples reuse the first/last full window, fitted off-centre.
    pub fn apply(&self, series: &[f64], dt: f64) -> Result<Vec<f64>, PreprocessError> {
        let n = series.len();
        if n < self.window {
            return Err(PreprocessError::TooShort { len: n, window: self.window });
        }
        if let Some(i) = series.iter().position(|v| !v.is_finite()) {
            return Err(PreprocessError::NonFinite(i));
        }
        let half = self.window / 2;
        let out = (0..n)
            .map(|i| {
                let start = i.saturating_sub(half).min(n - self.window);
                let w = &self.weights[i - start];
                let seg = &series[start..start + self.window];
                w.iter().zip(seg).map(|(a, b)| a * b).sum::<f64>() / dt
            })
            .collect();
        Ok(out)
    }
}

/// Checks that timestamps are strictly increasing with gaps within
/// [`UNIFORMITY_TOLERANCE`] of their mean; returns the mean spacing.
pub fn uniform_spacing(times: &[f64]) -> Result<f64, PreprocessError> {
    if times.len() < 2 {
        return Err(PreprocessError::TooShort { len: times.len(), window: 2 });
    }
    if let Some(i) = times.iter().position(|v| !v.is_finite()) {
        return Err(PreprocessError::NonFinite(i));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (i, pair) in times.windows(2).enumerate() {
        let gap = pair[1] - pair[0];
        if gap <= 0.0 {
            return Err(PreprocessError::NotIncreasing(i + 1));
        }
        if (gap - dt).abs() > UNIFORMITY_TOLERANCE * dt {
            return Err(PreprocessError::NonUniform { index: i + 1, gap, dt });
        }
    }
    Ok(dt)
}

/// First derivative of `series` sampled every `dt` seconds.
pub fn savgol_derivative(series: &[f64], dt: f64, config: &PreprocessConfig) -> Result<Vec<f64>, PreprocessError> {
    SavGolDerivative::new(config.sg_window, config.sg_order)?.apply(series, dt)
}

/// Linearly interpolates `(times, values)` onto `t0 + k/target_rate`,
/// covering only the span of the input.
pub fn resample(times: &[f64], values: &[f64], target_rate: f64) -> Result<(Vec<f64>, Vec<f64>), PreprocessError> {
    if times.is_empty() || times.len() != values.len() {
        return Err(PreprocessError::Empty);
    }
    if !(target_rate.is_finite() && target_rate > 0.0) {
        return Err(PreprocessError::InvalidConfig(format!("target_rate must be positive (got {target_rate})")));
    }
    for (i, pair) in times.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(PreprocessError::NotIncreasing(i + 1));
        }
    }
    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    let step = 1.0 / target_rate;
    // Tolerate round-off at the final grid point.
    let count = (span * target_rate + 1e-9).floor() as usize + 1;
    if times.len() == 1 && count == 1 {
        return Ok((vec![t0], vec![values[0]]));
    }
    if span <= 0.0 {
        return Err(PreprocessError::EmptySpan);
    }

    let mut out_t = Vec::with_capacity(count);
    let mut out_v = Vec::with_capacity(count);
    let mut j = 0;
    for k in 0..count {
        let t = t0 + k as f64 * step;
        while j + 2 < times.len() && times[j + 1] <= t {
            j += 1;
        }
        let (ta, tb) = (times[j], times[j + 1]);
        let frac = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        out_t.push(t);
        out_v.push(values[j] + frac * (values[j + 1] - values[j]));
    }
    Ok((out_t, out_v))
}

/// Horizontal speed from two horizontal velocity components.
pub fn forward_speed(vx_h: f64, vy_h: f64) -> f64 {
    vx_h.hypot(vy_h)
}

/// Differentiates tracked positions, collapses the horizontal plane to a
/// speed, and resamples onto `config.target_rate`.
pub fn preprocess(positions: &[PositionSample], config: &PreprocessConfig) -> Result<Vec<VelocitySample>, PreprocessError> {
    config.validate()?;
    if positions.is_empty() {
        return Err(PreprocessError::Empty);
    }
    if positions.len() < config.sg_window {
        return Err(PreprocessError::TooShort { len: positions.len(), window: config.sg_window });
    }
    let times: Vec<f64> = positions.iter().map(|p| p.t).collect();
    let dt = uniform_spacing(&times)?;
    let input_rate = 1.0 / dt;
    if input_rate < 2.0 * config.target_rate * (1.0 - UNIFORMITY_TOLERANCE) {
        return Err(PreprocessError::RateTooLow { input: input_rate, target: config.target_rate });
    }

    let sg = SavGolDerivative::new(config.sg_window, config.sg_order)?;
    let column = |f: fn(&PositionSample) -> f64| positions.iter().map(f).collect::<Vec<_>>();
    let dx = sg.apply(&column(|p| p.px), dt)?;
    let dy = sg.apply(&column(|p| p.py), dt)?;
    let dz = sg.apply(&column(|p| p.pz), dt)?;
    let speed: Vec<f64> = dx.iter().zip(&dy).map(|(a, b)| forward_speed(*a, *b)).collect();

    let (grid, vx) = resample(&times, &speed, config.target_rate)?;
    let (_, vz) = resample(&times, &dz, config.target_rate)?;
    Ok(grid
        .into_iter()
        .zip(vx.into_iter().zip(vz))
        .map(|(t, (vx, vz))| VelocitySample { t, vx, vz })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn cfg() -> PreprocessConfig {
        PreprocessConfig::default()
    }

    #[test]
    fn constant_series_has_zero_derivative() {
        let d = savgol_derivative(&[4.2; 30], 0.01, &cfg()).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn ramp_derivative_is_exact_at_boundaries() {
        let dt = 0.01;
        let s: Vec<f64> = (0..40).map(|k| 3.0 * k as f64 * dt).collect();
        let d = savgol_derivative(&s, dt, &cfg()).unwrap();
        for v in d {
            assert_abs_diff_eq!(v, 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn sine_derivative_interior() {
        let dt = 0.01;
        let f = 1.5;
        let s: Vec<f64> = (0..300).map(|k| (2.0 * PI * f * k as f64 * dt).sin()).collect();
        let d = savgol_derivative(&s, dt, &cfg()).unwrap();
        let worst = (5..295)
            .map(|k| (d[k] - 2.0 * PI * f * (2.0 * PI * f * k as f64 * dt).cos()).abs())
            .fold(0.0, f64::max);
        // Reference value from scipy.signal.savgol_filter(s, 11, 3, deriv=1, delta=0.01).
        assert!((worst - 1.172_717_599e-3).abs() < 1e-9, "max error {worst}");
    }

    #[test]
    fn short_series_rejected() {
        let err = savgol_derivative(&[0.0; 7], 0.01, &cfg()).unwrap_err();
        assert_eq!(err, PreprocessError::TooShort { len: 7, window: 11 });
    }

    #[test]
    fn config_validation() {
        assert!(PreprocessConfig { sg_window: 10, ..cfg() }.validate().is_err());
        assert!(PreprocessConfig { sg_window: 3, sg_order: 2, ..cfg() }.validate().is_err());
        assert!(PreprocessConfig { sg_order: 1, ..cfg() }.validate().is_err());
        assert!(PreprocessConfig { sg_window: 5, sg_order: 5, ..cfg() }.validate().is_err());
        assert!(PreprocessConfig { target_rate: 0.0, ..cfg() }.validate().is_err());
    }

    #[test]
    fn non_uniform_timestamps_rejected() {
        let mut t: Vec<f64> = (0..50).map(|k| k as f64 * 0.01).collect();
        t[20] += 0.0002;
        assert!(matches!(uniform_spacing(&t), Err(PreprocessError::NonUniform { .. })));
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.01 + if k == 20 { 5e-5 } else { 0.0 }).collect();
        assert!(uniform_spacing(&t).is_ok());
    }

    #[test]
    fn resample_constant_and_ramp() {
        let t: Vec<f64> = (0..401).map(|k| k as f64 / 100.0).collect();
        let c = vec![1.7; t.len()];
        let (g, v) = resample(&t, &c, 25.0).unwrap();
        assert_eq!(g.len(), 101);
        assert!(v.iter().all(|x| (*x - 1.7).abs() < 1e-15));

        let ramp: Vec<f64> = t.iter().map(|x| 2.0 * x - 1.0).collect();
        let (g, v) = resample(&t, &ramp, 25.0).unwrap();
        for (gt, gv) in g.iter().zip(v) {
            assert_abs_diff_eq!(gv, 2.0 * gt - 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(*g.last().unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn resample_sine_from_120hz() {
        let t: Vec<f64> = (0..1201).map(|k| k as f64 / 120.0).collect();
        let s: Vec<f64> = t.iter().map(|x| (2.0 * PI * x).sin()).collect();
        let (g, v) = resample(&t, &s, 25.0).unwrap();
        let worst = g.iter().zip(v).map(|(gt, gv)| (gv - (2.0 * PI * gt).sin()).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-3, "max error {worst}");
        assert!(*g.last().unwrap() <= 10.0 + 1e-12);
    }

    #[test]
    fn resample_errors() {
        assert_eq!(resample(&[], &[], 25.0).unwrap_err(), PreprocessError::Empty);
        assert!(resample(&[0.0, 0.0], &[1.0, 2.0], 25.0).is_err());
    }

    #[test]
    fn forward_speed_examples() {
        assert_eq!(forward_speed(3.0, 4.0), 5.0);
        assert_eq!(forward_speed(0.0, 0.0), 0.0);
        assert_abs_diff_eq!(forward_speed(-1.0, 1.0), 2f64.sqrt(), epsilon = 1e-15);
    }

    fn positions(rate: f64, secs: f64, f: impl Fn(f64) -> (f64, f64, f64)) -> Vec<PositionSample> {
        let n = (secs * rate) as usize + 1;
        (0..n)
            .map(|k| {
                let t = k as f64 / rate;
                let (px, py, pz) = f(t);
                PositionSample { t, px, py, pz }
            })
            .collect()
    }

    #[test]
    fn straight_constant_walk() {
        let p = positions(100.0, 5.0, |t| (1.2 * t, 0.0, 1.0));
        let v = preprocess(&p, &cfg()).unwrap();
        assert_eq!(v.len(), 126);
        for s in &v {
            assert_abs_diff_eq!(s.vx, 1.2, epsilon = 1e-10);
            assert_abs_diff_eq!(s.vz, 0.0, epsilon = 1e-10);
        }
        for pair in v.windows(2) {
            assert_abs_diff_eq!(pair[1].t - pair[0].t, 0.04, epsilon = 1e-12);
        }
    }

    #[test]
    fn circular_walk_speed() {
        let (rho, sigma) = (3.0, 0.4);
        let p = positions(100.0, 20.0, |t| (rho * (sigma * t).cos(), rho * (sigma * t).sin(), 1.0));
        let v = preprocess(&p, &cfg()).unwrap();
        for s in &v {
            assert_abs_diff_eq!(s.vx, rho * sigma, epsilon = 1e-6);
        }
    }

    #[test]
    fn yoyo_positions_recover_model_velocity() {
        use crate::model::YoyoParams;
        let m = YoyoParams::new(2.0, 0.2, 1.0).unwrap();
        let omega = 2.5;
        let p = positions(100.0, 20.0, |t| {
            let (x, z) = m.position(omega * t);
            (x, 0.0, z)
        });
        let v = preprocess(&p, &cfg()).unwrap();
        for s in &v {
            let (vx, vz) = m.velocity(omega, omega * s.t);
            assert!((s.vx - vx).abs() < 1e-2 && (s.vz - vz).abs() < 1e-2);
        }
    }

    #[test]
    fn low_input_rate_rejected() {
        let p = positions(40.0, 5.0, |t| (t, 0.0, 1.0));
        assert!(matches!(preprocess(&p, &cfg()), Err(PreprocessError::RateTooLow { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn forward_speed_is_rotation_invariant(
                vx in -10.0f64..10.0, vy in -10.0f64..10.0, angle in 0.0f64..(2.0 * PI),
            ) {
                let (s, c) = angle.sin_cos();
                let a = forward_speed(vx, vy);
                let b = forward_speed(c * vx - s * vy, s * vx + c * vy);
                prop_assert!(a >= 0.0);
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }

            #[test]
            fn savgol_exact_on_cubics(
                c0 in -5.0f64..5.0, c1 in -5.0f64..5.0, c2 in -5.0f64..5.0, c3 in -5.0f64..5.0,
                len in 11usize..80,
            ) {
                let dt = 0.01;
                let s: Vec<f64> = (0..len).map(|k| {
                    let t = k as f64 * dt;
                    c0 + c1 * t + c2 * t * t + c3 * t * t * t
                }).collect();
                let d = savgol_derivative(&s, dt, &PreprocessConfig::default()).unwrap();
                for (k, v) in d.iter().enumerate() {
                    let t = k as f64 * dt;
                    let exact = c1 + 2.0 * c2 * t + 3.0 * c3 * t * t;
                    prop_assert!((v - exact).abs() <= 1e-10 * exact.abs().max(1.0),
                        "k={} got {} expected {}", k, v, exact);
                }
            }
        }
    }
}
