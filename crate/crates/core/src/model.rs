//! Yoyo-model gait kinematics.
//!
//! The tracked point of a walking human is modelled as a point on a curtate
//! cycloid: a large cylinder of radius `R` rolls forward while a smaller inner
//! cylinder of radius `r` produces the coupled forward/vertical oscillation.
//!
//! ```text
//! x(θ) = R·θ + r·sin θ        vx = R·ω + r·ω·cos θ
//! z(θ) = z0 + r·cos θ         vz = −r·ω·sin θ
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid Yoyo parameters: {0}")]
    InvalidParams(String),
    #[error("invalid walk profile: {0}")]
    InvalidProfile(String),
    #[error("sampling time and duration must be positive and finite (got T={t}, duration={duration})")]
    InvalidTiming { t: f64, duration: f64 },
    #[error("noise standard deviations must be finite and non-negative (got {0:?})")]
    InvalidNoise((f64, f64)),
}

/// Physical gait constants of one walker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoyoParams {
    /// Outer (rolling) cylinder radius in meters.
    pub big_r: f64,
    /// Inner (oscillation) cylinder radius in meters.
    pub small_r: f64,
    /// Vertical offset of the tracked point in meters.
    pub z0: f64,
}

impl YoyoParams {
    pub fn new(big_r: f64, small_r: f64, z0: f64) -> Result<Self, ModelError> {
        let p = Self { big_r, small_r, z0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = self.big_r.is_finite() && self.small_r.is_finite() && self.z0.is_finite();
        if !finite || self.big_r <= 0.0 || self.small_r <= 0.0 || self.z0 <= 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "R, r, z0 must be positive (got R={}, r={}, z0={})",
                self.big_r, self.small_r, self.z0
            )));
        }
        if self.small_r >= self.big_r {
            return Err(ModelError::InvalidParams(format!(
                "r must be smaller than R (got R={}, r={})",
                self.big_r, self.small_r
            )));
        }
        Ok(())
    }

    /// Forward and vertical position `(x, z)` at cycloid phase `theta`.
    pub fn position(&self, theta: f64) -> (f64, f64) {
        let (s, c) = theta.sin_cos();
        (self.big_r * theta + self.small_r * s, self.z0 + self.small_r * c)
    }

    /// Forward and vertical velocity `(vx, vz)` at phase `theta` and step
    /// frequency `omega` (rad/s).
    pub fn velocity(&self, omega: f64, theta: f64) -> (f64, f64) {
        let (s, c) = theta.sin_cos();
        (
            self.big_r * omega + self.small_r * omega * c,
            -self.small_r * omega * s,
        )
    }
}

/// One piece of a piecewise-constant cadence schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkSegment {
    pub duration: f64,
    pub omega: f64,
}

/// Piecewise-constant step-frequency schedule with a continuous phase.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkProfile {
    pub segments: Vec<WalkSegment>,
    pub phase0: f64,
}

impl WalkProfile {
    pub fn new(segments: Vec<WalkSegment>, phase0: f64) -> Result<Self, ModelError> {
        let p = Self { segments, phase0 };
        p.validate()?;
        Ok(p)
    }

    /// Single segment walking at `omega` for `duration` seconds.
    pub fn constant(omega: f64, duration: f64) -> Self {
        Self {
            segments: vec![WalkSegment { duration, omega }],
            phase0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.segments.is_empty() {
            return Err(ModelError::InvalidProfile("no segments".into()));
        }
        if !self.phase0.is_finite() {
            return Err(ModelError::InvalidProfile("phase0 must be finite".into()));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.duration.is_finite() && seg.duration > 0.0) {
                return Err(ModelError::InvalidProfile(format!(
                    "segment {i}: duration must be positive (got {})",
                    seg.duration
                )));
            }
            if !(seg.omega.is_finite() && seg.omega >= 0.0) {
                return Err(ModelError::InvalidProfile(format!(
                    "segment {i}: omega must be non-negative (got {})",
                    seg.omega
                )));
            }
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Step frequency in effect at time `t`. Past the last segment the final
    /// cadence is held.
    pub fn omega_at(&self, t: f64) -> f64 {
        let mut end = 0.0;
        for seg in &self.segments {
            end += seg.duration;
            if t < end {
                return seg.omega;
            }
        }
        self.segments.last().map_or(0.0, |s| s.omega)
    }
}

/// A timestamped velocity measurement (m/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocitySample {
    pub t: f64,
    pub vx: f64,
    pub vz: f64,
}

/// Generates a synthetic walk sampled every `sample_time` seconds for
/// `duration` seconds, with independent Gaussian velocity noise per axis.
///
/// The phase is integrated as `θ(k+1) = θ(k) + ω(k)·T` starting from
/// `profile.phase0` and never wrapped.
pub fn simulate_walk(
    params: &YoyoParams,
    profile: &WalkProfile,
    sample_time: f64,
    duration: f64,
    noise_std: (f64, f64),
    seed: u64,
) -> Result<Vec<VelocitySample>, ModelError> {
    params.validate()?;
    profile.validate()?;
    let timing_ok = sample_time.is_finite() && sample_time > 0.0 && duration.is_finite() && duration > 0.0;
    if !timing_ok {
        return Err(ModelError::InvalidTiming { t: sample_time, duration });
    }
    let (sx, sz) = noise_std;
    if !(sx.is_finite() && sz.is_finite() && sx >= 0.0 && sz >= 0.0) {
        return Err(ModelError::InvalidNoise(noise_std));
    }
    let nx = Normal::new(0.0, sx).map_err(|_| ModelError::InvalidNoise(noise_std))?;
    let nz = Normal::new(0.0, sz).map_err(|_| ModelError::InvalidNoise(noise_std))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Number of samples with t < duration (tolerating float round-off on the grid).
    let count = ((duration / sample_time) - 1e-9).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity(count);
    let mut theta = profile.phase0;
    for k in 0..count {
        let t = k as f64 * sample_time;
        let omega = profile.omega_at(t);
        let (vx, vz) = params.velocity(omega, theta);
        out.push(VelocitySample {
            t,
            vx: vx + nx.sample(&mut rng),
            vz: vz + nz.sample(&mut rng),
        });
        theta += omega * sample_time;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn typical_walker() -> YoyoParams {
        YoyoParams::new(2.0, 0.2, 1.0).unwrap()
    }

    #[test]
    fn position_at_cardinal_phases() {
        let p = typical_walker();
        let (x, z) = p.position(0.0);
        assert_abs_diff_eq!(x, 0.0);
        assert_abs_diff_eq!(z, 1.2);
        let (x, z) = p.position(PI);
        assert_abs_diff_eq!(x, 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(z, 0.8, epsilon = 1e-12);
        let (x, z) = p.position(PI / 2.0);
        assert_abs_diff_eq!(x, PI + 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(z, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn velocity_examples() {
        let p = typical_walker();
        let (vx, vz) = p.velocity(2.5, 0.0);
        assert_abs_diff_eq!(vx, 5.5, epsilon = 1e-12);
        assert_abs_diff_eq!(vz, 0.0, epsilon = 1e-12);
        let (vx, vz) = p.velocity(2.5, PI / 2.0);
        assert_abs_diff_eq!(vx, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vz, -0.5, epsilon = 1e-12);
        assert_eq!(p.velocity(0.0, 1.234), (0.0, 0.0));
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(YoyoParams::new(0.0, 0.1, 1.0).is_err());
        assert!(YoyoParams::new(2.0, -0.1, 1.0).is_err());
        assert!(YoyoParams::new(2.0, 0.2, 0.0).is_err());
        assert!(YoyoParams::new(0.2, 2.0, 1.0).is_err());
        assert!(YoyoParams::new(f64::NAN, 0.2, 1.0).is_err());
    }

    #[test]
    fn noiseless_walk_matches_model() {
        let p = typical_walker();
        let prof = WalkProfile { segments: vec![WalkSegment { duration: 4.0, omega: 2.5 }], phase0: 0.3 };
        let s = simulate_walk(&p, &prof, 0.04, 4.0, (0.0, 0.0), 1).unwrap();
        assert_eq!(s.len(), 100);
        for (k, smp) in s.iter().enumerate() {
            let theta = 0.3 + 2.5 * 0.04 * k as f64;
            let (vx, vz) = p.velocity(2.5, theta);
            assert_abs_diff_eq!(smp.t, 0.04 * k as f64, epsilon = 1e-12);
            assert_abs_diff_eq!(smp.vx, vx, epsilon = 1e-10);
            assert_abs_diff_eq!(smp.vz, vz, epsilon = 1e-10);
        }
    }

    #[test]
    fn standstill_segment_is_zero_velocity() {
        let p = typical_walker();
        let prof = WalkProfile::new(
            vec![
                WalkSegment { duration: 2.0, omega: 2.5 },
                WalkSegment { duration: 2.0, omega: 0.0 },
            ],
            0.0,
        )
        .unwrap();
        let s = simulate_walk(&p, &prof, 0.04, 4.0, (0.0, 0.0), 7).unwrap();
        for smp in s.iter().filter(|s| s.t >= 2.0) {
            assert_eq!((smp.vx, smp.vz), (0.0, 0.0));
        }
    }

    #[test]
    fn seeded_walk_is_deterministic() {
        let p = typical_walker();
        let prof = WalkProfile::constant(2.5, 10.0);
        let a = simulate_walk(&p, &prof, 0.04, 10.0, (0.02, 0.02), 42).unwrap();
        let b = simulate_walk(&p, &prof, 0.04, 10.0, (0.02, 0.02), 42).unwrap();
        let c = simulate_walk(&p, &prof, 0.04, 10.0, (0.02, 0.02), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_non_finite_noise() {
        let p = typical_walker();
        let prof = WalkProfile::constant(2.5, 1.0);
        let err = simulate_walk(&p, &prof, 0.04, 1.0, (f64::NAN, 0.0), 0).unwrap_err();
        assert!(matches!(err, ModelError::InvalidNoise(_)));
        assert!(simulate_walk(&p, &prof, 0.04, 1.0, (0.0, f64::INFINITY), 0).is_err());
        assert!(simulate_walk(&p, &prof, 0.0, 1.0, (0.0, 0.0), 0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn velocity_is_derivative_of_position(
                big_r in 0.5f64..5.0,
                ratio in 0.01f64..0.5,
                theta in -10.0f64..10.0,
                omega in 0.5f64..15.0,
            ) {
                let p = YoyoParams::new(big_r, big_r * ratio, 1.0).unwrap();
                let h = 1e-6;
                let (x1, z1) = p.position(theta + omega * h);
                let (x0, z0) = p.position(theta - omega * h);
                let fd = ((x1 - x0) / (2.0 * h), (z1 - z0) / (2.0 * h));
                let (vx, vz) = p.velocity(omega, theta);
                // vz can cross zero, so compare against the velocity scale.
                let scale = vx.abs().max(p.small_r * omega);
                prop_assert!((fd.0 - vx).abs() / scale < 1e-6);
                prop_assert!((fd.1 - vz).abs() / scale < 1e-6);
            }

            #[test]
            fn velocity_bounds(
                big_r in 0.5f64..5.0,
                ratio in 0.01f64..0.99,
                theta in -100.0f64..100.0,
                omega in 0.0f64..15.0,
            ) {
                let p = YoyoParams::new(big_r, big_r * ratio, 1.0).unwrap();
                let (vx, vz) = p.velocity(omega, theta);
                let tol = 1e-12 * (1.0 + big_r * omega);
                prop_assert!(vz.abs() <= p.small_r * omega + tol);
                prop_assert!(vx >= (big_r - p.small_r) * omega - tol);
                prop_assert!(vx <= (big_r + p.small_r) * omega + tol);
            }
        }
    }

    #[test]
    fn forward_oscillation_peaks_where_vertical_vanishes() {
        let p = typical_walker();
        let omega = 2.5;
        // cos θ = 1: vx − Rω is at its max rω and vz = 0.
        let (vx, vz) = p.velocity(omega, 4.0 * PI);
        assert_abs_diff_eq!(vx - p.big_r * omega, p.small_r * omega, epsilon = 1e-12);
        assert_abs_diff_eq!(vz, 0.0, epsilon = 1e-12);
        // Quadrature: (vx − Rω)² + vz² = (rω)² everywhere.
        for i in 0..50 {
            let th = i as f64 * 0.37;
            let (vx, vz) = p.velocity(omega, th);
            let osc = vx - p.big_r * omega;
            assert_abs_diff_eq!(osc * osc + vz * vz, (p.small_r * omega).powi(2), epsilon = 1e-12);
        }
    }
}
