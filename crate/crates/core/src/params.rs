//! Smoothed cycloid-radius estimates and velocity reconstruction.
//!
//! The raw ratios `x4/x3` and `A1/x3` are too jumpy to use directly and are
//! meaningless once the walker stops (bias and amplitude both vanish). The
//! tracker therefore holds its estimates unless frequency and bias clear
//! their thresholds, and otherwise averages the candidate with the last `n`
//! accepted estimates.

use std::collections::VecDeque;

use crate::ekf::EkfState;

/// Amplitudes at or below this (per-sample units) are treated as zero.
pub const AMPLITUDE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamFilterConfig {
    /// Moving-average window length in samples.
    pub n: usize,
    /// Frequency gate, radians per sample.
    pub mu_omega: f64,
    /// Bias gate, per-sample units.
    pub mu_a0: f64,
    pub big_r0: f64,
    pub small_r0: f64,
    /// Gate on `|x3|` and `|x4|` instead of the signed values, so a filter
    /// sitting on the mirrored equilibrium still updates.
    pub abs_gate: bool,
}

impl Default for ParamFilterConfig {
    fn default() -> Self {
        Self {
            n: 10,
            mu_omega: 0.1,
            mu_a0: 0.1,
            big_r0: 2.0,
            small_r0: 0.2,
            abs_gate: false,
        }
    }
}

impl ParamFilterConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n < 1 {
            return Err("n must be at least 1".into());
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.mu_omega) || !positive(self.mu_a0) {
            return Err(format!(
                "gate thresholds must be positive (mu_omega={}, mu_a0={})",
                self.mu_omega, self.mu_a0
            ));
        }
        if !positive(self.big_r0) || !positive(self.small_r0) {
            return Err(format!(
                "initial radii must be positive (R0={}, r0={})",
                self.big_r0, self.small_r0
            ));
        }
        Ok(())
    }
}

/// Running `(R̂, r̂)` estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTracker {
    big_r: f64,
    small_r: f64,
    history_big: VecDeque<f64>,
    history_small: VecDeque<f64>,
    k: u64,
    gate_active: bool,
}

impl ParamTracker {
    /// Starts at `(R0, r0)` with both histories filled with the initial value.
    pub fn new(config: &ParamFilterConfig) -> Self {
        Self {
            big_r: config.big_r0,
            small_r: config.small_r0,
            history_big: std::iter::repeat_n(config.big_r0, config.n).collect(),
            history_small: std::iter::repeat_n(config.small_r0, config.n).collect(),
            k: 0,
            gate_active: false,
        }
    }

    pub fn big_r(&self) -> f64 {
        self.big_r
    }

    pub fn small_r(&self) -> f64 {
        self.small_r
    }

    /// Number of samples seen so far.
    pub fn samples(&self) -> u64 {
        self.k
    }

    /// Whether the most recent sample was accepted.
    pub fn gate_active(&self) -> bool {
        self.gate_active
    }

    pub fn history(&self) -> (&VecDeque<f64>, &VecDeque<f64>) {
        (&self.history_big, &self.history_small)
    }

    fn gate(state: &EkfState, config: &ParamFilterConfig) -> bool {
        let (w, a0) = if config.abs_gate {
            (state.x3().abs(), state.x4().abs())
        } else {
            (state.x3(), state.x4())
        };
        w > config.mu_omega && a0 > config.mu_a0
    }

    /// Processes the filter state for the next sample. Returns whether the
    /// estimates were updated; when not, they are left bit-for-bit unchanged.
    pub fn update(&mut self, state: &EkfState, config: &ParamFilterConfig) -> bool {
        self.k += 1;
        let accept = self.k > config.n as u64 && Self::gate(state, config);
        self.gate_active = accept;
        if !accept {
            return false;
        }
        let w = state.x3().abs();
        let window = (config.n + 1) as f64;
        let big = (self.history_big.iter().sum::<f64>() + state.x4().abs() / w) / window;
        let small = (self.history_small.iter().sum::<f64>() + state.amplitude() / w) / window;
        self.big_r = big;
        self.small_r = small;
        push_ring(&mut self.history_big, big, config.n);
        push_ring(&mut self.history_small, small, config.n);
        true
    }
}

fn push_ring(buf: &mut VecDeque<f64>, value: f64, cap: usize) {
    if buf.len() == cap {
        buf.pop_front();
    }
    buf.push_back(value);
}

/// Velocity estimate in m/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructedVelocity {
    pub vx: f64,
    pub vz: f64,
    /// Set when the amplitude was too small to define a phase; only the bias
    /// term is returned.
    pub degenerate: bool,
}

/// Forward velocity split into its low-frequency part and the oscillation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityDecomposition {
    pub forward: f64,
    pub oscillatory: (f64, f64),
    pub degenerate: bool,
}

impl VelocityDecomposition {
    pub fn total(&self) -> (f64, f64) {
        (self.forward + self.oscillatory.0, self.oscillatory.1)
    }
}

/// Splits the reconstructed velocity into `R̂·x3/T` and the oscillation
/// `r̂·x3·(x1, −x2)/(A1·T)`.
pub fn decompose(state: &EkfState, tracker: &ParamTracker, sample_time: f64) -> VelocityDecomposition {
    let w = state.x3();
    let forward = tracker.big_r() * w / sample_time;
    let a1 = state.amplitude();
    if a1 <= AMPLITUDE_EPSILON {
        return VelocityDecomposition { forward, oscillatory: (0.0, 0.0), degenerate: true };
    }
    let scale = tracker.small_r() * w / (a1 * sample_time);
    VelocityDecomposition {
        forward,
        oscillatory: (scale * state.x1(), -scale * state.x2()),
        degenerate: false,
    }
}

/// Velocity estimate from the filter phase and the smoothed radii.
pub fn reconstruct_velocity(state: &EkfState, tracker: &ParamTracker, sample_time: f64) -> ReconstructedVelocity {
    let d = decompose(state, tracker, sample_time);
    let (vx, vz) = d.total();
    ReconstructedVelocity { vx, vz, degenerate: d.degenerate }
}
