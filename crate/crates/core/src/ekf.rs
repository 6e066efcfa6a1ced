//! Extended Kalman filter over a biased sinusoid.
//!
//! The state is `[A1·cos(ω̃k+φ), A1·sin(ω̃k+φ), ω̃, A0]` in per-sample units
//! (velocities multiplied by the sampling time `T`). Prediction rotates the
//! trigonometric pair by `ω̃`; the measurement is `[x1 + x4, −x2]`.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use thiserror::Error;

/// Operational band for |ω̃| (radians per sample). Leaving it is reported,
/// never enforced.
pub const FREQUENCY_BAND: (f64, f64) = (0.05, 0.5);

/// Innovation covariances with a larger condition number are rejected.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EkfError {
    #[error("innovation covariance is numerically singular (condition number {0:e})")]
    SingularInnovation(f64),
    #[error("invalid filter configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite measurement ({0}, {1})")]
    NonFiniteMeasurement(f64, f64),
}

/// Filter state `[x1, x2, x3, x4]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfState(pub Vector4<f64>);

impl EkfState {
    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        Self(Vector4::new(x1, x2, x3, x4))
    }

    /// Scaled cosine component.
    pub fn x1(&self) -> f64 {
        self.0[0]
    }
    /// Scaled sine component.
    pub fn x2(&self) -> f64 {
        self.0[1]
    }
    /// Discrete angular frequency ω̃ = ωT.
    pub fn x3(&self) -> f64 {
        self.0[2]
    }
    /// Scaled bias A0.
    pub fn x4(&self) -> f64 {
        self.0[3]
    }

    /// Oscillation amplitude `A1 = sqrt(x1² + x2²)`.
    pub fn amplitude(&self) -> f64 {
        self.x1().hypot(self.x2())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// True when |ω̃| lies inside [`FREQUENCY_BAND`].
    pub fn in_band(&self) -> bool {
        let w = self.x3().abs();
        w > FREQUENCY_BAND.0 && w < FREQUENCY_BAND.1
    }

    /// The sign-flip `(x1, −x2, −x3, x4)` that commutes with [`transition`].
    pub fn mirrored(&self) -> Self {
        Self::new(self.x1(), -self.x2(), -self.x3(), self.x4())
    }
}

/// 4×4 state covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfCovariance(pub Matrix4<f64>);

impl EkfCovariance {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn zeros() -> Self {
        Self(Matrix4::zeros())
    }

    /// Largest absolute asymmetry relative to `max(1, |P_ij|)`.
    pub fn asymmetry(&self) -> f64 {
        let p = &self.0;
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let d = (p[(i, j)] - p[(j, i)]).abs() / p[(i, j)].abs().max(1.0);
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (self.0 + self.0.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }
}

/// A velocity measurement already scaled to per-sample units (`v·T`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub vx_s: f64,
    pub vz_s: f64,
}

impl Measurement {
    /// Scales a measurement in m/s by the sampling time.
    pub fn from_velocity(vx: f64, vz: f64, sample_time: f64) -> Self {
        Self { vx_s: vx * sample_time, vz_s: vz * sample_time }
    }

    fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.vx_s, self.vz_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfConfig {
    /// Process covariance (diagonal).
    pub q: Matrix4<f64>,
    /// Measurement covariance (diagonal).
    pub v: Matrix2<f64>,
    /// Prior covariance.
    pub p0: Matrix4<f64>,
    pub x0: EkfState,
    /// Sampling time in seconds.
    pub sample_time: f64,
}

/// Prior guesses for an average walker.
pub const DEFAULT_R0: f64 = 2.0;
pub const DEFAULT_SMALL_R0: f64 = 0.2;
pub const DEFAULT_OMEGA0: f64 = 0.1;
pub const DEFAULT_SAMPLE_TIME: f64 = 0.04;

impl Default for EkfConfig {
    fn default() -> Self {
        Self::from_tuning(
            [1e-5, 1e-5, 1e-3, 1e-3],
            [1e-2, 1e-2],
            1.0,
            DEFAULT_SAMPLE_TIME,
            DEFAULT_OMEGA0,
            DEFAULT_R0,
            DEFAULT_SMALL_R0,
        )
    }
}

impl EkfConfig {
    /// Builds a config from diagonal tunings and the walker prior. The initial
    /// state is `[r0·ω̃0, 0, ω̃0, R0·ω̃0]`: cosine at its peak, sine at zero.
    pub fn from_tuning(
        q: [f64; 4],
        v: [f64; 2],
        p0_scale: f64,
        sample_time: f64,
        omega0: f64,
        big_r0: f64,
        small_r0: f64,
    ) -> Self {
        Self {
            q: Matrix4::from_diagonal(&Vector4::from(q)),
            v: Matrix2::from_diagonal(&Vector2::from(v)),
            p0: Matrix4::identity() * p0_scale,
            x0: EkfState::new(small_r0 * omega0, 0.0, omega0, big_r0 * omega0),
            sample_time,
        }
    }

    pub fn validate(&self) -> Result<(), EkfError> {
        let bad = |m: String| Err(EkfError::InvalidConfig(m));
        if !(self.sample_time.is_finite() && self.sample_time > 0.0) {
            return bad(format!("sampling time must be positive (got {})", self.sample_time));
        }
        for i in 0..4 {
            let q = self.q[(i, i)];
            if !(q.is_finite() && q > 0.0) {
                return bad(format!("q{} must be positive (got {q})", i + 1));
            }
        }
        for i in 0..2 {
            let v = self.v[(i, i)];
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("v{} must be positive (got {v})", i + 1));
            }
        }
        if !self.x0.is_finite() {
            return bad("initial state must be finite".into());
        }
        if self.p0.cholesky().is_none() {
            return bad("prior covariance must be positive definite".into());
        }
        Ok(())
    }
}

/// Measurement matrix `H`: `vx_s = x1 + x4`, `vz_s = −x2`.
pub fn measurement_matrix() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0)
}

/// Rotates `(x1, x2)` by `x3`; frequency and bias are constant.
pub fn transition(state: &EkfState) -> EkfState {
    let (s, c) = state.x3().sin_cos();
    let (x1, x2) = (state.x1(), state.x2());
    EkfState::new(x1 * c - x2 * s, x1 * s + x2 * c, state.x3(), state.x4())
}

/// Jacobian of [`transition`] with respect to the state.
pub fn transition_jacobian(state: &EkfState) -> Matrix4<f64> {
    let (s, c) = state.x3().sin_cos();
    let (x1, x2) = (state.x1(), state.x2());
    #[rustfmt::skip]
    let f = Matrix4::new(
        c,   -s,  -x1 * s - x2 * c, 0.0,
        s,    c,   x1 * c - x2 * s, 0.0,
        0.0, 0.0,  1.0,             0.0,
        0.0, 0.0,  0.0,             1.0,
    );
    f
}

fn symmetrize(p: Matrix4<f64>) -> Matrix4<f64> {
    (p + p.transpose()) * 0.5
}

/// Time update: `x' = f(x)`, `P' = F·P·Fᵀ + Q`.
pub fn predict(state: &EkfState, cov: &EkfCovariance, config: &EkfConfig) -> (EkfState, EkfCovariance) {
    let f = transition_jacobian(state);
    let p = f * cov.0 * f.transpose() + config.q;
    (transition(state), EkfCovariance(symmetrize(p)))
}

/// Condition number of a symmetric 2×2 matrix from its closed-form eigenvalues.
fn condition_2x2(s: &Matrix2<f64>) -> f64 {
    let (a, b, d) = (s[(0, 0)], 0.5 * (s[(0, 1)] + s[(1, 0)]), s[(1, 1)]);
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (hi, lo) = ((mean + radius).abs(), (mean - radius).abs());
    let (big, small) = (hi.max(lo), hi.min(lo));
    if small == 0.0 {
        f64::INFINITY
    } else {
        big / small
    }
}

/// Measurement update in Joseph form. Returns the posterior and the
/// innovation `z − H·x`.
pub fn update(
    state: &EkfState,
    cov: &EkfCovariance,
    z: &Measurement,
    config: &EkfConfig,
) -> Result<(EkfState, EkfCovariance, Vector2<f64>), EkfError> {
    if !(z.vx_s.is_finite() && z.vz_s.is_finite()) {
        return Err(EkfError::NonFiniteMeasurement(z.vx_s, z.vz_s));
    }
    let h = measurement_matrix();
    let p = cov.0;
    let innovation = z.as_vector() - h * state.0;
    let s = h * p * h.transpose() + config.v;

    let cond = condition_2x2(&s);
    if !cond.is_finite() || cond > MAX_INNOVATION_CONDITION {
        return Err(EkfError::SingularInnovation(cond));
    }
    let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
    let s_inv = Matrix2::new(s[(1, 1)], -s[(0, 1)], -s[(1, 0)], s[(0, 0)]) / det;

    let k: Matrix4x2<f64> = p * h.transpose() * s_inv;
    let x = state.0 + k * innovation;
    let i_kh = Matrix4::identity() - k * h;
    let p_new = i_kh * p * i_kh.transpose() + k * config.v * k.transpose();
    Ok((EkfState(x), EkfCovariance(symmetrize(p_new)), innovation))
}

/// One predict/update cycle.
pub fn step(
    state: &EkfState,
    cov: &EkfCovariance,
    z: &Measurement,
    config: &EkfConfig,
) -> Result<(EkfState, EkfCovariance, Vector2<f64>), EkfError> {
    let (x_pred, p_pred) = predict(state, cov, config);
    update(&x_pred, &p_pred, z, config)
}

/// Stateful wrapper holding the running estimate.
#[derive(Debug, Clone)]
pub struct SinusoidEkf {
    config: EkfConfig,
    state: EkfState,
    cov: EkfCovariance,
    innovation: Vector2<f64>,
}

impl SinusoidEkf {
    pub fn new(config: EkfConfig) -> Result<Self, EkfError> {
        config.validate()?;
        Ok(Self {
            state: config.x0,
            cov: EkfCovariance(config.p0),
            innovation: Vector2::zeros(),
            config,
        })
    }

    pub fn config(&self) -> &EkfConfig {
        &self.config
    }

    pub fn state(&self) -> &EkfState {
        &self.state
    }

    pub fn covariance(&self) -> &EkfCovariance {
        &self.cov
    }

    /// Innovation of the most recent update.
    pub fn innovation(&self) -> Vector2<f64> {
        self.innovation
    }

    /// Feeds one scaled measurement. On error the filter is left untouched.
    pub fn step(&mut self, z: &Measurement) -> Result<&EkfState, EkfError> {
        let (x, p, nu) = step(&self.state, &self.cov, z, &self.config)?;
        self.state = x;
        self.cov = p;
        self.innovation = nu;
        Ok(&self.state)
    }

    /// Feeds one velocity sample in m/s.
    pub fn step_velocity(&mut self, vx: f64, vz: f64) -> Result<&EkfState, EkfError> {
        let z = Measurement::from_velocity(vx, vz, self.config.sample_time);
        self.step(&z)
    }

    pub fn reset(&mut self) {
        self.state = self.config.x0;
        self.cov = EkfCovariance(self.config.p0);
        self.innovation = Vector2::zeros();
    }
}
