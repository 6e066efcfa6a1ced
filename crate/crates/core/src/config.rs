//! Flat `key = value` configuration shared by the filter, the parameter
//! tracker, and preprocessing.
//!
//! Recognised keys:
//!
//! | key          | meaning                                   | default |
//! |--------------|-------------------------------------------|---------|
//! | `q1`..`q4`   | process covariance diagonal               | 1e-5, 1e-5, 1e-3, 1e-3 |
//! | `v1`, `v2`   | measurement covariance diagonal           | 1e-2, 1e-2 |
//! | `p0_scale`   | prior covariance `p0_scale · I`           | 1 |
//! | `T`          | sampling time, s                          | 0.04 |
//! | `omega0`     | initial ω̃, rad/sample                     | 0.1 |
//! | `R0`, `r0`   | initial radii, m                          | 2, 0.2 |
//! | `n`          | moving-average length                     | 10 |
//! | `mu_omega`   | frequency gate, rad/sample                | 0.1 |
//! | `mu_a0`      | bias gate, m/sample                       | 0.1 |
//! | `gate_abs`   | gate on absolute values (`true`/`false`)  | false |
//! | `sg_window`  | Savitzky–Golay window                     | 11 |
//! | `sg_order`   | Savitzky–Golay order                      | 3 |
//! | `target_rate`| resampling rate, Hz                       | 1/T |
//!
//! Unknown keys are rejected. `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::ekf::{EkfConfig, DEFAULT_OMEGA0, DEFAULT_R0, DEFAULT_SAMPLE_TIME, DEFAULT_SMALL_R0};
use crate::params::ParamFilterConfig;
use crate::preprocess::PreprocessConfig;

pub const KEYS: &[&str] = &[
    "q1", "q2", "q3", "q4", "v1", "v2", "p0_scale", "T", "omega0", "R0", "r0", "n", "mu_omega", "mu_a0",
    "gate_abs", "sg_window", "sg_order", "target_rate",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?}")]
    Duplicate { line: usize, key: String },
    #[error("key {key:?}: cannot parse {value:?}")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything a run needs besides its input data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub ekf: EkfConfig,
    pub params: ParamFilterConfig,
    pub preprocess: PreprocessConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            ekf: EkfConfig::default(),
            params: ParamFilterConfig::default(),
            preprocess: PreprocessConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn sample_time(&self) -> f64 {
        self.ekf.sample_time
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.ekf.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.params.validate().map_err(ConfigError::Invalid)?;
        self.preprocess.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let implied = 1.0 / self.preprocess.target_rate;
        if (implied - self.ekf.sample_time).abs() > 1e-9 * self.ekf.sample_time {
            return Err(ConfigError::Invalid(format!(
                "target_rate {} Hz disagrees with T = {} s",
                self.preprocess.target_rate, self.ekf.sample_time
            )));
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.to_string() })?;
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey { line: i + 1, key: key.to_string() });
            }
            if kv.insert(key, value).is_some() {
                return Err(ConfigError::Duplicate { line: i + 1, key: key.to_string() });
            }
        }

        fn get<T: std::str::FromStr>(kv: &BTreeMap<&str, &str>, key: &str, default: T) -> Result<T, ConfigError> {
            match kv.get(key) {
                None => Ok(default),
                Some(v) => v.parse().map_err(|_| ConfigError::BadValue { key: key.into(), value: v.to_string() }),
            }
        }

        let base = EkfConfig::default();
        let sample_time = get(&kv, "T", DEFAULT_SAMPLE_TIME)?;
        let big_r0 = get(&kv, "R0", DEFAULT_R0)?;
        let small_r0 = get(&kv, "r0", DEFAULT_SMALL_R0)?;
        let ekf = EkfConfig::from_tuning(
            [
                get(&kv, "q1", base.q[(0, 0)])?,
                get(&kv, "q2", base.q[(1, 1)])?,
                get(&kv, "q3", base.q[(2, 2)])?,
                get(&kv, "q4", base.q[(3, 3)])?,
            ],
            [get(&kv, "v1", base.v[(0, 0)])?, get(&kv, "v2", base.v[(1, 1)])?],
            get(&kv, "p0_scale", 1.0)?,
            sample_time,
            get(&kv, "omega0", DEFAULT_OMEGA0)?,
            big_r0,
            small_r0,
        );
        let pd = ParamFilterConfig::default();
        let params = ParamFilterConfig {
            n: get(&kv, "n", pd.n)?,
            mu_omega: get(&kv, "mu_omega", pd.mu_omega)?,
            mu_a0: get(&kv, "mu_a0", pd.mu_a0)?,
            big_r0,
            small_r0,
            abs_gate: get(&kv, "gate_abs", pd.abs_gate)?,
        };
        let sd = PreprocessConfig::default();
        let preprocess = PreprocessConfig {
            sg_window: get(&kv, "sg_window", sd.sg_window)?,
            sg_order: get(&kv, "sg_order", sd.sg_order)?,
            target_rate: get(&kv, "target_rate", 1.0 / sample_time)?,
        };
        let cfg = Self { ekf, params, preprocess };
        cfg.validate()?;
        Ok(cfg)
    }
}
