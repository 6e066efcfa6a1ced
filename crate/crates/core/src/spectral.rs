//! Offline DFT checks of the gait model: dominant step frequency and the
//! phase lag between forward and vertical oscillation.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::model::VelocitySample;

/// Default search band in Hz.
pub const DEFAULT_BAND: (f64, f64) = (0.25, 3.0);
/// In-band normalized magnitudes below this count as silence.
pub const SILENCE_FLOOR: f64 = 1e-12;
/// A peak must exceed this multiple of the median in-band magnitude.
pub const PEAK_TO_FLOOR: f64 = 3.0;
/// Minimum recording length accepted by [`validate_recording`], seconds.
pub const MIN_RECORDING_SECONDS: f64 = 10.0;
/// Expected vertical-minus-forward phase and its tolerance, degrees.
pub const EXPECTED_PHASE_DEG: f64 = -90.0;
pub const PHASE_TOLERANCE_DEG: f64 = 15.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("no oscillatory content in band")]
    NoOscillatoryContent,
    #[error("series of {len} samples is too short; need at least {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("invalid band ({0}, {1}) Hz")]
    InvalidBand(f64, f64),
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no common peak: forward {forward} Hz, vertical {vertical} Hz")]
    NoCommonPeak { forward: f64, vertical: f64 },
    #[error("recording is not uniformly sampled")]
    NonUniform,
}

/// Dominant in-band component of one series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Interpolated frequency in Hz.
    pub frequency: f64,
    /// Single-sided amplitude at the peak bin.
    pub amplitude: f64,
    /// Phase lag φ of the peak bin in radians, for a component written as
    /// `A·cos(2πft − φ)`.
    pub phase: f64,
    pub bin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumReport {
    pub peak_frequency: f64,
    pub peak_amplitude: f64,
    /// Vertical minus forward phase lag, degrees in (−180, 180].
    pub phase_offset_deg: f64,
    /// Bin spacing in Hz.
    pub resolution: f64,
    pub passed: bool,
}

impl SpectrumReport {
    /// Flat `key = value` rendering.
    pub fn to_key_values(&self) -> String {
        format!(
            "peak_frequency = {}\npeak_omega = {}\npeak_amplitude = {}\nphase_offset_deg = {}\nresolution = {}\npassed = {}\n",
            self.peak_frequency,
            2.0 * PI * self.peak_frequency,
            self.peak_amplitude,
            self.phase_offset_deg,
            self.resolution,
            self.passed
        )
    }
}

struct Spectrum {
    bins: Vec<Complex<f64>>,
    len: usize,
    rate: f64,
}

impl Spectrum {
    fn of(series: &[f64], rate: f64) -> Self {
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        let mut bins: Vec<Complex<f64>> = series.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(bins.len()).process(&mut bins);
        Self { len: series.len(), bins, rate }
    }

    fn resolution(&self) -> f64 {
        self.rate / self.len as f64
    }

    fn amplitude(&self, k: usize) -> f64 {
        2.0 * self.bins[k].norm() / self.len as f64
    }

    /// Bin range inside `[f_lo, f_hi]`, clipped below Nyquist and above DC.
    fn band(&self, f_lo: f64, f_hi: f64) -> std::ops::RangeInclusive<usize> {
        let res = self.resolution();
        let lo = ((f_lo / res).ceil() as usize).max(1);
        let nyquist = (self.len - 1) / 2;
        let hi = ((f_hi / res).floor() as usize).min(nyquist);
        lo..=hi
    }

    fn median_amplitude(&self, band: std::ops::RangeInclusive<usize>) -> f64 {
        let mut mags: Vec<f64> = band.map(|k| self.amplitude(k)).collect();
        if mags.is_empty() {
            return 0.0;
        }
        mags.sort_by(f64::total_cmp);
        mags[mags.len() / 2]
    }

    /// Parabolic vertex over log-magnitudes of bins k−1, k, k+1, in bins.
    fn refine(&self, k: usize) -> f64 {
        if k == 0 || k + 1 >= self.len {
            return 0.0;
        }
        let l = |i: usize| self.bins[i].norm().max(f64::MIN_POSITIVE).ln();
        let (a, b, c) = (l(k - 1), l(k), l(k + 1));
        let denom = a - 2.0 * b + c;
        if denom.abs() < f64::EPSILON || !denom.is_finite() {
            return 0.0;
        }
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    }

    fn peak_at(&self, k: usize) -> Peak {
        Peak {
            frequency: (k as f64 + self.refine(k)) * self.resolution(),
            amplitude: self.amplitude(k),
            phase: -self.bins[k].arg(),
            bin: k,
        }
    }
}

fn check_band(series: &[f64], rate: f64, band: (f64, f64)) -> Result<(), SpectralError> {
    let (f_lo, f_hi) = band;
    if !(f_lo > 0.0 && f_hi > f_lo && rate > 0.0 && f_lo.is_finite() && f_hi.is_finite()) {
        return Err(SpectralError::InvalidBand(f_lo, f_hi));
    }
    let needed = (2.0 * rate / f_lo).ceil() as usize;
    if series.len() < needed {
        return Err(SpectralError::TooShort { len: series.len(), needed });
    }
    Ok(())
}

fn argmax_in(band: std::ops::RangeInclusive<usize>, score: impl Fn(usize) -> f64) -> Option<(usize, f64)> {
    band.map(|k| (k, score(k))).fold(None, |best, (k, s)| match best {
        Some((_, bs)) if bs >= s => best,
        _ => Some((k, s)),
    })
}

/// Strongest in-band component of a uniformly sampled series (mean removed),
/// with sub-bin frequency refinement.
pub fn dft_peak(series: &[f64], rate: f64, band: (f64, f64)) -> Result<Peak, SpectralError> {
    check_band(series, rate, band)?;
    let spec = Spectrum::of(series, rate);
    let range = spec.band(band.0, band.1);
    let (k, amp) = argmax_in(range, |k| spec.amplitude(k)).ok_or(SpectralError::InvalidBand(band.0, band.1))?;
    if amp < SILENCE_FLOOR {
        return Err(SpectralError::NoOscillatoryContent);
    }
    Ok(spec.peak_at(k))
}

fn wrap_degrees(deg: f64) -> f64 {
    let mut d = deg % 360.0;
    if d <= -180.0 {
        d += 360.0;
    } else if d > 180.0 {
        d -= 360.0;
    }
    d
}

struct CommonPeak {
    forward: Peak,
    vertical: Peak,
    phase_offset_deg: f64,
    resolution: f64,
    floors: (f64, f64),
}

fn common_peak(vx: &[f64], vz: &[f64], rate: f64, band: (f64, f64)) -> Result<CommonPeak, SpectralError> {
    if vx.len() != vz.len() {
        return Err(SpectralError::LengthMismatch(vx.len(), vz.len()));
    }
    check_band(vx, rate, band)?;
    let sx = Spectrum::of(vx, rate);
    let sz = Spectrum::of(vz, rate);
    let range = sx.band(band.0, band.1);

    let own = |s: &Spectrum| -> Result<Peak, SpectralError> {
        let (k, amp) = argmax_in(range.clone(), |k| s.amplitude(k)).ok_or(SpectralError::InvalidBand(band.0, band.1))?;
        if amp < SILENCE_FLOOR {
            return Err(SpectralError::NoOscillatoryContent);
        }
        Ok(s.peak_at(k))
    };
    let px = own(&sx)?;
    let pz = own(&sz)?;
    let (fa, fb) = (px.frequency, pz.frequency);
    if (fa - fb).abs() > 0.1 * fa.max(fb) {
        return Err(SpectralError::NoCommonPeak { forward: fa, vertical: fb });
    }

    // Shared bin maximizing the cross-spectrum magnitude keeps the result
    // antisymmetric in its arguments.
    let (k, _) = argmax_in(range.clone(), |k| sx.bins[k].norm() * sz.bins[k].norm())
        .ok_or(SpectralError::InvalidBand(band.0, band.1))?;
    // Lag of vz minus lag of vx.
    let cross = sx.bins[k] * sz.bins[k].conj();
    Ok(CommonPeak {
        forward: sx.peak_at(k),
        vertical: sz.peak_at(k),
        phase_offset_deg: wrap_degrees(cross.arg().to_degrees()),
        resolution: sx.resolution(),
        floors: (sx.median_amplitude(range.clone()), sz.median_amplitude(range)),
    })
}

/// Phase lag of `vz` minus phase lag of `vx` at their common dominant
/// frequency, in degrees wrapped to (−180, 180]. `vx = cos`, `vz = −sin`
/// gives −90°.
pub fn phase_offset(vx: &[f64], vz: &[f64], rate: f64) -> Result<f64, SpectralError> {
    phase_offset_in_band(vx, vz, rate, DEFAULT_BAND)
}

pub fn phase_offset_in_band(vx: &[f64], vz: &[f64], rate: f64, band: (f64, f64)) -> Result<f64, SpectralError> {
    Ok(common_peak(vx, vz, rate, band)?.phase_offset_deg)
}

/// Checks a velocity recording for a dominant gait oscillation with the
/// forward component leading the vertical one by a quarter period.
pub fn validate_recording(samples: &[VelocitySample]) -> Result<SpectrumReport, SpectralError> {
    validate_recording_in_band(samples, DEFAULT_BAND)
}

pub fn validate_recording_in_band(samples: &[VelocitySample], band: (f64, f64)) -> Result<SpectrumReport, SpectralError> {
    if samples.len() < 2 {
        return Err(SpectralError::TooShort { len: samples.len(), needed: 2 });
    }
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let dt = crate::preprocess::uniform_spacing(&times).map_err(|_| SpectralError::NonUniform)?;
    let rate = 1.0 / dt;
    let needed = (MIN_RECORDING_SECONDS * rate).ceil() as usize;
    if samples.len() < needed {
        return Err(SpectralError::TooShort { len: samples.len(), needed });
    }
    let vx: Vec<f64> = samples.iter().map(|s| s.vx).collect();
    let vz: Vec<f64> = samples.iter().map(|s| s.vz).collect();
    let cp = common_peak(&vx, &vz, rate, band)?;

    let strong = |p: &Peak, floor: f64| p.amplitude > PEAK_TO_FLOOR * floor;
    if !strong(&cp.forward, cp.floors.0) || !strong(&cp.vertical, cp.floors.1) {
        return Err(SpectralError::NoOscillatoryContent);
    }
    let passed = (cp.phase_offset_deg - EXPECTED_PHASE_DEG).abs() <= PHASE_TOLERANCE_DEG;
    Ok(SpectrumReport {
        peak_frequency: cp.vertical.frequency,
        peak_amplitude: cp.vertical.amplitude,
        phase_offset_deg: cp.phase_offset_deg,
        resolution: cp.resolution,
        passed,
    })
}
