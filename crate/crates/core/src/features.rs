//! Gait statistics over a window of `Z` spectrogram columns.
//!
//! * `f1`: Doppler value of the strongest bin of the time-averaged profile.
//! * `f2`: span between the outermost bins of the averaged profile that stay
//!   within `envelope_threshold_db` of its peak.
//! * `f3`: contiguous run around `f1` within
//!   `envelope_threshold_db * torso_band_fraction` of the peak.
//! * `f4`: period of the per-column upper envelope, from its autocorrelation.
//!   A column's envelope is its highest bin at or above
//!   `median + envelope_fraction * (peak - median)`.
//!
//! Every threshold is relative to a peak, so adding a constant to the whole
//! window leaves the features unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radarproc::{percentile, TimeDopplerSpectrogram};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitFeatures {
    /// Torso Doppler, in Doppler bins.
    pub f1: f64,
    /// Total Doppler bandwidth, in bins.
    pub f2: f64,
    /// Torso bandwidth, in bins.
    pub f3: f64,
    /// Limb-motion period, in seconds.
    pub f4: f64,
}

impl GaitFeatures {
    pub fn to_array(&self) -> [f64; 4] {
        [self.f1, self.f2, self.f3, self.f4]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self { f1: v[0], f2: v[1], f3: v[2], f4: v[3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureWindowConfig {
    /// Columns per feature window.
    pub z: usize,
    pub envelope_threshold_db: f64,
    pub torso_band_fraction: f64,
    /// Per-column envelope level as a fraction of the way from the column
    /// median to its peak.
    pub envelope_fraction: f64,
    /// Lag search range for the limb period, seconds.
    pub min_period_s: f64,
    pub max_period_s: f64,
    /// Period substituted when the envelope is flat; `None` propagates the error.
    pub fallback_period_s: Option<f64>,
}

impl Default for FeatureWindowConfig {
    fn default() -> Self {
        Self {
            z: 165,
            envelope_threshold_db: 12.0,
            torso_band_fraction: 0.5,
            envelope_fraction: 0.4,
            min_period_s: 0.3,
            max_period_s: 3.0,
            fallback_period_s: None,
        }
    }
}

impl FeatureWindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.z < 2 {
            return Err(Error::InvalidConfig(format!("feature window Z must be >= 2, got {}", self.z)));
        }
        if !(self.envelope_threshold_db > 0.0 && self.torso_band_fraction > 0.0)
            || !(self.envelope_fraction > 0.0 && self.envelope_fraction < 1.0)
        {
            return Err(Error::InvalidConfig("feature thresholds must be positive".into()));
        }
        if !(self.min_period_s > 0.0 && self.max_period_s > self.min_period_s) {
            return Err(Error::InvalidConfig("period search range must be positive and non-empty".into()));
        }
        Ok(())
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Highest bin of `column` at or above `median + fraction * (peak - median)`.
fn upper_edge(column: &[f64], fraction: f64) -> usize {
    let peak = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let median = percentile(column, 50.0);
    let level = median + fraction * (peak - median);
    column.iter().rposition(|&v| v >= level).unwrap_or(0)
}

/// Shortest-lag preference: longer lags must beat this share of the best
/// autocorrelation peak to be skipped.
const PEAK_RATIO: f64 = 0.6;

/// Autocorrelation with unbiased normalization, `r[0] = 1`.
fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let r0: f64 = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    (0..=max_lag.min(n - 1))
        .map(|lag| {
            let s: f64 = x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum();
            s / (n - lag) as f64 / r0
        })
        .collect()
}

/// Period (seconds) of an evenly sampled sequence.
///
/// Picks the first local maximum of the autocorrelation inside the lag range
/// that reaches `PEAK_RATIO` of the largest value in that range, refined by a parabola
/// through its neighbours.
pub fn estimate_period(sequence: &[f64], sample_rate: f64, min_s: f64, max_s: f64) -> Result<f64> {
    let n = sequence.len();
    if n < 4 {
        return Err(Error::UndefinedFeature("period needs at least 4 samples".into()));
    }
    let mean = sequence.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = sequence.iter().map(|v| v - mean).collect();
    let var = x.iter().map(|v| v * v).sum::<f64>();
    if var <= 1e-12 * n as f64 {
        return Err(Error::UndefinedFeature("flat envelope has no period".into()));
    }
    let lo = ((min_s * sample_rate).ceil() as usize).max(1);
    let hi = ((max_s * sample_rate).floor() as usize).min(n - 2);
    if lo + 1 > hi {
        return Err(Error::UndefinedFeature(format!(
            "window of {n} samples too short for lags {min_s}-{max_s} s"
        )));
    }
    let r = autocorrelation(&x, hi + 1);
    let peaks: Vec<usize> = (lo..=hi)
        .filter(|&t| r[t] >= r[t - 1] && r[t] > r[t + 1])
        .collect();
    let best = peaks
        .iter()
        .map(|&t| r[t])
        .fold(f64::NEG_INFINITY, f64::max);
    let lag = peaks
        .iter()
        .copied()
        .find(|&t| r[t] > 0.0 && r[t] >= PEAK_RATIO * best)
        .ok_or_else(|| Error::UndefinedFeature("no periodic component in lag range".into()))?;
    let (a, b, c) = (r[lag - 1], r[lag], r[lag + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 1e-12 { 0.5 * (a - c) / denom } else { 0.0 };
    Ok((lag as f64 + shift.clamp(-0.5, 0.5)) / sample_rate)
}

/// Features of one window, which must hold exactly `cfg.z` columns.
pub fn extract_features(window: &TimeDopplerSpectrogram, cfg: &FeatureWindowConfig) -> Result<GaitFeatures> {
    let (f1, f2, f3) = spectral_features(window, cfg)?;
    let f4 = limb_period(window, cfg)?;
    Ok(GaitFeatures { f1, f2, f3, f4 })
}

/// `(f1, f2, f3)` from the time-averaged profile.
fn spectral_features(window: &TimeDopplerSpectrogram, cfg: &FeatureWindowConfig) -> Result<(f64, f64, f64)> {
    cfg.validate()?;
    if window.len() != cfg.z {
        return Err(Error::input(format!(
            "feature window has {} columns, expected Z = {}",
            window.len(),
            cfg.z
        )));
    }
    let d = window.doppler_bins();
    let mut mean = vec![0.0; d];
    for col in window.columns() {
        for (m, v) in mean.iter_mut().zip(col) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= window.len() as f64;
    }

    let peak_bin = argmax(&mean);
    let peak = mean[peak_bin];
    let f1 = window.doppler_axis[peak_bin];

    let outer = peak - cfg.envelope_threshold_db;
    let lo = mean.iter().position(|&v| v >= outer).unwrap_or(peak_bin);
    let hi = mean.iter().rposition(|&v| v >= outer).unwrap_or(peak_bin);
    let f2 = (hi - lo + 1) as f64;

    let inner = peak - cfg.envelope_threshold_db * cfg.torso_band_fraction;
    let mut a = peak_bin;
    while a > 0 && mean[a - 1] >= inner {
        a -= 1;
    }
    let mut b = peak_bin;
    while b + 1 < d && mean[b + 1] >= inner {
        b += 1;
    }
    let f3 = (b - a + 1) as f64;
    Ok((f1, f2, f3))
}

/// Upper Doppler envelope of every column, in Doppler-axis units.
pub fn upper_envelope(window: &TimeDopplerSpectrogram, fraction: f64) -> Vec<f64> {
    let raw: Vec<f64> = window
        .columns()
        .map(|c| window.doppler_axis[upper_edge(c, fraction)])
        .collect();
    median3(&raw)
}

/// Three-point running median; the ends are kept.
fn median3(x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    for i in 1..x.len().saturating_sub(1) {
        let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
        out[i] = a.max(b).min(a.min(b).max(c));
    }
    out
}

fn limb_period(window: &TimeDopplerSpectrogram, cfg: &FeatureWindowConfig) -> Result<f64> {
    let envelope = upper_envelope(window, cfg.envelope_fraction);
    estimate_period(&envelope, window.frame_rate, cfg.min_period_s, cfg.max_period_s)
}

/// Start of the `z`-column window centered on a sample, clipped to `0..n`.
pub fn feature_window_start(sample_start: usize, sample_width: usize, z: usize, n: usize) -> usize {
    let center = sample_start + sample_width / 2;
    center.saturating_sub(z / 2).min(n - z)
}

/// One feature set per sample window, each from the `Z` columns centered on it.
pub fn features_for_samples(
    tds: &TimeDopplerSpectrogram,
    sample_starts: &[usize],
    sample_width: usize,
    cfg: &FeatureWindowConfig,
) -> Result<Vec<GaitFeatures>> {
    cfg.validate()?;
    let n = tds.len();
    if cfg.z > n {
        return Err(Error::InvalidConfig(format!(
            "feature window Z = {} exceeds spectrogram length {n}",
            cfg.z
        )));
    }
    sample_starts
        .iter()
        .map(|&s| {
            if s + sample_width > n {
                return Err(Error::input(format!(
                    "sample {s}..{} outside spectrogram of {n} columns",
                    s + sample_width
                )));
            }
            let window = tds.window(feature_window_start(s, sample_width, cfg.z, n), cfg.z)?;
            let (f1, f2, f3) = spectral_features(&window, cfg)?;
            let f4 = match (limb_period(&window, cfg), cfg.fallback_period_s) {
                (Err(Error::UndefinedFeature(_)), Some(period)) => period,
                (r, _) => r?,
            };
            Ok(GaitFeatures { f1, f2, f3, f4 })
        })
        .collect()
}

/// CSV with header `sample_id,label,f1,f2,f3,f4`.
pub fn features_csv(rows: &[(usize, usize, GaitFeatures)]) -> String {
    let mut out = String::from("sample_id,label,f1,f2,f3,f4\n");
    for (id, label, f) in rows {
        out.push_str(&format!("{id},{label},{},{},{},{}\n", f.f1, f.f2, f.f3, f.f4));
    }
    out
}
