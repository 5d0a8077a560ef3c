//! Range-Doppler and time-Doppler processing of dechirped FMCW frames.
//!
//! A frame holds `K` fast-time samples for each of `L` chirps. Its 2-D DFT
//! gives a complex range-Doppler grid `S(u, v)`; the magnitude in dB over a
//! gated set of range bins is a [`RangeDopplerMap`]. Summing each Doppler
//! column over range (in dB, as written) gives one Doppler profile, and a
//! time-ordered stack of profiles is a [`TimeDopplerSpectrogram`].
//!
//! The Doppler axis of every map is centered: column `D / 2` holds zero
//! Doppler and column `d` holds Doppler bin `d - D / 2`.

use std::ops::Range;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to `|S|` before taking `20 log10`.
pub const DB_FLOOR: f64 = 1e-12;

/// One `K x L` frame of complex dechirped samples.
///
/// `samples[k * L + l]` is fast-time sample `k` of chirp `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarFrame {
    samples: Vec<Complex64>,
    fast_time: usize,
    chirps: usize,
    pub frame_index: u64,
    pub frame_rate: f64,
    /// Set by the simulator when a scatterer exceeded the unambiguous Doppler span.
    pub doppler_aliased: bool,
}

impl RadarFrame {
    pub fn new(
        samples: Vec<Complex64>,
        fast_time: usize,
        chirps: usize,
        frame_index: u64,
        frame_rate: f64,
    ) -> Result<Self> {
        if fast_time < 2 || chirps < 2 {
            return Err(Error::input(format!(
                "frame must be at least 2x2, got {fast_time}x{chirps}"
            )));
        }
        if samples.len() != fast_time * chirps {
            return Err(Error::input(format!(
                "expected {} samples for a {fast_time}x{chirps} frame, got {}",
                fast_time * chirps,
                samples.len()
            )));
        }
        if !(frame_rate > 0.0 && frame_rate.is_finite()) {
            return Err(Error::input(format!("frame rate must be positive, got {frame_rate}")));
        }
        Ok(Self {
            samples,
            fast_time,
            chirps,
            frame_index,
            frame_rate,
            doppler_aliased: false,
        })
    }

    pub fn fast_time(&self) -> usize {
        self.fast_time
    }

    pub fn chirps(&self) -> usize {
        self.chirps
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.samples[k * self.chirps + l]
    }
}

/// Magnitude map in dB over gated range bins and a centered Doppler axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeDopplerMap {
    /// Row-major `R x D`.
    pub magnitude_db: Vec<f64>,
    /// Bin-center ranges in meters, strictly increasing.
    pub range_axis: Vec<f64>,
    /// Doppler bin values, zero at column `D / 2`.
    pub doppler_axis: Vec<f64>,
    pub frame_index: u64,
}

impl RangeDopplerMap {
    /// Builds a map from a row-major grid, checking axes against the grid.
    pub fn from_grid(
        magnitude_db: Vec<f64>,
        range_axis: Vec<f64>,
        doppler_axis: Vec<f64>,
        frame_index: u64,
    ) -> Result<Self> {
        let (r, d) = (range_axis.len(), doppler_axis.len());
        if r == 0 || d == 0 {
            return Err(Error::input("range-Doppler map needs at least one bin per axis"));
        }
        if magnitude_db.len() != r * d {
            return Err(Error::input(format!(
                "grid has {} cells, axes imply {r}x{d}",
                magnitude_db.len()
            )));
        }
        if range_axis.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::input("range axis must be strictly increasing"));
        }
        Ok(Self {
            magnitude_db,
            range_axis,
            doppler_axis,
            frame_index,
        })
    }

    /// Map with unit-spaced range axis and centered Doppler axis.
    pub fn with_default_axes(magnitude_db: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        Self::from_grid(
            magnitude_db,
            (0..rows).map(|r| r as f64).collect(),
            centered_doppler_axis(cols),
            0,
        )
    }

    pub fn rows(&self) -> usize {
        self.range_axis.len()
    }

    pub fn cols(&self) -> usize {
        self.doppler_axis.len()
    }

    pub fn at(&self, r: usize, d: usize) -> f64 {
        self.magnitude_db[r * self.cols() + d]
    }

    pub fn zero_doppler_col(&self) -> usize {
        self.cols() / 2
    }

    /// `(row, col)` of the largest cell; lowest index wins ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.magnitude_db.iter().enumerate() {
            if v > self.magnitude_db[best] {
                best = i;
            }
        }
        (best / self.cols(), best % self.cols())
    }
}

/// Doppler axis in bins with zero at index `n / 2`.
pub fn centered_doppler_axis(n: usize) -> Vec<f64> {
    let zero = (n / 2) as f64;
    (0..n).map(|d| d as f64 - zero).collect()
}

/// `n x D` stack of Doppler profiles; row `i` is the profile of the `i`-th map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDopplerSpectrogram {
    data: Vec<f64>,
    len: usize,
    doppler_bins: usize,
    pub doppler_axis: Vec<f64>,
    pub frame_rate: f64,
}

impl TimeDopplerSpectrogram {
    pub fn from_rows(data: Vec<f64>, len: usize, doppler_bins: usize, frame_rate: f64) -> Result<Self> {
        if len == 0 || doppler_bins == 0 {
            return Err(Error::input("spectrogram must have at least one column and one bin"));
        }
        if data.len() != len * doppler_bins {
            return Err(Error::input(format!(
                "spectrogram data has {} values, expected {len}x{doppler_bins}",
                data.len()
            )));
        }
        Ok(Self {
            data,
            len,
            doppler_bins,
            doppler_axis: centered_doppler_axis(doppler_bins),
            frame_rate,
        })
    }

    /// Number of profiles (time columns).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn doppler_bins(&self) -> usize {
        self.doppler_bins
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.data[i * self.doppler_bins..(i + 1) * self.doppler_bins]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.doppler_bins)
    }

    /// Profiles flattened time-major (`n * D` values).
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copy of columns `start..start + width`.
    pub fn window(&self, start: usize, width: usize) -> Result<Self> {
        if width == 0 || start + width > self.len {
            return Err(Error::input(format!(
                "window {start}..{} outside spectrogram of {} columns",
                start + width,
                self.len
            )));
        }
        let d = self.doppler_bins;
        Ok(Self {
            data: self.data[start * d..(start + width) * d].to_vec(),
            len: width,
            doppler_bins: d,
            doppler_axis: self.doppler_axis.clone(),
            frame_rate: self.frame_rate,
        })
    }
}

/// Percentile floor clamp applied per Doppler column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiseConfig {
    /// Percentile of each column's dB values used as its noise floor, in (0, 100).
    pub percentile: f64,
    /// Cells below floor + margin are clamped to the floor.
    pub margin_db: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            percentile: 75.0,
            margin_db: 6.0,
        }
    }
}

/// Attenuation of the static-clutter Doppler bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuppressConfig {
    pub atten_db: f64,
    pub half_width: usize,
}

impl Default for SuppressConfig {
    fn default() -> Self {
        Self {
            atten_db: 30.0,
            half_width: 1,
        }
    }
}

/// Unnormalized 2-D DFT `S(u, v) = sum_l sum_k s(k, l) exp(-j 2 pi (u k / K + v l / L))`.
///
/// The result is row-major `K x L` with `u` as the row index.
pub fn fft2d(frame: &RadarFrame) -> Result<Vec<Complex64>> {
    fft2d_grid(frame.samples(), frame.fast_time(), frame.chirps())
}

/// [`fft2d`] on a bare row-major grid.
pub fn fft2d_grid(grid: &[Complex64], rows: usize, cols: usize) -> Result<Vec<Complex64>> {
    if rows == 0 || cols == 0 {
        return Err(Error::input("fft2d on an empty grid"));
    }
    if grid.len() != rows * cols {
        return Err(Error::input(format!(
            "grid has {} samples, expected {rows}x{cols}",
            grid.len()
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut out = grid.to_vec();

    let row_fft = planner.plan_fft_forward(cols);
    row_fft.process(&mut out);

    let col_fft = planner.plan_fft_forward(rows);
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for (r, slot) in column.iter_mut().enumerate() {
            *slot = out[r * cols + c];
        }
        col_fft.process(&mut column);
        for (r, v) in column.iter().enumerate() {
            out[r * cols + c] = *v;
        }
    }
    Ok(out)
}

/// Contiguous set of kept range bins together with their spacing in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeGate {
    pub bins: Range<usize>,
    pub bin_spacing_m: f64,
}

impl RangeGate {
    /// Bins whose centers fall inside `[min_m, max_m]`, clipped to `fast_time`.
    pub fn from_meters(min_m: f64, max_m: f64, bin_spacing_m: f64, fast_time: usize) -> Result<Self> {
        if !(bin_spacing_m > 0.0) || !(max_m > min_m) {
            return Err(Error::input("range gate needs positive spacing and max > min"));
        }
        let start = (min_m / bin_spacing_m).ceil().max(0.0) as usize;
        let end = ((max_m / bin_spacing_m).floor() as usize + 1).min(fast_time);
        if start >= end {
            return Err(Error::input(format!(
                "range gate {min_m}-{max_m} m selects no bins at {bin_spacing_m} m spacing"
            )));
        }
        Ok(Self {
            bins: start..end,
            bin_spacing_m,
        })
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

/// FFT magnitude in dB over the gated range bins, Doppler-centered.
pub fn to_rdm(frame: &RadarFrame, gate: &RangeGate) -> Result<RangeDopplerMap> {
    let k = frame.fast_time();
    let l = frame.chirps();
    if gate.bins.is_empty() || gate.bins.end > k {
        return Err(Error::input(format!(
            "range selection {:?} invalid for {k} fast-time bins",
            gate.bins
        )));
    }
    let spectrum = fft2d(frame)?;
    let half = l / 2;
    let mut magnitude_db = Vec::with_capacity(gate.len() * l);
    for u in gate.bins.clone() {
        for d in 0..l {
            let v = (d + l - half) % l;
            magnitude_db.push(to_db(spectrum[u * l + v].norm()));
        }
    }
    RangeDopplerMap::from_grid(
        magnitude_db,
        gate.bins.clone().map(|u| u as f64 * gate.bin_spacing_m).collect(),
        centered_doppler_axis(l),
        frame.frame_index,
    )
}

pub fn to_db(magnitude: f64) -> f64 {
    20.0 * magnitude.max(DB_FLOOR).log10()
}

/// Linearly interpolated percentile (`p` in percent) of unsorted values.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Per-Doppler-bin percentile floor clamping.
pub fn denoise_rdm(rdm: &RangeDopplerMap, cfg: &DenoiseConfig) -> Result<RangeDopplerMap> {
    if !(cfg.percentile > 0.0 && cfg.percentile < 100.0) {
        return Err(Error::input(format!(
            "denoise percentile must be in (0, 100), got {}",
            cfg.percentile
        )));
    }
    let (rows, cols) = (rdm.rows(), rdm.cols());
    let mut out = rdm.clone();
    let mut column = vec![0.0; rows];
    for d in 0..cols {
        for (r, slot) in column.iter_mut().enumerate() {
            *slot = rdm.magnitude_db[r * cols + d];
        }
        let floor = percentile(&column, cfg.percentile);
        let cut = floor + cfg.margin_db;
        for r in 0..rows {
            let cell = &mut out.magnitude_db[r * cols + d];
            if *cell < cut {
                *cell = floor;
            }
        }
    }
    Ok(out)
}

/// Lowers the Doppler columns within `half_width` of zero Doppler by `atten_db`.
pub fn suppress_zero_doppler(
    rdm: &RangeDopplerMap,
    atten_db: f64,
    half_width: usize,
) -> Result<RangeDopplerMap> {
    let cols = rdm.cols();
    if atten_db < 0.0 || !atten_db.is_finite() {
        return Err(Error::input(format!("attenuation must be >= 0 dB, got {atten_db}")));
    }
    if 2 * half_width >= cols {
        return Err(Error::input(format!(
            "suppression half-width {half_width} too wide for {cols} Doppler bins"
        )));
    }
    let zero = rdm.zero_doppler_col();
    let lo = zero.saturating_sub(half_width);
    let hi = (zero + half_width).min(cols - 1);
    let mut out = rdm.clone();
    if atten_db == 0.0 {
        return Ok(out);
    }
    for row in out.magnitude_db.chunks_exact_mut(cols) {
        for cell in &mut row[lo..=hi] {
            *cell -= atten_db;
        }
    }
    Ok(out)
}

/// Column sums of the dB grid over range.
pub fn doppler_profile(rdm: &RangeDopplerMap) -> Vec<f64> {
    let cols = rdm.cols();
    let mut profile = vec![0.0; cols];
    for row in rdm.magnitude_db.chunks_exact(cols) {
        for (acc, v) in profile.iter_mut().zip(row) {
            *acc += v;
        }
    }
    profile
}

/// Stacks Doppler profiles in time order.
pub fn build_tds(profiles: &[Vec<f64>], frame_rate: f64) -> Result<TimeDopplerSpectrogram> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::input("cannot build a spectrogram from zero profiles"))?;
    let d = first.len();
    if let Some((i, p)) = profiles.iter().enumerate().find(|(_, p)| p.len() != d) {
        return Err(Error::input(format!(
            "profile {i} has {} bins, expected {d}",
            p.len()
        )));
    }
    let data = profiles.iter().flat_map(|p| p.iter().copied()).collect();
    TimeDopplerSpectrogram::from_rows(data, profiles.len(), d, frame_rate)
}

/// Profiles of a map sequence stacked into a spectrogram, keeping the maps' Doppler axis.
pub fn tds_from_rdms(rdms: &[RangeDopplerMap], frame_rate: f64) -> Result<TimeDopplerSpectrogram> {
    let profiles: Vec<Vec<f64>> = rdms.iter().map(doppler_profile).collect();
    let mut tds = build_tds(&profiles, frame_rate)?;
    tds.doppler_axis = rdms[0].doppler_axis.clone();
    Ok(tds)
}

/// Start columns of every full window; empty when `width > n`.
pub fn window_starts(n: usize, width: usize, stride: usize) -> Vec<usize> {
    if width == 0 || stride == 0 || width > n {
        return Vec::new();
    }
    (0..=(n - width)).step_by(stride).collect()
}

pub fn slice_windows(
    tds: &TimeDopplerSpectrogram,
    width: usize,
    stride: usize,
) -> Result<Vec<TimeDopplerSpectrogram>> {
    if stride == 0 {
        return Err(Error::input("window stride must be >= 1"));
    }
    if width == 0 {
        return Err(Error::input("window width must be >= 1"));
    }
    window_starts(tds.len(), width, stride)
        .into_iter()
        .map(|s| tds.window(s, width))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_from(samples: Vec<Complex64>, k: usize, l: usize) -> RadarFrame {
        RadarFrame::new(samples, k, l, 0, 15.0).unwrap()
    }

    #[test]
    fn impulse_transforms_to_constant() {
        let mut s = vec![Complex64::new(0.0, 0.0); 16];
        s[0] = Complex64::new(1.0, 0.0);
        let out = fft2d(&frame_from(s, 4, 4)).unwrap();
        for v in out {
            assert_eq!(v, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn constant_concentrates_at_dc() {
        let out = fft2d(&frame_from(vec![Complex64::new(1.0, 0.0); 16], 4, 4)).unwrap();
        assert!((out[0] - Complex64::new(16.0, 0.0)).norm() < 1e-12);
        for v in &out[1..] {
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn frame_rejects_bad_dimensions() {
        assert!(RadarFrame::new(vec![Complex64::default(); 2], 1, 2, 0, 1.0).is_err());
        assert!(RadarFrame::new(vec![Complex64::default(); 3], 2, 2, 0, 1.0).is_err());
        assert!(RadarFrame::new(vec![Complex64::default(); 4], 2, 2, 0, 0.0).is_err());
        assert!(fft2d_grid(&[], 0, 4).is_err());
    }

    #[test]
    fn unit_magnitude_spectrum_is_zero_db() {
        // an impulse has |S| = 1 in every bin
        let mut s = vec![Complex64::new(0.0, 0.0); 64];
        s[0] = Complex64::new(1.0, 0.0);
        let gate = RangeGate { bins: 0..8, bin_spacing_m: 0.5 };
        let rdm = to_rdm(&frame_from(s, 8, 8), &gate).unwrap();
        assert!(rdm.magnitude_db.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(rdm.range_axis[1], 0.5);
        assert_eq!(rdm.doppler_axis[4], 0.0);
    }

    #[test]
    fn single_tone_cell_is_twenty_db() {
        // s = delta + (9/KL) * tone at (u0, v0) => |S(u0, v0)| = 10, others 1
        let (k, l) = (8, 8);
        let (u0, v0) = (3usize, 2usize);
        let mut s = vec![Complex64::new(0.0, 0.0); k * l];
        s[0] = Complex64::new(1.0, 0.0);
        for kk in 0..k {
            for ll in 0..l {
                let phase = 2.0 * std::f64::consts::PI * ((u0 * kk) as f64 / k as f64 + (v0 * ll) as f64 / l as f64);
                s[kk * l + ll] += Complex64::from_polar(9.0 / (k * l) as f64, phase);
            }
        }
        let gate = RangeGate { bins: 0..k, bin_spacing_m: 1.0 };
        let rdm = to_rdm(&frame_from(s, k, l), &gate).unwrap();
        let col = (v0 + l / 2) % l;
        for r in 0..k {
            for d in 0..l {
                let expect = if r == u0 && d == col { 20.0 } else { 0.0 };
                assert!((rdm.at(r, d) - expect).abs() < 1e-9, "cell ({r},{d})");
            }
        }
    }

    #[test]
    fn empty_range_selection_errors() {
        let f = frame_from(vec![Complex64::new(1.0, 0.0); 16], 4, 4);
        assert!(to_rdm(&f, &RangeGate { bins: 2..2, bin_spacing_m: 1.0 }).is_err());
        assert!(to_rdm(&f, &RangeGate { bins: 2..5, bin_spacing_m: 1.0 }).is_err());
    }

    #[test]
    fn range_gate_from_meters() {
        // 380 bins at 0.025 m cover 0.5 m to 9.975 m
        let g = RangeGate::from_meters(0.5, 9.99, 0.025, 512).unwrap();
        assert_eq!(g.len(), 380);
        assert_eq!(g.bins.start, 20);
    }

    #[test]
    fn denoise_constant_is_identity() {
        let rdm = RangeDopplerMap::with_default_axes(vec![-40.0; 20], 4, 5).unwrap();
        let out = denoise_rdm(&rdm, &DenoiseConfig { percentile: 75.0, margin_db: 6.0 }).unwrap();
        assert_eq!(out, rdm);
    }

    #[test]
    fn denoise_keeps_peak_and_flattens_background() {
        let mut grid = vec![-40.0; 8 * 4];
        grid[2 * 4 + 1] = 20.0;
        // small ripple on the background
        grid[5 * 4 + 1] = -38.0;
        grid[6 * 4 + 3] = -41.0;
        let rdm = RangeDopplerMap::with_default_axes(grid, 8, 4).unwrap();
        let out = denoise_rdm(&rdm, &DenoiseConfig::default()).unwrap();
        assert_eq!(out.at(2, 1), 20.0);
        // column 1 sorted: six -40, -38, 20; rank 0.75 * 7 = 5.25 -> -39.5
        let floors = [-40.0, -39.5, -40.0, -40.0];
        for r in 0..8 {
            for d in 0..4 {
                if (r, d) != (2, 1) {
                    assert_eq!(out.at(r, d), floors[d], "cell ({r},{d})");
                }
            }
        }
    }

    #[test]
    fn denoise_median_clamp() {
        // one column: [1, 5, 3, 2, 4]; median 3
        let rdm = RangeDopplerMap::with_default_axes(vec![1.0, 5.0, 3.0, 2.0, 4.0], 5, 1).unwrap();
        let out = denoise_rdm(&rdm, &DenoiseConfig { percentile: 50.0, margin_db: 0.0 }).unwrap();
        assert_eq!(out.magnitude_db, vec![3.0, 5.0, 3.0, 3.0, 4.0]);
        assert!(denoise_rdm(&rdm, &DenoiseConfig { percentile: 100.0, margin_db: 0.0 }).is_err());
    }

    #[test]
    fn suppression_cases() {
        let rdm = RangeDopplerMap::with_default_axes((0..24).map(|v| v as f64).collect(), 3, 8).unwrap();
        assert_eq!(suppress_zero_doppler(&rdm, 0.0, 2).unwrap(), rdm);

        let out = suppress_zero_doppler(&rdm, 30.0, 0).unwrap();
        for r in 0..3 {
            for d in 0..8 {
                let drop = if d == 4 { 30.0 } else { 0.0 };
                assert_eq!(out.at(r, d), rdm.at(r, d) - drop);
            }
        }

        let flat = RangeDopplerMap::with_default_axes(vec![0.0; 20], 2, 10).unwrap();
        let out = suppress_zero_doppler(&flat, 12.0, 2).unwrap();
        for r in 0..2 {
            for d in 0..10 {
                let expect = if (3..=7).contains(&d) { -12.0 } else { 0.0 };
                assert_eq!(out.at(r, d), expect);
            }
        }
        assert!(suppress_zero_doppler(&flat, 12.0, 5).is_err());
    }

    #[test]
    fn profile_sums_over_range() {
        let rdm = RangeDopplerMap::with_default_axes(vec![1.0; 6], 2, 3).unwrap();
        assert_eq!(doppler_profile(&rdm), vec![2.0, 2.0, 2.0]);

        let mut grid = vec![0.0; 380 * 16];
        grid[100 * 16 + 7] = 10.0;
        let rdm = RangeDopplerMap::with_default_axes(grid, 380, 16).unwrap();
        let p = doppler_profile(&rdm);
        for (d, v) in p.iter().enumerate() {
            assert_eq!(*v, if d == 7 { 10.0 } else { 0.0 });
        }
    }

    #[test]
    fn tds_assembly() {
        let p = vec![1.0, 2.0, 3.0];
        let tds = build_tds(std::slice::from_ref(&p), 15.0).unwrap();
        assert_eq!(tds.len(), 1);
        assert_eq!(tds.column(0), &p[..]);

        let many: Vec<Vec<f64>> = (0..45).map(|i| vec![i as f64; 4]).collect();
        assert_eq!(build_tds(&many, 15.0).unwrap().len(), 45);

        let mut rev = many.clone();
        rev.reverse();
        let tds = build_tds(&rev, 15.0).unwrap();
        assert_eq!(tds.column(0), &many[44][..]);

        assert!(build_tds(&[vec![1.0], vec![1.0, 2.0]], 15.0).is_err());
        assert!(build_tds(&[], 15.0).is_err());
    }

    #[test]
    fn window_slicing() {
        let tds = |n: usize| build_tds(&vec![vec![0.0; 3]; n], 15.0).unwrap();
        assert_eq!(slice_windows(&tds(45), 45, 1).unwrap().len(), 1);
        let w = slice_windows(&tds(100), 45, 45).unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.iter().all(|w| w.len() == 45));
        assert!(slice_windows(&tds(44), 45, 1).unwrap().is_empty());
        assert_eq!(window_starts(100, 45, 45), vec![0, 45]);
    }
}
