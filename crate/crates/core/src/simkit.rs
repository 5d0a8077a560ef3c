//! Point-scatterer FMCW pedestrian simulator.
//!
//! Each scatterer contributes an ideal dechirped tone
//!
//! ```text
//! s(k, l) += a * exp(j (phi0 + 2 pi (u_r k / K + u_d l / L)))
//! ```
//!
//! where `u_r = 2 R B / c` is its fractional range bin (beat frequency times
//! chirp duration), `u_d = 2 v L T_c / lambda` its fractional Doppler bin, and
//! `phi0 = -4 pi R / lambda` the carrier phase. Complex white Gaussian noise
//! with per-sample power `10^(-snr_db / 10)` is added on top. Range bins are
//! `c / 2B` apart; Doppler bins are `lambda / (2 L T_c)` m/s apart and alias
//! beyond `+-lambda / (4 T_c)`.
//!
//! A pedestrian is a torso moving at constant radial speed plus two limb
//! scatterers whose radial velocity is `v + A sin(2 pi f t +- phase)`. The
//! walker makes repeated passes through a range lane: when the torso leaves
//! the lane it re-enters at the other end, so radial velocity stays constant
//! for the whole recording.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radarproc::{RadarFrame, RangeGate};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadarParams {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub chirp_s: f64,
    pub fast_time: usize,
    pub chirps: usize,
    pub frame_rate: f64,
    /// Per-sample SNR for a unit-amplitude scatterer; `None` disables noise.
    pub snr_db: Option<f64>,
}

impl Default for RadarParams {
    fn default() -> Self {
        Self {
            carrier_hz: 24.0e9,
            bandwidth_hz: 1.0e9,
            chirp_s: 780.0e-6,
            fast_time: 64,
            chirps: 64,
            frame_rate: 15.0,
            snr_db: Some(0.0),
        }
    }
}

impl RadarParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.carrier_hz, self.bandwidth_hz, self.chirp_s, self.frame_rate];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.fast_time < 2 || self.chirps < 2 {
            return Err(Error::InvalidConfig("radar parameters must be positive (K, L >= 2)".into()));
        }
        if self.frame_rate * self.chirps as f64 * self.chirp_s > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "{} chirps of {} s do not fit in a frame at {} fps",
                self.chirps, self.chirp_s, self.frame_rate
            )));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn range_bin_m(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth_hz)
    }

    pub fn max_range_m(&self) -> f64 {
        self.fast_time as f64 * self.range_bin_m()
    }

    pub fn velocity_bin_mps(&self) -> f64 {
        self.wavelength() / (2.0 * self.chirps as f64 * self.chirp_s)
    }

    pub fn max_velocity_mps(&self) -> f64 {
        self.wavelength() / (4.0 * self.chirp_s)
    }

    /// Fractional range bin of a target at `range_m`.
    pub fn range_bin(&self, range_m: f64) -> f64 {
        range_m / self.range_bin_m()
    }

    /// Fractional Doppler bin of a target moving at `velocity_mps`.
    pub fn doppler_bin(&self, velocity_mps: f64) -> f64 {
        velocity_mps / self.velocity_bin_mps()
    }

    /// Gate over `[min_m, max_m]` using this radar's bin spacing.
    pub fn range_gate(&self, min_m: f64, max_m: f64) -> Result<RangeGate> {
        RangeGate::from_meters(min_m, max_m, self.range_bin_m(), self.fast_time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub amplitude: f64,
}

/// One frame of the scene; `rng` supplies noise when the radar has an SNR.
pub fn synth_frame(
    radar: &RadarParams,
    scene: &[Scatterer],
    frame_index: u64,
    rng: &mut ChaCha8Rng,
) -> Result<RadarFrame> {
    radar.validate()?;
    let (k, l) = (radar.fast_time, radar.chirps);
    let mut samples = vec![Complex64::new(0.0, 0.0); k * l];
    let mut aliased = false;
    let lambda = radar.wavelength();

    let mut fast = vec![Complex64::new(0.0, 0.0); k];
    let mut slow = vec![Complex64::new(0.0, 0.0); l];
    for s in scene {
        if !(s.range_m >= 0.0 && s.range_m < radar.max_range_m()) {
            return Err(Error::input(format!(
                "scatterer at {} m outside unambiguous range {} m",
                s.range_m,
                radar.max_range_m()
            )));
        }
        let ur = radar.range_bin(s.range_m);
        let ud = radar.doppler_bin(s.velocity_mps);
        if ud.abs() >= l as f64 / 2.0 {
            aliased = true;
        }
        let phi0 = -4.0 * PI * s.range_m / lambda;
        for (kk, slot) in fast.iter_mut().enumerate() {
            *slot = Complex64::from_polar(s.amplitude, phi0 + 2.0 * PI * ur * kk as f64 / k as f64);
        }
        for (ll, slot) in slow.iter_mut().enumerate() {
            *slot = Complex64::from_polar(1.0, 2.0 * PI * ud * ll as f64 / l as f64);
        }
        for (row, a) in samples.chunks_exact_mut(l).zip(&fast) {
            for (cell, b) in row.iter_mut().zip(&slow) {
                *cell += a * b;
            }
        }
    }

    if let Some(snr) = radar.snr_db {
        let sigma = (10f64.powf(-snr / 10.0) / 2.0).sqrt();
        for cell in &mut samples {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            *cell += Complex64::new(re * sigma, im * sigma);
        }
    }

    let mut frame = RadarFrame::new(samples, k, l, frame_index, radar.frame_rate)?;
    frame.doppler_aliased = aliased;
    Ok(frame)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianProfile {
    pub label: usize,
    /// Torso range at `t = 0`.
    pub base_range_m: f64,
    /// Torso range rate; positive moves away from the radar.
    pub radial_speed_mps: f64,
    pub gait_freq_hz: f64,
    pub limb_amplitude_mps: f64,
    /// Reflectivity of torso, first limb and second limb.
    pub reflectivity: [f64; 3],
    /// Limb phase offset; the limbs run at `+phase` and `-phase`.
    pub limb_phase_rad: f64,
    /// Range lane `[min, max)` the walker wraps within.
    pub lane_m: (f64, f64),
    pub rng_seed: u64,
}

impl PedestrianProfile {
    /// Desk-scale walker classes with distinct gait frequency and speed.
    pub fn preset(label: usize, rng_seed: u64) -> Self {
        let (speed, freq, amp) = match label % 3 {
            0 => (0.8, 0.8, 1.2),
            1 => (1.2, 1.0, 1.5),
            _ => (1.6, 1.25, 1.7),
        };
        Self {
            label,
            base_range_m: 2.0 + label as f64 * 1.3,
            radial_speed_mps: speed,
            gait_freq_hz: freq,
            limb_amplitude_mps: amp,
            reflectivity: [1.0, 0.5, 0.4],
            limb_phase_rad: PI / 6.0,
            lane_m: (1.0, 7.5),
            rng_seed,
        }
    }

    pub fn gait_period_s(&self) -> f64 {
        1.0 / self.gait_freq_hz
    }

    pub fn validate(&self, radar: &RadarParams) -> Result<()> {
        if !(0.5..=2.0).contains(&self.gait_freq_hz) {
            return Err(Error::InvalidConfig(format!(
                "gait frequency {} Hz outside [0.5, 2.0]",
                self.gait_freq_hz
            )));
        }
        if self.radial_speed_mps.abs() >= 3.0 || self.limb_amplitude_mps.abs() >= 3.0 {
            return Err(Error::InvalidConfig("pedestrian speeds must stay below 3 m/s".into()));
        }
        let (lo, hi) = self.lane_m;
        if !(lo >= 0.0 && hi > lo && hi < radar.max_range_m()) {
            return Err(Error::InvalidConfig(format!(
                "lane {lo}-{hi} m must lie inside the radar range {} m",
                radar.max_range_m()
            )));
        }
        if self.reflectivity.iter().any(|r| *r < 0.0) {
            return Err(Error::InvalidConfig("reflectivity weights must be >= 0".into()));
        }
        Ok(())
    }

    pub fn torso_range(&self, t: f64) -> f64 {
        let (lo, hi) = self.lane_m;
        lo + (self.base_range_m - lo + self.radial_speed_mps * t).rem_euclid(hi - lo)
    }

    /// Torso and limb scatterers at time `t`.
    pub fn scatterers(&self, t: f64) -> [Scatterer; 3] {
        let r0 = self.torso_range(t);
        let v = self.radial_speed_mps;
        let w = 2.0 * PI * self.gait_freq_hz;
        let limb = |sign: f64, amplitude: f64| {
            let phase = w * t + sign * self.limb_phase_rad;
            Scatterer {
                // integral of A sin(w t + phase), centered on the torso
                range_m: r0 - self.limb_amplitude_mps / w * phase.cos(),
                velocity_mps: v + self.limb_amplitude_mps * phase.sin(),
                amplitude,
            }
        };
        [
            Scatterer {
                range_m: r0,
                velocity_mps: v,
                amplitude: self.reflectivity[0],
            },
            limb(1.0, self.reflectivity[1]),
            limb(-1.0, self.reflectivity[2]),
        ]
    }
}

/// Frames of one walker plus its ground truth.
#[derive(Debug, Clone)]
pub struct PedestrianRecording {
    pub profile: PedestrianProfile,
    pub frames: Vec<RadarFrame>,
    pub torso_doppler_bin: f64,
    pub gait_period_s: f64,
}

impl PedestrianRecording {
    /// Sidecar `key=value` ground truth.
    pub fn metadata(&self) -> BTreeMap<String, String> {
        let p = &self.profile;
        let mut m = BTreeMap::new();
        m.insert("label".into(), p.label.to_string());
        m.insert("seed".into(), p.rng_seed.to_string());
        m.insert("gait_freq".into(), p.gait_freq_hz.to_string());
        m.insert("gait_period".into(), self.gait_period_s.to_string());
        m.insert("torso_speed".into(), p.radial_speed_mps.to_string());
        m.insert("limb_amplitude".into(), p.limb_amplitude_mps.to_string());
        m.insert("torso_doppler_bin".into(), self.torso_doppler_bin.to_string());
        m.insert("frames".into(), self.frames.len().to_string());
        m
    }
}

pub fn simulate_pedestrian(
    profile: &PedestrianProfile,
    radar: &RadarParams,
    duration_s: f64,
) -> Result<PedestrianRecording> {
    radar.validate()?;
    profile.validate(radar)?;
    let n = (duration_s * radar.frame_rate).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.rng_seed);
    let frames = (0..n)
        .map(|i| {
            let t = i as f64 / radar.frame_rate;
            synth_frame(radar, &profile.scatterers(t), i as u64, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PedestrianRecording {
        profile: profile.clone(),
        frames,
        torso_doppler_bin: radar.doppler_bin(profile.radial_speed_mps),
        gait_period_s: profile.gait_period_s(),
    })
}

/// One recording per profile, each `duration_s * frame_rate` frames long.
pub fn make_dataset(
    profiles: &[PedestrianProfile],
    radar: &RadarParams,
    duration_s: f64,
) -> Result<Vec<PedestrianRecording>> {
    if profiles.len() < 2 {
        return Err(Error::InvalidConfig("a dataset needs at least two pedestrians".into()));
    }
    profiles
        .iter()
        .map(|p| simulate_pedestrian(p, radar, duration_s))
        .collect()
}
