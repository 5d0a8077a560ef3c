//! End-to-end runs: simulated walkers to range-Doppler maps, spectrogram
//! windows and gait features, optional GAN augmentation, then classifier
//! training and evaluation.
//!
//! Each walker's frames are split in time: the first `train_fraction` of the
//! recording is the training block, the rest the test block. Windows never
//! cross the split, so overlapping windows cannot leak between the two.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{features_for_samples, FeatureWindowConfig, GaitFeatures};
use crate::formats::{decode_metadata, encode_metadata, read_tds, write_atomic, write_tds};
use crate::mcl::{evaluate, train_mcl_with_test, Evaluation, MclConfig, MclModel, MclSample, Origin};
use crate::radarproc::{
    denoise_rdm, suppress_zero_doppler, tds_from_rdms, to_rdm, window_starts, DenoiseConfig, RadarFrame,
    RangeDopplerMap, RangeGate, SuppressConfig, TimeDopplerSpectrogram,
};
use crate::rdgan::{generate_rdm_sequence, train_gan, EpochLosses, GanArch, GanTrainConfig, GenerationMode, Rdgan};
use crate::simkit::{make_dataset, PedestrianProfile, PedestrianRecording, RadarParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub classes: usize,
    pub duration_s: f64,
    /// Kept range interval in meters.
    pub range_min_m: f64,
    pub range_max_m: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            classes: 3,
            duration_s: 60.0,
            range_min_m: 0.0,
            range_max_m: 9.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcessingConfig {
    pub denoise: bool,
    pub denoise_params: DenoiseConfig,
    pub suppress: bool,
    pub suppress_params: SuppressConfig,
}

impl Default for ProcessingConfig {
    fn default() -> Self {
        Self {
            denoise: true,
            denoise_params: DenoiseConfig::default(),
            suppress: true,
            suppress_params: SuppressConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    /// Frames per classifier sample.
    pub tds_width: usize,
    pub stride: usize,
    pub train_fraction: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            tds_width: 45,
            stride: 5,
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub enabled: bool,
    /// Generated samples per real training sample, per class.
    pub ratio: f64,
    /// GAN training uses at most this many leading training frames per class;
    /// generation still runs over the whole training block.
    pub gan_frames: Option<usize>,
    pub gan: GanTrainConfig,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            ratio: 0.8,
            gan_frames: Some(240),
            gan: GanTrainConfig {
                epochs: 30,
                learning_rate: 0.005,
                batch_size: Some(16),
                arch: GanArch {
                    generator_channels: vec![8, 8],
                    ..GanArch::default()
                },
                ..GanTrainConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub radar: RadarParams,
    pub dataset: DatasetConfig,
    pub processing: ProcessingConfig,
    pub windows: WindowConfig,
    pub features: FeatureWindowConfig,
    pub augmentation: AugmentConfig,
    pub mcl: MclConfig,
}

impl Default for PipelineConfig {
    /// Desk-scale run: three walkers, 16 x 32 maps, small networks.
    fn default() -> Self {
        let radar = RadarParams {
            bandwidth_hz: 250.0e6,
            fast_time: 16,
            chirps: 32,
            ..RadarParams::default()
        };
        Self {
            seed: 1,
            dataset: DatasetConfig::default(),
            processing: ProcessingConfig::default(),
            windows: WindowConfig::default(),
            features: FeatureWindowConfig {
                fallback_period_s: Some(1.0),
                ..FeatureWindowConfig::default()
            },
            augmentation: AugmentConfig::default(),
            mcl: MclConfig::desk(3, radar.chirps),
            radar,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        self.features.validate()?;
        self.mcl.validate()?;
        let w = &self.windows;
        if w.tds_width == 0 || w.stride == 0 {
            return Err(Error::InvalidConfig("window width and stride must be >= 1".into()));
        }
        if self.features.z < w.tds_width {
            return Err(Error::InvalidConfig(format!(
                "feature window Z = {} is shorter than the sample width {}",
                self.features.z, w.tds_width
            )));
        }
        if !(w.train_fraction > 0.0 && w.train_fraction < 1.0) {
            return Err(Error::InvalidConfig("train fraction must lie in (0, 1)".into()));
        }
        if self.dataset.classes < 2 || self.mcl.classes != self.dataset.classes {
            return Err(Error::InvalidConfig(format!(
                "dataset has {} classes, classifier expects {}",
                self.dataset.classes, self.mcl.classes
            )));
        }
        if self.mcl.tds_width != w.tds_width || self.mcl.doppler_bins != self.radar.chirps {
            return Err(Error::InvalidConfig(format!(
                "classifier expects {}x{} windows, pipeline makes {}x{}",
                self.mcl.tds_width, self.mcl.doppler_bins, w.tds_width, self.radar.chirps
            )));
        }
        if self.augmentation.enabled {
            self.augmentation.gan.validate()?;
            if !(self.augmentation.ratio > 0.0) {
                return Err(Error::InvalidConfig("augmentation ratio must be > 0".into()));
            }
        }
        let frames = (self.dataset.duration_s * self.radar.frame_rate).round() as usize;
        let (train, test) = split_lengths(frames, w.train_fraction);
        if test < self.features.z.max(w.tds_width) || train < self.features.z.max(w.tds_width) {
            return Err(Error::InvalidConfig(format!(
                "{frames} frames split {train}/{test} leave a block shorter than Z = {}",
                self.features.z
            )));
        }
        Ok(())
    }

    pub fn range_gate(&self) -> Result<RangeGate> {
        let r = &self.radar;
        let lo = (self.dataset.range_min_m / r.range_bin_m()).ceil().max(0.0) as usize;
        let hi = ((self.dataset.range_max_m / r.range_bin_m()).floor() as usize).min(r.fast_time);
        if lo >= hi {
            return Err(Error::InvalidConfig(format!(
                "range gate {}-{} m keeps no bins",
                self.dataset.range_min_m, self.dataset.range_max_m
            )));
        }
        Ok(RangeGate {
            bins: lo..hi,
            bin_spacing_m: r.range_bin_m(),
        })
    }

    /// Walker profile of class `label` for this run's seed.
    pub fn profile(&self, label: usize) -> PedestrianProfile {
        PedestrianProfile::preset(label, derive_seed(self.seed, "walker", label))
    }
}

/// Stream-separated seed for component `what` of item `index`.
pub fn derive_seed(seed: u64, what: &str, index: usize) -> u64 {
    // FNV-1a over the tag, mixed with seed and index
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in what.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
    }
    h ^= seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    h = h.wrapping_mul(0x0100_0000_01b3) ^ index as u64;
    h.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// `(train, test)` frame counts of an `n`-frame recording.
pub fn split_lengths(n: usize, train_fraction: f64) -> (usize, usize) {
    let train = ((n as f64) * train_fraction).round() as usize;
    let train = train.min(n);
    (train, n - train)
}

pub fn process_frames(frames: &[RadarFrame], gate: &RangeGate, cfg: &ProcessingConfig) -> Result<Vec<RangeDopplerMap>> {
    frames
        .iter()
        .map(|f| {
            let mut m = to_rdm(f, gate)?;
            if cfg.denoise {
                m = denoise_rdm(&m, &cfg.denoise_params)?;
            }
            if cfg.suppress {
                m = suppress_zero_doppler(&m, cfg.suppress_params.atten_db, cfg.suppress_params.half_width)?;
            }
            Ok(m)
        })
        .collect()
}

/// Classifier samples from an ordered map sequence of one walker.
pub fn samples_from_rdms(
    rdms: &[RangeDopplerMap],
    frame_rate: f64,
    label: usize,
    origin: Origin,
    windows: &WindowConfig,
    features: &FeatureWindowConfig,
) -> Result<Vec<MclSample>> {
    let tds = tds_from_rdms(rdms, frame_rate)?;
    samples_from_tds(&tds, label, origin, windows, features)
}

pub fn samples_from_tds(
    tds: &TimeDopplerSpectrogram,
    label: usize,
    origin: Origin,
    windows: &WindowConfig,
    features: &FeatureWindowConfig,
) -> Result<Vec<MclSample>> {
    let starts = window_starts(tds.len(), windows.tds_width, windows.stride);
    let feats = features_for_samples(tds, &starts, windows.tds_width, features)?;
    starts
        .iter()
        .zip(feats)
        .map(|(&s, features)| {
            Ok(MclSample {
                tds_window: tds.window(s, windows.tds_width)?.as_slice().to_vec(),
                features,
                label,
                origin,
            })
        })
        .collect()
}

/// `count` items spread evenly over `0..available`.
pub fn even_subset(available: usize, count: usize) -> Vec<usize> {
    let count = count.min(available);
    (0..count).map(|i| i * available / count).collect()
}

#[derive(Debug, Clone)]
pub struct ClassBlocks {
    pub label: usize,
    pub train: Vec<RangeDopplerMap>,
    pub test: Vec<RangeDopplerMap>,
}

/// Simulated recordings of every class.
pub fn simulate(cfg: &PipelineConfig) -> Result<Vec<PedestrianRecording>> {
    let profiles: Vec<PedestrianProfile> = (0..cfg.dataset.classes).map(|c| cfg.profile(c)).collect();
    make_dataset(&profiles, &cfg.radar, cfg.dataset.duration_s)
}

/// Processed maps of each recording, split into train and test blocks.
pub fn prepare_blocks(cfg: &PipelineConfig, recordings: &[PedestrianRecording]) -> Result<Vec<ClassBlocks>> {
    let gate = cfg.range_gate()?;
    recordings
        .iter()
        .map(|rec| {
            let mut rdms = process_frames(&rec.frames, &gate, &cfg.processing)?;
            let (train, _) = split_lengths(rdms.len(), cfg.windows.train_fraction);
            let test = rdms.split_off(train);
            Ok(ClassBlocks {
                label: rec.profile.label,
                train: rdms,
                test,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Augmentation {
    pub samples: Vec<MclSample>,
    pub gan: Rdgan,
    pub gan_history: Vec<EpochLosses>,
}

/// Trains one GAN on a class's training maps and turns its one-step
/// predictions into `round(ratio * real_count)` generated samples.
pub fn augment_class(cfg: &PipelineConfig, block: &ClassBlocks, real_count: usize) -> Result<Augmentation> {
    let gan_cfg = GanTrainConfig {
        rng_seed: derive_seed(cfg.seed, "gan", block.label),
        ..cfg.augmentation.gan.clone()
    };
    let n = cfg.augmentation.gan_frames.map_or(block.train.len(), |m| m.min(block.train.len()));
    let run = train_gan(&block.train[..n], &gan_cfg)?;
    let generated = generate_rdm_sequence(&run.model, &block.train, GenerationMode::OneStep)?;
    let all = samples_from_rdms(
        &generated,
        cfg.radar.frame_rate,
        block.label,
        Origin::Generated,
        &cfg.windows,
        &cfg.features,
    )?;
    let want = (cfg.augmentation.ratio * real_count as f64).round() as usize;
    let samples = even_subset(all.len(), want).into_iter().map(|i| all[i].clone()).collect();
    Ok(Augmentation {
        samples,
        gan: run.model,
        gan_history: run.history,
    })
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<MclSample>,
    pub generated: Vec<MclSample>,
    pub test: Vec<MclSample>,
    pub gans: Vec<Augmentation>,
}

pub fn build_dataset(cfg: &PipelineConfig) -> Result<Dataset> {
    cfg.validate()?;
    let recordings = simulate(cfg)?;
    let blocks = prepare_blocks(cfg, &recordings)?;
    let mut ds = Dataset {
        train: Vec::new(),
        generated: Vec::new(),
        test: Vec::new(),
        gans: Vec::new(),
    };
    let rate = cfg.radar.frame_rate;
    for block in &blocks {
        let train = samples_from_rdms(&block.train, rate, block.label, Origin::Real, &cfg.windows, &cfg.features)?;
        let test = samples_from_rdms(&block.test, rate, block.label, Origin::Real, &cfg.windows, &cfg.features)?;
        if cfg.augmentation.enabled {
            let aug = augment_class(cfg, block, train.len())?;
            ds.generated.extend(aug.samples.iter().cloned());
            ds.gans.push(aug);
        }
        ds.train.extend(train);
        ds.test.extend(test);
    }
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub epoch: usize,
    pub loss_train: f64,
    pub loss_test: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub train_real: usize,
    pub train_generated: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub per_class: Vec<Option<f64>>,
    pub confusion: Vec<Vec<usize>>,
    pub loss_history: Vec<LossPoint>,
    pub samples: SampleCounts,
    pub seed: u64,
    /// Final-epoch GAN losses per class, when augmenting.
    pub gan_final: Vec<EpochLosses>,
}

impl Metrics {
    pub fn new(eval: &Evaluation, history: &[crate::mcl::EpochStats], counts: SampleCounts, seed: u64) -> Self {
        Self {
            accuracy: eval.accuracy,
            per_class: eval.per_class_accuracy.clone(),
            confusion: eval.confusion.clone(),
            loss_history: history
                .iter()
                .map(|h| LossPoint {
                    epoch: h.epoch,
                    loss_train: h.loss_train,
                    loss_test: h.loss_test,
                })
                .collect(),
            samples: counts,
            seed,
            gan_final: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("metrics JSON: {e}")))
    }

    /// `epoch,loss_train,loss_test` with an empty cell for missing test loss.
    pub fn loss_csv(&self) -> String {
        let mut s = String::from("epoch,loss_train,loss_test\n");
        for p in &self.loss_history {
            let test = p.loss_test.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{}\n", p.epoch, p.loss_train, test));
        }
        s
    }

    pub fn per_class_csv(&self) -> String {
        let mut s = String::from("class,accuracy,samples\n");
        for (i, (acc, row)) in self.per_class.iter().zip(&self.confusion).enumerate() {
            let acc = acc.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!("{i},{acc},{}\n", row.iter().sum::<usize>()));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub model: MclModel,
    pub dataset: Dataset,
}

/// Trains on real (plus generated) training samples and evaluates on the
/// real test samples.
pub fn train_and_evaluate(cfg: &PipelineConfig, dataset: Dataset) -> Result<RunOutput> {
    let mut train = dataset.train.clone();
    train.extend(dataset.generated.iter().cloned());
    let mcl_cfg = MclConfig {
        train: crate::nn::TrainConfig {
            rng_seed: derive_seed(cfg.seed, "mcl", 0),
            ..cfg.mcl.train.clone()
        },
        ..cfg.mcl.clone()
    };
    let run = train_mcl_with_test(&train, Some(&dataset.test), &mcl_cfg)?;
    let eval = evaluate(&run.model, &dataset.test)?;
    let counts = SampleCounts {
        train_real: dataset.train.len(),
        train_generated: dataset.generated.len(),
        test: dataset.test.len(),
    };
    let mut metrics = Metrics::new(&eval, &run.history, counts, cfg.seed);
    metrics.gan_final = dataset
        .gans
        .iter()
        .filter_map(|a| a.gan_history.last().copied())
        .collect();
    Ok(RunOutput {
        metrics,
        model: run.model,
        dataset,
    })
}

pub fn run(cfg: &PipelineConfig) -> Result<RunOutput> {
    let dataset = build_dataset(cfg)?;
    train_and_evaluate(cfg, dataset)
}

/// Writes a sample set as `windows.tds` (all windows stacked in time),
/// `features.csv` and `samples.meta`.
pub fn write_samples(dir: &Path, samples: &[MclSample], tds_width: usize, frame_rate: f64) -> Result<()> {
    let first = samples.first().ok_or_else(|| Error::input("cannot write an empty sample set"))?;
    if tds_width == 0 || first.tds_window.len() % tds_width != 0 {
        return Err(Error::input("sample windows do not divide into the given width"));
    }
    let d = first.tds_window.len() / tds_width;
    if samples.iter().any(|s| s.tds_window.len() != tds_width * d) {
        return Err(Error::input("sample windows differ in size"));
    }
    fs::create_dir_all(dir)?;
    let data: Vec<f64> = samples.iter().flat_map(|s| s.tds_window.iter().copied()).collect();
    let tds = TimeDopplerSpectrogram::from_rows(data, samples.len() * tds_width, d, frame_rate)?;
    write_tds(&dir.join("windows.tds"), &tds)?;
    let rows: Vec<(usize, usize, GaitFeatures)> = samples.iter().enumerate().map(|(i, s)| (i, s.label, s.features)).collect();
    write_atomic(&dir.join("features.csv"), crate::features::features_csv(&rows).as_bytes())?;
    let origin = |o: Origin| match o {
        Origin::Real => "real",
        Origin::Generated => "generated",
    };
    let mut meta = BTreeMap::new();
    meta.insert("count".to_string(), samples.len().to_string());
    meta.insert("tds_width".to_string(), tds_width.to_string());
    meta.insert("doppler_bins".to_string(), d.to_string());
    meta.insert("frame_rate".to_string(), frame_rate.to_string());
    let origins: Vec<&str> = samples.iter().map(|s| origin(s.origin)).collect();
    meta.insert("origins".to_string(), origins.join(","));
    write_atomic(&dir.join("samples.meta"), encode_metadata(&meta).as_bytes())
}

/// Samples read back from a directory, with their window geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub tds_width: usize,
    pub doppler_bins: usize,
    pub frame_rate: f64,
    pub samples: Vec<MclSample>,
}

pub fn read_samples(dir: &Path) -> Result<SampleSet> {
    let meta = decode_metadata(&fs::read_to_string(dir.join("samples.meta"))?)?;
    let get = |k: &str| -> Result<&String> {
        meta.get(k)
            .ok_or_else(|| Error::Format(format!("samples.meta is missing `{k}`")))
    };
    let parse_usize = |k: &str| -> Result<usize> {
        get(k)?
            .parse()
            .map_err(|_| Error::Format(format!("samples.meta: `{k}` is not an integer")))
    };
    let count = parse_usize("count")?;
    let width = parse_usize("tds_width")?;
    let frame_rate: f64 = get("frame_rate")?
        .parse()
        .map_err(|_| Error::Format("samples.meta: bad frame_rate".into()))?;
    let origins: Vec<Origin> = get("origins")?
        .split(',')
        .map(|o| match o {
            "real" => Ok(Origin::Real),
            "generated" => Ok(Origin::Generated),
            other => Err(Error::Format(format!("unknown sample origin `{other}`"))),
        })
        .collect::<Result<_>>()?;
    let tds = read_tds(&dir.join("windows.tds"), frame_rate)?;
    if tds.len() != count * width || origins.len() != count {
        return Err(Error::Format(format!(
            "sample set declares {count} windows of {width} but holds {} rows",
            tds.len()
        )));
    }
    let features = read_features_csv(&fs::read_to_string(dir.join("features.csv"))?)?;
    if features.len() != count {
        return Err(Error::Format(format!("features.csv has {} rows, expected {count}", features.len())));
    }
    let samples = (0..count)
        .map(|i| {
            Ok(MclSample {
                tds_window: tds.window(i * width, width)?.as_slice().to_vec(),
                features: features[i].1,
                label: features[i].0,
                origin: origins[i],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleSet {
        tds_width: width,
        doppler_bins: tds.doppler_bins(),
        frame_rate,
        samples,
    })
}

/// Parses `sample_id,label,f1,f2,f3,f4` rows into `(label, features)`.
pub fn read_features_csv(text: &str) -> Result<Vec<(usize, GaitFeatures)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "sample_id,label,f1,f2,f3,f4" => {}
        _ => return Err(Error::Format("feature CSV must start with `sample_id,label,f1,f2,f3,f4`".into())),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let bad = || Error::Format(format!("feature CSV row {}: `{line}`", n + 1));
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 6 {
                return Err(bad());
            }
            let label = cells[1].trim().parse().map_err(|_| bad())?;
            let mut v = [0.0; 4];
            for (slot, c) in v.iter_mut().zip(&cells[2..]) {
                *slot = c.trim().parse().map_err(|_| bad())?;
            }
            Ok((label, GaitFeatures::from_array(v)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_consistent_and_round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        let back = PipelineConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.mcl.cn_inputs(), 45 * 32 + 4);
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg = PipelineConfig::from_toml("seed = 9\n[windows]\nstride = 9\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.windows.stride, 9);
        assert_eq!(cfg.windows.tds_width, 45);
        assert!(PipelineConfig::from_toml("[features]\nz = 10\n").is_err());
        assert!(PipelineConfig::from_toml("seed = \"x\"").is_err());
    }

    #[test]
    fn split_and_subset_counts() {
        assert_eq!(split_lengths(900, 0.8), (720, 180));
        assert_eq!(even_subset(10, 4), vec![0, 2, 5, 7]);
        assert_eq!(even_subset(3, 5), vec![0, 1, 2]);
        assert!(even_subset(0, 0).is_empty());
    }

    #[test]
    fn derived_seeds_differ_by_stream_and_index() {
        let a = derive_seed(1, "gan", 0);
        assert_ne!(a, derive_seed(1, "gan", 1));
        assert_ne!(a, derive_seed(1, "walker", 0));
        assert_ne!(a, derive_seed(2, "gan", 0));
        assert_eq!(a, derive_seed(1, "gan", 0));
    }

    #[test]
    fn sample_sets_round_trip_through_files() {
        let samples: Vec<MclSample> = (0..3)
            .map(|i| MclSample {
                tds_window: (0..12).map(|v| (v + i) as f64 * 0.5).collect(),
                features: GaitFeatures::from_array([i as f64, 4.0, 2.0, 1.25]),
                label: i % 2,
                origin: if i == 2 { Origin::Generated } else { Origin::Real },
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        write_samples(dir.path(), &samples, 4, 15.0).unwrap();
        let back = read_samples(dir.path()).unwrap();
        assert_eq!((back.tds_width, back.doppler_bins), (4, 3));
        assert_eq!(back.samples, samples);
        assert!(read_features_csv("id,label\n").is_err());
    }

    #[test]
    fn samples_cover_only_whole_windows() {
        let cfg = PipelineConfig::default();
        let rows = 200;
        let d = 8;
        let data: Vec<f64> = (0..rows * d).map(|i| if i % d == 5 { 0.0 } else { -30.0 }).collect();
        let tds = TimeDopplerSpectrogram::from_rows(data, rows, d, 15.0).unwrap();
        let s = samples_from_tds(&tds, 1, Origin::Real, &cfg.windows, &cfg.features).unwrap();
        assert_eq!(s.len(), (rows - 45) / 5 + 1);
        assert!(s.iter().all(|x| x.tds_window.len() == 45 * d && x.label == 1));
        // flat envelope falls back to the configured period
        assert!(s.iter().all(|x| x.features.f4 == 1.0));
    }
}
