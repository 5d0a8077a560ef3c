use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use demcl::features::{features_csv, features_for_samples, FeatureWindowConfig};
use demcl::formats::{
    encode_metadata, read_rdf, read_rdm_sequence, read_tds, write_atomic, write_rdf, write_rdm_sequence, write_tds,
};
use demcl::mcl::{evaluate, train_mcl_with_test, MclConfig, MclModel, MclSample, Origin};
use demcl::pipeline::{
    self, process_frames, read_samples, samples_from_tds, split_lengths, write_samples, LossPoint, Metrics,
    PipelineConfig, ProcessingConfig, SampleCounts, WindowConfig,
};
use demcl::radarproc::{tds_from_rdms, window_starts, DenoiseConfig, RangeGate, SuppressConfig};
use demcl::rdgan::{generate_rdm_sequence, loss_history_csv, train_gan, GanTrainConfig, GenerationMode, Rdgan};
use demcl::simkit::RadarParams;

#[derive(Debug, Parser)]
#[command(name = "demcl", version, about = "Radar pedestrian recognition with GAN augmentation and fused classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the default pipeline config as TOML.
    InitConfig(InitConfigArgs),
    /// Simulate one frame recording per class.
    Simulate(SimulateArgs),
    /// Radar frames to range-Doppler maps.
    Rdm(RdmArgs),
    /// Range-Doppler maps to a time-Doppler spectrogram.
    Tds(TdsArgs),
    /// Gait features for every sample window of a spectrogram.
    Features(FeaturesArgs),
    /// Classifier sample directory from a map sequence.
    Samples(SamplesArgs),
    /// Train one class's GAN on its map sequence.
    GanTrain(GanTrainArgs),
    /// Generate maps with a trained GAN.
    GanGenerate(GanGenerateArgs),
    /// Train the fused classifier on sample directories.
    MclTrain(MclTrainArgs),
    /// Evaluate a classifier and write metrics.
    MclEval(MclEvalArgs),
    /// Export metrics as CSV tables for plotting.
    Report(ReportArgs),
    /// Full pipeline from a config: simulate, process, augment, train, evaluate.
    Run(RunArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct InitConfigArgs {
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Pipeline config; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RdmArgs {
    /// RDF1 frame file.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub denoise: bool,
    #[arg(long, default_value_t = DenoiseConfig::default().percentile)]
    pub percentile: f64,
    #[arg(long, default_value_t = DenoiseConfig::default().margin_db)]
    pub margin_db: f64,
    /// Zero-Doppler attenuation; suppression is off unless given.
    #[arg(long)]
    pub suppress_db: Option<f64>,
    #[arg(long, default_value_t = SuppressConfig::default().half_width)]
    pub suppress_width: usize,
    /// First kept range bin.
    #[arg(long, default_value_t = 0)]
    pub range_start: usize,
    /// One past the last kept range bin; all bins when omitted.
    #[arg(long)]
    pub range_end: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct TdsArgs {
    /// RDM1 map sequence.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 15.0)]
    pub frame_rate: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturesArgs {
    /// TDS1 spectrogram.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Feature window length Z in frames.
    #[arg(long, default_value_t = 165)]
    pub window: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Sample window width in frames.
    #[arg(long, default_value_t = 45)]
    pub width: usize,
    #[arg(long, default_value_t = 5)]
    pub stride: usize,
    #[arg(long, default_value_t = 0)]
    pub label: usize,
    #[arg(long, default_value_t = 15.0)]
    pub frame_rate: f64,
    /// Period used when a window has no detectable limb period.
    #[arg(long)]
    pub fallback_period: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    All,
    Train,
    Test,
}

#[derive(Debug, Args, Serialize)]
pub struct SamplesArgs {
    /// RDM1 map sequence of one walker.
    #[arg(long)]
    pub rdm: PathBuf,
    #[arg(long)]
    pub label: usize,
    #[arg(long, default_value = "real")]
    pub origin: String,
    /// Which time block of the sequence to use.
    #[arg(long, value_enum, default_value_t = Part::All)]
    pub part: Part,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 45)]
    pub width: usize,
    #[arg(long, default_value_t = 5)]
    pub stride: usize,
    #[arg(long, default_value_t = 165)]
    pub window: usize,
    #[arg(long, default_value_t = 15.0)]
    pub frame_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    pub fallback_period: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GanTrainArgs {
    /// RDM1 map sequence of one class.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub label: usize,
    #[arg(long, default_value_t = GanTrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = GanTrainConfig::default().learning_rate)]
    pub lr: f64,
    /// Minibatch size; full batch when omitted.
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GanGenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub seed_frames: PathBuf,
    /// `one-step` or `rollout:N`.
    #[arg(long, default_value = "one-step")]
    pub mode: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MclTrainArgs {
    /// Real sample directories; repeat for several classes.
    #[arg(long, required = true, num_args = 1..)]
    pub real: Vec<PathBuf>,
    /// Generated sample directories.
    #[arg(long, num_args = 1..)]
    pub generated: Vec<PathBuf>,
    /// Pipeline config whose classifier section sizes the model.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MclEvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Test sample directories.
    #[arg(long, required = true, num_args = 1..)]
    pub test: Vec<PathBuf>,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long)]
    pub emit_csv: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Turns GAN augmentation on regardless of the config.
    #[arg(long)]
    pub augment: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::InitConfig(a) => init_config(a),
        Command::Simulate(a) => simulate(a),
        Command::Rdm(a) => rdm(a),
        Command::Tds(a) => tds(a),
        Command::Features(a) => features(a),
        Command::Samples(a) => samples(a),
        Command::GanTrain(a) => gan_train(a),
        Command::GanGenerate(a) => gan_generate(a),
        Command::MclTrain(a) => mcl_train(a),
        Command::MclEval(a) => mcl_eval(a),
        Command::Report(a) => report(a),
        Command::Run(a) => run_pipeline(a),
    }
}

#[derive(Serialize)]
struct Provenance<'a, A: Serialize, C: Serialize> {
    command: &'a str,
    version: &'a str,
    args: &'a A,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a C>,
}

/// Sidecar path recording how `out` was produced: `<dir>/provenance.toml`
/// for directories, `<file>.provenance.toml` otherwise.
fn provenance_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join("provenance.toml")
    } else {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".provenance.toml");
        out.with_file_name(name)
    }
}

fn write_provenance<A: Serialize, C: Serialize>(
    command: &str,
    args: &A,
    config: Option<&C>,
    out: &Path,
    is_dir: bool,
) -> Result<()> {
    let p = Provenance {
        command,
        version: env!("CARGO_PKG_VERSION"),
        args,
        config,
    };
    let text = toml::to_string(&p).context("serializing provenance")?;
    write_atomic(&provenance_path(out, is_dir), text.as_bytes())?;
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            PipelineConfig::from_toml(&text).with_context(|| format!("config {}", p.display()))
        }
    }
}

fn init_config(a: InitConfigArgs) -> Result<()> {
    write_atomic(&a.out, PipelineConfig::default().to_toml().as_bytes())?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let recordings = pipeline::simulate(&cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for rec in &recordings {
        let stem = format!("class_{}", rec.profile.label);
        write_rdf(&a.out.join(format!("{stem}.rdf")), &rec.frames)?;
        write_atomic(&a.out.join(format!("{stem}.meta")), encode_metadata(&rec.metadata()).as_bytes())?;
    }
    write_provenance("simulate", &a, Some(&cfg), &a.out, true)
}

fn rdm(a: RdmArgs) -> Result<()> {
    let frames = read_rdf(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let first = frames.first().context("frame file holds no frames")?;
    let end = a.range_end.unwrap_or(first.fast_time());
    ensure!(
        a.range_start < end && end <= first.fast_time(),
        "range bins {}..{end} outside 0..{}",
        a.range_start,
        first.fast_time()
    );
    let gate = RangeGate {
        bins: a.range_start..end,
        bin_spacing_m: RadarParams::default().range_bin_m(),
    };
    let processing = ProcessingConfig {
        denoise: a.denoise,
        denoise_params: DenoiseConfig {
            percentile: a.percentile,
            margin_db: a.margin_db,
        },
        suppress: a.suppress_db.is_some(),
        suppress_params: SuppressConfig {
            atten_db: a.suppress_db.unwrap_or(0.0),
            half_width: a.suppress_width,
        },
    };
    let maps = process_frames(&frames, &gate, &processing)?;
    write_rdm_sequence(&a.out, &maps)?;
    write_provenance::<_, ()>("rdm", &a, None, &a.out, false)
}

fn tds(a: TdsArgs) -> Result<()> {
    let maps = read_rdm_sequence(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let tds = tds_from_rdms(&maps, a.frame_rate)?;
    write_tds(&a.out, &tds)?;
    write_provenance::<_, ()>("tds", &a, None, &a.out, false)
}

fn features(a: FeaturesArgs) -> Result<()> {
    let tds = read_tds(&a.input, a.frame_rate).with_context(|| format!("reading {}", a.input.display()))?;
    let cfg = FeatureWindowConfig {
        z: a.window,
        fallback_period_s: a.fallback_period,
        ..FeatureWindowConfig::default()
    };
    ensure!(a.width >= 1 && a.stride >= 1, "width and stride must be >= 1");
    let starts = window_starts(tds.len(), a.width, a.stride);
    ensure!(!starts.is_empty(), "spectrogram of {} frames holds no {}-frame window", tds.len(), a.width);
    let feats = features_for_samples(&tds, &starts, a.width, &cfg)?;
    let rows: Vec<_> = feats.into_iter().enumerate().map(|(i, f)| (i, a.label, f)).collect();
    write_atomic(&a.out, features_csv(&rows).as_bytes())?;
    write_provenance::<_, ()>("features", &a, None, &a.out, false)
}

fn parse_origin(s: &str) -> Result<Origin> {
    match s {
        "real" => Ok(Origin::Real),
        "generated" => Ok(Origin::Generated),
        other => bail!("origin must be `real` or `generated`, got `{other}`"),
    }
}

fn samples(a: SamplesArgs) -> Result<()> {
    let maps = read_rdm_sequence(&a.rdm).with_context(|| format!("reading {}", a.rdm.display()))?;
    let (train, _) = split_lengths(maps.len(), a.train_fraction);
    let block = match a.part {
        Part::All => &maps[..],
        Part::Train => &maps[..train],
        Part::Test => &maps[train..],
    };
    ensure!(!block.is_empty(), "selected block holds no maps");
    let tds = tds_from_rdms(block, a.frame_rate)?;
    let windows = WindowConfig {
        tds_width: a.width,
        stride: a.stride,
        train_fraction: a.train_fraction,
    };
    let feats = FeatureWindowConfig {
        z: a.window,
        fallback_period_s: Some(a.fallback_period),
        ..FeatureWindowConfig::default()
    };
    let set = samples_from_tds(&tds, a.label, parse_origin(&a.origin)?, &windows, &feats)?;
    write_samples(&a.out, &set, a.width, a.frame_rate)?;
    write_provenance::<_, ()>("samples", &a, None, &a.out, true)
}

fn gan_train(a: GanTrainArgs) -> Result<()> {
    let maps = read_rdm_sequence(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let cfg = GanTrainConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        batch_size: a.batch,
        rng_seed: a.seed,
        ..GanTrainConfig::default()
    };
    let run = train_gan(&maps, &cfg)?;
    run.model.save(&a.out)?;
    let mut csv = a.out.clone().into_os_string();
    csv.push(".losses.csv");
    write_atomic(Path::new(&csv), loss_history_csv(&run.history).as_bytes())?;
    write_provenance("gan-train", &a, Some(&cfg), &a.out, false)
}

fn gan_generate(a: GanGenerateArgs) -> Result<()> {
    let model = Rdgan::load(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let seeds = read_rdm_sequence(&a.seed_frames).with_context(|| format!("reading {}", a.seed_frames.display()))?;
    let mode: GenerationMode = a.mode.parse()?;
    let maps = generate_rdm_sequence(&model, &seeds, mode)?;
    write_rdm_sequence(&a.out, &maps)?;
    write_provenance::<_, ()>("gan-generate", &a, None, &a.out, false)
}

struct Loaded {
    tds_width: usize,
    doppler_bins: usize,
    samples: Vec<MclSample>,
}

fn load_sample_dirs(dirs: &[PathBuf]) -> Result<Loaded> {
    let mut out: Option<Loaded> = None;
    for dir in dirs {
        let set = read_samples(dir).with_context(|| format!("reading samples {}", dir.display()))?;
        match &mut out {
            None => {
                out = Some(Loaded {
                    tds_width: set.tds_width,
                    doppler_bins: set.doppler_bins,
                    samples: set.samples,
                })
            }
            Some(l) => {
                ensure!(
                    (l.tds_width, l.doppler_bins) == (set.tds_width, set.doppler_bins),
                    "{} holds {}x{} windows, earlier sets {}x{}",
                    dir.display(),
                    set.tds_width,
                    set.doppler_bins,
                    l.tds_width,
                    l.doppler_bins
                );
                l.samples.extend(set.samples);
            }
        }
    }
    out.context("no sample directories given")
}

fn history_path(model: &Path) -> PathBuf {
    let mut p = model.as_os_str().to_owned();
    p.push(".history.csv");
    PathBuf::from(p)
}

fn mcl_train(a: MclTrainArgs) -> Result<()> {
    let real = load_sample_dirs(&a.real)?;
    let mut samples = real.samples;
    let generated_count = if a.generated.is_empty() {
        0
    } else {
        let generated = load_sample_dirs(&a.generated)?;
        ensure!(
            (generated.tds_width, generated.doppler_bins) == (real.tds_width, real.doppler_bins),
            "generated windows do not match the real ones"
        );
        let n = generated.samples.len();
        samples.extend(generated.samples);
        n
    };
    let classes = samples.iter().map(|s| s.label).max().unwrap_or(0) + 1;
    let mut cfg = match &a.config {
        Some(p) => load_config(Some(p))?.mcl,
        None => MclConfig::desk(classes.max(2), real.doppler_bins),
    };
    cfg.tds_width = real.tds_width;
    cfg.doppler_bins = real.doppler_bins;
    ensure!(
        classes <= cfg.classes,
        "samples carry label {} but the classifier has {} classes",
        classes - 1,
        cfg.classes
    );
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    if let Some(b) = a.batch {
        cfg.train.batch_size = b;
    }
    if let Some(lr) = a.lr {
        cfg.train.learning_rate = lr;
    }
    cfg.train.rng_seed = a.seed;
    let run = train_mcl_with_test(&samples, None, &cfg)?;
    run.model.save(&a.out)?;
    let history: Vec<LossPoint> = run
        .history
        .iter()
        .map(|h| LossPoint {
            epoch: h.epoch,
            loss_train: h.loss_train,
            loss_test: h.loss_test,
        })
        .collect();
    let m = Metrics {
        accuracy: 0.0,
        per_class: Vec::new(),
        confusion: Vec::new(),
        loss_history: history,
        samples: SampleCounts {
            train_real: samples.len() - generated_count,
            train_generated: generated_count,
            test: 0,
        },
        seed: a.seed,
        gan_final: Vec::new(),
    };
    write_atomic(&history_path(&a.out), m.loss_csv().as_bytes())?;
    write_provenance("mcl-train", &a, Some(&cfg), &a.out, false)
}

fn parse_history(text: &str) -> Result<Vec<LossPoint>> {
    let mut lines = text.lines();
    ensure!(
        lines.next().map(str::trim) == Some("epoch,loss_train,loss_test"),
        "history CSV must start with `epoch,loss_train,loss_test`"
    );
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            ensure!(c.len() == 3, "bad history row `{l}`");
            Ok(LossPoint {
                epoch: c[0].parse().with_context(|| format!("bad epoch in `{l}`"))?,
                loss_train: c[1].parse().with_context(|| format!("bad loss in `{l}`"))?,
                loss_test: if c[2].is_empty() {
                    None
                } else {
                    Some(c[2].parse().with_context(|| format!("bad loss in `{l}`"))?)
                },
            })
        })
        .collect()
}

fn mcl_eval(a: MclEvalArgs) -> Result<()> {
    let model = MclModel::load(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let test = load_sample_dirs(&a.test)?;
    ensure!(
        (test.tds_width, test.doppler_bins) == model.window_shape(),
        "test windows are {}x{}, the model expects {:?}",
        test.tds_width,
        test.doppler_bins,
        model.window_shape()
    );
    let eval = evaluate(&model, &test.samples)?;
    let hp = history_path(&a.model);
    let loss_history = if hp.exists() {
        parse_history(&fs::read_to_string(&hp)?).with_context(|| format!("reading {}", hp.display()))?
    } else {
        Vec::new()
    };
    let mut metrics = Metrics::new(
        &eval,
        &[],
        SampleCounts {
            train_real: 0,
            train_generated: 0,
            test: test.samples.len(),
        },
        0,
    );
    metrics.loss_history = loss_history;
    write_atomic(&a.report, metrics.to_json().as_bytes())?;
    if let Some(c) = &a.confusion {
        write_atomic(c, eval.confusion_csv().as_bytes())?;
    }
    write_provenance::<_, ()>("mcl-eval", &a, None, &a.report, false)
}

fn report(a: ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&a.metrics).with_context(|| format!("reading {}", a.metrics.display()))?;
    let m = Metrics::from_json(&text)?;
    fs::create_dir_all(&a.emit_csv).with_context(|| format!("creating {}", a.emit_csv.display()))?;
    let mut files = BTreeMap::new();
    files.insert("loss_curve.csv", m.loss_csv());
    files.insert("per_class.csv", m.per_class_csv());
    let mut conf = String::from("true");
    for j in 0..m.confusion.len() {
        conf.push_str(&format!(",pred_{j}"));
    }
    conf.push('\n');
    for (i, row) in m.confusion.iter().enumerate() {
        conf.push_str(&i.to_string());
        for v in row {
            conf.push_str(&format!(",{v}"));
        }
        conf.push('\n');
    }
    files.insert("confusion.csv", conf);
    files.insert("accuracy.csv", format!("accuracy\n{}\n", m.accuracy));
    for (name, body) in files {
        write_atomic(&a.emit_csv.join(name), body.as_bytes())?;
    }
    write_provenance::<_, ()>("report", &a, None, &a.emit_csv, true)
}

fn run_pipeline(a: RunArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.augment {
        cfg.augmentation.enabled = true;
    }
    cfg.validate()?;
    let out = pipeline::run(&cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_atomic(&a.out.join("metrics.json"), out.metrics.to_json().as_bytes())?;
    let eval = evaluate(&out.model, &out.dataset.test)?;
    write_atomic(&a.out.join("confusion.csv"), eval.confusion_csv().as_bytes())?;
    out.model.save(&a.out.join("mcl.mdck"))?;
    for (c, aug) in out.dataset.gans.iter().enumerate() {
        aug.gan.save(&a.out.join(format!("gan_class_{c}.mdck")))?;
        write_atomic(
            &a.out.join(format!("gan_class_{c}.losses.csv")),
            loss_history_csv(&aug.gan_history).as_bytes(),
        )?;
    }
    write_atomic(&a.out.join("config.toml"), cfg.to_toml().as_bytes())?;
    write_provenance("run", &a, Some(&cfg), &a.out, true)
}
