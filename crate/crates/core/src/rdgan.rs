//! Range-Doppler GAN: a generator that predicts the next RDM frame, a
//! spatial discriminator judging `(x^t, candidate)` pairs and a temporal
//! discriminator judging three consecutive frames.
//!
//! For a sequence `x^0 .. x^{n-1}` the training indices are `t = 1 ..= n - 3`.
//! Each index contributes the pair `(x^t, y^t = x^{t+1})`, the real triple
//! `Y~ = (x^t, x^{t+1}, x^{t+2})` and the generated triple
//! `G~(X~) = (G(x^{t-1}), G(x^t), G(x^{t+1}))`.
//!
//! Frames enter the networks as `[1, R, D]` tensors of dB values mapped to
//! `[0, 1]` by a [`Normalizer`] fitted on the training sequence.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::layers::f32_round;
use crate::nn::loss::{safe_ln, safe_ln_grad};
use crate::nn::{Checkpoint, Conv2d, Dense, Gradients, Layer, Network, Tensor};
use crate::radarproc::RangeDopplerMap;

/// Negative slope of the hidden activations (exactly representable in `f32`).
pub const LEAKY_SLOPE: f64 = 0.2f32 as f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanArch {
    /// Hidden channel counts of the generator; input and output have one.
    pub generator_channels: Vec<usize>,
    pub spatial_channels: Vec<usize>,
    pub temporal_channels: Vec<usize>,
    pub kernel: usize,
}

impl Default for GanArch {
    fn default() -> Self {
        Self {
            generator_channels: vec![32, 8],
            spatial_channels: vec![8, 16],
            temporal_channels: vec![8, 16],
            kernel: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanTrainConfig {
    pub k_ds: usize,
    pub k_dt: usize,
    pub k_g: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Training indices per update; `None` uses every index in one batch.
    pub batch_size: Option<usize>,
    pub rng_seed: u64,
    pub arch: GanArch,
}

impl Default for GanTrainConfig {
    fn default() -> Self {
        Self {
            k_ds: 1,
            k_dt: 1,
            k_g: 1,
            epochs: 100,
            learning_rate: 0.0005,
            batch_size: None,
            rng_seed: 0,
            arch: GanArch::default(),
        }
    }
}

impl GanTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_ds == 0 || self.k_dt == 0 || self.k_g == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig("GAN iteration counts and epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "GAN learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidConfig("GAN batch size must be >= 1".into()));
        }
        if self.arch.kernel == 0 || self.arch.generator_channels.is_empty() {
            return Err(Error::InvalidConfig("GAN architecture needs a kernel and generator layers".into()));
        }
        Ok(())
    }
}

/// Affine map of dB values onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min_db: f64,
    pub max_db: f64,
}

impl Normalizer {
    /// Fits the range of every cell in `frames`. Bounds are rounded to `f32`
    /// so a checkpointed normalizer is exact.
    pub fn fit(frames: &[RangeDopplerMap]) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in frames.iter().flat_map(|f| f.magnitude_db.iter()) {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::input("cannot fit a normalizer on empty or non-finite frames"));
        }
        let (lo, hi) = (f32_round(lo), f32_round(hi));
        Ok(Self {
            min_db: lo,
            max_db: if hi > lo { hi } else { lo + 1.0 },
        })
    }

    pub fn span(&self) -> f64 {
        self.max_db - self.min_db
    }

    pub fn apply(&self, db: f64) -> f64 {
        (db - self.min_db) / self.span()
    }

    pub fn invert(&self, v: f64) -> f64 {
        v * self.span() + self.min_db
    }

    pub fn to_tensor(&self, rdm: &RangeDopplerMap) -> Tensor {
        let data = rdm.magnitude_db.iter().map(|&v| self.apply(v)).collect();
        Tensor::new(vec![1, rdm.rows(), rdm.cols()], data).expect("map dims match grid")
    }

    /// Maps a `[1, R, D]` tensor back to dB on the axes of `like`.
    pub fn to_rdm(&self, t: &Tensor, like: &RangeDopplerMap, frame_index: u64) -> Result<RangeDopplerMap> {
        if t.len() != like.magnitude_db.len() {
            return Err(Error::input("generated frame size differs from reference map"));
        }
        RangeDopplerMap::from_grid(
            t.data().iter().map(|&v| self.invert(v)).collect(),
            like.range_axis.clone(),
            like.doppler_axis.clone(),
            frame_index,
        )
    }
}

pub fn build_generator(rows: usize, cols: usize, arch: &GanArch, rng: &mut ChaCha8Rng) -> Result<Network> {
    let mut layers = Vec::new();
    let mut c_in = 1;
    for &c in &arch.generator_channels {
        layers.push(Layer::Conv2d(Conv2d::same(c_in, c, arch.kernel, rng)));
        layers.push(Layer::LeakyRelu(LEAKY_SLOPE));
        c_in = c;
    }
    layers.push(Layer::Conv2d(Conv2d::same(c_in, 1, arch.kernel, rng)));
    Network::new("g", vec![1, rows, cols], layers)
}

fn build_discriminator(
    name: &str,
    in_channels: usize,
    rows: usize,
    cols: usize,
    channels: &[usize],
    kernel: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Network> {
    let mut layers = Vec::new();
    let mut c_in = in_channels;
    for &c in channels {
        layers.push(Layer::Conv2d(Conv2d::same(c_in, c, kernel, rng)));
        layers.push(Layer::LeakyRelu(LEAKY_SLOPE));
        layers.push(Layer::MaxPool(2));
        c_in = c;
    }
    layers.push(Layer::Flatten);
    let probe = Network::new(name, vec![in_channels, rows, cols], layers.clone())?;
    let flat = probe.output_shape()?[0];
    layers.push(Layer::Dense(Dense::new(flat, 1, rng)));
    layers.push(Layer::Sigmoid);
    Network::new(name, vec![in_channels, rows, cols], layers)
}

pub fn build_spatial_discriminator(rows: usize, cols: usize, arch: &GanArch, rng: &mut ChaCha8Rng) -> Result<Network> {
    build_discriminator("ds", 2, rows, cols, &arch.spatial_channels, arch.kernel, rng)
}

pub fn build_temporal_discriminator(rows: usize, cols: usize, arch: &GanArch, rng: &mut ChaCha8Rng) -> Result<Network> {
    build_discriminator("dt", 3, rows, cols, &arch.temporal_channels, arch.kernel, rng)
}

/// `(-mean ln real - mean ln(1 - fake)) / 2`, the discriminator loss on scores.
pub fn discriminator_loss(real: &[f64], fake: &[f64]) -> Result<f64> {
    if real.is_empty() || fake.is_empty() {
        return Err(Error::input("discriminator loss needs at least one real and one generated score"));
    }
    let r = real.iter().map(|&d| safe_ln(d)).sum::<f64>() / real.len() as f64;
    let f = fake.iter().map(|&d| safe_ln(1.0 - d)).sum::<f64>() / fake.len() as f64;
    Ok((-r - f) / 2.0)
}

/// `(-mean ln ds - mean ln dt) / 2` on the scores of generated data.
pub fn generator_loss(ds_fake: &[f64], dt_fake: &[f64]) -> Result<f64> {
    if ds_fake.is_empty() || dt_fake.is_empty() {
        return Err(Error::input("generator loss needs scores from both discriminators"));
    }
    let s = ds_fake.iter().map(|&d| safe_ln(d)).sum::<f64>() / ds_fake.len() as f64;
    let t = dt_fake.iter().map(|&d| safe_ln(d)).sum::<f64>() / dt_fake.len() as f64;
    Ok((-s - t) / 2.0)
}

fn score(net: &Network, x: &Tensor) -> Result<f64> {
    Ok(net.predict(x)?.data()[0])
}

fn check_lengths(parts: &[usize]) -> Result<usize> {
    let n = parts[0];
    if n == 0 || parts.iter().any(|&m| m != n) {
        return Err(Error::input(format!("loss inputs need equal non-zero lengths, got {parts:?}")));
    }
    Ok(n)
}

/// Spatial discriminator loss over pairs `(x_t[i], y_t[i])` and `(x_t[i], g_x_t[i])`.
pub fn ds_loss(ds: &Network, x_t: &[Tensor], y_t: &[Tensor], g_x_t: &[Tensor]) -> Result<f64> {
    check_lengths(&[x_t.len(), y_t.len(), g_x_t.len()])?;
    let mut real = Vec::new();
    let mut fake = Vec::new();
    for ((x, y), g) in x_t.iter().zip(y_t).zip(g_x_t) {
        real.push(score(ds, &Tensor::stack_channels(&[x, y])?)?);
        fake.push(score(ds, &Tensor::stack_channels(&[x, g])?)?);
    }
    discriminator_loss(&real, &fake)
}

/// Temporal discriminator loss over real and generated frame triples.
pub fn dt_loss(dt: &Network, real: &[[Tensor; 3]], generated: &[[Tensor; 3]]) -> Result<f64> {
    check_lengths(&[real.len(), generated.len()])?;
    let stack = |t: &[Tensor; 3]| Tensor::stack_channels(&[&t[0], &t[1], &t[2]]);
    let r = real.iter().map(|t| score(dt, &stack(t)?)).collect::<Result<Vec<_>>>()?;
    let f = generated.iter().map(|t| score(dt, &stack(t)?)).collect::<Result<Vec<_>>>()?;
    discriminator_loss(&r, &f)
}

/// Generator loss; `g` is applied to `x_t` and to every frame of each triple.
pub fn g_loss(ds: &Network, dt: &Network, g: &Network, x_t: &[Tensor], x_triples: &[[Tensor; 3]]) -> Result<f64> {
    check_lengths(&[x_t.len(), x_triples.len()])?;
    let mut s = Vec::new();
    for x in x_t {
        let gx = g.predict(x)?;
        s.push(score(ds, &Tensor::stack_channels(&[x, &gx])?)?);
    }
    let mut t = Vec::new();
    for tri in x_triples {
        let gen = [g.predict(&tri[0])?, g.predict(&tri[1])?, g.predict(&tri[2])?];
        t.push(score(dt, &Tensor::stack_channels(&[&gen[0], &gen[1], &gen[2]])?)?);
    }
    generator_loss(&s, &t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rdgan {
    pub generator: Network,
    pub spatial: Network,
    pub temporal: Network,
    pub normalizer: Normalizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLosses {
    pub epoch: usize,
    pub loss_g: f64,
    pub loss_ds: f64,
    pub loss_dt: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateCounts {
    pub spatial: usize,
    pub temporal: usize,
    pub generator: usize,
}

#[derive(Debug, Clone)]
pub struct GanTraining {
    pub model: Rdgan,
    /// Per epoch, the mean over that epoch's updates of each loss evaluated
    /// just before the update.
    pub history: Vec<EpochLosses>,
    pub updates: UpdateCounts,
}

impl Rdgan {
    /// Fresh networks for `rows x cols` maps.
    pub fn new(rows: usize, cols: usize, arch: &GanArch, normalizer: Normalizer, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            generator: build_generator(rows, cols, arch, &mut rng)?,
            spatial: build_spatial_discriminator(rows, cols, arch, &mut rng)?,
            temporal: build_temporal_discriminator(rows, cols, arch, &mut rng)?,
            normalizer,
        })
    }

    pub fn frame_shape(&self) -> (usize, usize) {
        let s = self.generator.input_shape();
        (s[1], s[2])
    }

    /// Generator prediction of the frame after `x_t` (normalized tensors).
    pub fn g_predict(&self, x_t: &Tensor) -> Result<Tensor> {
        self.generator.predict(x_t)
    }

    /// Predicts the next map in dB.
    pub fn predict_next(&self, rdm: &RangeDopplerMap) -> Result<RangeDopplerMap> {
        let y = self.g_predict(&self.normalizer.to_tensor(rdm))?;
        self.normalizer.to_rdm(&y, rdm, rdm.frame_index + 1)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        ck.push_network(&self.generator);
        ck.push_network(&self.spatial);
        ck.push_network(&self.temporal);
        ck.push("norm", vec![2], vec![self.normalizer.min_db, self.normalizer.max_db]);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let norm = ck.require("norm")?;
        if norm.len() != 2 || !(norm[1] > norm[0]) {
            return Err(Error::Format("GAN checkpoint has an invalid `norm` entry".into()));
        }
        let model = Self {
            generator: ck.network("g")?,
            spatial: ck.network("ds")?,
            temporal: ck.network("dt")?,
            normalizer: Normalizer {
                min_db: norm[0],
                max_db: norm[1],
            },
        };
        let (r, c) = model.frame_shape();
        if model.spatial.input_shape() != [2, r, c] || model.temporal.input_shape() != [3, r, c] {
            return Err(Error::Format("GAN checkpoint networks disagree on frame shape".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().write(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::read(path)?)
    }
}

/// Training indices `t` of an `n`-frame sequence.
pub fn training_indices(n: usize) -> std::ops::RangeInclusive<usize> {
    1..=n.saturating_sub(3)
}

fn check_frames(frames: &[RangeDopplerMap]) -> Result<(usize, usize)> {
    if frames.len() < 4 {
        return Err(Error::input(format!(
            "GAN training needs at least 4 frames, got {}",
            frames.len()
        )));
    }
    let (r, c) = (frames[0].rows(), frames[0].cols());
    if frames.iter().any(|f| f.rows() != r || f.cols() != c) {
        return Err(Error::input("GAN training frames differ in size"));
    }
    Ok((r, c))
}

/// Trains a fresh GAN on one ordered sequence.
pub fn train_gan(frames: &[RangeDopplerMap], cfg: &GanTrainConfig) -> Result<GanTraining> {
    cfg.validate()?;
    let (rows, cols) = check_frames(frames)?;
    let norm = Normalizer::fit(frames)?;
    let model = Rdgan::new(rows, cols, &cfg.arch, norm, cfg.rng_seed)?;
    continue_training(model, frames, cfg)
}

/// Runs the training loop on an existing model (its normalizer is kept).
/// Final parameters are rounded to `f32`, as for the classifier.
pub fn continue_training(mut model: Rdgan, frames: &[RangeDopplerMap], cfg: &GanTrainConfig) -> Result<GanTraining> {
    cfg.validate()?;
    let (rows, cols) = check_frames(frames)?;
    if model.frame_shape() != (rows, cols) {
        return Err(Error::input(format!(
            "model expects {:?} frames, got {rows}x{cols}",
            model.frame_shape()
        )));
    }
    let x: Vec<Tensor> = frames.iter().map(|f| model.normalizer.to_tensor(f)).collect();
    let mut order: Vec<usize> = training_indices(frames.len()).collect();
    let batch = cfg.batch_size.unwrap_or(order.len()).min(order.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ 0x005e_ed0f_6a4e);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut updates = UpdateCounts::default();
    let lr = cfg.learning_rate;

    for epoch in 0..cfg.epochs {
        if batch < order.len() {
            order.shuffle(&mut rng);
        }
        let mut sums = [0.0; 3];
        let mut counts = [0usize; 3];
        for idx in order.chunks(batch) {
            for _ in 0..cfg.k_ds {
                let loss = spatial_step(&mut model, &x, idx, lr)?;
                sums[1] += loss;
                counts[1] += 1;
                updates.spatial += 1;
            }
            for _ in 0..cfg.k_dt {
                let loss = temporal_step(&mut model, &x, idx, lr)?;
                sums[2] += loss;
                counts[2] += 1;
                updates.temporal += 1;
            }
            for _ in 0..cfg.k_g {
                let loss = generator_step(&mut model, &x, idx, lr)?;
                sums[0] += loss;
                counts[0] += 1;
                updates.generator += 1;
            }
        }
        history.push(EpochLosses {
            epoch: epoch + 1,
            loss_g: sums[0] / counts[0] as f64,
            loss_ds: sums[1] / counts[1] as f64,
            loss_dt: sums[2] / counts[2] as f64,
        });
    }
    for net in [&mut model.generator, &mut model.spatial, &mut model.temporal] {
        net.round_params_to_f32();
    }
    Ok(GanTraining { model, history, updates })
}

/// Generator outputs for the given frame indices, keyed by index.
fn generate_many(g: &Network, x: &[Tensor], indices: impl IntoIterator<Item = usize>) -> Result<BTreeMap<usize, Tensor>> {
    let mut out = BTreeMap::new();
    for i in indices {
        if let std::collections::btree_map::Entry::Vacant(e) = out.entry(i) {
            e.insert(g.predict(&x[i])?);
        }
    }
    Ok(out)
}

/// Accumulates the gradient of `w * ln(D)` or `w * ln(1 - D)` for one input
/// and returns the input gradient.
fn disc_backward(
    net: &Network,
    input: &Tensor,
    weight: f64,
    real: bool,
    grads: &mut Gradients,
) -> Result<(f64, Tensor)> {
    let acts = net.forward(input)?;
    let d = acts.output().data()[0];
    let (term, dterm) = if real {
        (safe_ln(d), safe_ln_grad(d))
    } else {
        (safe_ln(1.0 - d), -safe_ln_grad(1.0 - d))
    };
    let gx = net.backward(&acts, &Tensor::vector(vec![weight * dterm]), grads)?;
    Ok((term, gx))
}

fn spatial_step(model: &mut Rdgan, x: &[Tensor], idx: &[usize], lr: f64) -> Result<f64> {
    let gen = generate_many(&model.generator, x, idx.iter().copied())?;
    let ds = &model.spatial;
    let mut grads = ds.zero_gradients();
    let w = -1.0 / (2.0 * idx.len() as f64);
    let mut loss = 0.0;
    for &t in idx {
        let (a, _) = disc_backward(ds, &Tensor::stack_channels(&[&x[t], &x[t + 1]])?, w, true, &mut grads)?;
        let (b, _) = disc_backward(ds, &Tensor::stack_channels(&[&x[t], &gen[&t]])?, w, false, &mut grads)?;
        loss += w * (a + b);
    }
    model.spatial.sgd_step(&grads, lr)?;
    Ok(loss)
}

fn temporal_step(model: &mut Rdgan, x: &[Tensor], idx: &[usize], lr: f64) -> Result<f64> {
    let gen = generate_many(&model.generator, x, idx.iter().flat_map(|&t| [t - 1, t, t + 1]))?;
    let dt = &model.temporal;
    let mut grads = dt.zero_gradients();
    let w = -1.0 / (2.0 * idx.len() as f64);
    let mut loss = 0.0;
    for &t in idx {
        let real = Tensor::stack_channels(&[&x[t], &x[t + 1], &x[t + 2]])?;
        let fake = Tensor::stack_channels(&[&gen[&(t - 1)], &gen[&t], &gen[&(t + 1)]])?;
        let (a, _) = disc_backward(dt, &real, w, true, &mut grads)?;
        let (b, _) = disc_backward(dt, &fake, w, false, &mut grads)?;
        loss += w * (a + b);
    }
    model.temporal.sgd_step(&grads, lr)?;
    Ok(loss)
}

fn generator_step(model: &mut Rdgan, x: &[Tensor], idx: &[usize], lr: f64) -> Result<f64> {
    let g = &model.generator;
    let mut acts = BTreeMap::new();
    for &t in idx {
        for u in [t - 1, t, t + 1] {
            if let std::collections::btree_map::Entry::Vacant(e) = acts.entry(u) {
                e.insert(g.forward(&x[u])?);
            }
        }
    }
    let out = |u: usize| acts[&u].output();
    let plane = x[0].len();
    let mut upstream: BTreeMap<usize, Tensor> = acts.keys().map(|&u| (u, Tensor::zeros(x[0].shape()))).collect();
    let mut ds_scratch = model.spatial.zero_gradients();
    let mut dt_scratch = model.temporal.zero_gradients();
    let w = -1.0 / (2.0 * idx.len() as f64);
    let mut loss = 0.0;
    for &t in idx {
        let pair = Tensor::stack_channels(&[&x[t], out(t)])?;
        let (a, gx) = disc_backward(&model.spatial, &pair, w, true, &mut ds_scratch)?;
        add_channel(upstream.get_mut(&t).unwrap(), &gx, 1, plane);

        let triple = Tensor::stack_channels(&[out(t - 1), out(t), out(t + 1)])?;
        let (b, gx) = disc_backward(&model.temporal, &triple, w, true, &mut dt_scratch)?;
        for (c, u) in [t - 1, t, t + 1].into_iter().enumerate() {
            add_channel(upstream.get_mut(&u).unwrap(), &gx, c, plane);
        }
        loss += w * (a + b);
    }
    let mut grads = g.zero_gradients();
    for (u, a) in &acts {
        g.backward(a, &upstream[u], &mut grads)?;
    }
    model.generator.sgd_step(&grads, lr)?;
    Ok(loss)
}

fn add_channel(dst: &mut Tensor, src: &Tensor, c: usize, plane: usize) {
    for (d, s) in dst.data_mut().iter_mut().zip(&src.data()[c * plane..(c + 1) * plane]) {
        *d += s;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenerationMode {
    /// `G(x)` for every seed frame: `m` frames out for `m` in.
    OneStep,
    /// Feeds predictions back `depth` times starting from the last seed frame.
    Rollout(usize),
}

impl std::str::FromStr for GenerationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-step" => Ok(Self::OneStep),
            _ => {
                let depth = s
                    .strip_prefix("rollout:")
                    .and_then(|d| d.parse().ok())
                    .ok_or_else(|| Error::input(format!("unknown generation mode `{s}`")))?;
                Ok(Self::Rollout(depth))
            }
        }
    }
}

pub fn generate_rdm_sequence(
    model: &Rdgan,
    seed_frames: &[RangeDopplerMap],
    mode: GenerationMode,
) -> Result<Vec<RangeDopplerMap>> {
    let last = seed_frames
        .last()
        .ok_or_else(|| Error::input("generation needs at least one seed frame"))?;
    match mode {
        GenerationMode::OneStep => seed_frames.iter().map(|f| model.predict_next(f)).collect(),
        GenerationMode::Rollout(0) => Err(Error::input("rollout depth must be >= 1")),
        GenerationMode::Rollout(depth) => {
            let mut cur = model.normalizer.to_tensor(last);
            let mut out = Vec::with_capacity(depth);
            for step in 1..=depth {
                cur = model.g_predict(&cur)?;
                out.push(model.normalizer.to_rdm(&cur, last, last.frame_index + step as u64)?);
            }
            Ok(out)
        }
    }
}

pub fn loss_history_csv(history: &[EpochLosses]) -> String {
    let mut s = String::from("epoch,loss_g,loss_ds,loss_dt\n");
    for h in history {
        s.push_str(&format!("{},{},{},{}\n", h.epoch, h.loss_g, h.loss_ds, h.loss_dt));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn tiny_arch() -> GanArch {
        GanArch {
            generator_channels: vec![4, 2],
            spatial_channels: vec![2, 3],
            temporal_channels: vec![2, 3],
            kernel: 3,
        }
    }

    fn frames(n: usize) -> Vec<RangeDopplerMap> {
        (0..n)
            .map(|i| {
                let mut g = vec![-40.0; 8 * 8];
                g[(i % 8) * 8 + 3] = 10.0;
                let mut m = RangeDopplerMap::with_default_axes(g, 8, 8).unwrap();
                m.frame_index = i as u64;
                m
            })
            .collect()
    }

    /// Discriminator whose dense head is all zero, so it always outputs 0.5.
    fn half(mut net: Network) -> Network {
        for layer in net.layers_mut() {
            if let Layer::Dense(d) = layer {
                d.weight.value.fill(0.0);
                d.bias.value.fill(0.0);
            }
        }
        net
    }

    #[test]
    fn score_form_hand_cases() {
        assert!((discriminator_loss(&[0.5], &[0.5]).unwrap() - LN_2).abs() < 1e-15);
        assert!((discriminator_loss(&[0.9], &[0.2]).unwrap() - 0.1643).abs() < 1e-4);
        assert!((discriminator_loss(&[0.8], &[0.3]).unwrap() - 0.2899).abs() < 1e-4);
        assert!((generator_loss(&[0.4], &[0.6]).unwrap() - 0.7136).abs() < 1e-4);
        let eps = 1e-9;
        assert!(discriminator_loss(&[1.0 - eps], &[eps]).unwrap() < 1e-8);
        assert!(generator_loss(&[1.0 - eps], &[1.0 - eps]).unwrap() < 1e-8);
        assert!(discriminator_loss(&[], &[0.5]).is_err());
    }

    #[test]
    fn half_discriminators_give_ln2() {
        let fr = frames(6);
        let norm = Normalizer::fit(&fr).unwrap();
        let mut m = Rdgan::new(8, 8, &tiny_arch(), norm, 1).unwrap();
        m.spatial = half(m.spatial);
        m.temporal = half(m.temporal);
        let x: Vec<Tensor> = fr.iter().map(|f| norm.to_tensor(f)).collect();
        let idx: Vec<usize> = training_indices(6).collect();
        let xt: Vec<Tensor> = idx.iter().map(|&t| x[t].clone()).collect();
        let yt: Vec<Tensor> = idx.iter().map(|&t| x[t + 1].clone()).collect();
        let gt: Vec<Tensor> = xt.iter().map(|v| m.g_predict(v).unwrap()).collect();
        let real: Vec<[Tensor; 3]> = idx.iter().map(|&t| [x[t].clone(), x[t + 1].clone(), x[t + 2].clone()]).collect();
        let xtri: Vec<[Tensor; 3]> = idx.iter().map(|&t| [x[t - 1].clone(), x[t].clone(), x[t + 1].clone()]).collect();
        let gtri: Vec<[Tensor; 3]> = xtri
            .iter()
            .map(|tri| [m.g_predict(&tri[0]).unwrap(), m.g_predict(&tri[1]).unwrap(), m.g_predict(&tri[2]).unwrap()])
            .collect();
        assert!((ds_loss(&m.spatial, &xt, &yt, &gt).unwrap() - LN_2).abs() < 1e-12);
        assert!((dt_loss(&m.temporal, &real, &gtri).unwrap() - LN_2).abs() < 1e-12);
        assert!((g_loss(&m.spatial, &m.temporal, &m.generator, &xt, &xtri).unwrap() - LN_2).abs() < 1e-12);
    }

    #[test]
    fn generator_preserves_shape_and_zero_head_outputs_zero() {
        let norm = Normalizer { min_db: -40.0, max_db: 10.0 };
        let mut m = Rdgan::new(6, 10, &tiny_arch(), norm, 2).unwrap();
        let x = Tensor::new(vec![1, 6, 10], (0..60).map(|v| v as f64 / 60.0).collect()).unwrap();
        assert_eq!(m.g_predict(&x).unwrap().shape(), &[1, 6, 10]);
        if let Some(Layer::Conv2d(c)) = m.generator.layers_mut().last_mut() {
            c.weight.value.fill(0.0);
        }
        assert!(m.g_predict(&x).unwrap().data().iter().all(|&v| v == 0.0));
        assert!(m.g_predict(&Tensor::zeros(&[1, 6, 9])).is_err());
    }

    #[test]
    fn discriminator_outputs_in_open_unit_interval() {
        let norm = Normalizer { min_db: 0.0, max_db: 1.0 };
        let m = Rdgan::new(8, 8, &GanArch::default(), norm, 3).unwrap();
        let x = Tensor::new(vec![2, 8, 8], (0..128).map(|v| (v % 7) as f64 / 7.0).collect()).unwrap();
        let s = m.spatial.predict(&x).unwrap().data()[0];
        assert!(s > 0.0 && s < 1.0);
        assert_eq!(m.temporal.input_shape(), &[3, 8, 8]);
    }

    #[test]
    fn loop_accounting_and_determinism() {
        let cfg = GanTrainConfig {
            epochs: 1,
            arch: tiny_arch(),
            ..GanTrainConfig::default()
        };
        let run = train_gan(&frames(5), &cfg).unwrap();
        assert_eq!(run.updates, UpdateCounts { spatial: 1, temporal: 1, generator: 1 });
        assert_eq!(run.history.len(), 1);

        let cfg = GanTrainConfig {
            epochs: 3,
            k_ds: 2,
            batch_size: Some(2),
            learning_rate: 0.05,
            arch: tiny_arch(),
            ..GanTrainConfig::default()
        };
        let a = train_gan(&frames(9), &cfg).unwrap();
        let b = train_gan(&frames(9), &cfg).unwrap();
        // 6 indices in batches of 2 -> 3 batches per epoch
        assert_eq!(a.updates, UpdateCounts { spatial: 18, temporal: 9, generator: 9 });
        assert_eq!(a.history, b.history);
        assert_eq!(a.model, b.model);
        assert!(a.history.iter().all(|h| h.loss_g >= 0.0 && h.loss_ds >= 0.0 && h.loss_dt >= 0.0));
    }

    #[test]
    fn too_short_sequence_is_rejected() {
        assert!(train_gan(&frames(3), &GanTrainConfig::default()).is_err());
        let bad = GanTrainConfig { k_g: 0, ..GanTrainConfig::default() };
        assert!(train_gan(&frames(6), &bad).is_err());
    }

    #[test]
    fn generation_modes() {
        let fr = frames(5);
        let m = Rdgan::new(8, 8, &tiny_arch(), Normalizer::fit(&fr).unwrap(), 4).unwrap();
        let one = generate_rdm_sequence(&m, &fr, GenerationMode::OneStep).unwrap();
        assert_eq!(one.len(), 5);
        let roll = generate_rdm_sequence(&m, &fr, GenerationMode::Rollout(1)).unwrap();
        assert_eq!(roll[0].magnitude_db, one[4].magnitude_db);
        assert_eq!(generate_rdm_sequence(&m, &fr, GenerationMode::Rollout(3)).unwrap().len(), 3);
        assert!(generate_rdm_sequence(&m, &fr, GenerationMode::Rollout(0)).is_err());
        assert!(generate_rdm_sequence(&m, &[], GenerationMode::OneStep).is_err());

        let tds = crate::radarproc::tds_from_rdms(&one, 15.0).unwrap();
        let real = crate::radarproc::tds_from_rdms(&fr, 15.0).unwrap();
        assert_eq!((tds.len(), tds.doppler_bins()), (real.len(), real.doppler_bins()));

        assert_eq!("one-step".parse::<GenerationMode>().unwrap(), GenerationMode::OneStep);
        assert_eq!("rollout:4".parse::<GenerationMode>().unwrap(), GenerationMode::Rollout(4));
        assert!("sideways".parse::<GenerationMode>().is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let fr = frames(6);
        let m = Rdgan::new(8, 8, &tiny_arch(), Normalizer::fit(&fr).unwrap(), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gan.mdck");
        m.save(&p).unwrap();
        assert_eq!(Rdgan::load(&p).unwrap(), m);

        let cfg = GanTrainConfig {
            epochs: 2,
            learning_rate: 0.05,
            arch: tiny_arch(),
            ..GanTrainConfig::default()
        };
        let trained = train_gan(&fr, &cfg).unwrap().model;
        trained.save(&p).unwrap();
        assert_eq!(Rdgan::load(&p).unwrap(), trained);
    }

    #[test]
    fn normalizer_maps_onto_unit_interval() {
        let fr = frames(4);
        let n = Normalizer::fit(&fr).unwrap();
        assert_eq!((n.min_db, n.max_db), (-40.0, 10.0));
        let t = n.to_tensor(&fr[0]);
        assert!(t.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let back = n.to_rdm(&t, &fr[0], 0).unwrap();
        assert_eq!(back.magnitude_db, fr[0].magnitude_db);
    }

    #[test]
    fn loss_csv_header() {
        let csv = loss_history_csv(&[EpochLosses { epoch: 1, loss_g: 0.5, loss_ds: 0.25, loss_dt: 0.75 }]);
        assert_eq!(csv, "epoch,loss_g,loss_ds,loss_dt\n1,0.5,0.25,0.75\n");
    }
}
