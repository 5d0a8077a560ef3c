//! Multi-characteristic classifier.
//!
//! Two function networks see different views of a pedestrian: FN1 is a
//! multi-scale CNN over a `W x D` time-Doppler window, FN2 an RBF network
//! over the four gait statistics. A context network CN reads both raw views
//! and emits `2X` fusion weights. The fused score of class `i` is
//!
//! ```text
//! P_i = p1_i * w_i + p2_i * w_{X+i}
//! ```
//!
//! and the decision is the lowest index maximizing `P`. Training minimizes
//! the cross-entropy of `softmax(P)` jointly through all three networks.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::GaitFeatures;
use crate::nn::layers::f32_round;
use crate::nn::loss::safe_ln;
use crate::nn::{softmax, Checkpoint, Conv2d, Dense, Gradients, Layer, MultiScaleConv, Network, Rbf, Tensor, TrainConfig};

pub const FEATURES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MclConfig {
    pub classes: usize,
    /// Frames per time-Doppler window.
    pub tds_width: usize,
    pub doppler_bins: usize,
    pub fn1_branch_channels: usize,
    pub fn1_kernels: Vec<usize>,
    /// 3x3 convolutions after the multi-scale block, each followed by pooling.
    pub fn1_conv_channels: Vec<usize>,
    /// Channels of the closing 1x1 convolution.
    pub fn1_final_channels: usize,
    pub fn1_dense_hidden: usize,
    pub fn2_hidden: usize,
    pub cn_hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for MclConfig {
    fn default() -> Self {
        Self::paper(5, 205)
    }
}

impl MclConfig {
    /// Full-size networks.
    pub fn paper(classes: usize, doppler_bins: usize) -> Self {
        Self {
            classes,
            tds_width: 45,
            doppler_bins,
            fn1_branch_channels: 8,
            fn1_kernels: vec![3, 4, 5],
            fn1_conv_channels: vec![48, 96, 128],
            fn1_final_channels: 32,
            fn1_dense_hidden: 128,
            fn2_hidden: 5,
            cn_hidden: vec![1000, 100],
            train: TrainConfig::default(),
        }
    }

    /// Same topology with widths small enough for a laptop CPU.
    pub fn desk(classes: usize, doppler_bins: usize) -> Self {
        Self {
            fn1_branch_channels: 4,
            fn1_conv_channels: vec![16, 24, 32],
            fn1_final_channels: 8,
            fn1_dense_hidden: 32,
            cn_hidden: vec![64, 16],
            train: TrainConfig {
                learning_rate: 0.05,
                epochs: 40,
                batch_size: 16,
                rng_seed: 0,
            },
            ..Self::paper(classes, doppler_bins)
        }
    }

    pub fn cn_inputs(&self) -> usize {
        self.tds_width * self.doppler_bins + FEATURES
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::InvalidConfig("the classifier needs at least two classes".into()));
        }
        if self.tds_width == 0 || self.doppler_bins == 0 || self.fn2_hidden == 0 {
            return Err(Error::InvalidConfig("window, Doppler and RBF sizes must be >= 1".into()));
        }
        if self.fn1_kernels.is_empty() || self.fn1_kernels.contains(&0) || self.fn1_branch_channels == 0 {
            return Err(Error::InvalidConfig("FN1 needs at least one non-empty branch".into()));
        }
        self.train.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Real,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MclSample {
    /// Row-major `tds_width x D`; row `i` is the Doppler profile of frame `i`.
    pub tds_window: Vec<f64>,
    pub features: GaitFeatures,
    pub label: usize,
    pub origin: Origin,
}

/// Standardization of both views, fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputNorm {
    pub tds_mean: f64,
    pub tds_std: f64,
    pub feature_mean: [f64; FEATURES],
    pub feature_std: [f64; FEATURES],
}

impl InputNorm {
    pub fn identity() -> Self {
        Self {
            tds_mean: 0.0,
            tds_std: 1.0,
            feature_mean: [0.0; FEATURES],
            feature_std: [1.0; FEATURES],
        }
    }

    /// Mean and standard deviation over all samples, rounded to `f32`.
    pub fn fit(samples: &[MclSample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::input("cannot fit input normalization on zero samples"));
        }
        let (m, s) = mean_std(samples.iter().flat_map(|x| x.tds_window.iter().copied()));
        let mut feature_mean = [0.0; FEATURES];
        let mut feature_std = [1.0; FEATURES];
        for k in 0..FEATURES {
            let (fm, fs) = mean_std(samples.iter().map(|x| x.features.to_array()[k]));
            feature_mean[k] = f32_round(fm);
            feature_std[k] = f32_round(fs);
        }
        Ok(Self {
            tds_mean: f32_round(m),
            tds_std: f32_round(s),
            feature_mean,
            feature_std,
        })
    }

    fn tds(&self, v: f64) -> f64 {
        (v - self.tds_mean) / self.tds_std
    }

    fn features(&self, f: &GaitFeatures) -> [f64; FEATURES] {
        let a = f.to_array();
        std::array::from_fn(|k| (a[k] - self.feature_mean[k]) / self.feature_std[k])
    }

    fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.tds_mean, self.tds_std];
        v.extend(self.feature_mean);
        v.extend(self.feature_std);
        v
    }

    fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 2 + 2 * FEATURES || v[1] <= 0.0 || v[6..].iter().any(|s| *s <= 0.0) {
            return Err(Error::Format("invalid MCL `norm` entry".into()));
        }
        Ok(Self {
            tds_mean: v[0],
            tds_std: v[1],
            feature_mean: std::array::from_fn(|k| v[2 + k]),
            feature_std: std::array::from_fn(|k| v[6 + k]),
        })
    }
}

/// Population mean and standard deviation; a zero spread becomes 1.
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 1e-12 { std } else { 1.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MclModel {
    pub fn1: Network,
    pub fn2: Network,
    pub cn: Network,
    pub norm: InputNorm,
}

/// Every intermediate output of one sample's forward pass.
#[derive(Debug, Clone)]
pub struct MclOutput {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub w: Vec<f64>,
    pub fused: Vec<f64>,
    pub decision: usize,
}

/// Gradients of all three networks.
#[derive(Debug, Clone, PartialEq)]
pub struct MclGradients {
    pub fn1: Gradients,
    pub fn2: Gradients,
    pub cn: Gradients,
}

impl MclGradients {
    fn scale(&mut self, k: f64) {
        self.fn1.scale(k);
        self.fn2.scale(k);
        self.cn.scale(k);
    }
}

pub fn build_fn1(cfg: &MclConfig, rng: &mut ChaCha8Rng) -> Result<Network> {
    let mut layers = vec![
        Layer::MultiScale(MultiScaleConv::new(1, cfg.fn1_branch_channels, &cfg.fn1_kernels, rng)),
        Layer::Relu,
        Layer::MaxPool(2),
    ];
    let mut c_in = cfg.fn1_branch_channels * cfg.fn1_kernels.len();
    for &c in &cfg.fn1_conv_channels {
        layers.push(Layer::Conv2d(Conv2d::same(c_in, c, 3, rng)));
        layers.push(Layer::Relu);
        layers.push(Layer::MaxPool(2));
        c_in = c;
    }
    layers.push(Layer::Conv2d(Conv2d::same(c_in, cfg.fn1_final_channels, 1, rng)));
    layers.push(Layer::Relu);
    layers.push(Layer::Flatten);
    let input = vec![1, cfg.tds_width, cfg.doppler_bins];
    let flat = Network::new("fn1", input.clone(), layers.clone())?.output_shape()?[0];
    layers.push(Layer::Dense(Dense::new(flat, cfg.fn1_dense_hidden, rng)));
    layers.push(Layer::Relu);
    layers.push(Layer::Dense(Dense::new(cfg.fn1_dense_hidden, cfg.classes, rng)));
    layers.push(Layer::Softmax);
    Network::new("fn1", input, layers)
}

/// RBF network with the given centers; widths start at the mean pairwise
/// center distance.
pub fn build_fn2(cfg: &MclConfig, centers: Vec<Vec<f64>>, rng: &mut ChaCha8Rng) -> Result<Network> {
    let q = centers.len();
    let mut total = 0.0;
    let mut pairs = 0;
    for i in 0..q {
        for j in i + 1..q {
            total += centers[i].iter().zip(&centers[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            pairs += 1;
        }
    }
    let sigma = if pairs > 0 && total > 1e-9 { total / pairs as f64 } else { 1.0 };
    let rbf = Rbf::new(centers, vec![sigma; q], cfg.classes, rng)?;
    Network::new("fn2", vec![FEATURES], vec![Layer::Rbf(rbf), Layer::Softmax])
}

pub fn build_cn(cfg: &MclConfig, rng: &mut ChaCha8Rng) -> Result<Network> {
    let mut layers = Vec::new();
    let mut n_in = cfg.cn_inputs();
    for &h in &cfg.cn_hidden {
        layers.push(Layer::Dense(Dense::new(n_in, h, rng)));
        layers.push(Layer::Relu);
        n_in = h;
    }
    layers.push(Layer::Dense(Dense::new(n_in, 2 * cfg.classes, rng)));
    layers.push(Layer::Softmax);
    Network::new("cn", vec![cfg.cn_inputs()], layers)
}

/// `P_i = p1_i w_i + p2_i w_{X+i}`.
pub fn fuse(p1: &[f64], p2: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let x = p1.len();
    if p2.len() != x || w.len() != 2 * x || x == 0 {
        return Err(Error::input(format!(
            "fusion needs lengths X, X, 2X; got {}, {}, {}",
            p1.len(),
            p2.len(),
            w.len()
        )));
    }
    Ok((0..x).map(|i| p1[i] * w[i] + p2[i] * w[x + i]).collect())
}

/// Index of the largest score; the lowest index wins ties.
pub fn decide(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl MclModel {
    /// Fresh model; FN2 centers are sampled from the (normalized) features of
    /// `samples`, which also fit the input normalization.
    pub fn new(cfg: &MclConfig, samples: &[MclSample]) -> Result<Self> {
        cfg.validate()?;
        let norm = InputNorm::fit(samples)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.rng_seed);
        let fn1 = build_fn1(cfg, &mut rng)?;
        let pool: Vec<[f64; FEATURES]> = samples.iter().map(|s| norm.features(&s.features)).collect();
        let centers = (0..cfg.fn2_hidden)
            .map(|_| pool.choose(&mut rng).expect("non-empty").to_vec())
            .collect();
        let fn2 = build_fn2(cfg, centers, &mut rng)?;
        let cn = build_cn(cfg, &mut rng)?;
        Ok(Self { fn1, fn2, cn, norm })
    }

    pub fn classes(&self) -> usize {
        self.fn2.output_shape().expect("validated")[0]
    }

    /// `(tds_width, doppler_bins)` expected by FN1.
    pub fn window_shape(&self) -> (usize, usize) {
        let s = self.fn1.input_shape();
        (s[1], s[2])
    }

    fn inputs(&self, s: &MclSample) -> Result<(Tensor, Tensor, Tensor)> {
        let (w, d) = self.window_shape();
        if s.tds_window.len() != w * d {
            return Err(Error::shape(
                "fn1/00.mscale",
                format!("window has {} values, model expects {w}x{d}", s.tds_window.len()),
            ));
        }
        let f = s.features.to_array();
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite gait features {f:?}")));
        }
        let tds: Vec<f64> = s.tds_window.iter().map(|&v| self.norm.tds(v)).collect();
        let feats = self.norm.features(&s.features);
        let mut cn_in = tds.clone();
        cn_in.extend(feats);
        Ok((
            Tensor::new(vec![1, w, d], tds)?,
            Tensor::vector(feats.to_vec()),
            Tensor::vector(cn_in),
        ))
    }

    pub fn fn1_forward(&self, s: &MclSample) -> Result<Vec<f64>> {
        Ok(self.fn1.predict(&self.inputs(s)?.0)?.into_data())
    }

    pub fn fn2_forward(&self, s: &MclSample) -> Result<Vec<f64>> {
        Ok(self.fn2.predict(&self.inputs(s)?.1)?.into_data())
    }

    pub fn cn_forward(&self, s: &MclSample) -> Result<Vec<f64>> {
        Ok(self.cn.predict(&self.inputs(s)?.2)?.into_data())
    }

    pub fn forward(&self, s: &MclSample) -> Result<MclOutput> {
        let (a, b, c) = self.inputs(s)?;
        let p1 = self.fn1.predict(&a)?.into_data();
        let p2 = self.fn2.predict(&b)?.into_data();
        let w = self.cn.predict(&c)?.into_data();
        let fused = fuse(&p1, &p2, &w)?;
        let decision = decide(&fused);
        Ok(MclOutput { p1, p2, w, fused, decision })
    }

    pub fn zero_gradients(&self) -> MclGradients {
        MclGradients {
            fn1: self.fn1.zero_gradients(),
            fn2: self.fn2.zero_gradients(),
            cn: self.cn.zero_gradients(),
        }
    }

    /// `CE(onehot(label), softmax(P))` of one sample.
    pub fn sample_loss(&self, s: &MclSample) -> Result<f64> {
        let out = self.forward(s)?;
        self.check_label(s)?;
        Ok(-safe_ln(softmax(&out.fused)[s.label]))
    }

    fn check_label(&self, s: &MclSample) -> Result<()> {
        if s.label >= self.classes() {
            return Err(Error::input(format!("label {} outside {} classes", s.label, self.classes())));
        }
        Ok(())
    }

    /// Loss of one sample; its gradients, scaled by `weight`, are added to `grads`.
    pub fn accumulate_gradients(&self, s: &MclSample, weight: f64, grads: &mut MclGradients) -> Result<f64> {
        self.check_label(s)?;
        let (a, b, c) = self.inputs(s)?;
        let acts1 = self.fn1.forward(&a)?;
        let acts2 = self.fn2.forward(&b)?;
        let acts3 = self.cn.forward(&c)?;
        let (p1, p2, w) = (acts1.output().data(), acts2.output().data(), acts3.output().data());
        let fused = fuse(p1, p2, w)?;
        let q = softmax(&fused);
        let loss = -safe_ln(q[s.label]);
        let x = p1.len();
        // d CE / d P = softmax(P) - onehot
        let gp: Vec<f64> = (0..x)
            .map(|i| weight * (q[i] - if i == s.label { 1.0 } else { 0.0 }))
            .collect();
        let g1: Vec<f64> = (0..x).map(|i| gp[i] * w[i]).collect();
        let g2: Vec<f64> = (0..x).map(|i| gp[i] * w[x + i]).collect();
        let gw: Vec<f64> = (0..2 * x).map(|j| if j < x { gp[j] * p1[j] } else { gp[j - x] * p2[j - x] }).collect();
        self.fn1.backward(&acts1, &Tensor::vector(g1), &mut grads.fn1)?;
        self.fn2.backward(&acts2, &Tensor::vector(g2), &mut grads.fn2)?;
        self.cn.backward(&acts3, &Tensor::vector(gw), &mut grads.cn)?;
        Ok(loss)
    }

    /// Mean loss over `batch` and its gradient.
    pub fn batch_gradients(&self, batch: &[&MclSample]) -> Result<(f64, MclGradients)> {
        if batch.is_empty() {
            return Err(Error::input("empty batch"));
        }
        let mut grads = self.zero_gradients();
        let mut loss = 0.0;
        let k = 1.0 / batch.len() as f64;
        for s in batch {
            loss += self.accumulate_gradients(s, 1.0, &mut grads)?;
        }
        grads.scale(k);
        Ok((loss * k, grads))
    }

    pub fn sgd_step(&mut self, grads: &MclGradients, lr: f64) -> Result<()> {
        // check every network before touching any of them
        for (net, g) in [(&self.fn1, &grads.fn1), (&self.fn2, &grads.fn2), (&self.cn, &grads.cn)] {
            let names = net.param_names();
            for (i, buf) in g.values.iter().enumerate() {
                if buf.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteGradient(names[i].clone()));
                }
            }
        }
        self.fn1.sgd_step(&grads.fn1, lr)?;
        self.fn2.sgd_step(&grads.fn2, lr)?;
        self.cn.sgd_step(&grads.cn, lr)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        ck.push_network(&self.fn1);
        ck.push_network(&self.fn2);
        ck.push_network(&self.cn);
        ck.push("norm", vec![2 + 2 * FEATURES], self.norm.to_vec());
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let model = Self {
            fn1: ck.network("fn1")?,
            fn2: ck.network("fn2")?,
            cn: ck.network("cn")?,
            norm: InputNorm::from_slice(ck.require("norm")?)?,
        };
        let (w, d) = model.window_shape();
        let x = model.classes();
        let ok = model.fn1.output_shape()? == [x]
            && model.fn2.input_shape() == [FEATURES]
            && model.cn.input_shape() == [w * d + FEATURES]
            && model.cn.output_shape()? == [2 * x];
        if !ok {
            return Err(Error::Format("MCL checkpoint networks disagree on sizes".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        self.to_checkpoint().write(path)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::read(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean loss over the epoch's batches, each taken before its update.
    pub loss_train: f64,
    /// Loss on the held-out set after the epoch, when one was given.
    pub loss_test: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MclTraining {
    pub model: MclModel,
    pub history: Vec<EpochStats>,
}

fn check_training_set(samples: &[MclSample], classes: usize) -> Result<()> {
    if let Some(s) = samples.iter().find(|s| s.label >= classes) {
        return Err(Error::input(format!("label {} outside {classes} classes", s.label)));
    }
    let mut seen = vec![false; classes];
    for s in samples {
        seen[s.label] = true;
    }
    if seen.iter().filter(|&&b| b).count() < 2 {
        return Err(Error::input("training data must contain at least two classes"));
    }
    Ok(())
}

/// Mean per-sample loss.
pub fn mean_loss(model: &MclModel, samples: &[MclSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::input("mean loss over zero samples"));
    }
    let mut total = 0.0;
    for s in samples {
        total += model.sample_loss(s)?;
    }
    Ok(total / samples.len() as f64)
}

/// Joint mini-batch training; each epoch visits the samples in a seeded
/// shuffled order. Training runs in `f64` and the final parameters are
/// rounded to `f32` so a saved checkpoint reloads to the same model.
pub fn train_mcl(samples: &[MclSample], cfg: &MclConfig) -> Result<MclTraining> {
    train_mcl_with_test(samples, None, cfg)
}

/// [`train_mcl`] that also records the loss on `test` after every epoch.
pub fn train_mcl_with_test(samples: &[MclSample], test: Option<&[MclSample]>, cfg: &MclConfig) -> Result<MclTraining> {
    cfg.validate()?;
    check_training_set(samples, cfg.classes)?;
    let mut model = MclModel::new(cfg, samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.rng_seed.wrapping_add(0x006d_636c));
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(cfg.train.epochs);
    for epoch in 0..cfg.train.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.train.batch_size) {
            let batch: Vec<&MclSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let (loss, grads) = model.batch_gradients(&batch)?;
            total += loss * batch.len() as f64;
            model.sgd_step(&grads, cfg.train.learning_rate)?;
        }
        let loss_test = match test {
            Some(t) if !t.is_empty() => Some(mean_loss(&model, t)?),
            _ => None,
        };
        history.push(EpochStats {
            epoch: epoch + 1,
            loss_train: total / samples.len() as f64,
            loss_test,
        });
    }
    for net in [&mut model.fn1, &mut model.fn2, &mut model.cn] {
        net.round_params_to_f32();
    }
    Ok(MclTraining { model, history })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][decided]`
    pub confusion: Vec<Vec<usize>>,
    /// `None` for classes absent from the test set.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub samples: usize,
}

impl Evaluation {
    pub fn from_decisions(labels: &[usize], decisions: &[usize], classes: usize) -> Result<Self> {
        if labels.is_empty() || labels.len() != decisions.len() {
            return Err(Error::input("evaluation needs equally many labels and decisions"));
        }
        let mut confusion = vec![vec![0usize; classes]; classes];
        for (&t, &d) in labels.iter().zip(decisions) {
            if t >= classes || d >= classes {
                return Err(Error::input(format!("class index outside {classes} classes")));
            }
            confusion[t][d] += 1;
        }
        let correct: usize = (0..classes).map(|i| confusion[i][i]).sum();
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let n: usize = row.iter().sum();
                (n > 0).then(|| row[i] as f64 / n as f64)
            })
            .collect();
        Ok(Self {
            accuracy: correct as f64 / labels.len() as f64,
            confusion,
            per_class_accuracy,
            samples: labels.len(),
        })
    }

    pub fn confusion_csv(&self) -> String {
        let x = self.confusion.len();
        let mut s = String::from("true");
        for j in 0..x {
            s.push_str(&format!(",pred_{j}"));
        }
        s.push('\n');
        for (i, row) in self.confusion.iter().enumerate() {
            s.push_str(&i.to_string());
            for c in row {
                s.push_str(&format!(",{c}"));
            }
            s.push('\n');
        }
        s
    }
}

pub fn evaluate(model: &MclModel, samples: &[MclSample]) -> Result<Evaluation> {
    let decisions = samples
        .iter()
        .map(|s| model.forward(s).map(|o| o.decision))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    Evaluation::from_decisions(&labels, &decisions, model.classes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(classes: usize) -> MclConfig {
        MclConfig {
            classes,
            tds_width: 8,
            doppler_bins: 6,
            fn1_branch_channels: 2,
            fn1_kernels: vec![3, 4, 5],
            fn1_conv_channels: vec![3],
            fn1_final_channels: 2,
            fn1_dense_hidden: 5,
            fn2_hidden: 3,
            cn_hidden: vec![6],
            train: TrainConfig {
                learning_rate: 0.1,
                epochs: 30,
                batch_size: 4,
                rng_seed: 9,
            },
        }
    }

    fn sample(label: usize, shift: f64) -> MclSample {
        let tds_window = (0..48)
            .map(|i| if i % 6 == label * 2 { 10.0 + shift } else { (i % 5) as f64 * 0.1 + shift })
            .collect();
        MclSample {
            tds_window,
            features: GaitFeatures::from_array([label as f64, 2.0 + label as f64, 1.0, 0.8 + 0.2 * label as f64 + shift]),
            label,
            origin: Origin::Real,
        }
    }

    fn dataset() -> Vec<MclSample> {
        (0..12).map(|i| sample(i % 3, 0.01 * i as f64)).collect()
    }

    #[test]
    fn network_sizes_follow_config() {
        assert_eq!(MclConfig::paper(5, 205).cn_inputs(), 9229);
        let desk = MclConfig::desk(3, 32);
        assert_eq!(desk.cn_inputs(), 1444);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cn = build_cn(&desk, &mut rng).unwrap();
        assert_eq!(cn.input_shape(), &[1444]);
        assert_eq!(cn.output_shape().unwrap(), vec![6]);
        let fn1 = build_fn1(&desk, &mut rng).unwrap();
        assert_eq!(fn1.output_shape().unwrap(), vec![3]);
        // 45x205 pooled four times leaves 2x12 with 32 channels
        let paper = build_fn1(&MclConfig::paper(5, 205), &mut rng).unwrap();
        assert_eq!(paper.shape_before(paper.layers().len() - 4), vec![768]);
    }

    #[test]
    fn fusion_hand_cases() {
        let p = fuse(&[0.9, 0.1], &[0.2, 0.8], &[0.4, 0.1, 0.1, 0.4]).unwrap();
        assert!((p[0] - 0.38).abs() < 1e-12 && (p[1] - 0.33).abs() < 1e-12);
        assert_eq!(decide(&p), 0);
        let p1 = [0.5, 0.3, 0.2];
        let p = fuse(&p1, &p1, &[1.0 / 6.0; 6]).unwrap();
        assert!(p.iter().zip(&p1).all(|(a, b)| (a - b / 3.0).abs() < 1e-15));
        let p = fuse(&p1, &[0.0, 0.0, 1.0], &[0.5, 0.2, 0.3, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, vec![0.25, 0.06, 0.06]);
        assert!(fuse(&p1, &p1, &[0.5; 5]).is_err());
        assert_eq!(decide(&[0.2, 0.4, 0.4]), 1);
    }

    #[test]
    fn zeroed_heads_give_uniform_outputs() {
        let data = dataset();
        let mut m = MclModel::new(&tiny(3), &data).unwrap();
        for net in [&mut m.fn1, &mut m.cn] {
            if let Some(Layer::Dense(d)) = net.layers_mut().iter_mut().rev().nth(1) {
                d.weight.value.fill(0.0);
            }
        }
        if let Layer::Rbf(r) = &mut m.fn2.layers_mut()[0] {
            r.weights.value.fill(0.0);
        }
        let out = m.forward(&data[0]).unwrap();
        assert!(out.p1.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        assert!(out.p2.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        assert!(out.w.iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn fn2_matches_hand_softmax() {
        let cfg = tiny(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut fn2 = build_fn2(&MclConfig { fn2_hidden: 1, ..cfg }, vec![vec![0.0; 4]], &mut rng).unwrap();
        if let Layer::Rbf(r) = &mut fn2.layers_mut()[0] {
            r.widths.value = vec![1.0];
            r.weights.value = vec![2.0, -1.0];
            r.bias.value = vec![0.5, 0.25];
        }
        // unit distance from the center: h = exp(-1/2)
        let out = fn2.predict(&Tensor::vector(vec![1.0, 0.0, 0.0, 0.0])).unwrap();
        let h = (-0.5f64).exp();
        let z = [0.5 + 2.0 * h, 0.25 - h];
        let e = [z[0].exp(), z[1].exp()];
        assert!((out.data()[0] - e[0] / (e[0] + e[1])).abs() < 1e-9);
        assert!((out.data()[1] - e[1] / (e[0] + e[1])).abs() < 1e-9);
    }

    #[test]
    fn outputs_are_distributions_and_bad_inputs_fail() {
        let data = dataset();
        let m = MclModel::new(&tiny(3), &data).unwrap();
        let out = m.forward(&data[4]).unwrap();
        for dist in [&out.p1, &out.p2, &out.w] {
            assert!(dist.iter().all(|&p| p >= 0.0));
            assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(out.fused.iter().sum::<f64>() <= 1.0 + 1e-12);

        let mut short = data[0].clone();
        short.tds_window.pop();
        assert!(matches!(m.forward(&short), Err(Error::Shape { .. })));
        let mut nan = data[0].clone();
        nan.features.f4 = f64::NAN;
        assert!(m.forward(&nan).is_err());
    }

    #[test]
    fn training_fits_and_is_deterministic() {
        let data = dataset();
        let a = train_mcl(&data, &tiny(3)).unwrap();
        let b = train_mcl(&data, &tiny(3)).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.model, b.model);
        let first = a.history[0].loss_train;
        let last = a.history.last().unwrap().loss_train;
        assert!(a.history.iter().all(|h| h.loss_test.is_none()));
        assert!(last < first, "{first} -> {last}");
        let ev = evaluate(&a.model, &data).unwrap();
        assert_eq!(ev.accuracy, 1.0);

        let single: Vec<MclSample> = (0..4).map(|i| sample(1, i as f64)).collect();
        assert!(train_mcl(&single, &tiny(3)).is_err());
    }

    #[test]
    fn evaluation_counts() {
        let labels: Vec<usize> = (0..10).map(|i| i % 5).collect();
        let ev = Evaluation::from_decisions(&labels, &[0; 10], 5).unwrap();
        assert_eq!(ev.accuracy, 0.2);
        for (i, row) in ev.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), 2);
            assert_eq!(row[0], 2, "row {i}");
        }
        let ev = Evaluation::from_decisions(&labels, &labels, 5).unwrap();
        assert_eq!(ev.accuracy, 1.0);
        assert_eq!(ev.per_class_accuracy, vec![Some(1.0); 5]);
        assert!(ev.confusion_csv().starts_with("true,pred_0,pred_1"));
        let ev = Evaluation::from_decisions(&[0, 0], &[0, 1], 3).unwrap();
        assert_eq!(ev.per_class_accuracy, vec![Some(0.5), None, None]);
    }

    #[test]
    fn checkpoint_round_trip() {
        let data = dataset();
        let m = MclModel::new(&tiny(3), &data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mcl.mdck");
        m.save(&p).unwrap();
        assert_eq!(MclModel::load(&p).unwrap(), m);

        let trained = train_mcl(&data, &tiny(3)).unwrap().model;
        trained.save(&p).unwrap();
        assert_eq!(MclModel::load(&p).unwrap(), trained);
    }
}
