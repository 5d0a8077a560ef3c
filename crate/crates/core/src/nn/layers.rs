use rand::Rng;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Trainable array with its local name (`weight`, `centers`, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub value: Vec<f64>,
}

impl Param {
    pub fn zeros(name: &'static str, shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            name,
            shape,
            value: vec![0.0; n],
        }
    }

    /// Uniform in `[-limit, limit]`, rounded to `f32` so checkpoints are exact.
    pub fn uniform(name: &'static str, shape: Vec<usize>, limit: f64, rng: &mut impl Rng) -> Self {
        let n = shape.iter().product();
        let value = (0..n)
            .map(|_| f32_round(rng.random_range(-limit..=limit)))
            .collect();
        Self { name, shape, value }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

pub(crate) fn f32_round(v: f64) -> f64 {
    v as f32 as f64
}

/// Fan-in scaled limit for ReLU-family layers.
fn fan_in_limit(fan_in: usize) -> f64 {
    (6.0 / fan_in.max(1) as f64).sqrt()
}

/// 2-D convolution over `[C, H, W]` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub stride: usize,
    /// Zero padding `(top, left, bottom, right)`.
    pub padding: (usize, usize, usize, usize),
    /// `[out, in, kh, kw]`
    pub weight: Param,
    pub bias: Param,
}

impl Conv2d {
    /// Square kernel with padding that keeps `H x W` (extra row/column at the
    /// bottom/right for even kernels).
    pub fn same(in_channels: usize, out_channels: usize, kernel: usize, rng: &mut impl Rng) -> Self {
        let before = (kernel - 1) / 2;
        let after = kernel - 1 - before;
        Self::with_geometry(in_channels, out_channels, (kernel, kernel), 1, (before, before, after, after), rng)
    }

    pub fn valid(in_channels: usize, out_channels: usize, kernel: usize, rng: &mut impl Rng) -> Self {
        Self::with_geometry(in_channels, out_channels, (kernel, kernel), 1, (0, 0, 0, 0), rng)
    }

    pub fn with_geometry(
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        stride: usize,
        padding: (usize, usize, usize, usize),
        rng: &mut impl Rng,
    ) -> Self {
        let fan_in = in_channels * kernel.0 * kernel.1;
        Self {
            in_channels,
            out_channels,
            kernel,
            stride: stride.max(1),
            padding,
            weight: Param::uniform(
                "weight",
                vec![out_channels, in_channels, kernel.0, kernel.1],
                fan_in_limit(fan_in),
                rng,
            ),
            bias: Param::zeros("bias", vec![out_channels]),
        }
    }

    fn out_hw(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        let (pt, pl, pb, pr) = self.padding;
        let (kh, kw) = self.kernel;
        let hp = h + pt + pb;
        let wp = w + pl + pr;
        if hp < kh || wp < kw {
            return None;
        }
        Some(((hp - kh) / self.stride + 1, (wp - kw) / self.stride + 1))
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, String> {
        match input {
            [c, h, w] if *c == self.in_channels => self
                .out_hw(*h, *w)
                .map(|(oh, ow)| vec![self.out_channels, oh, ow])
                .ok_or_else(|| format!("input {h}x{w} smaller than kernel {:?}", self.kernel)),
            _ => Err(format!(
                "expected [{}, H, W], got {input:?}",
                self.in_channels
            )),
        }
    }

    /// Patch matrix `[C * kh * kw, oh * ow]`: row `(c, ky, kx)` holds the
    /// input value under that kernel tap for every output position (zero in
    /// the padding).
    fn im2col(&self, x: &Tensor, oh: usize, ow: usize) -> Vec<f64> {
        let (c_in, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (kh, kw) = self.kernel;
        let (pt, pl) = (self.padding.0, self.padding.1);
        let s = self.stride;
        let p = oh * ow;
        let xd = x.data();
        let mut col = vec![0.0; c_in * kh * kw * p];
        for c in 0..c_in {
            for ky in 0..kh {
                for kx in 0..kw {
                    let row = &mut col[((c * kh + ky) * kw + kx) * p..][..p];
                    for oy in 0..oh {
                        let iy = oy * s + ky;
                        if iy < pt || iy - pt >= h {
                            continue;
                        }
                        let src = &xd[(c * h + iy - pt) * w..][..w];
                        let dst = &mut row[oy * ow..(oy + 1) * ow];
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let ix = ox * s + kx;
                            if ix >= pl && ix - pl < w {
                                *d = src[ix - pl];
                            }
                        }
                    }
                }
            }
        }
        col
    }

    /// Adds a patch-matrix gradient back onto input positions.
    fn col2im(&self, gcol: &[f64], shape: &[usize], oh: usize, ow: usize) -> Vec<f64> {
        let (c_in, h, w) = (shape[0], shape[1], shape[2]);
        let (kh, kw) = self.kernel;
        let (pt, pl) = (self.padding.0, self.padding.1);
        let s = self.stride;
        let p = oh * ow;
        let mut gx = vec![0.0; c_in * h * w];
        for c in 0..c_in {
            for ky in 0..kh {
                for kx in 0..kw {
                    let row = &gcol[((c * kh + ky) * kw + kx) * p..][..p];
                    for oy in 0..oh {
                        let iy = oy * s + ky;
                        if iy < pt || iy - pt >= h {
                            continue;
                        }
                        let dst = &mut gx[(c * h + iy - pt) * w..][..w];
                        for (ox, g) in row[oy * ow..(oy + 1) * ow].iter().enumerate() {
                            let ix = ox * s + kx;
                            if ix >= pl && ix - pl < w {
                                dst[ix - pl] += g;
                            }
                        }
                    }
                }
            }
        }
        gx
    }

    fn forward(&self, x: &Tensor) -> Tensor {
        let (h, w) = (x.shape()[1], x.shape()[2]);
        let (oh, ow) = self.out_hw(h, w).unwrap();
        let p = oh * ow;
        let taps = self.in_channels * self.kernel.0 * self.kernel.1;
        let col = self.im2col(x, oh, ow);
        let mut out = vec![0.0; self.out_channels * p];
        for (o, plane) in out.chunks_exact_mut(p).enumerate() {
            plane.fill(self.bias.value[o]);
            let wrow = &self.weight.value[o * taps..(o + 1) * taps];
            for (wv, crow) in wrow.iter().zip(col.chunks_exact(p)) {
                if *wv == 0.0 {
                    continue;
                }
                for (acc, v) in plane.iter_mut().zip(crow) {
                    *acc += wv * v;
                }
            }
        }
        Tensor::new(vec![self.out_channels, oh, ow], out).unwrap()
    }

    fn backward(&self, x: &Tensor, gy: &Tensor, grads: &mut [Vec<f64>]) -> Tensor {
        let (oh, ow) = (gy.shape()[1], gy.shape()[2]);
        let p = oh * ow;
        let taps = self.in_channels * self.kernel.0 * self.kernel.1;
        let col = self.im2col(x, oh, ow);
        let gd = gy.data();
        let mut gcol = vec![0.0; taps * p];
        let (gw, rest) = grads.split_at_mut(1);
        for (o, gplane) in gd.chunks_exact(p).enumerate() {
            rest[0][o] += gplane.iter().sum::<f64>();
            let wrow = &self.weight.value[o * taps..(o + 1) * taps];
            let gwrow = &mut gw[0][o * taps..(o + 1) * taps];
            for ((gwv, wv), (crow, gcrow)) in gwrow
                .iter_mut()
                .zip(wrow)
                .zip(col.chunks_exact(p).zip(gcol.chunks_exact_mut(p)))
            {
                *gwv += gplane.iter().zip(crow).map(|(g, v)| g * v).sum::<f64>();
                for (d, g) in gcrow.iter_mut().zip(gplane) {
                    *d += wv * g;
                }
            }
        }
        Tensor::new(x.shape().to_vec(), self.col2im(&gcol, x.shape(), oh, ow)).unwrap()
    }
}

/// Fully connected layer on rank-1 inputs, `W` is `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Param,
    pub bias: Param,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        Self {
            weight: Param::uniform("weight", vec![outputs, inputs], fan_in_limit(inputs), rng),
            bias: Param::zeros("bias", vec![outputs]),
        }
    }

    /// All-zero layer; its output is the (zero) bias regardless of input.
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Param::zeros("weight", vec![outputs, inputs]),
            bias: Param::zeros("bias", vec![outputs]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape[0]
    }

    fn forward(&self, x: &Tensor) -> Tensor {
        let n_in = self.inputs();
        let out = self
            .weight
            .value
            .chunks_exact(n_in)
            .zip(&self.bias.value)
            .map(|(row, b)| b + row.iter().zip(x.data()).map(|(w, v)| w * v).sum::<f64>())
            .collect();
        Tensor::vector(out)
    }

    fn backward(&self, x: &Tensor, gy: &Tensor, grads: &mut [Vec<f64>]) -> Tensor {
        let n_in = self.inputs();
        let mut gx = vec![0.0; n_in];
        let (gw, rest) = grads.split_at_mut(1);
        for (o, &g) in gy.data().iter().enumerate() {
            rest[0][o] += g;
            if g == 0.0 {
                continue;
            }
            let wrow = &self.weight.value[o * n_in..(o + 1) * n_in];
            let gwrow = &mut gw[0][o * n_in..(o + 1) * n_in];
            for ((gwv, xv), (gxv, wv)) in gwrow.iter_mut().zip(x.data()).zip(gx.iter_mut().zip(wrow)) {
                *gwv += g * xv;
                *gxv += g * wv;
            }
        }
        Tensor::new(x.shape().to_vec(), gx).unwrap()
    }
}

/// Gaussian radial-basis layer: `h_j = exp(-|f - v_j|^2 / (2 sigma_j^2))`,
/// `out_i = c0_i + sum_j C_ji h_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rbf {
    /// `[q, d]`
    pub centers: Param,
    /// `[q]`
    pub widths: Param,
    /// `[q, X]`
    pub weights: Param,
    /// `[X]`
    pub bias: Param,
}

impl Rbf {
    pub fn new(centers: Vec<Vec<f64>>, widths: Vec<f64>, outputs: usize, rng: &mut impl Rng) -> Result<Self> {
        let q = centers.len();
        let d = centers.first().map_or(0, Vec::len);
        if q == 0 || d == 0 || centers.iter().any(|c| c.len() != d) || widths.len() != q {
            return Err(Error::InvalidParameter(
                "RBF layer needs q equal-length centers and q widths".into(),
            ));
        }
        let layer = Self {
            centers: Param {
                name: "centers",
                shape: vec![q, d],
                value: centers.concat().into_iter().map(f32_round).collect(),
            },
            widths: Param {
                name: "widths",
                shape: vec![q],
                value: widths.into_iter().map(f32_round).collect(),
            },
            weights: Param::uniform("weights", vec![q, outputs], fan_in_limit(q), rng),
            bias: Param::zeros("bias", vec![outputs]),
        };
        layer.check_widths()?;
        Ok(layer)
    }

    pub fn hidden(&self) -> usize {
        self.centers.shape[0]
    }

    pub fn input_dim(&self) -> usize {
        self.centers.shape[1]
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape[1]
    }

    fn check_widths(&self) -> Result<()> {
        if let Some(j) = self.widths.value.iter().position(|s| !(*s > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "RBF width sigma_{j} = {} must be > 0",
                self.widths.value[j]
            )));
        }
        Ok(())
    }

    /// Hidden activations and squared distances for input `f`.
    pub fn hidden_activations(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.input_dim();
        let dist2: Vec<f64> = self
            .centers
            .value
            .chunks_exact(d)
            .map(|v| v.iter().zip(f).map(|(a, b)| (b - a) * (b - a)).sum())
            .collect();
        let h = dist2
            .iter()
            .zip(&self.widths.value)
            .map(|(r2, s)| (-r2 / (2.0 * s * s)).exp())
            .collect();
        (h, dist2)
    }

    pub fn forward_vec(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_widths()?;
        if f.len() != self.input_dim() {
            return Err(Error::input(format!(
                "RBF input has {} values, centers have {}",
                f.len(),
                self.input_dim()
            )));
        }
        let (h, _) = self.hidden_activations(f);
        let x = self.outputs();
        let mut out = self.bias.value.clone();
        for (hj, crow) in h.iter().zip(self.weights.value.chunks_exact(x)) {
            for (o, c) in out.iter_mut().zip(crow) {
                *o += c * hj;
            }
        }
        Ok(out)
    }

    fn backward(&self, x: &Tensor, gy: &Tensor, grads: &mut [Vec<f64>]) -> Tensor {
        let f = x.data();
        let d = self.input_dim();
        let n_out = self.outputs();
        let (h, dist2) = self.hidden_activations(f);
        let g = gy.data();
        let mut gx = vec![0.0; d];
        for j in 0..self.hidden() {
            let crow = &self.weights.value[j * n_out..(j + 1) * n_out];
            let gh: f64 = crow.iter().zip(g).map(|(c, gi)| c * gi).sum();
            for (gc, gi) in grads[2][j * n_out..(j + 1) * n_out].iter_mut().zip(g) {
                *gc += gi * h[j];
            }
            let s = self.widths.value[j];
            let s2 = s * s;
            grads[1][j] += gh * h[j] * dist2[j] / (s2 * s);
            let v = &self.centers.value[j * d..(j + 1) * d];
            for k in 0..d {
                let dh_dv = h[j] * (f[k] - v[k]) / s2;
                grads[0][j * d + k] += gh * dh_dv;
                gx[k] -= gh * dh_dv;
            }
        }
        for (gb, gi) in grads[3].iter_mut().zip(g) {
            *gb += gi;
        }
        Tensor::new(x.shape().to_vec(), gx).unwrap()
    }
}

/// Parallel same-padded convolutions of different kernel sizes whose outputs
/// are concatenated along channels.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiScaleConv {
    pub branches: Vec<Conv2d>,
}

impl MultiScaleConv {
    pub fn new(in_channels: usize, channels_per_branch: usize, kernels: &[usize], rng: &mut impl Rng) -> Self {
        Self {
            branches: kernels
                .iter()
                .map(|&k| Conv2d::same(in_channels, channels_per_branch, k, rng))
                .collect(),
        }
    }

    pub fn out_channels(&self) -> usize {
        self.branches.iter().map(|b| b.out_channels).sum()
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, String> {
        let mut hw = None;
        for (i, b) in self.branches.iter().enumerate() {
            let s = b.output_shape(input).map_err(|e| format!("branch {i}: {e}"))?;
            match hw {
                None => hw = Some((s[1], s[2])),
                Some(prev) if prev != (s[1], s[2]) => {
                    return Err(format!("branch {i} output {}x{} disagrees with {prev:?}", s[1], s[2]))
                }
                _ => {}
            }
        }
        let (h, w) = hw.ok_or_else(|| "multi-scale layer has no branches".to_string())?;
        Ok(vec![self.out_channels(), h, w])
    }

    fn forward(&self, x: &Tensor) -> Tensor {
        let outs: Vec<Tensor> = self.branches.iter().map(|b| b.forward(x)).collect();
        let (h, w) = (outs[0].shape()[1], outs[0].shape()[2]);
        let data = outs.into_iter().flat_map(Tensor::into_data).collect();
        Tensor::new(vec![self.out_channels(), h, w], data).unwrap()
    }

    fn backward(&self, x: &Tensor, gy: &Tensor, grads: &mut [Vec<f64>]) -> Tensor {
        let (h, w) = (gy.shape()[1], gy.shape()[2]);
        let mut gx = Tensor::zeros(x.shape());
        let mut offset = 0;
        for (i, b) in self.branches.iter().enumerate() {
            let n = b.out_channels * h * w;
            let g = Tensor::new(vec![b.out_channels, h, w], gy.data()[offset..offset + n].to_vec()).unwrap();
            offset += n;
            let part = b.backward(x, &g, &mut grads[2 * i..2 * i + 2]);
            for (a, v) in gx.data_mut().iter_mut().zip(part.data()) {
                *a += v;
            }
        }
        gx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv2d(Conv2d),
    Dense(Dense),
    Rbf(Rbf),
    MultiScale(MultiScaleConv),
    Relu,
    LeakyRelu(f64),
    Sigmoid,
    /// Softmax over every element of the input.
    Softmax,
    Flatten,
    /// Non-overlapping `size x size` max pooling, remainder dropped.
    MaxPool(usize),
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Conv2d(_) => "conv2d",
            Layer::Dense(_) => "dense",
            Layer::Rbf(_) => "rbf",
            Layer::MultiScale(_) => "mscale",
            Layer::Relu => "relu",
            Layer::LeakyRelu(_) => "leaky_relu",
            Layer::Sigmoid => "sigmoid",
            Layer::Softmax => "softmax",
            Layer::Flatten => "flatten",
            Layer::MaxPool(_) => "maxpool",
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, String> {
        match self {
            Layer::Conv2d(c) => c.output_shape(input),
            Layer::MultiScale(m) => m.output_shape(input),
            Layer::Dense(d) => match input {
                [n] if *n == d.inputs() => Ok(vec![d.outputs()]),
                _ => Err(format!("expected [{}], got {input:?}", d.inputs())),
            },
            Layer::Rbf(r) => match input {
                [n] if *n == r.input_dim() => Ok(vec![r.outputs()]),
                _ => Err(format!("expected [{}], got {input:?}", r.input_dim())),
            },
            Layer::Flatten => Ok(vec![input.iter().product()]),
            Layer::MaxPool(p) => match input {
                [c, h, w] if *p >= 1 && h / p >= 1 && w / p >= 1 => Ok(vec![*c, h / p, w / p]),
                _ => Err(format!("cannot pool {input:?} by {p}")),
            },
            _ => Ok(input.to_vec()),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(match self {
            Layer::Conv2d(c) => c.forward(x),
            Layer::MultiScale(m) => m.forward(x),
            Layer::Dense(d) => d.forward(x),
            Layer::Rbf(r) => Tensor::vector(r.forward_vec(x.data())?),
            Layer::Relu => map(x, |v| v.max(0.0)),
            Layer::LeakyRelu(a) => map(x, |v| if v > 0.0 { v } else { a * v }),
            Layer::Sigmoid => map(x, sigmoid),
            Layer::Softmax => Tensor::new(x.shape().to_vec(), softmax(x.data()))?,
            Layer::Flatten => x.clone().reshape(vec![x.len()])?,
            Layer::MaxPool(p) => max_pool(x, *p),
        })
    }

    /// Gradient w.r.t. the input; parameter gradients are added into `grads`.
    pub fn backward(&self, x: &Tensor, y: &Tensor, gy: &Tensor, grads: &mut [Vec<f64>]) -> Tensor {
        match self {
            Layer::Conv2d(c) => c.backward(x, gy, grads),
            Layer::MultiScale(m) => m.backward(x, gy, grads),
            Layer::Dense(d) => d.backward(x, gy, grads),
            Layer::Rbf(r) => r.backward(x, gy, grads),
            Layer::Relu => zip_map(x, gy, |v, g| if v > 0.0 { g } else { 0.0 }),
            Layer::LeakyRelu(a) => zip_map(x, gy, |v, g| if v > 0.0 { g } else { a * g }),
            Layer::Sigmoid => zip_map(y, gy, |s, g| g * s * (1.0 - s)),
            Layer::Softmax => {
                let dot: f64 = y.data().iter().zip(gy.data()).map(|(s, g)| s * g).sum();
                zip_map(y, gy, |s, g| s * (g - dot))
            }
            Layer::Flatten => gy.clone().reshape(x.shape().to_vec()).unwrap(),
            Layer::MaxPool(p) => max_pool_backward(x, gy, *p),
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        match self {
            Layer::Conv2d(c) => vec![&c.weight, &c.bias],
            Layer::Dense(d) => vec![&d.weight, &d.bias],
            Layer::Rbf(r) => vec![&r.centers, &r.widths, &r.weights, &r.bias],
            Layer::MultiScale(m) => m.branches.iter().flat_map(|b| [&b.weight, &b.bias]).collect(),
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Layer::Conv2d(c) => vec![&mut c.weight, &mut c.bias],
            Layer::Dense(d) => vec![&mut d.weight, &mut d.bias],
            Layer::Rbf(r) => vec![&mut r.centers, &mut r.widths, &mut r.weights, &mut r.bias],
            Layer::MultiScale(m) => m
                .branches
                .iter_mut()
                .flat_map(|b| [&mut b.weight, &mut b.bias])
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Param names as stored in checkpoints, matching [`Layer::params`] order.
    pub fn param_names(&self) -> Vec<String> {
        match self {
            Layer::MultiScale(m) => (0..m.branches.len())
                .flat_map(|i| [format!("{i}.weight"), format!("{i}.bias")])
                .collect(),
            _ => self.params().iter().map(|p| p.name.to_string()).collect(),
        }
    }
}

fn map(x: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::new(x.shape().to_vec(), x.data().iter().map(|&v| f(v)).collect()).unwrap()
}

fn zip_map(a: &Tensor, g: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    Tensor::new(
        a.shape().to_vec(),
        a.data().iter().zip(g.data()).map(|(&v, &d)| f(v, d)).collect(),
    )
    .unwrap()
}

/// Index of the (first) maximum of each pooling window, in input coordinates.
fn pool_argmax(x: &Tensor, p: usize) -> (Vec<usize>, [usize; 3]) {
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (oh, ow) = (h / p, w / p);
    let xd = x.data();
    let mut idx = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = ch * h * w + oy * p * w + ox * p;
                for dy in 0..p {
                    for dx in 0..p {
                        let i = ch * h * w + (oy * p + dy) * w + ox * p + dx;
                        if xd[i] > xd[best] {
                            best = i;
                        }
                    }
                }
                idx.push(best);
            }
        }
    }
    (idx, [c, oh, ow])
}

fn max_pool(x: &Tensor, p: usize) -> Tensor {
    let (idx, shape) = pool_argmax(x, p);
    Tensor::new(shape.to_vec(), idx.iter().map(|&i| x.data()[i]).collect()).unwrap()
}

fn max_pool_backward(x: &Tensor, gy: &Tensor, p: usize) -> Tensor {
    let (idx, _) = pool_argmax(x, p);
    let mut gx = Tensor::zeros(x.shape());
    for (i, g) in idx.iter().zip(gy.data()) {
        gx.data_mut()[*i] += g;
    }
    gx
}
