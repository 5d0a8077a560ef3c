use super::layers::{f32_round, Layer, Param};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Sequential stack of layers with a fixed input shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    name: String,
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
}

/// Inputs and outputs of every layer from one forward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    values: Vec<Tensor>,
}

impl Activations {
    pub fn output(&self) -> &Tensor {
        self.values.last().expect("activations hold at least the input")
    }

    pub fn input(&self) -> &Tensor {
        &self.values[0]
    }
}

/// One gradient buffer per parameter, in [`Network::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub values: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for v in self.values.iter_mut().flatten() {
            *v *= k;
        }
    }

    pub fn zero(&mut self) {
        for v in self.values.iter_mut().flatten() {
            *v = 0.0;
        }
    }
}

impl Network {
    pub fn new(name: impl Into<String>, input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self> {
        let net = Self {
            name: name.into(),
            input_shape,
            layers,
        };
        net.output_shape()?;
        Ok(net)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// `name/NN.kind`, used in errors and checkpoints.
    pub fn layer_name(&self, i: usize) -> String {
        format!("{}/{i:02}.{}", self.name, self.layers[i].kind())
    }

    pub fn output_shape(&self) -> Result<Vec<usize>> {
        let mut shape = self.input_shape.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            shape = layer
                .output_shape(&shape)
                .map_err(|detail| Error::shape(self.layer_name(i), detail))?;
        }
        Ok(shape)
    }

    /// Input shape of layer `i`.
    pub fn shape_before(&self, i: usize) -> Vec<usize> {
        let mut shape = self.input_shape.clone();
        for layer in &self.layers[..i] {
            shape = layer.output_shape(&shape).expect("validated at construction");
        }
        shape
    }

    pub fn forward(&self, x: &Tensor) -> Result<Activations> {
        if x.shape() != self.input_shape.as_slice() {
            let name = if self.layers.is_empty() {
                self.name.clone()
            } else {
                self.layer_name(0)
            };
            return Err(Error::shape(
                name,
                format!("network input {:?} does not match {:?}", x.shape(), self.input_shape),
            ));
        }
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(x.clone());
        for layer in &self.layers {
            let y = layer.forward(values.last().unwrap())?;
            values.push(y);
        }
        Ok(Activations { values })
    }

    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        if x.shape() != self.input_shape.as_slice() {
            return self.forward(x).map(|a| a.output().clone());
        }
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.forward(&cur)?;
        }
        Ok(cur)
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            values: self.params().iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    /// Backpropagates `grad_out` through a cached pass, accumulating into
    /// `grads`; returns the gradient w.r.t. the network input.
    pub fn backward(&self, acts: &Activations, grad_out: &Tensor, grads: &mut Gradients) -> Result<Tensor> {
        if acts.values.len() != self.layers.len() + 1 {
            return Err(Error::MissingCache(format!(
                "{}: cache has {} entries for {} layers",
                self.name,
                acts.values.len(),
                self.layers.len()
            )));
        }
        if grads.values.len() != self.param_count() {
            return Err(Error::MissingCache(format!(
                "{}: gradient set has {} buffers, network has {} params",
                self.name,
                grads.values.len(),
                self.param_count()
            )));
        }
        if grad_out.shape() != acts.output().shape() {
            return Err(Error::shape(
                self.name.clone(),
                format!("upstream gradient {:?} vs output {:?}", grad_out.shape(), acts.output().shape()),
            ));
        }
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for layer in &self.layers {
            offsets.push(off);
            off += layer.params().len();
        }
        let mut g = grad_out.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let n = layer.params().len();
            let slot = &mut grads.values[offsets[i]..offsets[i] + n];
            g = layer.backward(&acts.values[i], &acts.values[i + 1], &g, slot);
        }
        Ok(g)
    }

    pub fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    /// Rounds every parameter to the nearest `f32`, the checkpoint precision.
    pub fn round_params_to_f32(&mut self) {
        for p in self.params_mut() {
            for v in p.value.iter_mut() {
                *v = f32_round(*v);
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.params().len()).sum()
    }

    /// Fully qualified names, e.g. `fn1/03.conv2d.weight`.
    pub fn param_names(&self) -> Vec<String> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                let prefix = self.layer_name(i);
                l.param_names().into_iter().map(move |p| format!("{prefix}.{p}"))
            })
            .collect()
    }

    pub fn scalar_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Plain gradient descent, `p <- p - lr * g`.
    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        let names = self.param_names();
        let mut params = self.params_mut();
        sgd_step(&mut params, &names, grads, lr)
    }
}

/// `p <- p - lr * g` for every parameter; fails before touching anything if a
/// gradient is non-finite.
pub fn sgd_step(params: &mut [&mut Param], names: &[String], grads: &Gradients, lr: f64) -> Result<()> {
    if params.len() != grads.values.len() {
        return Err(Error::input(format!(
            "{} parameters but {} gradient buffers",
            params.len(),
            grads.values.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(&grads.values).enumerate() {
        if p.len() != g.len() {
            return Err(Error::input(format!("gradient for {} has wrong length", names[i])));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient(names.get(i).cloned().unwrap_or_default()));
        }
    }
    if lr == 0.0 {
        return Ok(());
    }
    for (p, g) in params.iter_mut().zip(&grads.values) {
        for (v, d) in p.value.iter_mut().zip(g) {
            *v -= lr * d;
        }
    }
    Ok(())
}
