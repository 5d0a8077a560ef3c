use crate::error::{Error, Result};

/// Dense row-major array of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::input(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    /// Rank-1 tensor over `data`.
    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::input(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        self.shape = shape;
        Ok(self)
    }

    /// Stacks equally shaped `[1, H, W]` or `[H, W]` planes along a new
    /// leading channel axis.
    pub fn stack_channels(planes: &[&Tensor]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::input("cannot stack zero planes"))?;
        let hw: Vec<usize> = first.shape.iter().rev().take(2).rev().copied().collect();
        let plane = first.len();
        let mut data = Vec::with_capacity(plane * planes.len());
        for p in planes {
            if p.len() != plane {
                return Err(Error::input("stacked planes differ in size"));
            }
            data.extend_from_slice(&p.data);
        }
        let mut shape = vec![planes.len()];
        shape.extend(hw);
        Tensor::new(shape, data)
    }

    /// Channel `c` of a `[C, H, W]` tensor as a `[1, H, W]` tensor.
    pub fn channel(&self, c: usize) -> Tensor {
        let plane = self.shape[1..].iter().product::<usize>();
        let mut shape = self.shape.clone();
        shape[0] = 1;
        Tensor {
            shape,
            data: self.data[c * plane..(c + 1) * plane].to_vec(),
        }
    }
}
