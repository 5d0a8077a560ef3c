//! `MDCK` checkpoints.
//!
//! Layout: magic `MDCK`, `u32` version, `u32` entry count, then per entry a
//! `u16` name length, the UTF-8 name, a `u8` rank, `rank` `u32` dims and the
//! `f32` payload, all little-endian.
//!
//! A network `ns` is stored as `ns/input_shape` followed by one or more
//! entries per layer named `ns/NN.kind[.param]`. Parameter-free layers get a
//! single entry holding their hyperparameters (pool size, leak slope) or
//! nothing. Convolutions carry a `geom` entry `[stride, top, left, bottom,
//! right]` next to their weights. Layer kinds are recovered from the names.

use std::collections::BTreeMap;
use std::path::Path;

use super::layers::{Conv2d, Dense, Layer, MultiScaleConv, Param, Rbf};
use super::network::Network;
use crate::error::{Error, Result};
use crate::formats::{put_f32, put_u32, write_atomic, Reader};

pub const MAGIC: &[u8; 4] = b"MDCK";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub entries: Vec<Entry>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, dims: Vec<usize>, values: Vec<f64>) {
        self.entries.push(Entry {
            name: name.into(),
            dims,
            values,
        });
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Entry values, or a format error naming the missing entry.
    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.get(name)
            .map(|e| e.values.as_slice())
            .ok_or_else(|| Error::Format(format!("checkpoint has no entry `{name}`")))
    }

    pub fn push_network(&mut self, net: &Network) {
        let ns = net.name();
        let shape = net.input_shape();
        self.push(
            format!("{ns}/input_shape"),
            vec![shape.len()],
            shape.iter().map(|&d| d as f64).collect(),
        );
        for (i, layer) in net.layers().iter().enumerate() {
            let base = net.layer_name(i);
            match layer {
                Layer::Conv2d(c) => push_conv(self, &base, c),
                Layer::MultiScale(m) => {
                    for (b, conv) in m.branches.iter().enumerate() {
                        push_conv(self, &format!("{base}.{b}"), conv);
                    }
                }
                Layer::Dense(_) | Layer::Rbf(_) => {
                    for p in layer.params() {
                        self.push(format!("{base}.{}", p.name), p.shape.clone(), p.value.clone());
                    }
                }
                Layer::MaxPool(s) => self.push(base, vec![1], vec![*s as f64]),
                Layer::LeakyRelu(a) => self.push(base, vec![1], vec![*a]),
                Layer::Relu | Layer::Sigmoid | Layer::Softmax | Layer::Flatten => self.push(base, vec![0], Vec::new()),
            }
        }
    }

    /// Rebuilds network `ns` from its entries.
    pub fn network(&self, ns: &str) -> Result<Network> {
        let prefix = format!("{ns}/");
        let shape = self
            .require(&format!("{prefix}input_shape"))?
            .iter()
            .map(|&d| d as usize)
            .collect();
        let mut groups: BTreeMap<usize, (String, BTreeMap<String, &Entry>)> = BTreeMap::new();
        for e in &self.entries {
            let Some(rest) = e.name.strip_prefix(&prefix) else { continue };
            if rest == "input_shape" {
                continue;
            }
            let mut parts = rest.splitn(3, '.');
            let index: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Format(format!("bad layer entry name `{}`", e.name)))?;
            let kind = parts
                .next()
                .ok_or_else(|| Error::Format(format!("layer entry `{}` has no kind", e.name)))?
                .to_string();
            let field = parts.next().unwrap_or("").to_string();
            let group = groups.entry(index).or_insert_with(|| (kind.clone(), BTreeMap::new()));
            if group.0 != kind {
                return Err(Error::Format(format!("layer {index} of {ns} has mixed kinds")));
            }
            group.1.insert(field, e);
        }
        if groups.keys().copied().ne(0..groups.len()) {
            return Err(Error::Format(format!("layer indices of {ns} are not contiguous")));
        }
        let layers = groups
            .into_values()
            .map(|(kind, fields)| build_layer(&kind, &fields))
            .collect::<Result<Vec<_>>>()?;
        Network::new(ns, shape, layers)
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        put_u32(&mut out, self.entries.len() as u32);
        for e in &self.entries {
            let name = e.name.as_bytes();
            let len = u16::try_from(name.len())
                .map_err(|_| Error::input(format!("entry name too long: {}", e.name)))?;
            let rank = u8::try_from(e.dims.len())
                .map_err(|_| Error::input(format!("entry rank too large: {}", e.name)))?;
            if e.dims.iter().product::<usize>() != e.values.len() {
                return Err(Error::input(format!("entry {} dims disagree with payload", e.name)));
            }
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(name);
            out.push(rank);
            for &d in &e.dims {
                put_u32(&mut out, d as u32);
            }
            for &v in &e.values {
                put_f32(&mut out, v);
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "MDCK");
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let count = r.u32()? as usize;
        let mut entries = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let len = r.u16()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| Error::Format("entry name is not UTF-8".into()))?;
            let rank = r.u8()? as usize;
            let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| Error::Format(format!("entry {name}: size overflow")))?;
            let values = r.f32s(n)?;
            entries.push(Entry { name, dims, values });
        }
        if r.remaining() != 0 {
            return Err(Error::Format(format!("MDCK: {} trailing bytes", r.remaining())));
        }
        Ok(Self { entries })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.encode()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

fn push_conv(ck: &mut Checkpoint, base: &str, c: &Conv2d) {
    let (t, l, b, r) = c.padding;
    ck.push(
        format!("{base}.geom"),
        vec![5],
        [c.stride, t, l, b, r].iter().map(|&v| v as f64).collect(),
    );
    ck.push(format!("{base}.weight"), c.weight.shape.clone(), c.weight.value.clone());
    ck.push(format!("{base}.bias"), c.bias.shape.clone(), c.bias.value.clone());
}

fn field<'a>(fields: &BTreeMap<String, &'a Entry>, name: &str, kind: &str) -> Result<&'a Entry> {
    fields
        .get(name)
        .copied()
        .ok_or_else(|| Error::Format(format!("{kind} layer is missing `{name}`")))
}

fn param(e: &Entry, name: &'static str, rank: usize) -> Result<Param> {
    if e.dims.len() != rank {
        return Err(Error::Format(format!("{} should have rank {rank}", e.name)));
    }
    Ok(Param {
        name,
        shape: e.dims.clone(),
        value: e.values.clone(),
    })
}

fn conv_from(fields: &BTreeMap<String, &Entry>, prefix: &str) -> Result<Conv2d> {
    let key = |f: &str| if prefix.is_empty() { f.to_string() } else { format!("{prefix}.{f}") };
    let geom = &field(fields, &key("geom"), "conv2d")?.values;
    if geom.len() != 5 {
        return Err(Error::Format("conv2d geom must hold 5 values".into()));
    }
    let weight = param(field(fields, &key("weight"), "conv2d")?, "weight", 4)?;
    let bias = param(field(fields, &key("bias"), "conv2d")?, "bias", 1)?;
    let s = &weight.shape;
    if bias.shape[0] != s[0] {
        return Err(Error::Format("conv2d bias length differs from output channels".into()));
    }
    Ok(Conv2d {
        in_channels: s[1],
        out_channels: s[0],
        kernel: (s[2], s[3]),
        stride: (geom[0] as usize).max(1),
        padding: (geom[1] as usize, geom[2] as usize, geom[3] as usize, geom[4] as usize),
        weight,
        bias,
    })
}

fn build_layer(kind: &str, fields: &BTreeMap<String, &Entry>) -> Result<Layer> {
    let scalar = |kind: &str| -> Result<f64> {
        field(fields, "", kind)?
            .values
            .first()
            .copied()
            .ok_or_else(|| Error::Format(format!("{kind} entry has no value")))
    };
    Ok(match kind {
        "conv2d" => Layer::Conv2d(conv_from(fields, "")?),
        "mscale" => {
            let mut branches = Vec::new();
            while fields.contains_key(&format!("{}.weight", branches.len())) {
                branches.push(conv_from(fields, &branches.len().to_string())?);
            }
            Layer::MultiScale(MultiScaleConv { branches })
        }
        "dense" => Layer::Dense(Dense {
            weight: param(field(fields, "weight", kind)?, "weight", 2)?,
            bias: param(field(fields, "bias", kind)?, "bias", 1)?,
        }),
        "rbf" => Layer::Rbf(Rbf {
            centers: param(field(fields, "centers", kind)?, "centers", 2)?,
            widths: param(field(fields, "widths", kind)?, "widths", 1)?,
            weights: param(field(fields, "weights", kind)?, "weights", 2)?,
            bias: param(field(fields, "bias", kind)?, "bias", 1)?,
        }),
        "maxpool" => Layer::MaxPool(scalar(kind)? as usize),
        "leaky_relu" => Layer::LeakyRelu(scalar(kind)?),
        "relu" => Layer::Relu,
        "sigmoid" => Layer::Sigmoid,
        "softmax" => Layer::Softmax,
        "flatten" => Layer::Flatten,
        other => return Err(Error::UnsupportedLayer(other.to_string())),
    })
}

pub fn save_checkpoint(net: &Network, path: &Path) -> Result<()> {
    let mut ck = Checkpoint::new();
    ck.push_network(net);
    ck.write(path)
}

/// Loads the single network stored in a checkpoint.
pub fn load_checkpoint(path: &Path) -> Result<Network> {
    let ck = Checkpoint::read(path)?;
    let ns = ck
        .entries
        .iter()
        .find_map(|e| e.name.strip_suffix("/input_shape"))
        .ok_or_else(|| Error::Format("checkpoint holds no network".into()))?
        .to_string();
    ck.network(&ns)
}
