use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};

use crate::{Error, Result};

/// Hyper-parameters recorded alongside the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingMeta {
    pub epochs: u32,
    pub learning_rate: f64,
    pub batch: u32,
    pub readout_epochs: u32,
    pub readout_learning_rate: f64,
    pub seed: u64,
}

/// A layered sigmoid network. `weights[l]` maps layer `l` to layer `l + 1`
/// and has shape `(topology[l], topology[l + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct DbnModel {
    pub topology: Vec<usize>,
    pub weights: Vec<Array2<f32>>,
    pub biases: Vec<Array1<f32>>,
    pub meta: TrainingMeta,
}

impl DbnModel {
    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        if t.len() < 2 || t.contains(&0) {
            return Err(Error::ModelFormat(format!("bad topology {t:?}")));
        }
        if self.weights.len() != t.len() - 1 || self.biases.len() != t.len() - 1 {
            return Err(Error::ModelFormat("layer count does not match topology".into()));
        }
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            if w.dim() != (t[l], t[l + 1]) || b.len() != t[l + 1] {
                return Err(Error::ModelFormat(format!("layer {l} has shape {:?}", w.dim())));
            }
            if !w.iter().chain(b.iter()).all(|x| x.is_finite()) {
                return Err(Error::ModelFormat(format!("layer {l} has non-finite entries")));
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> usize {
        self.weights.len()
    }

    /// Pre-activations of layer `l + 1` given the activity of layer `l`.
    pub fn pre_activation(&self, l: usize, input: ArrayView1<'_, f32>) -> Array1<f32> {
        input.dot(&self.weights[l]) + &self.biases[l]
    }

    /// Deterministic forward pass with ideal sigmoid units. Returns the
    /// output-layer pre-activations.
    pub fn forward_ideal(&self, image: ArrayView1<'_, f32>) -> Array1<f32> {
        let mut act = image.to_owned();
        for l in 0..self.layers() {
            let z = self.pre_activation(l, act.view());
            if l + 1 == self.layers() {
                return z;
            }
            act = z.mapv(sigmoid);
        }
        unreachable!("a validated model has at least one layer")
    }

    pub fn predict_ideal(&self, image: ArrayView1<'_, f32>) -> usize {
        argmax(self.forward_ideal(image).iter().copied())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    /// Little-endian flat encoding: magic, version, topology, metadata, then
    /// each layer's row-major weights followed by its biases.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.topology.len() as u32).to_le_bytes());
        for &n in &self.topology {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        let m = &self.meta;
        out.extend_from_slice(&m.epochs.to_le_bytes());
        out.extend_from_slice(&m.learning_rate.to_le_bytes());
        out.extend_from_slice(&m.batch.to_le_bytes());
        out.extend_from_slice(&m.readout_epochs.to_le_bytes());
        out.extend_from_slice(&m.readout_learning_rate.to_le_bytes());
        out.extend_from_slice(&m.seed.to_le_bytes());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for x in w.iter().chain(b.iter()) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::ModelFormat("not a p-bit DBN model file".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let n_layers = r.u32()? as usize;
        if !(2..=64).contains(&n_layers) {
            return Err(Error::ModelFormat(format!("implausible layer count {n_layers}")));
        }
        let topology = (0..n_layers).map(|_| r.u32().map(|n| n as usize)).collect::<Result<Vec<_>>>()?;
        let meta = TrainingMeta {
            epochs: r.u32()?,
            learning_rate: r.f64()?,
            batch: r.u32()?,
            readout_epochs: r.u32()?,
            readout_learning_rate: r.f64()?,
            seed: r.u64()?,
        };
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in topology.windows(2) {
            let w = r.f32s(pair[0] * pair[1])?;
            weights.push(Array2::from_shape_vec((pair[0], pair[1]), w).expect("length matches"));
            biases.push(Array1::from(r.f32s(pair[1])?));
        }
        if r.pos != bytes.len() {
            return Err(Error::ModelFormat(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let model = DbnModel {
            topology,
            weights,
            biases,
            meta,
        };
        model.validate()?;
        Ok(model)
    }
}

const MAGIC: &[u8; 8] = b"PBITDBN\0";
const FORMAT_VERSION: u32 = 1;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::ModelFormat(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::ModelFormat("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: impl IntoIterator<Item = f32>) -> usize {
    let mut best = (0, f32::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}
