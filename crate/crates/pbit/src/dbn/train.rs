//! Offline training with ideal sigmoid units.
//!
//! Hidden layers are pretrained greedily as RBMs with one-step contrastive
//! divergence. The last layer is a one-vs-rest logistic readout fitted by
//! minibatch gradient descent on sampled binary hidden states, which is what
//! the p-bit hidden layer delivers at inference time.

use ndarray::{Array1, Array2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mnist::Dataset;
use super::model::{sigmoid, DbnModel, TrainingMeta};
use crate::seed::{rng_for, SimRng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch: usize,
    pub readout_learning_rate: f64,
    pub readout_epochs: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 20,
            batch: 20,
            readout_learning_rate: 0.5,
            readout_epochs: 200,
            momentum: 0.9,
            weight_decay: 2e-4,
            seed: 2020,
        }
    }
}

pub fn train_cd1(data: &Dataset, topology: &[usize], cfg: &TrainConfig) -> Result<DbnModel> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if topology.len() < 2 || topology[0] != data.pixels() || topology.contains(&0) {
        return Err(Error::InvalidParams(format!(
            "topology {topology:?} does not fit {}-pixel images",
            data.pixels()
        )));
    }
    if cfg.batch == 0 {
        return Err(Error::InvalidParams("batch must be >= 1".into()));
    }
    let n_layers = topology.len() - 1;
    let mut weights = Vec::with_capacity(n_layers);
    let mut biases = Vec::with_capacity(n_layers);
    let mut activity = data.images.clone();
    for l in 0..n_layers - 1 {
        let mut rng = rng_for(cfg.seed, &[l as u64]);
        let rbm = train_rbm(&activity, topology[l + 1], cfg, &mut rng)?;
        activity = hidden_probs(&activity, &rbm.weights, &rbm.hidden_bias);
        weights.push(rbm.weights);
        biases.push(rbm.hidden_bias);
    }
    let mut rng = rng_for(cfg.seed, &[n_layers as u64 - 1]);
    let (w, b) = train_readout(&activity, &data.labels, topology[n_layers], cfg, &mut rng)?;
    weights.push(w);
    biases.push(b);
    let model = DbnModel {
        topology: topology.to_vec(),
        weights,
        biases,
        meta: TrainingMeta {
            epochs: cfg.epochs as u32,
            learning_rate: cfg.learning_rate,
            batch: cfg.batch as u32,
            readout_epochs: cfg.readout_epochs as u32,
            readout_learning_rate: cfg.readout_learning_rate,
            seed: cfg.seed,
        },
    };
    model.validate()?;
    Ok(model)
}

struct Rbm {
    weights: Array2<f32>,
    hidden_bias: Array1<f32>,
}

fn hidden_probs(v: &Array2<f32>, w: &Array2<f32>, c: &Array1<f32>) -> Array2<f32> {
    (v.dot(w) + c).mapv_into(sigmoid)
}

fn init_weights(rows: usize, cols: usize, rng: &mut SimRng) -> Array2<f32> {
    let normal = Normal::new(0.0f32, 0.01).unwrap();
    Array2::from_shape_simple_fn((rows, cols), || normal.sample(rng))
}

fn bernoulli(p: &Array2<f32>, rng: &mut SimRng) -> Array2<f32> {
    p.mapv(|p| if rng.random::<f32>() < p { 1.0 } else { 0.0 })
}

fn batch_rows(data: &Array2<f32>, idx: &[usize]) -> Array2<f32> {
    data.select(Axis(0), idx)
}

fn train_rbm(data: &Array2<f32>, n_hidden: usize, cfg: &TrainConfig, rng: &mut SimRng) -> Result<Rbm> {
    let (n, n_visible) = data.dim();
    let mut w = init_weights(n_visible, n_hidden, rng);
    // Visible biases start at the log-odds of each unit's mean activity.
    let mut b = data
        .mean_axis(Axis(0))
        .unwrap()
        .mapv(|p| (p.clamp(0.01, 0.99) / (1.0 - p.clamp(0.01, 0.99))).ln());
    let mut c = Array1::<f32>::zeros(n_hidden);
    let mut dw = Array2::<f32>::zeros((n_visible, n_hidden));
    let mut db = Array1::<f32>::zeros(n_visible);
    let mut dc = Array1::<f32>::zeros(n_hidden);
    let mut order: Vec<usize> = (0..n).collect();
    let lr = cfg.learning_rate as f32;
    let decay = cfg.weight_decay as f32;
    for epoch in 0..cfg.epochs {
        let momentum = if epoch < 5 { 0.5 } else { cfg.momentum as f32 };
        order.shuffle(rng);
        for idx in order.chunks(cfg.batch) {
            let v0 = batch_rows(data, idx);
            let m = idx.len() as f32;
            let h0 = hidden_probs(&v0, &w, &c);
            let h0_sample = bernoulli(&h0, rng);
            let v1 = (h0_sample.dot(&w.t()) + &b).mapv_into(sigmoid);
            let h1 = hidden_probs(&v1, &w, &c);
            let grad_w = (v0.t().dot(&h0) - v1.t().dot(&h1)) / m;
            Zip::from(&mut dw).and(&grad_w).and(&w).for_each(|d, &g, &wv| {
                *d = momentum * *d + lr * (g - decay * wv);
            });
            dc = &dc * momentum + &((&h0 - &h1).mean_axis(Axis(0)).unwrap() * lr);
            db = &db * momentum + &((&v0 - &v1).mean_axis(Axis(0)).unwrap() * lr);
            w += &dw;
            b += &db;
            c += &dc;
        }
        if !w.iter().chain(c.iter()).all(|x| x.is_finite()) {
            return Err(Error::Divergent { epoch });
        }
    }
    Ok(Rbm { weights: w, hidden_bias: c })
}

fn train_readout(
    hidden: &Array2<f32>,
    labels: &[u8],
    n_out: usize,
    cfg: &TrainConfig,
    rng: &mut SimRng,
) -> Result<(Array2<f32>, Array1<f32>)> {
    let (n, n_hidden) = hidden.dim();
    let mut w = init_weights(n_hidden, n_out, rng);
    let mut b = Array1::<f32>::zeros(n_out);
    let mut targets = Array2::<f32>::zeros((n, n_out));
    for (i, &y) in labels.iter().enumerate() {
        if (y as usize) < n_out {
            targets[[i, y as usize]] = 1.0;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let lr = cfg.readout_learning_rate as f32;
    for epoch in 0..cfg.readout_epochs {
        order.shuffle(rng);
        for idx in order.chunks(cfg.batch) {
            let h = bernoulli(&batch_rows(hidden, idx), rng);
            let y = batch_rows(&targets, idx);
            let err = (h.dot(&w) + &b).mapv_into(sigmoid) - &y;
            let m = idx.len() as f32;
            w.scaled_add(-lr / m, &h.t().dot(&err));
            b.scaled_add(-lr, &err.mean_axis(Axis(0)).unwrap());
        }
        if !w.iter().chain(b.iter()).all(|x| x.is_finite()) {
            return Err(Error::Divergent { epoch });
        }
    }
    Ok((w, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two well separated prototypes with a little pixel noise.
    fn toy(n: usize, seed: u64) -> Dataset {
        let mut rng = rng_for(seed, &[]);
        let mut images = Array2::<f32>::zeros((n, 16));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = (i % 2) as u8;
            for j in 0..16 {
                let on = (j < 8) == (y == 0);
                let noise: f32 = rng.random::<f32>() * 0.2;
                images[[i, j]] = if on { 1.0 - noise } else { noise };
            }
            labels.push(y);
        }
        Dataset::new(images, labels).unwrap()
    }

    fn error_rate(model: &DbnModel, data: &Dataset) -> f64 {
        let wrong = (0..data.len())
            .filter(|&i| model.predict_ideal(data.image(i)) != data.labels[i] as usize)
            .count();
        wrong as f64 / data.len() as f64
    }

    #[test]
    fn learns_a_separable_toy_problem() {
        let data = toy(400, 1);
        let cfg = TrainConfig {
            epochs: 5,
            readout_epochs: 20,
            batch: 20,
            ..TrainConfig::default()
        };
        let model = train_cd1(&data, &[16, 8, 2], &cfg).unwrap();
        assert_eq!(error_rate(&model, &toy(200, 2)), 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let data = toy(100, 3);
        let cfg = TrainConfig {
            epochs: 2,
            readout_epochs: 2,
            batch: 10,
            ..TrainConfig::default()
        };
        assert_eq!(
            train_cd1(&data, &[16, 4, 2], &cfg).unwrap(),
            train_cd1(&data, &[16, 4, 2], &cfg).unwrap()
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let data = toy(10, 0);
        assert!(matches!(train_cd1(&data.head(0), &[16, 4, 2], &TrainConfig::default()), Err(Error::EmptyDataset)));
        assert!(train_cd1(&data, &[15, 4, 2], &TrainConfig::default()).is_err());
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let data = toy(100, 4);
        let cfg = TrainConfig {
            learning_rate: 1e38,
            epochs: 3,
            ..TrainConfig::default()
        };
        assert!(matches!(train_cd1(&data, &[16, 4, 2], &cfg), Err(Error::Divergent { .. })));
    }
}
