//! Inference with every non-input neuron replaced by a simulated p-bit.

use ndarray::{Array1, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mnist::Dataset;
use super::model::{argmax, DbnModel};
use crate::device::{input_bias_probability, run_window, DwellMeans, MagState, PbitParams};
use crate::mitigation::{compensating_resistor, SamplingPolicy};
use crate::seed::rng_for;
use crate::variation::DevicePopulation;
use crate::{Error, Result};

/// Magnetization at the moment a new input is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartState {
    /// The device has idled with its input at `vdd / 2`, so it sits in
    /// either state with probability one half.
    Idle,
    /// Already in equilibrium with the new input (an idealized device).
    Stationary,
    /// Forced into the `0` (parallel) state before every sample.
    Reset,
    /// Whatever state the previous sample left behind. Devices run
    /// continuously through the image stream, as in a staircase sweep;
    /// the stream itself starts from the idle state.
    #[default]
    Carry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceConfig {
    /// One device per non-input neuron, layer by layer.
    pub population: DevicePopulation,
    pub policy: SamplingPolicy,
    pub votes: usize,
    pub start: StartState,
}

impl InferenceConfig {
    pub fn new(population: DevicePopulation, policy: SamplingPolicy) -> Self {
        Self {
            population,
            policy,
            votes: 1,
            start: StartState::Carry,
        }
    }

    pub fn with_votes(mut self, votes: usize) -> Self {
        self.votes = votes;
        self
    }

    pub fn with_start(mut self, start: StartState) -> Self {
        self.start = start;
        self
    }

    /// Sizes a feedback resistor for every device so its effective barrier
    /// drops to `target_eb`. Devices already at or below the target keep
    /// their current (possibly absent) resistor.
    pub fn with_feedback(mut self, target_eb: f64) -> Result<Self> {
        for d in &mut self.population.devices {
            if let Some(rf) = compensating_resistor(d.eb, target_eb, d.r0)? {
                d.rf = Some(rf);
            }
        }
        Ok(self)
    }

    pub fn validate(&self, model: &DbnModel) -> Result<()> {
        let needed: usize = model.topology[1..].iter().sum();
        if self.population.len() != needed {
            return Err(Error::InvalidParams(format!(
                "population has {} devices, network needs {needed}",
                self.population.len()
            )));
        }
        if self.votes == 0 {
            return Err(Error::InvalidParams("votes must be >= 1".into()));
        }
        self.policy.validate()?;
        for d in &self.population.devices {
            d.validate()?;
        }
        Ok(())
    }
}

/// Maps a pre-activation onto the input-voltage axis so that the device's
/// bias curve reproduces `logistic(pre_activation)`.
pub fn activation_voltage(params: &PbitParams, pre_activation: f64) -> f64 {
    (params.vdd / 2.0 + params.v_slope * pre_activation).clamp(0.0, params.vdd)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub digit: usize,
    /// Output-layer window fractions summed over votes.
    pub scores: Vec<f64>,
}

/// Classifies one image. Each neuron's randomness comes from the counter
/// path `(image, layer, neuron, vote)` under `seed`. A lone image starts
/// from idle devices; [`evaluate`] instead runs the split as one stream.
pub fn infer_stochastic(
    model: &DbnModel,
    image: ArrayView1<'_, f32>,
    cfg: &InferenceConfig,
    seed: u64,
    image_index: u64,
) -> Prediction {
    let timescales: Vec<f64> = cfg.population.devices.iter().map(PbitParams::timescale).collect();
    let mut states = idle_states(cfg.population.len(), seed, image_index);
    infer_with(model, image, cfg, &timescales, seed, image_index, &mut states)
}

/// Coin-flip states for a stream that begins at image `first`.
fn idle_states(n: usize, seed: u64, first: u64) -> Vec<MagState> {
    let mut rng = rng_for(seed, &[u64::MAX, first]);
    (0..n).map(|_| MagState::from_output(rng.random::<f64>() < 0.5)).collect()
}

fn infer_with(
    model: &DbnModel,
    image: ArrayView1<'_, f32>,
    cfg: &InferenceConfig,
    timescales: &[f64],
    seed: u64,
    image_index: u64,
    states: &mut [MagState],
) -> Prediction {
    let n_out = *model.topology.last().unwrap();
    let mut scores = vec![0.0; n_out];
    let window = cfg.policy.tau_s;
    for vote in 0..cfg.votes {
        let mut act: Array1<f32> = image.to_owned();
        let mut offset = 0;
        for l in 0..model.layers() {
            let pre = model.pre_activation(l, act.view());
            let last = l + 1 == model.layers();
            let mut next = Array1::<f32>::zeros(pre.len());
            for (j, &z) in pre.iter().enumerate() {
                let dev = &cfg.population.devices[offset + j];
                let p = input_bias_probability(dev, activation_voltage(dev, z as f64));
                let means = DwellMeans::from_occupancy(p, timescales[offset + j]);
                let mut rng = rng_for(seed, &[image_index, l as u64, j as u64, vote as u64]);
                let start = match cfg.start {
                    StartState::Idle => MagState::from_output(rng.random::<f64>() < 0.5),
                    StartState::Stationary => MagState::from_output(rng.random::<f64>() < means.occupancy()),
                    StartState::Reset => MagState::Parallel,
                    StartState::Carry => states[offset + j],
                };
                let start = if cfg.policy.settle > 0.0 {
                    run_window(&mut rng, means, start, cfg.policy.settle).end_state
                } else {
                    start
                };
                let run = run_window(&mut rng, means, start, window);
                states[offset + j] = run.end_state;
                let frac = run.fraction(window);
                if last {
                    scores[j] += frac;
                } else {
                    next[j] = if frac > 0.5 { 1.0 } else { 0.0 };
                }
            }
            offset += pre.len();
            act = next;
        }
    }
    Prediction {
        digit: argmax(scores.iter().map(|&s| s as f32)),
        scores,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub error_rate: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u32>>,
    pub predictions: Vec<usize>,
}

pub fn evaluate(model: &DbnModel, data: &Dataset, cfg: &InferenceConfig, seed: u64) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate(model)?;
    let timescales: Vec<f64> = cfg.population.devices.iter().map(PbitParams::timescale).collect();
    let mut states = idle_states(cfg.population.len(), seed, 0);
    let predictions: Vec<usize> = (0..data.len())
        .map(|i| infer_with(model, data.image(i), cfg, &timescales, seed, i as u64, &mut states).digit)
        .collect();
    Ok(score(&predictions, &data.labels, *model.topology.last().unwrap()))
}

/// Deterministic reference with ideal sigmoid units.
pub fn evaluate_ideal(model: &DbnModel, data: &Dataset) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let predictions: Vec<usize> = (0..data.len()).map(|i| model.predict_ideal(data.image(i))).collect();
    Ok(score(&predictions, &data.labels, *model.topology.last().unwrap()))
}

fn score(predictions: &[usize], labels: &[u8], classes: usize) -> Evaluation {
    let classes = classes.max(labels.iter().map(|&y| y as usize + 1).max().unwrap_or(0));
    let mut confusion = vec![vec![0u32; classes]; classes];
    let mut wrong = 0;
    for (&p, &y) in predictions.iter().zip(labels) {
        confusion[y as usize][p] += 1;
        if p != y as usize {
            wrong += 1;
        }
    }
    Evaluation {
        error_rate: wrong as f64 / labels.len() as f64,
        confusion,
        predictions: predictions.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbn::model::TrainingMeta;
    use crate::device::logistic;
    use ndarray::array;

    fn model() -> DbnModel {
        DbnModel {
            topology: vec![2, 2, 2],
            weights: vec![array![[6.0, -6.0], [-6.0, 6.0]], array![[8.0, -8.0], [-8.0, 8.0]]],
            biases: vec![array![0.0, 0.0], array![0.0, 0.0]],
            meta: TrainingMeta {
                epochs: 0,
                learning_rate: 0.0,
                batch: 1,
                readout_epochs: 0,
                readout_learning_rate: 0.0,
                seed: 0,
            },
        }
    }

    fn config(eb: f64, window: f64) -> InferenceConfig {
        InferenceConfig::new(
            DevicePopulation::uniform(4, PbitParams::default().with_eb(eb)),
            SamplingPolicy::window(window),
        )
    }

    #[test]
    fn voltage_composes_to_logistic() {
        let p = PbitParams::default();
        assert_eq!(activation_voltage(&p, 0.0), 0.4);
        for z in [-5.0, -1.0, 0.3, 3.0, 11.0] {
            let q = input_bias_probability(&p, activation_voltage(&p, z));
            assert!((q - logistic(z)).abs() < 1e-12, "{z}");
        }
    }

    #[test]
    fn voltage_clamps_only_past_the_rails() {
        let p = PbitParams::default();
        let edge = (p.vdd / 2.0) / p.v_slope;
        assert!((edge - 11.78).abs() < 0.01);
        assert!(activation_voltage(&p, edge * 0.99) < p.vdd);
        assert_eq!(activation_voltage(&p, edge * 1.01), p.vdd);
        assert_eq!(activation_voltage(&p, -edge * 1.01), 0.0);
    }

    #[test]
    fn long_windows_follow_the_input() {
        let m = model();
        let cfg = config(0.0, 200.0);
        assert_eq!(infer_stochastic(&m, array![1.0, 0.0].view(), &cfg, 1, 0).digit, 0);
        assert_eq!(infer_stochastic(&m, array![0.0, 1.0].view(), &cfg, 1, 0).digit, 1);
    }

    #[test]
    fn inference_is_reproducible() {
        let m = model();
        let cfg = config(1.0, 2.0).with_votes(5);
        let a = infer_stochastic(&m, array![0.3, 0.6].view(), &cfg, 9, 4);
        assert_eq!(a, infer_stochastic(&m, array![0.3, 0.6].view(), &cfg, 9, 4));
        assert!((a.scores.iter().sum::<f64>()) <= 2.0 * 5.0);
    }

    #[test]
    fn slow_devices_hold_their_idle_state() {
        // With a window far shorter than the device timescale each output
        // reports its idle coin flip, not the input. Digit 0 wins unless the
        // flips come out (0, 1), ties included: 3/4 of the time.
        let m = model();
        let cfg = config(12.0, 1.0).with_votes(1);
        let hits = (0..200)
            .filter(|&i| infer_stochastic(&m, array![1.0, 0.0].view(), &cfg, 3, i).digit == 0)
            .count();
        assert!((125..=175).contains(&hits), "{hits}");
    }

    #[test]
    fn feedback_lowers_every_barrier_to_target() {
        let pop = DevicePopulation {
            devices: [0.0, 0.1, 1.0, 2.0].map(|eb| PbitParams::default().with_eb(eb)).to_vec(),
            ..DevicePopulation::uniform(4, PbitParams::default())
        };
        let cfg = InferenceConfig::new(pop, SamplingPolicy::window(2.0)).with_feedback(0.5).unwrap();
        let effective: Vec<f64> = cfg.population.devices.iter().map(|d| d.effective_eb()).collect();
        assert_eq!(cfg.population.devices[0].rf, None);
        assert!((effective[2] - 0.5).abs() < 1e-9 && (effective[3] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn evaluation_rejects_empty_and_mismatched_inputs() {
        let m = model();
        let empty = Dataset::new(ndarray::Array2::zeros((0, 2)), vec![]).unwrap();
        assert!(matches!(evaluate(&m, &empty, &config(0.0, 2.0), 0), Err(Error::EmptyDataset)));
        let one = Dataset::new(array![[1.0, 0.0]], vec![0]).unwrap();
        assert!(evaluate(&m, &one, &config(0.0, 2.0).with_votes(0), 0).is_err());
        let small = InferenceConfig::new(DevicePopulation::uniform(3, PbitParams::default()), SamplingPolicy::window(2.0));
        assert!(evaluate(&m, &one, &small, 0).is_err());
    }

    #[test]
    fn confusion_matrix_counts() {
        let e = score(&[0, 1, 1, 2], &[0, 1, 2, 2], 3);
        assert_eq!(e.error_rate, 0.25);
        assert_eq!(e.confusion[2], vec![0, 1, 1]);
    }
}
