//! Experiment configuration, read from TOML.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dbn::{StartState, TrainConfig};
use crate::device::PbitParams;
use crate::mitigation::{PowerModel, SweepSpec, TuneOptions};
use crate::{Error, Result};

/// Dataset directory used when the config leaves `dbn.data_dir` empty.
pub const DATA_DIR_ENV: &str = "PBIT_MNIST_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub full_scale: bool,
    pub device: DeviceSection,
    pub calibration: Calibration,
    pub sweep: SweepSpec,
    pub tune: TuneSection,
    pub sigmoid: SigmoidSection,
    pub trace: TraceSection,
    pub energy: EnergySection,
    pub dbn: DbnSection,
    /// Directory that relative paths are resolved against. Not part of the
    /// hash, so a config hashes the same wherever it is run from.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub tmr: f64,
    /// Reference conductance, S.
    pub g0: f64,
    pub beta: f64,
    pub vdd: f64,
}

/// Constants that were fitted once and are held fixed for every run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    /// Attempt time, ns.
    pub tau0: f64,
    /// Volts per unit of pre-activation.
    pub v_slope: f64,
    /// Feedback reference resistance, kΩ.
    pub r0: f64,
    /// Single-sweep RMS distortion the window tuner accepts.
    pub tolerance: f64,
    pub p_static_uw: f64,
    pub samples_per_inference: f64,
    /// Window of the variation-free device, ns.
    pub baseline_window: f64,
    /// Effective barrier the feedback resistors aim for, kT.
    pub compensation_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneSection {
    pub eb: Vec<f64>,
    pub cap_factor: f64,
    pub rel_precision: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmoidSection {
    pub eb: f64,
    pub points: usize,
    /// Simulated time per point, in device timescales.
    pub duration_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    pub eb: Vec<f64>,
    pub v_in: f64,
    /// ns.
    pub duration: f64,
    /// Extra traces with this feedback resistor, kΩ.
    #[serde(default)]
    pub rf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySection {
    pub tolerances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbnSection {
    /// Directory with the four IDX files. Empty means `$PBIT_MNIST_DIR`.
    #[serde(default)]
    pub data_dir: PathBuf,
    pub model: PathBuf,
    pub train_images: usize,
    pub test_images: usize,
    pub hidden: usize,
    pub full_train_images: usize,
    pub full_test_images: usize,
    pub full_hidden: usize,
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub readout_epochs: usize,
    pub readout_learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub votes: usize,
    pub start: StartState,
    pub population_seed: u64,
    pub knee_eb: Vec<f64>,
    /// Barrier range of the population used by `dbn-eval`, kT.
    pub eval_eb_max: f64,
    /// Window used by `dbn-eval`, ns. Absent means the baseline window.
    #[serde(default)]
    pub eval_window: Option<f64>,
    #[serde(default)]
    pub eval_feedback: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`; a relative `dbn.data_dir` or `dbn.model` is resolved
    /// against the directory holding the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.calibration;
        for (name, v) in [
            ("calibration.tau0", c.tau0),
            ("calibration.v_slope", c.v_slope),
            ("calibration.r0", c.r0),
            ("calibration.tolerance", c.tolerance),
            ("calibration.p_static_uw", c.p_static_uw),
            ("calibration.samples_per_inference", c.samples_per_inference),
            ("calibration.baseline_window", c.baseline_window),
            ("sigmoid.duration_tau", self.sigmoid.duration_tau),
            ("trace.duration", self.trace.duration),
            ("tune.cap_factor", self.tune.cap_factor),
            ("tune.rel_precision", self.tune.rel_precision),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(c.compensation_target.is_finite() && c.compensation_target >= 0.0) {
            return Err(Error::Config("calibration.compensation_target must be >= 0".into()));
        }
        let barriers = self.tune.eb.iter().chain(&self.trace.eb).chain(&self.energy.tolerances).chain(&self.dbn.knee_eb);
        for &eb in barriers.chain([&self.sigmoid.eb, &self.dbn.eval_eb_max]) {
            if !(eb.is_finite() && eb >= 0.0) {
                return Err(Error::Config(format!("barriers must be finite and >= 0, got {eb}")));
            }
        }
        if self.sigmoid.points < 2 {
            return Err(Error::Config("sigmoid.points must be >= 2".into()));
        }
        let d = &self.dbn;
        if d.votes == 0 || d.batch == 0 || d.hidden == 0 || d.full_hidden == 0 {
            return Err(Error::Config("dbn votes, batch and hidden sizes must be >= 1".into()));
        }
        if d.eval_window.is_some_and(|w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::Config("dbn.eval_window must be positive".into()));
        }
        self.sweep.points().map_err(|e| Error::Config(e.to_string()))?;
        self.device().validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Device template with a zero barrier and no feedback.
    pub fn device(&self) -> PbitParams {
        PbitParams {
            tmr: self.device.tmr,
            g0: self.device.g0,
            beta: self.device.beta,
            vdd: self.device.vdd,
            eb: 0.0,
            tau0: self.calibration.tau0,
            v_slope: self.calibration.v_slope,
            rf: None,
            r0: self.calibration.r0,
        }
    }

    pub fn power(&self) -> PowerModel {
        PowerModel {
            p_static_uw: self.calibration.p_static_uw,
            samples_per_inference: self.calibration.samples_per_inference,
        }
    }

    pub fn tune_options(&self) -> TuneOptions {
        TuneOptions {
            cap_factor: self.tune.cap_factor,
            rel_precision: self.tune.rel_precision,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let d = &self.dbn;
        TrainConfig {
            learning_rate: d.learning_rate,
            epochs: d.epochs,
            batch: d.batch,
            readout_learning_rate: d.readout_learning_rate,
            readout_epochs: d.readout_epochs,
            momentum: d.momentum,
            weight_decay: d.weight_decay,
            seed: self.seed,
        }
    }

    /// `(train images, test images, topology)` for the selected scale.
    pub fn dbn_scale(&self) -> (usize, usize, Vec<usize>) {
        let d = &self.dbn;
        if self.full_scale {
            (d.full_train_images, d.full_test_images, vec![784, d.full_hidden, 10])
        } else {
            (d.train_images, d.test_images, vec![784, d.hidden, 10])
        }
    }

    /// The configured dataset directory, falling back to `$PBIT_MNIST_DIR`.
    pub fn data_dir(&self) -> Result<PathBuf> {
        if !self.dbn.data_dir.as_os_str().is_empty() {
            return Ok(self.base_dir.join(&self.dbn.data_dir));
        }
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Ok(PathBuf::from(dir)),
            _ => Err(Error::Config(format!("dbn.data_dir is empty and {DATA_DIR_ENV} is not set"))),
        }
    }

    pub fn model_path(&self) -> PathBuf {
        self.base_dir.join(&self.dbn.model)
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}
