//! Physics of a single p-bit neuron.
//!
//! A p-bit is an NMOS transistor in series with a low-barrier MTJ whose free
//! layer flips between the parallel (P) and anti-parallel (AP) states under
//! thermal noise. The drain node feeds a CMOS inverter; the inverter output is
//! the neuron's binary output. The input voltage sets the gate of the NMOS and
//! therefore the stationary probability of reading a `1`. The energy barrier
//! of the free layer sets how fast the magnetization fluctuates.
//!
//! Throughout the crate, energy barriers are in units of kT, times in
//! nanoseconds, resistances in kilo-ohms and voltages in volts.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::seed::{rng_from_seed, SimRng};
use crate::{Error, Result};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Vacuum permeability, T·m/A.
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// Occupancy probabilities are clamped to `[EPS, 1 - EPS]` before they are
/// turned into dwell means, so the means stay finite.
pub const PROBABILITY_EPS: f64 = 1e-9;

/// Electrical and magnetic description of one p-bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PbitParams {
    /// Tunneling magnetoresistance ratio `(G_P - G_AP) / G_AP`.
    pub tmr: f64,
    /// Average MTJ conductance `(G_P + G_AP) / 2`, siemens.
    pub g0: f64,
    /// Transistor-to-MTJ conductance ratio `G_T / G_0`.
    pub beta: f64,
    /// Supply voltage.
    pub vdd: f64,
    /// Intrinsic energy barrier, kT.
    pub eb: f64,
    /// Attempt time, ns.
    pub tau0: f64,
    /// Logistic slope of the activation curve, volts.
    pub v_slope: f64,
    /// Feedback resistor in kΩ; `None` means no feedback path.
    #[serde(default)]
    pub rf: Option<f64>,
    /// Feedback strength constant `V_DD / I_C`, kΩ.
    pub r0: f64,
}

impl Default for PbitParams {
    fn default() -> Self {
        Self {
            tmr: 1.0,
            g0: 1.5e-4,
            beta: 1.0,
            vdd: 0.8,
            eb: 0.0,
            tau0: 0.1,
            v_slope: default_v_slope(),
            rf: None,
            r0: 100.0 * 5f64.ln() / 1.5,
        }
    }
}

/// Slope that puts the 5 % and 95 % points of the activation curve at
/// 0.3 V and 0.5 V around the 0.4 V midpoint.
pub fn default_v_slope() -> f64 {
    0.1 / 19f64.ln()
}

impl PbitParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tmr", self.tmr),
            ("g0", self.g0),
            ("vdd", self.vdd),
            ("tau0", self.tau0),
            ("v_slope", self.v_slope),
            ("r0", self.r0),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidParams(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.eb.is_finite() && self.eb >= 0.0) {
            return Err(Error::InvalidParams(format!("eb must be >= 0, got {}", self.eb)));
        }
        if let Some(rf) = self.rf {
            if !(rf.is_finite() && rf > 0.0) {
                return Err(Error::InvalidParams(format!("rf must be > 0, got {rf}")));
            }
        }
        Ok(())
    }

    pub fn with_eb(self, eb: f64) -> Self {
        Self { eb, ..self }
    }

    pub fn with_rf(self, rf: Option<f64>) -> Self {
        Self { rf, ..self }
    }

    /// Barrier after feedback, unclamped.
    pub fn effective_eb(&self) -> f64 {
        effective_barrier(self.eb, self.rf, self.r0)
    }

    /// Harmonic combination of the two mean dwell times.
    pub fn timescale(&self) -> f64 {
        fluctuation_timescale(self.effective_eb(), self.tau0)
    }
}

/// Magnetization state of the free layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MagState {
    Parallel,
    AntiParallel,
}

impl MagState {
    pub fn m_z(self) -> f64 {
        match self {
            MagState::Parallel => 1.0,
            MagState::AntiParallel => -1.0,
        }
    }

    /// Inverter output for this state. AP is the low-conductance state, it
    /// pulls the drain below the inverter threshold and reads as `1`.
    pub fn output(self) -> bool {
        self == MagState::AntiParallel
    }

    pub fn from_output(bit: bool) -> Self {
        if bit {
            MagState::AntiParallel
        } else {
            MagState::Parallel
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            MagState::Parallel => MagState::AntiParallel,
            MagState::AntiParallel => MagState::Parallel,
        }
    }
}

/// MTJ conductance for a free-layer magnetization `m_z` in `[-1, 1]`.
pub fn mtj_conductance(params: &PbitParams, m_z: f64) -> f64 {
    params.g0 * (1.0 + m_z * params.tmr / (2.0 + params.tmr))
}

/// Drain voltage of the NMOS/MTJ divider.
pub fn drain_voltage(params: &PbitParams, m_z: f64) -> f64 {
    let k = 2.0 + params.tmr;
    params.vdd * (k + params.tmr * m_z) / (k * (1.0 + params.beta) + params.tmr * m_z)
}

/// Inverter output with its switching threshold at `vdd / 2`.
pub fn binary_output(params: &PbitParams, m_z: f64) -> bool {
    drain_voltage(params, m_z) < params.vdd / 2.0
}

/// Free-layer geometry and material constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    /// Anisotropy field, A/m.
    pub h_k: f64,
    /// Saturation magnetization, A/m.
    pub m_s: f64,
    /// Free-layer diameter, nm.
    pub d: f64,
    /// Free-layer thickness, nm.
    pub t_f: f64,
    /// Kelvin.
    pub temperature: f64,
}

impl GeometrySpec {
    /// Geometry whose anisotropy field is chosen so that the barrier equals
    /// `target_kt` for the given magnetization, size and temperature.
    pub fn with_barrier(target_kt: f64, m_s: f64, d: f64, t_f: f64, temperature: f64) -> Self {
        let unit = Self {
            h_k: 1.0,
            m_s,
            d,
            t_f,
            temperature,
        };
        Self {
            h_k: target_kt / energy_barrier(&unit),
            ..unit
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("h_k", self.h_k),
            ("m_s", self.m_s),
            ("d", self.d),
            ("t_f", self.t_f),
            ("temperature", self.temperature),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("geometry {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for GeometrySpec {
    /// A 1 kT free layer: 20 nm diameter, 1 nm thick, M_S = 1 MA/m at 300 K.
    fn default() -> Self {
        Self::with_barrier(1.0, 1.0e6, 20.0, 1.0, 300.0)
    }
}

/// Energy barrier `½ μ0 H_K M_S V` of a cylindrical free layer, in kT.
pub fn energy_barrier(geom: &GeometrySpec) -> f64 {
    let radius = 0.5 * geom.d * 1e-9;
    let volume = std::f64::consts::PI * radius * radius * geom.t_f * 1e-9;
    0.5 * MU_0 * geom.h_k * geom.m_s * volume / (BOLTZMANN * geom.temperature)
}

/// Néel–Arrhenius fluctuation timescale `τ0 · exp(E_B)`.
///
/// Negative effective barriers (over-compensated feedback) are clamped to
/// zero: the attempt time is the fastest the magnet can fluctuate.
pub fn fluctuation_timescale(eb_eff: f64, tau0: f64) -> f64 {
    tau0 * eb_eff.max(0.0).exp()
}

/// Barrier seen by the occupied state under negative feedback through `rf`.
///
/// Returns `eb · (1 - r0 / rf)`, which may be negative; `None` leaves the
/// barrier unchanged.
pub fn effective_barrier(eb: f64, rf: Option<f64>, r0: f64) -> f64 {
    match rf {
        Some(rf) => eb * (1.0 - r0 / rf),
        None => eb,
    }
}

/// Stationary probability that the output reads `1` at input voltage `v_in`.
pub fn input_bias_probability(params: &PbitParams, v_in: f64) -> f64 {
    logistic((v_in - 0.5 * params.vdd) / params.v_slope)
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean dwell times of the two output states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellMeans {
    /// Mean time spent reading `1` (AP) before a flip, ns.
    pub high: f64,
    /// Mean time spent reading `0` (P) before a flip, ns.
    pub low: f64,
}

impl DwellMeans {
    /// Splits the timescale `tau` so that the stationary occupancy of the
    /// `1` state is `p` and the harmonic combination of the means is `tau`.
    pub fn from_occupancy(p: f64, tau: f64) -> Self {
        let p = p.clamp(PROBABILITY_EPS, 1.0 - PROBABILITY_EPS);
        Self {
            high: tau / (1.0 - p),
            low: tau / p,
        }
    }

    pub fn occupancy(&self) -> f64 {
        self.high / (self.high + self.low)
    }

    pub fn timescale(&self) -> f64 {
        1.0 / (1.0 / self.high + 1.0 / self.low)
    }

    pub fn mean_for(&self, state: MagState) -> f64 {
        if state.output() {
            self.high
        } else {
            self.low
        }
    }
}

pub fn dwell_means(params: &PbitParams, v_in: f64) -> DwellMeans {
    DwellMeans::from_occupancy(input_bias_probability(params, v_in), params.timescale())
}

/// One constant-state stretch of a telegraph trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub state: MagState,
    pub dwell: f64,
}

/// A realized magnetization fluctuation over `[0, total]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TelegraphTrace {
    pub segments: Vec<Segment>,
    pub total: f64,
    pub seed: u64,
}

impl TelegraphTrace {
    pub fn transitions(&self) -> usize {
        self.segments.len().saturating_sub(1)
    }

    pub fn final_state(&self) -> Option<MagState> {
        self.segments.last().map(|s| s.state)
    }

    /// Fraction of `[t_start, t_end]` during which the output reads `1`.
    pub fn sample_window(&self, t_start: f64, t_end: f64) -> Result<f64> {
        if !(t_end > t_start) {
            return Err(Error::EmptyWindow {
                start: t_start,
                end: t_end,
            });
        }
        let slack = 1e-9 * self.total.max(1.0);
        if t_start < 0.0 || t_end > self.total + slack {
            return Err(Error::WindowOutOfRange {
                start: t_start,
                end: t_end,
                total: self.total,
            });
        }
        let mut high = 0.0;
        let mut t = 0.0;
        for seg in &self.segments {
            let end = t + seg.dwell;
            if end > t_start && seg.state.output() {
                high += end.min(t_end) - t.max(t_start);
            }
            if end >= t_end {
                break;
            }
            t = end;
        }
        Ok(high / (t_end - t_start))
    }
}

/// Event-driven alternating-renewal simulation of the telegraph process.
///
/// The initial state is drawn from the stationary occupancy, dwells are
/// exponential with the per-state means of [`dwell_means`], and the last
/// dwell is truncated at `duration`.
pub fn simulate_trace(params: &PbitParams, v_in: f64, duration: f64, seed: u64) -> TelegraphTrace {
    let means = dwell_means(params, v_in);
    let mut rng = rng_from_seed(seed);
    let start = MagState::from_output(rng.random::<f64>() < means.occupancy());
    let mut segments = Vec::new();
    run_telegraph(&mut rng, means, start, duration, |seg| segments.push(seg));
    TelegraphTrace {
        segments,
        total: duration,
        seed,
    }
}

/// Summary of a window simulated without materializing the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRun {
    /// Time spent reading `1`, ns.
    pub time_high: f64,
    pub end_state: MagState,
    pub transitions: usize,
}

impl WindowRun {
    pub fn fraction(&self, duration: f64) -> f64 {
        self.time_high / duration
    }
}

/// Runs the telegraph process for `duration` from a known `start` state.
pub fn run_window(rng: &mut SimRng, means: DwellMeans, start: MagState, duration: f64) -> WindowRun {
    let mut time_high = 0.0;
    let mut end_state = start;
    let mut segments = 0usize;
    run_telegraph(rng, means, start, duration, |seg| {
        if seg.state.output() {
            time_high += seg.dwell;
        }
        end_state = seg.state;
        segments += 1;
    });
    WindowRun {
        time_high,
        end_state,
        transitions: segments.saturating_sub(1),
    }
}

fn run_telegraph(
    rng: &mut SimRng,
    means: DwellMeans,
    start: MagState,
    duration: f64,
    mut emit: impl FnMut(Segment),
) {
    let mut state = start;
    let mut elapsed = 0.0;
    loop {
        let draw: f64 = Exp1.sample(rng);
        let dwell = means.mean_for(state) * draw;
        if elapsed + dwell >= duration {
            emit(Segment {
                state,
                dwell: duration - elapsed,
            });
            return;
        }
        emit(Segment { state, dwell });
        elapsed += dwell;
        state = state.flipped();
    }
}
