//! Variation-tolerance mechanisms and their energy cost.
//!
//! Temporal redundancy stretches the sampling window `tau_s` until a slow
//! (high-barrier) device still reproduces its activation curve. Resistive
//! feedback instead lowers the effective barrier so the device fluctuates
//! fast enough for the baseline window. Both are priced with the same
//! per-sample power model.

use serde::{Deserialize, Serialize};

use crate::device::{
    effective_barrier, fluctuation_timescale, input_bias_probability, mtj_conductance, simulate_trace, PbitParams,
};
use crate::seed::derive_seed;
use crate::{Error, Result};

/// How long the output is observed for one input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPolicy {
    /// Sampling window, ns.
    pub tau_s: f64,
    /// Transient discarded before the window, ns.
    #[serde(default)]
    pub settle: f64,
}

impl SamplingPolicy {
    pub fn window(tau_s: f64) -> Self {
        Self { tau_s, settle: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_s.is_finite() && self.tau_s > 0.0) {
            return Err(Error::InvalidParams(format!("tau_s must be > 0, got {}", self.tau_s)));
        }
        if !(self.settle.is_finite() && self.settle >= 0.0) {
            return Err(Error::InvalidParams(format!("settle must be >= 0, got {}", self.settle)));
        }
        Ok(())
    }

    /// Time the device is powered per sample, ns.
    pub fn active_time(&self) -> f64 {
        self.settle + self.tau_s
    }
}

/// Staircase input sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub v_start: f64,
    pub v_end: f64,
    pub v_step: f64,
    /// Independent windows per sweep point.
    pub repeats: usize,
}

impl Default for SweepSpec {
    /// The active region of the activation curve, 0.3 V to 0.5 V in 20 mV steps.
    fn default() -> Self {
        Self {
            v_start: 0.3,
            v_end: 0.5,
            v_step: 0.02,
            repeats: 2000,
        }
    }
}

impl SweepSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        let span = self.v_end - self.v_start;
        if !(span > 0.0) || !(self.v_step > 0.0) {
            return Err(Error::InvalidParams(format!(
                "sweep needs v_start < v_end and v_step > 0, got {}..{} step {}",
                self.v_start, self.v_end, self.v_step
            )));
        }
        let steps = (span / self.v_step).round();
        if (steps * self.v_step - span).abs() > 1e-9 * span.max(1.0) {
            return Err(Error::InvalidParams(format!(
                "step {} does not divide the span {span}",
                self.v_step
            )));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidParams("repeats must be >= 1".into()));
        }
        Ok((0..=steps as usize)
            .map(|i| self.v_start + i as f64 * self.v_step)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub v_in: f64,
    /// Window fraction averaged over the repeats.
    pub empirical_p: f64,
    pub ideal_p: f64,
}

/// Measured activation curve compared with the ideal sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    pub points: Vec<CurvePoint>,
    /// RMS deviation of the repeat-averaged curve.
    pub rms_error: f64,
    /// Largest absolute deviation of the repeat-averaged curve.
    pub max_error: f64,
    /// RMS deviation of a single sweep, estimated over all repeats. This is
    /// what one pass through the staircase would show and is the quantity
    /// the window tuner thresholds.
    pub sweep_rms: f64,
}

/// Sweeps the input, holding each voltage for `settle + tau_s` and reading
/// the output fraction over the last `tau_s`.
///
/// Trial `(point i, repeat r)` uses seed `derive_seed(seed, [i, r])`, so a
/// longer window extends the same realization rather than drawing a new one.
pub fn measure_activation_curve(
    params: &PbitParams,
    policy: &SamplingPolicy,
    sweep: &SweepSpec,
    seed: u64,
) -> Result<DistortionReport> {
    params.validate()?;
    policy.validate()?;
    let voltages = sweep.points()?;
    let duration = policy.active_time();
    let mut points = Vec::with_capacity(voltages.len());
    let mut sq_single = 0.0;
    for (i, &v_in) in voltages.iter().enumerate() {
        let ideal_p = input_bias_probability(params, v_in);
        let mut sum = 0.0;
        for r in 0..sweep.repeats {
            let trace = simulate_trace(params, v_in, duration, derive_seed(seed, &[i as u64, r as u64]));
            let f = trace.sample_window(policy.settle, duration)?;
            sum += f;
            sq_single += (f - ideal_p).powi(2);
        }
        points.push(CurvePoint {
            v_in,
            empirical_p: sum / sweep.repeats as f64,
            ideal_p,
        });
    }
    let n = points.len() as f64;
    let rms_error = (points.iter().map(|p| (p.empirical_p - p.ideal_p).powi(2)).sum::<f64>() / n).sqrt();
    let max_error = points
        .iter()
        .map(|p| (p.empirical_p - p.ideal_p).abs())
        .fold(0.0, f64::max);
    Ok(DistortionReport {
        points,
        rms_error,
        max_error,
        sweep_rms: (sq_single / (n * sweep.repeats as f64)).sqrt(),
    })
}

/// Variance of the time-averaged output over a window of `x` timescales,
/// divided by `p (1 - p)`, for a stationary two-state Markov process.
pub fn window_variance_factor(x: f64) -> f64 {
    if x < 1e-6 {
        return 1.0 - x / 3.0;
    }
    2.0 / x * (1.0 - (1.0 - (-x).exp()) / x)
}

/// Expected single-sweep RMS of a device observed for `tau_s`.
pub fn expected_sweep_rms(params: &PbitParams, sweep: &SweepSpec, tau_s: f64) -> Result<f64> {
    let voltages = sweep.points()?;
    let spread = voltages
        .iter()
        .map(|&v| {
            let p = input_bias_probability(params, v);
            p * (1.0 - p)
        })
        .sum::<f64>()
        / voltages.len() as f64;
    Ok((spread * window_variance_factor(tau_s / params.timescale())).sqrt())
}

/// Distortion tolerance that makes `window` the expected minimal window of
/// `params`. Used once to pin the tolerance to the near-zero-barrier device.
pub fn calibrate_tolerance(params: &PbitParams, sweep: &SweepSpec, window: f64) -> Result<f64> {
    expected_sweep_rms(params, sweep, window)
}

/// Bounds of the minimal-window search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneOptions {
    /// Largest window tried, as a multiple of `tau0`.
    pub cap_factor: f64,
    /// Bisection stops when the bracket is this narrow relative to its top.
    pub rel_precision: f64,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            cap_factor: 1e4,
            rel_precision: 1e-3,
        }
    }
}

/// Smallest `tau_s` whose single-sweep RMS distortion is within `tolerance`.
///
/// Doubles the window from `tau0 / 8` until the tolerance is met, then
/// bisects. Every candidate reuses the same trial seeds.
pub fn tune_sampling_window(params: &PbitParams, sweep: &SweepSpec, tolerance: f64, seed: u64) -> Result<f64> {
    tune_sampling_window_with(params, sweep, tolerance, seed, TuneOptions::default())
}

pub fn tune_sampling_window_with(
    params: &PbitParams,
    sweep: &SweepSpec,
    tolerance: f64,
    seed: u64,
    options: TuneOptions,
) -> Result<f64> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be > 0, got {tolerance}")));
    }
    let cap = options.cap_factor * params.tau0;
    let passes = |w: f64| -> Result<bool> {
        let report = measure_activation_curve(params, &SamplingPolicy::window(w), sweep, seed)?;
        Ok(report.sweep_rms <= tolerance)
    };
    let mut hi = params.tau0 / 8.0;
    let mut lo = 0.0;
    while !passes(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > cap {
            if passes(cap)? {
                hi = cap;
                break;
            }
            return Err(Error::WindowCapExceeded {
                cap_ns: cap,
                tolerance,
            });
        }
    }
    while hi - lo > options.rel_precision * hi {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Feedback resistor that brings a device with barrier `eb_max` down to an
/// effective barrier of `target_eb`. `None` when no feedback is needed.
pub fn compensating_resistor(eb_max: f64, target_eb: f64, r0: f64) -> Result<Option<f64>> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidParams(format!("r0 must be > 0, got {r0}")));
    }
    if !(target_eb >= 0.0) {
        return Err(Error::InvalidParams(format!("target barrier must be >= 0, got {target_eb}")));
    }
    if target_eb >= eb_max {
        return Ok(None);
    }
    Ok(Some(r0 * eb_max / (eb_max - target_eb)))
}

/// `tau(no feedback) / tau(feedback)`.
pub fn feedback_speedup(eb: f64, rf: Option<f64>, r0: f64) -> f64 {
    fluctuation_timescale(eb, 1.0) / fluctuation_timescale(effective_barrier(eb, rf, r0), 1.0)
}

/// `r0` for which a device with barrier `eb` speeds up by `speedup` with
/// feedback resistor `rf`.
pub fn r0_for_speedup(eb: f64, rf: f64, speedup: f64) -> f64 {
    rf * speedup.ln() / eb
}

/// Target barrier reached when a device with barrier `eb` is compensated
/// with `rf` at feedback strength `r0`.
pub fn target_for_resistor(eb: f64, rf: f64, r0: f64) -> f64 {
    effective_barrier(eb, Some(rf), r0)
}

/// Least-squares fit of a compensation target to a table of
/// `(eb_max, resistor)` rows at fixed `r0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResistorFit {
    pub r0: f64,
    pub target_eb: f64,
    pub predicted: Vec<f64>,
    /// `observed - predicted`, kΩ.
    pub residuals: Vec<f64>,
    pub rms_residual: f64,
}

pub fn fit_resistor_table(rows: &[(f64, f64)], r0: f64) -> Result<ResistorFit> {
    if rows.is_empty() {
        return Err(Error::InvalidParams("empty resistor table".into()));
    }
    let min_eb = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let max_eb = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    // The model r0·eb/(eb - t) is only defined below the smallest barrier.
    // Negative targets are allowed here: they describe over-compensation.
    let sse = |t: f64| -> f64 {
        rows.iter()
            .map(|&(eb, rf)| (rf - r0 * eb / (eb - t)).powi(2))
            .sum()
    };
    let (mut a, mut b) = (-50.0 * max_eb.max(1.0), min_eb * (1.0 - 1e-6));
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-10 {
        let c = b - invphi * (b - a);
        let d = a + invphi * (b - a);
        if sse(c) < sse(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let target_eb = 0.5 * (a + b);
    let predicted: Vec<f64> = rows.iter().map(|&(eb, _)| r0 * eb / (eb - target_eb)).collect();
    let residuals: Vec<f64> = rows.iter().zip(&predicted).map(|(r, p)| r.1 - p).collect();
    let rms_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / rows.len() as f64).sqrt();
    Ok(ResistorFit {
        r0,
        target_eb,
        predicted,
        residuals,
        rms_residual,
    })
}

/// Per-sample power model of a p-bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    /// Static power of the neuron, µW.
    pub p_static_uw: f64,
    /// Samples taken per inference.
    pub samples_per_inference: f64,
}

impl PowerModel {
    /// Static power of the MTJ/NMOS branch, averaged over the two states.
    pub fn branch_power_uw(params: &PbitParams) -> f64 {
        let g_t = params.beta * params.g0;
        let branch = |m_z: f64| {
            let g = mtj_conductance(params, m_z);
            params.vdd * params.vdd * g * g_t / (g + g_t)
        };
        0.5 * (branch(1.0) + branch(-1.0)) * 1e6
    }

    /// Branch static power, with the sample count chosen so that the
    /// feedback-free device costs `baseline_pj` under `policy`.
    pub fn calibrated(params: &PbitParams, policy: &SamplingPolicy, baseline_pj: f64) -> Self {
        let p_static_uw = Self::branch_power_uw(params);
        Self {
            p_static_uw,
            samples_per_inference: baseline_pj / (p_static_uw * policy.active_time() * 1e-3),
        }
    }
}

/// Feedback path power `vdd² / rf`, µW.
pub fn feedback_power_uw(vdd: f64, rf: Option<f64>) -> f64 {
    rf.map_or(0.0, |rf| vdd * vdd / rf * 1e3)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown {
    pub static_pj: f64,
    pub feedback_pj: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub per_pbit_pj: f64,
    pub network_pj: f64,
    pub neurons: usize,
    /// Fractional increase over the reference configuration.
    pub overhead_vs_baseline: f64,
    /// Per-p-bit split of `per_pbit_pj`.
    pub breakdown: EnergyBreakdown,
}

/// Energy of one p-bit per inference. The overhead is relative to the same
/// device and window without feedback.
pub fn pbit_energy(policy: &SamplingPolicy, params: &PbitParams, power: &PowerModel) -> EnergyReport {
    // µW · ns = fJ
    let scale = policy.active_time() * power.samples_per_inference * 1e-3;
    let breakdown = EnergyBreakdown {
        static_pj: power.p_static_uw * scale,
        feedback_pj: feedback_power_uw(params.vdd, params.rf) * scale,
    };
    let per_pbit_pj = breakdown.static_pj + breakdown.feedback_pj;
    EnergyReport {
        per_pbit_pj,
        network_pj: per_pbit_pj,
        neurons: 1,
        overhead_vs_baseline: breakdown.feedback_pj / breakdown.static_pj,
        breakdown,
    }
}

/// Number of p-bit neurons in a layered network. The input layer is driven
/// directly and holds no p-bits.
pub fn pbit_count(topology: &[usize]) -> usize {
    topology.iter().skip(1).sum()
}

/// Network energy with every p-bit costing `per_pbit`, relative to a
/// network of `baseline` p-bits.
pub fn dbn_energy(topology: &[usize], per_pbit: &EnergyReport, baseline: &EnergyReport) -> EnergyReport {
    let neurons = pbit_count(topology);
    EnergyReport {
        per_pbit_pj: per_pbit.per_pbit_pj,
        network_pj: per_pbit.per_pbit_pj * neurons as f64,
        neurons,
        overhead_vs_baseline: per_pbit.per_pbit_pj / baseline.per_pbit_pj - 1.0,
        breakdown: per_pbit.breakdown,
    }
}
