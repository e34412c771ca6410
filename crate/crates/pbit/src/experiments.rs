//! One function per CLI command. Each returns a [`Table`] that renders to
//! CSV with a schema/config-hash comment line.

use crate::config::ExperimentConfig;
use crate::dbn::{evaluate, evaluate_ideal, load_mnist, train_cd1, Dataset, DbnModel, InferenceConfig, Split};
use crate::device::{input_bias_probability, simulate_trace};
use crate::mitigation::{
    compensating_resistor, dbn_energy, pbit_energy, tune_sampling_window_with, window_variance_factor,
    SamplingPolicy,
};
use crate::seed::derive_seed;
use crate::variation::{build_population, VariationSpec};
use crate::{Error, Result};

const SIGMOID: u64 = 1;
const TRACE: u64 = 2;
const TUNE: u64 = 3;
const KNEE: u64 = 4;
const EVAL: u64 = 5;

/// A CSV payload with a versioned schema id.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(schema: &'static str, columns: &[&'static str]) -> Self {
        Self {
            schema,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, config_hash: &str) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields");
        format!("# schema={} config={config_hash}\n{body}", self.schema)
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Output probability against input voltage over `[0, vdd]`.
pub fn cmd_sigmoid(cfg: &ExperimentConfig) -> Result<Table> {
    let params = cfg.device().with_eb(cfg.sigmoid.eb);
    let tau = params.timescale();
    let duration = cfg.sigmoid.duration_tau * tau;
    let g = window_variance_factor(duration / tau);
    let mut t = Table::new("pbit.sigmoid.v1", &["v_in", "p_analytic", "p_empirical", "stderr"]);
    let n = cfg.sigmoid.points;
    for i in 0..n {
        let v = params.vdd * i as f64 / (n - 1) as f64;
        let p = input_bias_probability(&params, v);
        let trace = simulate_trace(&params, v, duration, derive_seed(cfg.seed, &[SIGMOID, i as u64]));
        let emp = trace.sample_window(0.0, duration)?;
        t.push(vec![num(v), num(p), num(emp), num((p * (1.0 - p) * g).sqrt())]);
    }
    Ok(t)
}

/// Telegraph traces at a fixed input, one row per constant-output stretch.
pub fn cmd_trace(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new("pbit.trace.v1", &["eb_kT", "rf_kohm", "t_start_ns", "dwell_ns", "output"]);
    let tc = &cfg.trace;
    let feedback = [None].into_iter().chain(tc.rf.map(Some));
    for (f, rf) in feedback.enumerate() {
        for (k, &eb) in tc.eb.iter().enumerate() {
            let params = cfg.device().with_eb(eb).with_rf(rf);
            params.validate()?;
            let seed = derive_seed(cfg.seed, &[TRACE, f as u64, k as u64]);
            let trace = simulate_trace(&params, tc.v_in, tc.duration, seed);
            let mut start = 0.0;
            for seg in &trace.segments {
                t.push(vec![num(eb), opt(rf), num(start), num(seg.dwell), (seg.state.output() as u8).to_string()]);
                start += seg.dwell;
            }
        }
    }
    Ok(t)
}

/// Minimal window for a device of barrier `eb`, using the trial seeds
/// shared by every command.
pub fn tuned_window(cfg: &ExperimentConfig, eb: f64) -> Result<f64> {
    tune_sampling_window_with(
        &cfg.device().with_eb(eb),
        &cfg.sweep,
        cfg.calibration.tolerance,
        derive_seed(cfg.seed, &[TUNE]),
        cfg.tune_options(),
    )
}

/// Operating window for a network that must tolerate barriers up to `eb`.
/// It never drops below the baseline window.
pub fn operating_window(cfg: &ExperimentConfig, eb: f64) -> Result<f64> {
    Ok(tuned_window(cfg, eb)?.max(cfg.calibration.baseline_window))
}

pub fn cmd_tune(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new("pbit.tune.v1", &["eb_kT", "min_tau_s_ns", "timescale_ns", "window_over_timescale"]);
    for &eb in &cfg.tune.eb {
        let w = tuned_window(cfg, eb)?;
        let tau = cfg.device().with_eb(eb).timescale();
        t.push(vec![num(eb), num(w), num(tau), num(w / tau)]);
    }
    Ok(t)
}

/// Feedback resistor sized for a tolerance level, if any is needed.
pub fn feedback_resistor(cfg: &ExperimentConfig, eb: f64) -> Result<Option<f64>> {
    compensating_resistor(eb, cfg.calibration.compensation_target, cfg.calibration.r0)
}

pub fn cmd_energy(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(
        "pbit.energy.v1",
        &["tolerance_kT", "mechanism", "window_ns", "rf_kohm", "per_pbit_pJ", "network_pJ", "overhead"],
    );
    let (_, _, topology) = cfg.dbn_scale();
    let power = cfg.power();
    let base_policy = SamplingPolicy::window(cfg.calibration.baseline_window);
    let baseline = pbit_energy(&base_policy, &cfg.device(), &power);
    for &tol in &cfg.energy.tolerances {
        let policy = SamplingPolicy::window(operating_window(cfg, tol)?);
        let temporal = dbn_energy(&topology, &pbit_energy(&policy, &cfg.device().with_eb(tol), &power), &baseline);
        t.push(vec![
            num(tol),
            "temporal".into(),
            num(policy.tau_s),
            String::new(),
            num(temporal.per_pbit_pj),
            num(temporal.network_pj),
            num(temporal.overhead_vs_baseline),
        ]);
        let rf = feedback_resistor(cfg, tol)?;
        let device = cfg.device().with_eb(tol).with_rf(rf);
        let feedback = dbn_energy(&topology, &pbit_energy(&base_policy, &device, &power), &baseline);
        t.push(vec![
            num(tol),
            "feedback".into(),
            num(base_policy.tau_s),
            opt(rf),
            num(feedback.per_pbit_pj),
            num(feedback.network_pj),
            num(feedback.overhead_vs_baseline),
        ]);
    }
    Ok(t)
}

/// Train and test subsets for the selected scale.
pub fn load_data(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let dir = cfg.data_dir()?;
    let (n_train, n_test, _) = cfg.dbn_scale();
    let train = load_mnist(&dir, Split::Train)?.head(n_train);
    let test = load_mnist(&dir, Split::Test)?.head(n_test);
    Ok((train, test))
}

pub fn train_model(cfg: &ExperimentConfig, train: &Dataset) -> Result<DbnModel> {
    let (_, _, topology) = cfg.dbn_scale();
    train_cd1(train, &topology, &cfg.train_config())
}

/// Inference settings for a population with barriers drawn from
/// `[0, eb_max]`.
pub fn inference_config(
    cfg: &ExperimentConfig,
    model: &DbnModel,
    eb_max: f64,
    window: f64,
    feedback: bool,
) -> Result<InferenceConfig> {
    let n = model.topology[1..].iter().sum();
    let spec = VariationSpec::direct(eb_max, cfg.dbn.population_seed);
    let population = build_population(n, cfg.device(), &spec)?;
    let ic = InferenceConfig::new(population, SamplingPolicy::window(window))
        .with_votes(cfg.dbn.votes)
        .with_start(cfg.dbn.start);
    if feedback {
        ic.with_feedback(cfg.calibration.compensation_target)
    } else {
        Ok(ic)
    }
}

/// Test error against the barrier range, unmitigated at the baseline
/// window, with temporal redundancy, and with feedback compensation.
pub fn cmd_knee(cfg: &ExperimentConfig) -> Result<Table> {
    let (train, test) = load_data(cfg)?;
    let model = train_model(cfg, &train)?;
    knee_table(cfg, &model, &test)
}

pub fn knee_table(cfg: &ExperimentConfig, model: &DbnModel, test: &Dataset) -> Result<Table> {
    let mut t = Table::new("pbit.knee.v1", &["eb_max_kT", "mitigation", "window_ns", "error_rate"]);
    let ideal = evaluate_ideal(model, test)?;
    t.push(vec![num(0.0), "oracle".into(), String::new(), num(ideal.error_rate)]);
    let seed = derive_seed(cfg.seed, &[KNEE]);
    let base = cfg.calibration.baseline_window;
    for &eb in &cfg.dbn.knee_eb {
        let temporal = operating_window(cfg, eb)?;
        for (name, window, feedback) in [("none", base, false), ("temporal", temporal, false), ("feedback", base, true)] {
            let ic = inference_config(cfg, model, eb, window, feedback)?;
            let e = evaluate(model, test, &ic, seed)?;
            t.push(vec![num(eb), name.into(), num(window), num(e.error_rate)]);
        }
    }
    Ok(t)
}

/// Trains on the configured subset and writes the model file.
pub fn cmd_dbn_train(cfg: &ExperimentConfig) -> Result<(DbnModel, Table)> {
    let (train, test) = load_data(cfg)?;
    let model = train_model(cfg, &train)?;
    model.save(&cfg.model_path())?;
    let mut t = Table::new("pbit.dbn-train.v1", &["split", "images", "ideal_error"]);
    for (name, data) in [("train", &train), ("test", &test)] {
        t.push(vec![name.into(), data.len().to_string(), num(evaluate_ideal(&model, data)?.error_rate)]);
    }
    Ok((model, t))
}

/// Evaluates the saved model on p-bits; one confusion-matrix row per true
/// digit plus an `all` row.
pub fn cmd_dbn_eval(cfg: &ExperimentConfig) -> Result<Table> {
    let model = DbnModel::load(&cfg.model_path())?;
    let (_, n_test, _) = cfg.dbn_scale();
    let test = load_mnist(&cfg.data_dir()?, Split::Test)?.head(n_test);
    if model.topology[0] != test.pixels() {
        return Err(Error::ModelFormat(format!(
            "model expects {} inputs, images have {}",
            model.topology[0],
            test.pixels()
        )));
    }
    let window = cfg.dbn.eval_window.unwrap_or(cfg.calibration.baseline_window);
    let ic = inference_config(cfg, &model, cfg.dbn.eval_eb_max, window, cfg.dbn.eval_feedback)?;
    let e = evaluate(&model, &test, &ic, derive_seed(cfg.seed, &[EVAL]))?;
    const COLUMNS: [&str; 14] = [
        "true_digit", "pred_0", "pred_1", "pred_2", "pred_3", "pred_4", "pred_5", "pred_6", "pred_7", "pred_8",
        "pred_9", "total", "errors", "error_rate",
    ];
    let classes = e.confusion.len();
    let columns: Vec<&'static str> = COLUMNS[..1 + classes.min(10)].iter().chain(&COLUMNS[11..]).copied().collect();
    let mut t = Table::new("pbit.dbn-eval.v1", &columns);
    let (mut total, mut errors) = (0u32, 0u32);
    for (digit, row) in e.confusion.iter().enumerate() {
        let n: u32 = row.iter().sum();
        let wrong = n - row[digit];
        total += n;
        errors += wrong;
        let rate = if n == 0 { 0.0 } else { wrong as f64 / n as f64 };
        let mut r = vec![digit.to_string()];
        r.extend(row.iter().take(10).map(u32::to_string));
        r.extend([n.to_string(), wrong.to_string(), num(rate)]);
        t.push(r);
    }
    let mut all = vec!["all".to_string()];
    all.extend((0..classes.min(10)).map(|p| e.confusion.iter().map(|r| r[p]).sum::<u32>().to_string()));
    all.extend([total.to_string(), errors.to_string(), num(e.error_rate)]);
    t.push(all);
    Ok(t)
}
