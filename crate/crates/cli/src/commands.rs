//! The subcommands as plain functions returning CSV text.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use cbfl_core::fl::{accuracy, empirical_loss, weight_change};
use cbfl_core::latency::{argmin_consensus_grid, optimal_lambda, t_total};
use cbfl_core::sim::experiment::config_id;
use cbfl_core::sim::{audit_block, run_cycle, run_replication, summarize, Behavior, Participant};
use cbfl_core::synth::SynthSpec;
use cbfl_core::{
    Component, Dataset, ExperimentStats, FlError, GlobalModel, LatencyError, ParamError, RandomStreams, Sample,
    SimError, SystemParams,
};

use crate::config::ConfigError;
use crate::csv_out::{fmt_opt, fmt_real, Table};
use crate::data::DataError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("data: {0}")]
    Data(#[from] DataError),
    #[error("invalid sweep point {param}={value}: {source}")]
    InvalidPoint {
        param: SweepParam,
        value: String,
        source: ParamError,
    },
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
    #[error("model: {0}")]
    Latency(#[from] LatencyError),
    #[error("learning: {0}")]
    Fl(#[from] FlError),
    #[error("check failed: {0}")]
    Check(String),
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn usage<T>(message: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(message.into()))
}

fn component_names() -> impl Iterator<Item = String> {
    Component::ALL.iter().map(|c| c.name().to_owned())
}

/// Analytic breakdown for one enterprise with `n_i` samples and a block of
/// `b` transactions (default `N_B`).
pub fn model(p: &SystemParams, n_i: usize, b: Option<usize>) -> Result<String, CliError> {
    let b = b.unwrap_or(p.n_block);
    if b == 0 || b > p.n_block {
        return usage(format!("--b must lie in 1..={}", p.n_block));
    }
    if n_i == 0 {
        return usage("--n-i must be >= 1");
    }
    let a = t_total(p, n_i, b)?;
    let mut table = Table::new(["n_i".to_owned(), "b".to_owned()].into_iter().chain(component_names()));
    let mut row = vec![n_i.to_string(), b.to_string()];
    row.extend(Component::ALL.iter().map(|&c| fmt_real(a.breakdown.get(c))));
    table.push(row);
    Ok(table.to_csv())
}

/// Replications `0..reps` in parallel, merged in replication order.
pub fn replicate(p: &SystemParams, n_i: usize, reps: usize, seed: u64) -> Result<ExperimentStats, CliError> {
    if reps == 0 {
        return usage("--reps must be >= 1");
    }
    let samples = (0..reps as u64)
        .into_par_iter()
        .map(|rep| run_replication(p, n_i, seed, rep))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(config_id(p), p, n_i, &samples)?)
}

pub fn simulate(p: &SystemParams, n_i: usize, reps: usize, seed: u64) -> Result<String, CliError> {
    let stats = replicate(p, n_i, reps, seed)?;
    let mut table = Table::new([
        "config_id",
        "component",
        "mean",
        "std_err",
        "analytic",
        "rel_error",
        "replications",
    ]);
    for c in &stats.components {
        table.push(vec![
            stats.config_id.clone(),
            c.component.name().to_owned(),
            fmt_real(c.mean),
            fmt_opt(c.std_err),
            fmt_real(c.analytic),
            fmt_opt(c.rel_error),
            stats.replications.to_string(),
        ]);
    }
    Ok(table.to_csv())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Lambda,
    F,
    NBlock,
    Mu,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Lambda => "lambda",
            SweepParam::F => "f",
            SweepParam::NBlock => "n_block",
            SweepParam::Mu => "mu",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, SweepParam::F | SweepParam::NBlock)
    }

    /// Sets the parameter; `f` also sets `n_peers = 3f + 1`.
    fn apply(self, p: &mut SystemParams, value: f64) {
        match self {
            SweepParam::Lambda => p.lambda = value,
            SweepParam::Mu => p.mu = value,
            SweepParam::NBlock => p.n_block = value as usize,
            SweepParam::F => {
                p.f = value as usize;
                p.n_peers = 3 * p.f + 1;
            }
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lambda" => Ok(SweepParam::Lambda),
            "f" => Ok(SweepParam::F),
            "n_block" => Ok(SweepParam::NBlock),
            "mu" => Ok(SweepParam::Mu),
            other => Err(format!("unknown sweep parameter `{other}` (expected lambda, f, n_block or mu)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub step: f64,
    pub reps: usize,
    pub seed: u64,
}

/// Every grid point with its validated parameters. Any invalid point fails
/// the whole sweep before anything runs.
pub fn sweep_points(base: &SystemParams, spec: &SweepSpec) -> Result<Vec<(f64, SystemParams)>, CliError> {
    if !(spec.from.is_finite() && spec.to.is_finite()) {
        return usage("--from and --to must be finite");
    }
    if !(spec.from < spec.to) {
        return usage("empty range: --from must be < --to");
    }
    if !(spec.step > 0.0 && spec.step.is_finite()) {
        return usage("--step must be > 0");
    }
    if spec.reps == 0 {
        return usage("--reps must be >= 1");
    }
    let slack = spec.step * 1e-9;
    let mut points = Vec::new();
    for k in 0.. {
        let value = spec.from + k as f64 * spec.step;
        if value > spec.to + slack {
            break;
        }
        if spec.param.is_integer() && (value < 0.0 || (value - value.round()).abs() > 1e-9) {
            return usage(format!("{} must be a nonnegative integer, got {}", spec.param, fmt_real(value)));
        }
        let value = if spec.param.is_integer() { value.round() } else { value };
        let mut p = base.clone();
        spec.param.apply(&mut p, value);
        let p = p.validate().map_err(|source| CliError::InvalidPoint {
            param: spec.param,
            value: fmt_real(value),
            source,
        })?;
        points.push((value, p));
    }
    Ok(points)
}

pub fn sweep(base: &SystemParams, spec: &SweepSpec, n_i: usize) -> Result<String, CliError> {
    let points = sweep_points(base, spec)?;
    let results = points
        .par_iter()
        .map(|(_, p)| replicate(p, n_i, spec.reps, spec.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new([
        spec.param.name(),
        "b_mean",
        "sim_t_consensus",
        "se_t_consensus",
        "analytic_t_consensus",
        "rel_error_t_consensus",
        "sim_t_total",
        "analytic_t_total",
        "rel_error_t_total",
        "replications",
    ]);
    for ((value, _), stats) in points.iter().zip(&results) {
        let cons = stats.get(Component::Consensus);
        let total = stats.get(Component::Total);
        table.push(vec![
            fmt_real(*value),
            fmt_real(stats.mean_batch),
            fmt_real(cons.mean),
            fmt_opt(cons.std_err),
            fmt_real(cons.analytic),
            fmt_opt(cons.rel_error),
            fmt_real(total.mean),
            fmt_real(total.analytic),
            fmt_opt(total.rel_error),
            stats.replications.to_string(),
        ]);
    }
    Ok(table.to_csv())
}

/// Closed-form optimum against a grid scan with step `mu / 1000`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalLambda {
    pub lambda_star: f64,
    pub grid_argmin: f64,
    pub grid_step: f64,
    pub min_second_difference: f64,
    pub convex: bool,
    pub agree: bool,
}

impl OptimalLambda {
    pub fn passed(&self) -> bool {
        self.convex && self.agree
    }

    pub fn to_csv(&self) -> String {
        let mut table = Table::new([
            "lambda_star",
            "grid_argmin",
            "grid_step",
            "min_second_difference",
            "convex",
            "agree",
        ]);
        table.push(vec![
            fmt_real(self.lambda_star),
            fmt_real(self.grid_argmin),
            fmt_real(self.grid_step),
            fmt_real(self.min_second_difference),
            self.convex.to_string(),
            self.agree.to_string(),
        ]);
        table.to_csv()
    }
}

pub fn optimal(p: &SystemParams) -> Result<OptimalLambda, CliError> {
    let lambda_star = optimal_lambda(p.f, p.n_block, p.mu)?;
    let grid_step = p.mu / 1000.0;
    let scan = argmin_consensus_grid(p.f, p.n_block, p.mu, grid_step)?;
    Ok(OptimalLambda {
        lambda_star,
        grid_argmin: scan.argmin,
        grid_step,
        min_second_difference: scan.min_second_difference,
        convex: scan.is_convex(),
        agree: (scan.argmin - lambda_star).abs() <= grid_step * (1.0 + 1e-9),
    })
}

/// Where the enterprises' data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Per enterprise: `train` training and `test` verification samples.
    Synthetic { spec: SynthSpec, train: usize, test: usize },
    /// Samples dealt round-robin to the enterprises; the last
    /// `test_fraction` of each share is kept for verification.
    Samples { samples: Vec<Sample>, test_fraction: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlRunSpec {
    pub source: DataSource,
    pub seed: u64,
    pub max_cycles: usize,
    /// Enterprises that submit random weights.
    pub adversaries: Vec<usize>,
    pub adversary_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    CycleCap,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::CycleCap => "cycle_cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlRun {
    pub table: Table,
    pub stop: StopReason,
    pub cycles: usize,
    pub final_accuracy: f64,
    pub losses: Vec<f64>,
    /// Cycles whose block held a transaction of an adversary.
    pub adversary_admitted: usize,
}

fn build_participants(
    source: &DataSource,
    n: usize,
    adversaries: &[usize],
    scale: f64,
    streams: &mut RandomStreams,
) -> Result<Vec<Participant>, CliError> {
    let mut shares = Vec::with_capacity(n);
    match source {
        DataSource::Synthetic { spec, train, test } => {
            if *train == 0 || *test == 0 || spec.dim == 0 {
                return usage("--samples, --test-samples and --dim must be >= 1");
            }
            for i in 0..n {
                let tr = spec.dataset(*train, i, &mut streams.data)?;
                let te = spec.dataset(*test, i, &mut streams.data)?;
                shares.push((tr, te));
            }
        }
        DataSource::Samples { samples, test_fraction } => {
            if !(0.0 < *test_fraction && *test_fraction < 1.0) {
                return usage("--test-fraction must lie in (0, 1)");
            }
            for i in 0..n {
                let share: Vec<Sample> = samples.iter().skip(i).step_by(n).cloned().collect();
                let n_test = (share.len() as f64 * test_fraction).round() as usize;
                if n_test == 0 || n_test >= share.len() {
                    return usage(format!("too few samples to split among {n} enterprises"));
                }
                let mut train = share;
                let test = train.split_off(train.len() - n_test);
                shares.push((Dataset::new(train, i)?, Dataset::new(test, i)?));
            }
        }
    }
    for &a in adversaries {
        if a >= n {
            return usage(format!("adversary {a} out of range: there are {n} enterprises"));
        }
    }
    Ok(shares
        .into_iter()
        .enumerate()
        .map(|(i, (train, test))| Participant {
            train,
            test,
            behavior: if adversaries.contains(&i) {
                Behavior::RandomWeights { scale }
            } else {
                Behavior::Honest
            },
        })
        .collect())
}

/// Repeats the learning cycle until the global weights move by at most
/// `epsilon` or `max_cycles` cycles ran. Every sealed block is audited.
pub fn fl_run(p: &SystemParams, spec: &FlRunSpec) -> Result<FlRun, CliError> {
    if spec.max_cycles == 0 {
        return usage("--max-cycles must be >= 1");
    }
    let mut streams = RandomStreams::new(spec.seed);
    let parts = build_participants(
        &spec.source,
        p.n_peers,
        &spec.adversaries,
        spec.adversary_scale,
        &mut streams,
    )?;
    let held_out = Dataset::new(parts.iter().flat_map(|q| q.test.samples.iter().cloned()).collect(), 0)?;

    let mut table = Table::new(
        [
            "cycle",
            "weight_change",
            "accuracy",
            "loss",
            "block_txs",
            "rejected",
            "converged",
        ]
        .into_iter()
        .map(str::to_owned)
        .chain(component_names()),
    );
    let mut g = GlobalModel::bootstrap(parts[0].train.dim());
    let mut stop = StopReason::CycleCap;
    let mut losses = Vec::new();
    let mut adversary_admitted = 0;
    let mut final_accuracy = 0.0;
    for cycle in 1..=spec.max_cycles {
        let out = run_cycle(p, &parts, &g, &mut streams)?;
        let unsound = audit_block(&out.block, &parts, p.e0);
        if !unsound.is_empty() {
            return Err(CliError::Check(format!(
                "audit: block of cycle {cycle} holds unverified txs from {unsound:?}"
            )));
        }
        if spec.adversaries.iter().any(|&a| out.block.contains_enterprise(a)) {
            adversary_admitted += 1;
        }
        let change = weight_change(&out.model.weights, &g.weights)?;
        let converged = change <= p.epsilon;
        final_accuracy = accuracy(&out.model.weights, &held_out)?;
        let loss = empirical_loss(&out.model.weights, parts.iter().map(|q| &q.train))?;
        losses.push(loss);
        let mut row = vec![
            cycle.to_string(),
            fmt_real(change),
            fmt_real(final_accuracy),
            fmt_real(loss),
            out.block.len().to_string(),
            out.rejected.len().to_string(),
            converged.to_string(),
        ];
        row.extend(Component::ALL.iter().map(|&c| fmt_real(out.latency.get(c))));
        table.push(row);
        g = out.model;
        if converged {
            stop = StopReason::Converged;
            break;
        }
    }
    Ok(FlRun {
        cycles: table.rows.len(),
        table,
        stop,
        final_accuracy,
        losses,
        adversary_admitted,
    })
}

/// `n` synthetic samples in the samples-file format.
pub fn synth(spec: &SynthSpec, n: usize, seed: u64) -> Result<String, CliError> {
    if n == 0 || spec.dim == 0 {
        return usage("--samples and --dim must be >= 1");
    }
    let samples = spec.samples(n, &mut RandomStreams::new(seed).data);
    Ok(crate::data::format_samples(&samples))
}
