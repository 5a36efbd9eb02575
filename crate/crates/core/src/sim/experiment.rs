//! Independent replications of the consensus pipeline and their comparison
//! with the analytic model.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{simulate_consensus, RandomStreams, SimError};
use crate::domain::{digest_bytes, Component, ComponentStats, ExperimentStats, LatencyBreakdown, SystemParams};
use crate::latency::{t_download, t_global_update, t_local_update, t_total, t_upload};
use crate::math::sqrt;

/// Breakdown of one replication and its realized batch size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationSample {
    pub breakdown: LatencyBreakdown,
    pub b: usize,
}

/// Replication `rep` under `master_seed`, for an enterprise with `n_i` samples.
pub fn run_replication(p: &SystemParams, n_i: usize, master_seed: u64, rep: u64) -> Result<ReplicationSample, SimError> {
    let mut streams = RandomStreams::for_replication(master_seed, rep);
    let run = simulate_consensus(p, None, &mut streams, false)?;
    let b = run.batch.batch_size();
    let breakdown = LatencyBreakdown::new(
        t_local_update(p.delta_d, n_i, p.f_c)?,
        t_upload(p.delta_m, p.w_up, p.gamma_up)?,
        run.phases.t_preprepare,
        run.phases.t_prepare,
        run.phases.t_commit,
        t_download(p.h, b, p.delta_m, p.w_dn, p.gamma_dn)?,
        t_global_update(p.delta_m, p.n_block, p.f_c)?,
    );
    Ok(ReplicationSample { breakdown, b })
}

/// Short stable identifier of a parameter set.
pub fn config_id(p: &SystemParams) -> String {
    let digest = digest_bytes(format!("{p:?}").as_bytes());
    let mut id = String::from("cfg-");
    for byte in &digest.0[..8] {
        id.push_str(&format!("{byte:02x}"));
    }
    id
}

/// Mean and unbiased variance, accumulated relative to the first value so
/// that constant data gives its exact value and zero variance.
fn shifted_moments(mut values: impl Iterator<Item = f64>) -> (f64, f64) {
    let Some(first) = values.next() else {
        return (f64::NAN, f64::NAN);
    };
    let (mut n, mut sum, mut sum_sq) = (1.0, 0.0, 0.0);
    for x in values {
        let d = x - first;
        n += 1.0;
        sum += d;
        sum_sq += d * d;
    }
    let mean = first + sum / n;
    let var = if n > 1.0 { ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0) } else { f64::NAN };
    (mean, var)
}

/// Per-component mean, standard error and analytic prediction. The analytic
/// value averages the model over the realized batch sizes.
pub fn summarize(
    config_id: String,
    p: &SystemParams,
    n_i: usize,
    samples: &[ReplicationSample],
) -> Result<ExperimentStats, SimError> {
    if samples.is_empty() {
        return Err(SimError::NoReplications);
    }
    let n = samples.len() as f64;
    let analytic: Vec<LatencyBreakdown> = samples
        .iter()
        .map(|s| t_total(p, n_i, s.b).map(|a| a.breakdown))
        .collect::<Result<_, _>>()?;
    let components = Component::ALL
        .iter()
        .map(|&c| {
            let (mean, var) = shifted_moments(samples.iter().map(|s| s.breakdown.get(c)));
            let std_err = (samples.len() > 1).then(|| sqrt(var / n));
            let (predicted, _) = shifted_moments(analytic.iter().map(|a| a.get(c)));
            let rel_error = (predicted != 0.0).then(|| ((mean - predicted) / predicted).abs());
            ComponentStats {
                component: c,
                mean,
                std_err,
                analytic: predicted,
                rel_error,
            }
        })
        .collect();
    Ok(ExperimentStats {
        config_id,
        replications: samples.len(),
        components,
        mean_batch: samples.iter().map(|s| s.b as f64).sum::<f64>() / n,
    })
}

/// Runs replications `0..replications` in order and summarizes them.
pub fn run_experiment(p: &SystemParams, n_i: usize, replications: usize, master_seed: u64) -> Result<ExperimentStats, SimError> {
    if replications == 0 {
        return Err(SimError::NoReplications);
    }
    let p = p.clone().validate()?;
    let samples = (0..replications as u64)
        .map(|rep| run_replication(&p, n_i, master_seed, rep))
        .collect::<Result<Vec<_>, _>>()?;
    summarize(config_id(&p), &p, n_i, &samples)
}
