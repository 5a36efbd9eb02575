//! One learning cycle: local update, upload, cross-verification, consensus,
//! download and global aggregation.
//!
//! Computation and transfer delays come from the closed-form latency model;
//! the consensus delays are simulated. The breakdown is reported for
//! enterprise 0.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{simulate_consensus, RandomStreams, SimError};
use crate::domain::{Block, LatencyBreakdown, LocalUpdateTx, SystemParams};
use crate::fl::{
    aggregate_global, average_gradient, global_full_gradient, svrg_local_cycle, verify_update, Dataset,
    GlobalModel, Verdict,
};
use crate::latency::{t_download, t_global_update, t_local_update, t_upload};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Behavior {
    Honest,
    /// Submits `scale * N(0, I)` weights instead of training.
    RandomWeights { scale: f64 },
}

/// An enterprise: its training data, the test data its peer verifies with,
/// and how it behaves.
#[derive(Debug, Clone, PartialEq)]
pub struct Participant {
    pub train: Dataset,
    pub test: Dataset,
    pub behavior: Behavior,
}

impl Participant {
    pub fn honest(train: Dataset, test: Dataset) -> Self {
        Self {
            train,
            test,
            behavior: Behavior::Honest,
        }
    }
}

/// Verdicts on one submitted transaction, one per verifying peer.
#[derive(Debug, Clone, PartialEq)]
pub struct Review {
    pub enterprise_id: usize,
    pub verdicts: Vec<(usize, Verdict)>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleOutcome {
    pub model: GlobalModel,
    pub latency: LatencyBreakdown,
    pub block: Block,
    pub reviews: Vec<Review>,
    /// Enterprises whose transaction failed verification.
    pub rejected: Vec<usize>,
}

/// Peers that check enterprise `owner`'s transaction: everyone else, or the
/// owner itself when it is alone.
fn verifiers(owner: usize, n: usize) -> impl Iterator<Item = usize> {
    (0..n).filter(move |&j| j != owner || n == 1)
}

fn submit<R: Rng + ?Sized>(
    i: usize,
    part: &Participant,
    g: &GlobalModel,
    p: &SystemParams,
    created_at: f64,
    rng: &mut R,
) -> Result<LocalUpdateTx, SimError> {
    match part.behavior {
        Behavior::Honest => {
            let anchored;
            let start = if g.full_gradient.is_some() {
                g
            } else {
                anchored = GlobalModel {
                    full_gradient: Some(average_gradient(&g.weights, &part.train)?),
                    ..g.clone()
                };
                &anchored
            };
            let mut tx = svrg_local_cycle(start, &part.train, p, created_at, rng)?;
            if tx.enterprise_id != i {
                tx = LocalUpdateTx::new(i, tx.weights, tx.shared_gradient, tx.n_samples, created_at)?;
            }
            Ok(tx)
        }
        Behavior::RandomWeights { scale } => {
            let w: Vec<f64> = (0..g.weights.len())
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    scale * z
                })
                .collect();
            let grad = average_gradient(&w, &part.train)?;
            Ok(LocalUpdateTx::new(i, w, grad, part.train.len(), created_at)?)
        }
    }
}

/// Runs one learning cycle: local training, upload, cross-verification,
/// consensus and aggregation. Enterprise `i` is `participants[i]`.
pub fn run_cycle(
    p: &SystemParams,
    participants: &[Participant],
    g: &GlobalModel,
    streams: &mut RandomStreams,
) -> Result<CycleOutcome, SimError> {
    let n = participants.len();
    if n == 0 {
        return Err(SimError::NoParticipants);
    }
    let t_up = t_upload(p.delta_m, p.w_up, p.gamma_up)?;

    // local training and upload
    let mut txs = Vec::with_capacity(n);
    for (i, part) in participants.iter().enumerate() {
        let created_at = t_local_update(p.delta_d, part.train.len(), p.f_c)? + t_up;
        txs.push(submit(i, part, g, p, created_at, &mut streams.data)?);
    }

    // cross-verification
    let mut reviews = Vec::with_capacity(n);
    let mut candidates = Vec::new();
    let mut rejected = Vec::new();
    for (i, tx) in txs.into_iter().enumerate() {
        let verdicts: Vec<(usize, Verdict)> = verifiers(i, n)
            .map(|j| (j, verify_update(&tx, &participants[j].test, p.e0)))
            .collect();
        let accepted = verdicts.iter().all(|(_, v)| v.accepted);
        reviews.push(Review {
            enterprise_id: i,
            verdicts,
            accepted,
        });
        if accepted {
            candidates.push(tx);
        } else {
            rejected.push(i);
        }
    }
    if candidates.is_empty() {
        return Err(SimError::EmptyBlock);
    }
    // the leader receives the candidates in submission order
    candidates.sort_by(|a, b| a.created_at.total_cmp(&b.created_at));

    // consensus
    let run = simulate_consensus(p, Some(candidates.len()), streams, false)?;
    let b = run.batch.batch_size();
    let submitted = candidates.iter().map(|tx| tx.created_at).fold(0.0, f64::max);
    candidates.truncate(b);
    let block = Block::seal(candidates, submitted + run.batch.seal_time, p)?;

    // aggregation
    let weights = aggregate_global(&g.weights, &block.txs)?;
    let model = GlobalModel {
        weights,
        full_gradient: Some(global_full_gradient(&block.txs)?),
        cycle: g.cycle + 1,
    };
    let latency = LatencyBreakdown::new(
        t_local_update(p.delta_d, participants[0].train.len(), p.f_c)?,
        t_up,
        run.phases.t_preprepare,
        run.phases.t_prepare,
        run.phases.t_commit,
        t_download(p.h, b, p.delta_m, p.w_dn, p.gamma_dn)?,
        t_global_update(p.delta_m, p.n_block, p.f_c)?,
    );
    Ok(CycleOutcome {
        model,
        latency,
        block,
        reviews,
        rejected,
    })
}

/// Re-checks a sealed block against every verifier's test set. Returns the
/// enterprises whose transaction has a bad digest or an accuracy below `e0`
/// for some verifier; empty means the block is sound.
pub fn audit_block(block: &Block, participants: &[Participant], e0: f64) -> Vec<usize> {
    let n = participants.len();
    block
        .txs
        .iter()
        .filter(|tx| {
            tx.enterprise_id >= n
                || !tx.digest_is_valid()
                || verifiers(tx.enterprise_id, n).any(|j| !verify_update(tx, &participants[j].test, e0).accepted)
        })
        .map(|tx| tx.enterprise_id)
        .collect()
}
