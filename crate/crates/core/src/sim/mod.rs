//! Seeded discrete-event simulation of the consensus pipeline and of full
//! learning cycles.
//!
//! One run is single-threaded and fully determined by its parameters and
//! master seed. Independent replications own their [`RandomStreams`] and
//! can run in parallel.

pub mod batching;
pub mod cycle;
pub mod event;
pub mod experiment;
pub mod pbft;
pub mod streams;

use alloc::vec::Vec;

pub use batching::{run_leader_batching, BatchOutcome};
pub use cycle::{audit_block, run_cycle, Behavior, CycleOutcome, Participant};
pub use event::{Event, EventKind, EventQueue, Payload};
pub use experiment::{run_experiment, run_replication, summarize, ReplicationSample};
pub use pbft::{run_pbft_round, Message, PbftNetwork, PeerState, Phase, PhaseTimes};
pub use streams::{generate_arrivals, sample_exponential, stationary_backlog, PoissonArrivals, RandomStreams};

use crate::domain::{DomainError, ParamError, SystemParams};
use crate::fl::FlError;
use crate::latency::LatencyError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("{0} must be > 0")]
    NonPositive(&'static str),
    #[error("unstable queue: lambda must be < mu")]
    Unstable,
    #[error("no transaction arrivals")]
    NoArrivals,
    #[error("quorum unreachable: need {needed} peers, {available} available")]
    QuorumUnreachable { needed: usize, available: usize },
    #[error("event scheduled in the past: now {now}, event at {time}")]
    Causality { now: f64, time: f64 },
    #[error("every transaction was rejected; block would be empty")]
    EmptyBlock,
    #[error("no participants")]
    NoParticipants,
    #[error("replications must be >= 1")]
    NoReplications,
    #[error("invalid faulty-peer assignment")]
    InvalidFaults,
    #[error(transparent)]
    Fl(#[from] FlError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Latency(#[from] LatencyError),
    #[error(transparent)]
    Params(#[from] ParamError),
}

/// One block's trip through batching and PBFT.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusRun {
    pub batch: BatchOutcome,
    pub phases: PhaseTimes,
    pub faulty: Vec<usize>,
    pub trace: Option<Vec<Event>>,
}

/// Batching at the leader (starting from a stationary backlog) followed by
/// one PBFT round with `f` randomly placed crash faults.
///
/// `candidate_cap` limits the number of transactions offered to the block;
/// `None` offers an endless Poisson stream.
pub fn simulate_consensus(
    p: &SystemParams,
    candidate_cap: Option<usize>,
    streams: &mut RandomStreams,
    record_trace: bool,
) -> Result<ConsensusRun, SimError> {
    let mut queue = if record_trace {
        EventQueue::with_trace()
    } else {
        EventQueue::new()
    };
    let backlog = stationary_backlog(p.lambda, p.mu, &mut streams.services)?;
    let batch = {
        let arrivals = PoissonArrivals::new(p.lambda, &mut streams.arrivals)?;
        let cap = candidate_cap.unwrap_or(usize::MAX);
        run_leader_batching(p, arrivals.take(cap), backlog, &mut streams.services, &mut queue)?
    };
    queue.clear_pending();
    let mut net = PbftNetwork::with_random_faults(p, &mut streams.faults)?;
    let phases = run_pbft_round(
        p,
        batch.preprepare_delay(),
        &mut net,
        &mut streams.arrivals,
        &mut streams.services,
        &mut queue,
    )?;
    Ok(ConsensusRun {
        batch,
        phases,
        faulty: net.faulty().collect(),
        trace: queue.take_trace(),
    })
}
