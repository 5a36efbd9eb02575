//! Leader-side collection of transactions into a candidate block.
//!
//! The leader is a FIFO single server with exponential service at rate `mu`.
//! A block seals at the earliest of
//! - the `N_B`-th of its transactions being served,
//! - `tau` after its first arrival (but never before one transaction is served),
//! - every offered transaction being served (the arrival source ran dry).

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;

use super::event::{EventKind, EventQueue, Payload};
use super::streams::exp_draw;
use super::SimError;
use crate::domain::SystemParams;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub first_arrival: f64,
    pub seal_time: f64,
    /// Transactions of earlier blocks found in the queue by the first arrival.
    pub backlog: usize,
    /// Arrival time of every transaction of the block, in service order.
    pub arrivals: Vec<f64>,
    /// Sojourn (wait plus service) of every transaction of the block.
    pub sojourns: Vec<f64>,
    pub timed_out: bool,
}

impl BatchOutcome {
    /// Realized batch size `b`.
    pub fn batch_size(&self) -> usize {
        self.sojourns.len()
    }

    /// Total batching sojourn of the block.
    pub fn preprepare_delay(&self) -> f64 {
        self.sojourns.iter().sum()
    }
}

#[derive(Debug, Clone, Copy)]
enum Job {
    Backlog,
    Tx { index: usize, arrived: f64 },
}

/// Runs the leader queue until the block seals.
///
/// `arrivals` yields nondecreasing arrival times of the transactions offered
/// to this block; only the first `N_B` are taken. The first of them finds
/// `backlog` earlier transactions in the queue, one of them in service.
pub fn run_leader_batching<I, R>(
    p: &SystemParams,
    arrivals: I,
    backlog: usize,
    services: &mut R,
    queue: &mut EventQueue,
) -> Result<BatchOutcome, SimError>
where
    I: IntoIterator<Item = f64>,
    R: Rng + ?Sized,
{
    if !(p.mu > 0.0) {
        return Err(SimError::NonPositive("mu"));
    }
    let mut source = arrivals.into_iter().take(p.n_block);
    let first_arrival = source.next().ok_or(SimError::NoArrivals)?;
    queue.schedule(first_arrival, EventKind::TxArrival, Payload::Tx(0))?;
    let mut offered = 1usize;
    let mut exhausted = false;

    let mut waiting: VecDeque<Job> = (0..backlog).map(|_| Job::Backlog).collect();
    let mut in_service: Option<Job> = None;
    let mut start_next = |queue: &mut EventQueue, waiting: &mut VecDeque<Job>, in_service: &mut Option<Job>| -> Result<(), SimError> {
        if in_service.is_none() {
            if let Some(job) = waiting.pop_front() {
                let payload = match job {
                    Job::Backlog => Payload::Backlog,
                    Job::Tx { index, .. } => Payload::Tx(index),
                };
                queue.schedule_in(exp_draw(p.mu, services), EventKind::ServiceComplete, payload)?;
                *in_service = Some(job);
            }
        }
        Ok(())
    };

    let mut arrived_at = Vec::new();
    let mut sojourns = Vec::new();
    let mut timer_expired = false;
    let mut sealing: Option<bool> = None;

    while let Some(event) = queue.pop() {
        let now = event.time;
        match (event.kind, event.payload) {
            (EventKind::BlockSealed, Payload::None) => {
                return Ok(BatchOutcome {
                    first_arrival,
                    seal_time: now,
                    backlog,
                    arrivals: arrived_at,
                    sojourns,
                    timed_out: sealing.unwrap_or(false),
                });
            }
            _ if sealing.is_some() => {}
            (EventKind::TxArrival, Payload::Tx(index)) => {
                waiting.push_back(Job::Tx { index, arrived: now });
                match source.next() {
                    Some(t) => {
                        queue.schedule(t.max(now), EventKind::TxArrival, Payload::Tx(offered))?;
                        offered += 1;
                    }
                    None => exhausted = true,
                }
                if index == 0 && p.tau.is_finite() {
                    queue.schedule(now + p.tau, EventKind::BlockSealed, Payload::Timeout)?;
                }
                start_next(queue, &mut waiting, &mut in_service)?;
            }
            (EventKind::ServiceComplete, _) => {
                if let Some(Job::Tx { arrived, .. }) = in_service.take() {
                    arrived_at.push(arrived);
                    sojourns.push(now - arrived);
                    let full = sojourns.len() == p.n_block;
                    let drained = exhausted && sojourns.len() == offered;
                    if full || drained || timer_expired {
                        sealing = Some(timer_expired && !full && !drained);
                        queue.schedule(now, EventKind::BlockSealed, Payload::None)?;
                        continue;
                    }
                }
                start_next(queue, &mut waiting, &mut in_service)?;
            }
            (EventKind::BlockSealed, Payload::Timeout) => {
                if sojourns.is_empty() {
                    timer_expired = true;
                } else {
                    sealing = Some(true);
                    queue.schedule(now, EventKind::BlockSealed, Payload::None)?;
                }
            }
            _ => {}
        }
    }
    Err(SimError::NoArrivals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::streams::{stationary_backlog, PoissonArrivals, RandomStreams};

    fn params(lambda: f64, mu: f64, n_block: usize, tau: f64) -> SystemParams {
        SystemParams {
            lambda,
            mu,
            n_block,
            tau,
            ..SystemParams::default()
        }
    }

    fn run(p: &SystemParams, seed: u64, stationary: bool) -> BatchOutcome {
        let mut s = RandomStreams::new(seed);
        let backlog = if stationary {
            stationary_backlog(p.lambda, p.mu, &mut s.services).unwrap()
        } else {
            0
        };
        let arrivals = PoissonArrivals::new(p.lambda, &mut s.arrivals).unwrap();
        let mut q = EventQueue::new();
        run_leader_batching(p, arrivals, backlog, &mut s.services, &mut q).unwrap()
    }

    #[test]
    fn size_triggered_blocks_are_full() {
        let p = params(100.0, 300.0, 100, f64::INFINITY);
        for seed in 0..20 {
            let out = run(&p, seed, true);
            assert_eq!(out.batch_size(), 100);
            assert!(!out.timed_out);
            assert!(out.seal_time >= out.first_arrival);
        }
    }

    #[test]
    fn tiny_timeout_gives_single_tx_blocks() {
        let p = params(100.0, 300.0, 100, 1e-9);
        for seed in 0..50 {
            let out = run(&p, seed, false);
            assert_eq!(out.batch_size(), 1, "seed {seed}");
            assert!(out.timed_out);
        }
    }

    #[test]
    fn timeout_seals_between_limits() {
        let p = params(100.0, 300.0, 100, 0.2);
        for seed in 0..50 {
            let out = run(&p, seed, true);
            assert!(out.batch_size() >= 1 && out.batch_size() < 100);
            assert!(out.timed_out);
            assert!(out.seal_time >= out.first_arrival + 0.2);
        }
    }

    #[test]
    fn finite_source_seals_when_drained() {
        let p = params(100.0, 300.0, 100, f64::INFINITY);
        let mut s = RandomStreams::new(4);
        let mut q = EventQueue::new();
        let out = run_leader_batching(&p, [0.1, 0.2, 0.2, 0.5], 0, &mut s.services, &mut q).unwrap();
        assert_eq!(out.batch_size(), 4);
        assert_eq!(out.arrivals, [0.1, 0.2, 0.2, 0.5]);
        for (sojourn, arrived) in out.sojourns.iter().zip(&out.arrivals) {
            assert!(*sojourn > 0.0);
            assert!(arrived + sojourn <= out.seal_time + 1e-12);
        }
    }

    #[test]
    fn no_arrivals_is_an_error() {
        let p = params(100.0, 300.0, 100, 1.0);
        let mut s = RandomStreams::new(4);
        let mut q = EventQueue::new();
        assert_eq!(
            run_leader_batching(&p, core::iter::empty(), 3, &mut s.services, &mut q),
            Err(SimError::NoArrivals)
        );
    }

    #[test]
    fn fifo_sojourns_are_consistent() {
        // departures of a FIFO queue are nondecreasing
        let p = params(200.0, 300.0, 500, f64::INFINITY);
        let out = run(&p, 8, true);
        let departures: Vec<f64> = out.arrivals.iter().zip(&out.sojourns).map(|(a, s)| a + s).collect();
        assert!(departures.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*departures.last().unwrap(), out.seal_time);
    }

    #[test]
    fn first_arrival_sees_stationary_queue() {
        // a backlog placed at time zero instead would leave this ~13% low
        let p = params(250.0, 300.0, 1, f64::INFINITY);
        let reps = 20_000;
        let total: f64 = (0..reps).map(|rep| {
            let mut s = RandomStreams::for_replication(77, rep);
            let backlog = stationary_backlog(p.lambda, p.mu, &mut s.services).unwrap();
            let arrivals = PoissonArrivals::new(p.lambda, &mut s.arrivals).unwrap();
            let mut q = EventQueue::new();
            run_leader_batching(&p, arrivals, backlog, &mut s.services, &mut q).unwrap().sojourns[0]
        }).sum();
        let mean = total / reps as f64;
        assert!((mean * (p.mu - p.lambda) - 1.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn steady_state_sojourn_matches_mm1() {
        let p = params(100.0, 300.0, 100_000, f64::INFINITY);
        let out = run(&p, 2026, true);
        let mean = out.preprepare_delay() / out.batch_size() as f64;
        let expected = 1.0 / (p.mu - p.lambda);
        assert!((mean / expected - 1.0).abs() < 0.02, "{mean} vs {expected}");
    }
}
