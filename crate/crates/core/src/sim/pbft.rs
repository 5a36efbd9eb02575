//! Prepare and commit phases of one PBFT round, seen from a fixed observer.
//!
//! Peer 0 leads and peer 1 observes (with a single peer the leader observes
//! itself). Crash-faulty peers send nothing. In each quorum phase the
//! observer waits until `2f` messages from other honest peers have arrived,
//! with exponential(`lambda`) gaps, then processes the `2f + 1` quorum
//! messages (its own included) one after another at exponential(`mu`) each.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;

use super::event::{EventKind, EventQueue, Payload};
use super::streams::exp_draw;
use super::SimError;
use crate::domain::SystemParams;

pub const LEADER: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    PrePrepare,
    Prepare,
    Commit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub from: usize,
    pub phase: Phase,
    pub received_at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeerState {
    pub id: usize,
    pub is_leader: bool,
    pub is_faulty: bool,
    pub inbox: VecDeque<Message>,
    pub prepare_count: usize,
    pub commit_count: usize,
}

impl PeerState {
    fn new(id: usize, is_faulty: bool) -> Self {
        Self {
            id,
            is_leader: id == LEADER,
            is_faulty,
            inbox: VecDeque::new(),
            prepare_count: 0,
            commit_count: 0,
        }
    }

    fn tally(&mut self, phase: Phase) -> usize {
        let count = match phase {
            Phase::Prepare => &mut self.prepare_count,
            Phase::Commit => &mut self.commit_count,
            Phase::PrePrepare => return 0,
        };
        *count += 1;
        *count
    }
}

/// The peer set of one round.
#[derive(Debug, Clone, PartialEq)]
pub struct PbftNetwork {
    pub peers: Vec<PeerState>,
    pub f: usize,
}

impl PbftNetwork {
    /// Marks the listed peers crash-faulty. The leader and the observer must
    /// stay honest.
    pub fn new(n_peers: usize, f: usize, faulty: &[usize]) -> Result<Self, SimError> {
        if n_peers == 0 {
            return Err(SimError::NonPositive("n_peers"));
        }
        let observer = Self::observer_id(n_peers);
        let mut peers: Vec<PeerState> = (0..n_peers).map(|id| PeerState::new(id, false)).collect();
        for &id in faulty {
            if id >= n_peers || id == LEADER || id == observer || peers[id].is_faulty {
                return Err(SimError::InvalidFaults);
            }
            peers[id].is_faulty = true;
        }
        Ok(Self { peers, f })
    }

    /// Exactly `f` faulty peers drawn uniformly from those that are neither
    /// leader nor observer.
    pub fn with_random_faults<R: Rng + ?Sized>(p: &SystemParams, rng: &mut R) -> Result<Self, SimError> {
        let first = Self::observer_id(p.n_peers) + 1;
        let candidates = p.n_peers.saturating_sub(first);
        if p.f > candidates {
            return Err(SimError::InvalidFaults);
        }
        let mut faulty: Vec<usize> = sample(rng, candidates, p.f).into_iter().map(|i| i + first).collect();
        faulty.sort_unstable();
        Self::new(p.n_peers, p.f, &faulty)
    }

    fn observer_id(n_peers: usize) -> usize {
        if n_peers > 1 {
            1
        } else {
            LEADER
        }
    }

    pub fn observer(&self) -> usize {
        Self::observer_id(self.peers.len())
    }

    pub fn faulty(&self) -> impl Iterator<Item = usize> + '_ {
        self.peers.iter().filter(|s| s.is_faulty).map(|s| s.id)
    }

    /// Honest peers other than the observer: the possible senders.
    fn senders(&self) -> Vec<usize> {
        let observer = self.observer();
        self.peers
            .iter()
            .filter(|s| !s.is_faulty && s.id != observer)
            .map(|s| s.id)
            .collect()
    }
}

/// Phase delays of one round at the observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTimes {
    /// Batching sojourn total handed in by the caller.
    pub t_preprepare: f64,
    pub t_prepare: f64,
    pub t_commit: f64,
    /// Quorum tallies at the observer, its own vote included.
    pub prepares_collected: usize,
    pub commits_collected: usize,
    pub committed: bool,
    pub reply_at: f64,
}

/// Runs prepare and commit at the observer, starting at the current clock
/// of `queue` (the pre-prepare arrives at seal time; broadcast takes no time).
pub fn run_pbft_round<R1, R2>(
    p: &SystemParams,
    t_preprepare: f64,
    net: &mut PbftNetwork,
    gaps: &mut R1,
    services: &mut R2,
    queue: &mut EventQueue,
) -> Result<PhaseTimes, SimError>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    if !(p.lambda > 0.0) {
        return Err(SimError::NonPositive("lambda"));
    }
    if !(p.mu > 0.0) {
        return Err(SimError::NonPositive("mu"));
    }
    let quorum = 2 * net.f + 1;
    let senders = net.senders();
    if senders.len() + 1 < quorum {
        return Err(SimError::QuorumUnreachable {
            needed: quorum,
            available: senders.len() + 1,
        });
    }
    let observer = net.observer();
    queue.schedule_in(0.0, EventKind::PrePrepareRecv, Payload::Peer(LEADER))?;
    queue.pop();

    let mut ends = [0.0; 2];
    let mut counts = [0usize; 2];
    for (slot, (phase, kind)) in [(Phase::Prepare, EventKind::PrepareRecv), (Phase::Commit, EventKind::CommitRecv)]
        .into_iter()
        .enumerate()
    {
        let phase_start = queue.now();
        let own = &mut net.peers[observer];
        own.inbox.push_back(Message {
            from: observer,
            phase,
            received_at: phase_start,
        });
        counts[slot] = own.tally(phase);
        let mut t = phase_start;
        for &from in &senders {
            t += exp_draw(p.lambda, gaps);
            queue.schedule(t, kind, Payload::Peer(from))?;
        }
        if quorum == 1 {
            queue.schedule_in(0.0, kind, Payload::None)?;
        }

        let mut waiting = true;
        let mut left = quorum;
        loop {
            let event = queue.pop().ok_or(SimError::QuorumUnreachable {
                needed: quorum,
                available: counts[slot],
            })?;
            if event.kind == kind && waiting {
                if let Payload::Peer(from) = event.payload {
                    let state = &mut net.peers[observer];
                    state.inbox.push_back(Message {
                        from,
                        phase,
                        received_at: event.time,
                    });
                    counts[slot] = state.tally(phase);
                }
                if counts[slot] >= quorum {
                    waiting = false;
                    // late messages of this phase carry no information
                    queue.clear_pending();
                    queue.schedule_in(exp_draw(p.mu, services), EventKind::ServiceComplete, Payload::Peer(observer))?;
                }
            } else if event.kind == EventKind::ServiceComplete && event.payload == Payload::Peer(observer) {
                left -= 1;
                net.peers[observer].inbox.pop_front();
                if left == 0 {
                    break;
                }
                queue.schedule_in(exp_draw(p.mu, services), EventKind::ServiceComplete, Payload::Peer(observer))?;
            }
        }
        ends[slot] = queue.now() - phase_start;
    }
    let committed = counts[1] >= quorum;
    queue.schedule_in(0.0, EventKind::ReplySent, Payload::Peer(observer))?;
    let reply = queue.pop().map_or(queue.now(), |e| e.time);
    Ok(PhaseTimes {
        t_preprepare,
        t_prepare: ends[0],
        t_commit: ends[1],
        prepares_collected: counts[0],
        commits_collected: counts[1],
        committed,
        reply_at: reply,
    })
}
