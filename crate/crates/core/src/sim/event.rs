//! Time-ordered event queue with deterministic tie-breaking.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    TxArrival,
    ServiceComplete,
    BlockSealed,
    PrePrepareRecv,
    PrepareRecv,
    CommitRecv,
    ReplySent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Payload {
    None,
    /// Index of a transaction of the current block.
    Tx(usize),
    /// A transaction left over from the previous block.
    Backlog,
    /// Sending (or processing) peer.
    Peer(usize),
    /// Block timer expiry.
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
    pub payload: Payload,
}

impl Eq for Event {}

impl Ord for Event {
    // reversed: BinaryHeap is a max-heap, we pop the earliest (time, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Pending events plus the simulation clock.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
    now: f64,
    trace: Option<Vec<Event>>,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// A queue that records every popped event.
    pub fn with_trace() -> Self {
        Self {
            trace: Some(Vec::new()),
            ..Self::default()
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules an event; times before the current clock are rejected.
    pub fn schedule(&mut self, time: f64, kind: EventKind, payload: Payload) -> Result<u64, SimError> {
        if !(time >= self.now) {
            return Err(SimError::Causality { now: self.now, time });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event {
            time,
            seq,
            kind,
            payload,
        });
        Ok(seq)
    }

    pub fn schedule_in(&mut self, delay: f64, kind: EventKind, payload: Payload) -> Result<u64, SimError> {
        self.schedule(self.now + delay, kind, payload)
    }

    /// Removes the earliest event and advances the clock to it.
    pub fn pop(&mut self) -> Option<Event> {
        let event = self.heap.pop()?;
        self.now = event.time;
        if let Some(trace) = &mut self.trace {
            trace.push(event);
        }
        Some(event)
    }

    pub fn clear_pending(&mut self) {
        self.heap.clear();
    }

    pub fn trace(&self) -> Option<&[Event]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Option<Vec<Event>> {
        self.trace.take()
    }
}
