//! Latency model and discrete-event simulator for consortium-blockchained
//! federated learning (CBFL).
//!
//! Enterprises train a logistic-regression model locally with SVRG, submit
//! their updates as transactions to a consortium blockchain, where peers
//! cross-verify them and agree on a block with three-phase PBFT, and every
//! enterprise then aggregates the committed updates into the next global
//! model.
//!
//! The crate is `no_std` (it only needs `alloc`):
//!
//! - [`domain`]: parameter record, transactions, blocks, latency records.
//! - [`fl`]: loss, gradients, SVRG local cycle, aggregation, verification.
//! - [`latency`]: closed-form per-phase latencies and the optimal arrival rate.
//! - [`sim`]: seeded event-driven simulation of batching, PBFT and the full cycle.
//! - [`synth`]: two-class Gaussian data generator.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod domain;
pub mod fl;
pub mod latency;
mod math;
pub mod sim;
pub mod synth;

pub use domain::{
    Block, Component, ComponentStats, Digest, ExperimentStats, LatencyBreakdown, LocalUpdateTx,
    ParamError, Sample, SystemParams,
};
pub use fl::{Dataset, FlError, GlobalModel, Verdict};
pub use latency::{AnalyticBreakdown, LatencyError};
pub use sim::{RandomStreams, SimError};
