//! Shared value types: system parameters, transactions, blocks and latency
//! records.
//!
//! Units are fixed across the crate: seconds, tx/second, bits, Hz, and cycles
//! per second for clock speed. All reals are `f64`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

/// All symbols of the latency model plus the learning hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Transaction arrival rate, tx/s.
    pub lambda: f64,
    /// Peer service rate, messages/s.
    pub mu: f64,
    /// Number of communication peers.
    pub n_peers: usize,
    /// Number of faulty peers tolerated.
    pub f: usize,
    /// Maximum transactions per block.
    pub n_block: usize,
    /// Maximum block waiting time, s. May be infinite.
    pub tau: f64,
    /// Transaction size, bits.
    pub delta_m: f64,
    /// Data sample size, bits.
    pub delta_d: f64,
    /// Block header size, bits.
    pub h: f64,
    /// Clock speed, cycles/s.
    pub f_c: f64,
    pub w_up: f64,
    pub w_dn: f64,
    pub gamma_up: f64,
    pub gamma_dn: f64,
    /// SVRG step-size numerator.
    pub beta: f64,
    /// Stopping threshold on the global weight change.
    pub epsilon: f64,
    /// Verification accuracy threshold.
    pub e0: f64,
    /// SVRG inner iterations per cycle; `None` means one epoch (N_i).
    pub t_max: Option<usize>,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            lambda: 100.0,
            mu: 300.0,
            n_peers: 4,
            f: 1,
            n_block: 100,
            tau: f64::INFINITY,
            delta_m: 1e4,
            delta_d: 1e4,
            h: 1e3,
            f_c: 1e9,
            w_up: 1e6,
            w_dn: 1e7,
            gamma_up: 3.0,
            gamma_dn: 15.0,
            beta: 4.0,
            epsilon: 1e-3,
            e0: 0.6,
            t_max: None,
        }
    }
}

/// A violated parameter constraint, named by the offending key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct ParamError {
    pub key: &'static str,
    pub message: &'static str,
}

const fn violation(key: &'static str, message: &'static str) -> ParamError {
    ParamError { key, message }
}

fn positive(value: f64, key: &'static str, message: &'static str) -> Result<(), ParamError> {
    // `!(x > 0)` also rejects NaN
    if !(value > 0.0) {
        return Err(violation(key, message));
    }
    Ok(())
}

impl SystemParams {
    /// Checks every constraint and returns the parameters unchanged, or the
    /// first violation found.
    pub fn validate(self) -> Result<Self, ParamError> {
        positive(self.lambda, "lambda", "lambda must be > 0")?;
        positive(self.mu, "mu", "mu must be > 0")?;
        if !(self.lambda < self.mu) {
            return Err(violation("lambda", "lambda must be < mu"));
        }
        if self.n_peers != 3 * self.f + 1 {
            return Err(violation("n_peers", "n_peers must equal 3f+1"));
        }
        if self.n_block < 1 {
            return Err(violation("n_block", "n_block must be >= 1"));
        }
        positive(self.tau, "tau", "tau must be > 0")?;
        positive(self.delta_m, "delta_m", "delta_m must be > 0")?;
        positive(self.delta_d, "delta_d", "delta_d must be > 0")?;
        positive(self.h, "h", "h must be > 0")?;
        positive(self.f_c, "f_c", "f_c must be > 0")?;
        positive(self.w_up, "w_up", "w_up must be > 0")?;
        positive(self.w_dn, "w_dn", "w_dn must be > 0")?;
        positive(self.gamma_up, "gamma_up", "gamma_up must be > 0")?;
        positive(self.gamma_dn, "gamma_dn", "gamma_dn must be > 0")?;
        for (value, key, message) in [
            (self.delta_m, "delta_m", "delta_m must be finite"),
            (self.delta_d, "delta_d", "delta_d must be finite"),
            (self.h, "h", "h must be finite"),
            (self.f_c, "f_c", "f_c must be finite"),
            (self.w_up, "w_up", "w_up must be finite"),
            (self.w_dn, "w_dn", "w_dn must be finite"),
            (self.mu, "mu", "mu must be finite"),
        ] {
            if !value.is_finite() {
                return Err(violation(key, message));
            }
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(violation("beta", "beta must be finite and >= 0"));
        }
        positive(self.epsilon, "epsilon", "epsilon must be > 0")?;
        if !(0.0..=1.0).contains(&self.e0) {
            return Err(violation("e0", "e0 must lie in [0, 1]"));
        }
        if self.t_max == Some(0) {
            return Err(violation("t_max", "t_max must be >= 1"));
        }
        Ok(self)
    }

    /// Quorum size 2f+1.
    pub fn quorum(&self) -> usize {
        2 * self.f + 1
    }

    /// Block size in bits for a batch of `b` transactions.
    pub fn block_bits(&self, b: usize) -> f64 {
        self.h + self.delta_m * b as f64
    }
}

/// Errors raised when constructing domain values.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("label must be -1 or +1, got {0}")]
    InvalidLabel(f64),
    #[error("feature vector contains a non-finite value")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("n_samples must be >= 1")]
    NoSamples,
    #[error("block must contain at least one transaction")]
    EmptyBlock,
    #[error("block holds {got} transactions, capacity is {capacity}")]
    BlockOverflow { got: usize, capacity: usize },
}

/// One labelled example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: i8,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: f64) -> Result<Self, DomainError> {
        let y = if y == 1.0 {
            1
        } else if y == -1.0 {
            -1
        } else {
            return Err(DomainError::InvalidLabel(y));
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DomainError::NonFinite);
        }
        Ok(Self { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn label(&self) -> f64 {
        f64::from(self.y)
    }
}

/// SHA-256 of a transaction payload.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Digest(pub [u8; 32]);

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest(")?;
        for byte in &self.0[..8] {
            write!(f, "{byte:02x}")?;
        }
        write!(f, "..)")
    }
}

/// Canonical little-endian serialization of a transaction payload:
/// `enterprise_id:u64 | n_samples:u64 | created_at:f64 | dim:u64 | weights | dim:u64 | gradient`.
pub fn canonical_payload(
    enterprise_id: usize,
    weights: &[f64],
    shared_gradient: &[f64],
    n_samples: usize,
    created_at: f64,
) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(40 + 8 * (weights.len() + shared_gradient.len()));
    bytes.extend_from_slice(&(enterprise_id as u64).to_le_bytes());
    bytes.extend_from_slice(&(n_samples as u64).to_le_bytes());
    bytes.extend_from_slice(&created_at.to_le_bytes());
    for vector in [weights, shared_gradient] {
        bytes.extend_from_slice(&(vector.len() as u64).to_le_bytes());
        for value in vector {
            bytes.extend_from_slice(&value.to_le_bytes());
        }
    }
    bytes
}

pub fn digest_bytes(bytes: &[u8]) -> Digest {
    Digest(Sha256::digest(bytes).into())
}

/// Integrity digest of a transaction payload. Any peer can recompute it.
pub fn tx_digest(
    enterprise_id: usize,
    weights: &[f64],
    shared_gradient: &[f64],
    n_samples: usize,
    created_at: f64,
) -> Digest {
    digest_bytes(&canonical_payload(
        enterprise_id,
        weights,
        shared_gradient,
        n_samples,
        created_at,
    ))
}

/// A local model update submitted by one enterprise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalUpdateTx {
    pub enterprise_id: usize,
    pub weights: Vec<f64>,
    pub shared_gradient: Vec<f64>,
    pub n_samples: usize,
    pub created_at: f64,
    pub digest: Digest,
}

impl LocalUpdateTx {
    /// Builds a transaction and stamps it with the payload digest.
    pub fn new(
        enterprise_id: usize,
        weights: Vec<f64>,
        shared_gradient: Vec<f64>,
        n_samples: usize,
        created_at: f64,
    ) -> Result<Self, DomainError> {
        if weights.len() != shared_gradient.len() {
            return Err(DomainError::DimensionMismatch {
                expected: weights.len(),
                got: shared_gradient.len(),
            });
        }
        if n_samples == 0 {
            return Err(DomainError::NoSamples);
        }
        let digest = tx_digest(
            enterprise_id,
            &weights,
            &shared_gradient,
            n_samples,
            created_at,
        );
        Ok(Self {
            enterprise_id,
            weights,
            shared_gradient,
            n_samples,
            created_at,
            digest,
        })
    }

    pub fn payload_bytes(&self) -> Vec<u8> {
        canonical_payload(
            self.enterprise_id,
            &self.weights,
            &self.shared_gradient,
            self.n_samples,
            self.created_at,
        )
    }

    pub fn digest_is_valid(&self) -> bool {
        digest_bytes(&self.payload_bytes()) == self.digest
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

/// A sealed block: header accounting plus transactions ordered by timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub txs: Vec<LocalUpdateTx>,
    pub sealed_at: f64,
    pub size_bits: f64,
}

impl Block {
    /// Sorts `txs` by `created_at` (stable) and computes the block size.
    pub fn seal(
        mut txs: Vec<LocalUpdateTx>,
        sealed_at: f64,
        params: &SystemParams,
    ) -> Result<Self, DomainError> {
        if txs.is_empty() {
            return Err(DomainError::EmptyBlock);
        }
        if txs.len() > params.n_block {
            return Err(DomainError::BlockOverflow {
                got: txs.len(),
                capacity: params.n_block,
            });
        }
        txs.sort_by(|a, b| a.created_at.total_cmp(&b.created_at));
        let size_bits = params.block_bits(txs.len());
        Ok(Self {
            txs,
            sealed_at,
            size_bits,
        })
    }

    pub fn len(&self) -> usize {
        self.txs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txs.is_empty()
    }

    pub fn contains_enterprise(&self, enterprise_id: usize) -> bool {
        self.txs.iter().any(|tx| tx.enterprise_id == enterprise_id)
    }
}

/// Per-cycle delays at the observed enterprise, with the derived sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub t_local: f64,
    pub t_up: f64,
    pub t_preprepare: f64,
    pub t_prepare: f64,
    pub t_commit: f64,
    pub t_dn: f64,
    pub t_global: f64,
    pub t_update: f64,
    pub t_commun: f64,
    pub t_consensus: f64,
    pub t_total: f64,
}

impl LatencyBreakdown {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        t_local: f64,
        t_up: f64,
        t_preprepare: f64,
        t_prepare: f64,
        t_commit: f64,
        t_dn: f64,
        t_global: f64,
    ) -> Self {
        let t_update = t_local + t_global;
        let t_commun = t_up + t_dn;
        let t_consensus = t_preprepare + t_prepare + t_commit;
        Self {
            t_local,
            t_up,
            t_preprepare,
            t_prepare,
            t_commit,
            t_dn,
            t_global,
            t_update,
            t_commun,
            t_consensus,
            t_total: t_update + t_commun + t_consensus,
        }
    }

    pub fn get(&self, component: Component) -> f64 {
        match component {
            Component::Local => self.t_local,
            Component::Up => self.t_up,
            Component::Preprepare => self.t_preprepare,
            Component::Prepare => self.t_prepare,
            Component::Commit => self.t_commit,
            Component::Dn => self.t_dn,
            Component::Global => self.t_global,
            Component::Update => self.t_update,
            Component::Commun => self.t_commun,
            Component::Consensus => self.t_consensus,
            Component::Total => self.t_total,
        }
    }

    /// True when every component is nonnegative and the sums are exact.
    pub fn is_consistent(&self) -> bool {
        Component::ALL.iter().all(|c| self.get(*c) >= 0.0)
            && self.t_update == self.t_local + self.t_global
            && self.t_commun == self.t_up + self.t_dn
            && self.t_consensus == self.t_preprepare + self.t_prepare + self.t_commit
            && self.t_total == self.t_update + self.t_commun + self.t_consensus
    }
}

/// Names of the breakdown fields, in output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Local,
    Up,
    Preprepare,
    Prepare,
    Commit,
    Dn,
    Global,
    Update,
    Commun,
    Consensus,
    Total,
}

impl Component {
    pub const ALL: [Component; 11] = [
        Component::Local,
        Component::Up,
        Component::Preprepare,
        Component::Prepare,
        Component::Commit,
        Component::Dn,
        Component::Global,
        Component::Update,
        Component::Commun,
        Component::Consensus,
        Component::Total,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Local => "t_local",
            Component::Up => "t_up",
            Component::Preprepare => "t_preprepare",
            Component::Prepare => "t_prepare",
            Component::Commit => "t_commit",
            Component::Dn => "t_dn",
            Component::Global => "t_global",
            Component::Update => "t_update",
            Component::Commun => "t_commun",
            Component::Consensus => "t_consensus",
            Component::Total => "t_total",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Simulated vs analytic statistics for one breakdown component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub component: Component,
    pub mean: f64,
    /// `None` with a single replication.
    pub std_err: Option<f64>,
    pub analytic: f64,
    /// `|mean - analytic| / analytic`, `None` when `analytic` is zero.
    pub rel_error: Option<f64>,
}

/// Aggregates over the replications of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub config_id: String,
    pub replications: usize,
    pub components: Vec<ComponentStats>,
    /// Mean realized batch size.
    pub mean_batch: f64,
}

impl ExperimentStats {
    pub fn get(&self, component: Component) -> &ComponentStats {
        self.components
            .iter()
            .find(|s| s.component == component)
            .expect("every component is present")
    }
}
