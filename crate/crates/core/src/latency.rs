//! Closed-form latency of one CBFL cycle.
//!
//! The cycle time at a fixed enterprise splits into model update (local
//! training plus global aggregation), communication (upload of the local
//! update, download of the block) and PBFT consensus. Consensus is
//!
//! ```text
//! T_consensus = b/(mu - lambda) + 2 * (2f/lambda + (2f+1)/mu)
//!             = ((b - 4f) lambda + 4 f mu) / (lambda (mu - lambda)) + (4f + 2)/mu
//! ```
//!
//! where the first term is the M/M/1 sojourn of the `b` batched transactions
//! at the leader and each of prepare/commit waits for `2f` messages arriving
//! at rate `lambda` and then processes `2f+1` of them at rate `mu`.
//!
//! The batch size `b` is always supplied by the caller: the timeout-driven
//! part of the batching rule is random and belongs to the simulator.

use serde::{Deserialize, Serialize};

use crate::domain::{LatencyBreakdown, SystemParams};
use crate::math::{log2, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum LatencyError {
    #[error("{0} must be > 0")]
    NonPositive(&'static str),
    #[error("lambda must be < mu (unstable queue: lambda={lambda}, mu={mu})")]
    Unstable { lambda: f64, mu: f64 },
    #[error("channel capacity below 1e-12 bit/s")]
    ZeroCapacity,
    #[error("degenerate denominator: n_block equals 4f")]
    DegenerateDenominator,
    #[error("optimal rate outside stable region: {0}")]
    OutsideStableRegion(f64),
}

/// Smallest channel capacity (bit/s) treated as usable.
pub const MIN_CAPACITY: f64 = 1e-12;

fn positive(value: f64, name: &'static str) -> Result<f64, LatencyError> {
    if value > 0.0 {
        Ok(value)
    } else {
        Err(LatencyError::NonPositive(name))
    }
}

fn count(value: usize, name: &'static str) -> Result<f64, LatencyError> {
    if value >= 1 {
        Ok(value as f64)
    } else {
        Err(LatencyError::NonPositive(name))
    }
}

fn stable(lambda: f64, mu: f64) -> Result<(), LatencyError> {
    positive(lambda, "lambda")?;
    positive(mu, "mu")?;
    if lambda < mu {
        Ok(())
    } else {
        Err(LatencyError::Unstable { lambda, mu })
    }
}

/// Local training time `delta_d * N_i / f_c`.
pub fn t_local_update(delta_d: f64, n_i: usize, f_c: f64) -> Result<f64, LatencyError> {
    Ok(positive(delta_d, "delta_d")? * count(n_i, "n_i")? / positive(f_c, "f_c")?)
}

/// Global aggregation time `delta_m * N_B / f_c`.
pub fn t_global_update(delta_m: f64, n_block: usize, f_c: f64) -> Result<f64, LatencyError> {
    Ok(positive(delta_m, "delta_m")? * count(n_block, "n_block")? / positive(f_c, "f_c")?)
}

pub fn t_update(p: &SystemParams, n_i: usize) -> Result<f64, LatencyError> {
    Ok(t_local_update(p.delta_d, n_i, p.f_c)? + t_global_update(p.delta_m, p.n_block, p.f_c)?)
}

fn capacity(bandwidth: f64, snr: f64, bandwidth_name: &'static str, snr_name: &'static str) -> Result<f64, LatencyError> {
    let c = positive(bandwidth, bandwidth_name)? * log2(1.0 + positive(snr, snr_name)?);
    if c < MIN_CAPACITY {
        return Err(LatencyError::ZeroCapacity);
    }
    Ok(c)
}

/// Upload of one transaction: `delta_m / (W_up log2(1 + gamma_up))`.
pub fn t_upload(delta_m: f64, w_up: f64, gamma_up: f64) -> Result<f64, LatencyError> {
    Ok(positive(delta_m, "delta_m")? / capacity(w_up, gamma_up, "w_up", "gamma_up")?)
}

/// Download of a `b`-transaction block: `(h + b delta_m) / (W_dn log2(1 + gamma_dn))`.
pub fn t_download(h: f64, b: usize, delta_m: f64, w_dn: f64, gamma_dn: f64) -> Result<f64, LatencyError> {
    let bits = positive(h, "h")? + count(b, "b")? * positive(delta_m, "delta_m")?;
    Ok(bits / capacity(w_dn, gamma_dn, "w_dn", "gamma_dn")?)
}

pub fn t_commun(p: &SystemParams, b: usize) -> Result<f64, LatencyError> {
    Ok(t_upload(p.delta_m, p.w_up, p.gamma_up)? + t_download(p.h, b, p.delta_m, p.w_dn, p.gamma_dn)?)
}

/// Leader batching: `b` transactions, each with M/M/1 sojourn `1/(mu - lambda)`.
pub fn t_preprepare(b: usize, lambda: f64, mu: f64) -> Result<f64, LatencyError> {
    let b = count(b, "b")?;
    stable(lambda, mu)?;
    Ok(b / (mu - lambda))
}

/// One quorum phase (prepare or commit): `2f/lambda + (2f+1)/mu`.
pub fn t_prepare_phase(f: usize, lambda: f64, mu: f64) -> Result<f64, LatencyError> {
    positive(lambda, "lambda")?;
    positive(mu, "mu")?;
    let f = f as f64;
    Ok(2.0 * f / lambda + (2.0 * f + 1.0) / mu)
}

/// Phase sum `t_preprepare + 2 t_prepare_phase` on raw symbols.
pub fn consensus_latency(b: usize, f: usize, lambda: f64, mu: f64) -> Result<f64, LatencyError> {
    Ok(t_preprepare(b, lambda, mu)? + 2.0 * t_prepare_phase(f, lambda, mu)?)
}

/// Rearranged single-fraction form of [`consensus_latency`].
pub fn consensus_latency_closed_form(b: usize, f: usize, lambda: f64, mu: f64) -> Result<f64, LatencyError> {
    let b = count(b, "b")?;
    stable(lambda, mu)?;
    let f = f as f64;
    Ok(((b - 4.0 * f) * lambda + 4.0 * f * mu) / (lambda * (mu - lambda)) + (4.0 * f + 2.0) / mu)
}

/// `d T_consensus / d lambda = ((b - 4f) lambda^2 + 8 f mu lambda - 4 f mu^2) / (lambda^2 (mu - lambda)^2)`.
pub fn consensus_slope(b: usize, f: usize, lambda: f64, mu: f64) -> Result<f64, LatencyError> {
    let b = count(b, "b")?;
    stable(lambda, mu)?;
    let f = f as f64;
    let gap = mu - lambda;
    Ok(((b - 4.0 * f) * lambda * lambda + 8.0 * f * mu * lambda - 4.0 * f * mu * mu)
        / (lambda * lambda * gap * gap))
}

/// `d^2 T_consensus / d lambda^2 = 2b/(mu - lambda)^3 + 8f/lambda^3`, positive
/// on the whole stable range.
pub fn consensus_curvature(b: usize, f: usize, lambda: f64, mu: f64) -> Result<f64, LatencyError> {
    let b = count(b, "b")?;
    stable(lambda, mu)?;
    let gap = mu - lambda;
    Ok(2.0 * b / (gap * gap * gap) + 8.0 * f as f64 / (lambda * lambda * lambda))
}

pub fn t_consensus(p: &SystemParams, b: usize) -> Result<f64, LatencyError> {
    consensus_latency(b, p.f, p.lambda, p.mu)
}

/// Analytic cycle latency for an enterprise holding `n_i` samples and a block
/// of `b` transactions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBreakdown {
    pub breakdown: LatencyBreakdown,
    pub b: usize,
}

impl AnalyticBreakdown {
    /// `T_update + T_commun`, the part independent of the arrival process.
    pub fn constant_part(&self) -> f64 {
        self.breakdown.t_update + self.breakdown.t_commun
    }
}

pub fn t_total(p: &SystemParams, n_i: usize, b: usize) -> Result<AnalyticBreakdown, LatencyError> {
    let phase = t_prepare_phase(p.f, p.lambda, p.mu)?;
    let breakdown = LatencyBreakdown::new(
        t_local_update(p.delta_d, n_i, p.f_c)?,
        t_upload(p.delta_m, p.w_up, p.gamma_up)?,
        t_preprepare(b, p.lambda, p.mu)?,
        phase,
        phase,
        t_download(p.h, b, p.delta_m, p.w_dn, p.gamma_dn)?,
        t_global_update(p.delta_m, p.n_block, p.f_c)?,
    );
    Ok(AnalyticBreakdown { breakdown, b })
}

/// Arrival rate minimizing consensus latency when blocks always fill
/// (`b = N_B`):
/// `lambda* = (-8 f mu + 4 mu sqrt(f N_B)) / (2 (N_B - 4f))`.
///
/// For `f >= 1` this equals `2 mu sqrt(f) / (sqrt(N_B) + 2 sqrt(f))`, which is
/// always inside `(0, mu)`; `f = 0` gives zero and is rejected.
pub fn optimal_lambda(f: usize, n_block: usize, mu: f64) -> Result<f64, LatencyError> {
    count(n_block, "n_block")?;
    positive(mu, "mu")?;
    if n_block == 4 * f {
        return Err(LatencyError::DegenerateDenominator);
    }
    let (f, n_b) = (f as f64, n_block as f64);
    let lambda = (-8.0 * f * mu + 4.0 * mu * sqrt(f * n_b)) / (2.0 * (n_b - 4.0 * f));
    if !(lambda > 0.0 && lambda < mu) {
        return Err(LatencyError::OutsideStableRegion(lambda));
    }
    Ok(lambda)
}

/// Result of the brute-force scan of consensus latency over `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridScan {
    pub argmin: f64,
    pub min_latency: f64,
    pub points: usize,
    /// Smallest second difference along the grid.
    pub min_second_difference: f64,
}

impl GridScan {
    pub fn is_convex(&self) -> bool {
        self.min_second_difference >= -1e-9
    }
}

/// Evaluates consensus latency with `b = N_B` at `lambda = k * grid_step`
/// for every `k` with `grid_step <= lambda <= mu - grid_step`.
pub fn argmin_consensus_grid(f: usize, n_block: usize, mu: f64, grid_step: f64) -> Result<GridScan, LatencyError> {
    positive(grid_step, "grid_step")?;
    positive(mu, "mu")?;
    // relative slack so that mu - grid_step itself is on the grid
    let last = ((mu - grid_step) / grid_step * (1.0 + 1e-12)) as usize;
    if last < 1 {
        return Err(LatencyError::NonPositive("grid points"));
    }
    let values = (1..=last)
        .map(|k| consensus_latency(n_block, f, k as f64 * grid_step, mu))
        .collect::<Result<alloc::vec::Vec<f64>, _>>()?;

    let (best, min_latency) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if *v < bv { (i, *v) } else { (bi, bv) });
    let min_second_difference = values
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::INFINITY, f64::min);
    Ok(GridScan {
        argmin: (best + 1) as f64 * grid_step,
        min_latency,
        points: values.len(),
        min_second_difference,
    })
}
