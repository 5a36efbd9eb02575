//! Seeded random substreams and the arrival processes built on them.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;
use crate::math::ln;

/// Independent substreams derived from one 64-bit master seed.
///
/// All substreams share the ChaCha key derived from the master seed and
/// differ in the ChaCha stream id, `4 * replication + k`.
#[derive(Debug, Clone)]
pub struct RandomStreams {
    pub arrivals: ChaCha8Rng,
    pub services: ChaCha8Rng,
    pub data: ChaCha8Rng,
    pub faults: ChaCha8Rng,
}

impl RandomStreams {
    pub fn new(master_seed: u64) -> Self {
        Self::for_replication(master_seed, 0)
    }

    pub fn for_replication(master_seed: u64, replication: u64) -> Self {
        let base = replication.wrapping_mul(4);
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(base.wrapping_add(k));
            rng
        };
        Self {
            arrivals: stream(0),
            services: stream(1),
            data: stream(2),
            faults: stream(3),
        }
    }
}

/// `-ln(u) / rate` with `u` uniform on `(0, 1]`.
pub fn sample_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<f64, SimError> {
    if !(rate > 0.0) {
        return Err(SimError::NonPositive("rate"));
    }
    Ok(exp_draw(rate, rng))
}

#[inline]
pub(crate) fn exp_draw<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    -ln(u) / rate
}

/// Endless Poisson arrival times starting after time zero.
#[derive(Debug)]
pub struct PoissonArrivals<'a, R: ?Sized> {
    rate: f64,
    clock: f64,
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> PoissonArrivals<'a, R> {
    pub fn new(rate: f64, rng: &'a mut R) -> Result<Self, SimError> {
        if !(rate > 0.0) {
            return Err(SimError::NonPositive("lambda"));
        }
        Ok(Self {
            rate,
            clock: 0.0,
            rng,
        })
    }
}

impl<R: Rng + ?Sized> Iterator for PoissonArrivals<'_, R> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        self.clock += exp_draw(self.rate, self.rng);
        Some(self.clock)
    }
}

/// Arrival times of a rate-`lambda` Poisson process on `[0, horizon)`.
pub fn generate_arrivals<R: Rng + ?Sized>(lambda: f64, horizon: f64, rng: &mut R) -> Result<Vec<f64>, SimError> {
    if !(horizon > 0.0) {
        return Err(SimError::NonPositive("horizon"));
    }
    Ok(PoissonArrivals::new(lambda, rng)?
        .take_while(|t| *t < horizon)
        .collect())
}

/// Number in system of a stationary M/M/1 queue, `P(n) = (1 - rho) rho^n`.
///
/// By PASTA this is also what an arriving transaction finds, so it is the
/// state to place at the first arrival of a block. Placing it at a fixed time
/// before that arrival is biased low: the queue only drains until then.
pub fn stationary_backlog<R: Rng + ?Sized>(lambda: f64, mu: f64, rng: &mut R) -> Result<usize, SimError> {
    if !(lambda > 0.0 && mu > 0.0) {
        return Err(SimError::NonPositive("rate"));
    }
    if lambda >= mu {
        return Err(SimError::Unstable);
    }
    let rho = lambda / mu;
    let mut n = 0;
    while rng.random::<f64>() < rho {
        n += 1;
    }
    Ok(n)
}
