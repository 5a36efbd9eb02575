//! Two-class Gaussian data.
//!
//! Class means sit at `+-separation/2` on the first feature (unit variance);
//! the remaining features are label-independent `N(0, spread^2)` noise.
//! Labels alternate `+1, -1, ...` so every even-sized set is balanced.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::Sample;
use crate::fl::{Dataset, FlError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub dim: usize,
    /// Distance between the two class means along the first feature.
    pub separation: f64,
    /// Standard deviation of the non-informative features.
    pub spread: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            dim: 32,
            separation: 4.0,
            spread: 4.0,
        }
    }
}

impl SynthSpec {
    pub fn sample<R: Rng + ?Sized>(&self, label: f64, rng: &mut R) -> Sample {
        let mut x = Vec::with_capacity(self.dim);
        let first: f64 = StandardNormal.sample(rng);
        x.push(first + label * self.separation / 2.0);
        for _ in 1..self.dim {
            let z: f64 = StandardNormal.sample(rng);
            x.push(self.spread * z);
        }
        Sample::new(x, label).expect("finite by construction")
    }

    pub fn samples<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Sample> {
        (0..n)
            .map(|i| self.sample(if i % 2 == 0 { 1.0 } else { -1.0 }, rng))
            .collect()
    }

    pub fn dataset<R: Rng + ?Sized>(
        &self,
        n: usize,
        owner: usize,
        rng: &mut R,
    ) -> Result<Dataset, FlError> {
        Dataset::new(self.samples(n, rng), owner)
    }
}
