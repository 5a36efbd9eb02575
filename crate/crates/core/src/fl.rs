//! Learning mathematics: logistic loss and gradients, the SVRG local cycle,
//! sample-weighted global aggregation and the accuracy-based verification of
//! submitted updates.
//!
//! The loss is `log(1 + exp(y * w.x))` exactly as the model defines it (note
//! the `+` sign). Minimizing it drives `y * w.x` negative, so the matching
//! decision rule is `-sign(w.x)`, with `sign(0) = +1`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainError, LocalUpdateTx, Sample, SystemParams};
use crate::math::{dot, exp, log1p, norm};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no transactions to combine")]
    NoTransactions,
    #[error("global model has no full gradient")]
    MissingFullGradient,
    #[error("SVRG iterate became non-finite (beta too large?)")]
    Diverged,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

fn check_dim(expected: usize, got: usize) -> Result<(), FlError> {
    if expected != got {
        return Err(FlError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Training or test data owned by one enterprise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub owner: usize,
}

impl Dataset {
    /// Rejects empty or dimensionally mixed sample sets.
    pub fn new(samples: Vec<Sample>, owner: usize) -> Result<Self, FlError> {
        let first = samples.first().ok_or(FlError::EmptyDataset)?;
        let dim = first.dim();
        for s in &samples {
            check_dim(dim, s.dim())?;
        }
        Ok(Self { samples, owner })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, Sample::dim)
    }
}

/// The global model of cycle `cycle` and the full-gradient anchor used by
/// the next round of local SVRG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalModel {
    pub weights: Vec<f64>,
    /// `None` before the first block: each enterprise then anchors on its own
    /// local average gradient.
    pub full_gradient: Option<Vec<f64>>,
    pub cycle: usize,
}

impl GlobalModel {
    /// Cycle 0: zero weights, no shared gradient yet.
    pub fn bootstrap(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            full_gradient: None,
            cycle: 0,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z + log1p(exp(-z))
    } else {
        log1p(exp(z))
    }
}

/// Scalar `c` with `grad f_k(w) = c * x_k`.
fn gradient_coefficient(w: &[f64], s: &Sample) -> f64 {
    let y = s.label();
    y * sigmoid(y * dot(w, &s.x))
}

/// `log(1 + exp(y * w.x))`.
pub fn logistic_loss(w: &[f64], s: &Sample) -> Result<f64, FlError> {
    check_dim(w.len(), s.dim())?;
    Ok(softplus(s.label() * dot(w, &s.x)))
}

/// `y * x * sigmoid(y * w.x)`, the exact gradient of [`logistic_loss`].
pub fn sample_gradient(w: &[f64], s: &Sample) -> Result<Vec<f64>, FlError> {
    check_dim(w.len(), s.dim())?;
    let c = gradient_coefficient(w, s);
    Ok(s.x.iter().map(|x| c * x).collect())
}

/// Mean per-sample gradient over a dataset.
pub fn average_gradient(w: &[f64], d: &Dataset) -> Result<Vec<f64>, FlError> {
    if d.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    check_dim(w.len(), d.dim())?;
    let mut acc = vec![0.0; w.len()];
    for s in &d.samples {
        let c = gradient_coefficient(w, s);
        for (a, x) in acc.iter_mut().zip(&s.x) {
            *a += c * x;
        }
    }
    let n = d.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Mean loss over the union of several datasets.
pub fn empirical_loss<'a, I>(w: &[f64], datasets: I) -> Result<f64, FlError>
where
    I: IntoIterator<Item = &'a Dataset>,
{
    let mut total = 0.0;
    let mut count = 0usize;
    for d in datasets {
        for s in &d.samples {
            total += logistic_loss(w, s)?;
            count += 1;
        }
    }
    if count == 0 {
        return Err(FlError::EmptyDataset);
    }
    Ok(total / count as f64)
}

/// Transactions in a canonical order (enterprise id, then digest), so that
/// weighted sums do not depend on the order the block lists them in.
fn canonical_order(txs: &[LocalUpdateTx]) -> Result<(Vec<&LocalUpdateTx>, f64), FlError> {
    let first = txs.first().ok_or(FlError::NoTransactions)?;
    let dim = first.dim();
    for tx in txs {
        check_dim(dim, tx.dim())?;
        check_dim(dim, tx.shared_gradient.len())?;
    }
    let mut ordered: Vec<&LocalUpdateTx> = txs.iter().collect();
    ordered.sort_by(|a, b| {
        a.enterprise_id
            .cmp(&b.enterprise_id)
            .then_with(|| a.digest.0.cmp(&b.digest.0))
    });
    let total: usize = ordered.iter().map(|tx| tx.n_samples).sum();
    Ok((ordered, total as f64))
}

/// Sample-weighted mean of the shared gradients: the anchor for the next
/// cycle's SVRG.
pub fn global_full_gradient(txs: &[LocalUpdateTx]) -> Result<Vec<f64>, FlError> {
    let (ordered, n_total) = canonical_order(txs)?;
    let mut acc = vec![0.0; ordered[0].dim()];
    for tx in ordered {
        let weight = tx.n_samples as f64 / n_total;
        for (a, g) in acc.iter_mut().zip(&tx.shared_gradient) {
            *a += weight * g;
        }
    }
    Ok(acc)
}

/// `w_prev + sum_i (N_i / N_D) (w_i - w_prev)`.
pub fn aggregate_global(w_prev: &[f64], txs: &[LocalUpdateTx]) -> Result<Vec<f64>, FlError> {
    let (ordered, n_total) = canonical_order(txs)?;
    check_dim(w_prev.len(), ordered[0].dim())?;
    if let [only] = ordered.as_slice() {
        return Ok(only.weights.clone());
    }
    let mut step = vec![0.0; w_prev.len()];
    for tx in ordered {
        let weight = tx.n_samples as f64 / n_total;
        for ((s, w), p) in step.iter_mut().zip(&tx.weights).zip(w_prev) {
            *s += weight * (w - p);
        }
    }
    Ok(w_prev.iter().zip(&step).map(|(p, s)| p + s).collect())
}

/// One cycle of local SVRG starting from the global weights.
///
/// Each of the `t_max` iterations (default `N_i`) draws `k` uniformly and
/// applies
/// `w <- w - (beta / N_i) * ([grad f_k(w) - grad f_k(w_global)] + full_gradient)`.
/// The returned transaction carries the final iterate and the local average
/// gradient evaluated there.
pub fn svrg_local_cycle<R: Rng + ?Sized>(
    g: &GlobalModel,
    d: &Dataset,
    p: &SystemParams,
    created_at: f64,
    rng: &mut R,
) -> Result<LocalUpdateTx, FlError> {
    if d.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    let anchor = g.full_gradient.as_ref().ok_or(FlError::MissingFullGradient)?;
    check_dim(g.weights.len(), d.dim())?;
    check_dim(g.weights.len(), anchor.len())?;

    let n_i = d.len();
    let step = p.beta / n_i as f64;
    let iterations = p.t_max.unwrap_or(n_i);
    // grad f_k(w_global) is fixed for the whole cycle
    let reference: Vec<f64> = d
        .samples
        .iter()
        .map(|s| gradient_coefficient(&g.weights, s))
        .collect();

    let mut w = g.weights.clone();
    for _ in 0..iterations {
        let k = rng.random_range(0..n_i);
        let s = &d.samples[k];
        let correction = gradient_coefficient(&w, s) - reference[k];
        for ((wj, xj), aj) in w.iter_mut().zip(&s.x).zip(anchor) {
            *wj -= step * (correction * xj + aj);
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(FlError::Diverged);
    }
    let shared = average_gradient(&w, d)?;
    Ok(LocalUpdateTx::new(d.owner, w, shared, n_i, created_at)?)
}

/// `-sign(w.x)` with `sign(0) = +1`.
pub fn classify(w: &[f64], x: &[f64]) -> Result<i8, FlError> {
    check_dim(w.len(), x.len())?;
    Ok(if dot(w, x) >= 0.0 { -1 } else { 1 })
}

/// Fraction of correctly classified samples.
pub fn accuracy(w: &[f64], test: &Dataset) -> Result<f64, FlError> {
    if test.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    let mut correct = 0usize;
    for s in &test.samples {
        if classify(w, &s.x)? == s.y {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// Outcome of a peer checking one transaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub accepted: bool,
    pub digest_ok: bool,
    /// Measured accuracy `e_j`; zero when the weights do not fit the test data.
    pub accuracy: f64,
}

/// Accept iff the digest matches the payload and the accuracy on `test`
/// reaches `e0` (inclusive).
pub fn verify_update(tx: &LocalUpdateTx, test: &Dataset, e0: f64) -> Verdict {
    let digest_ok = tx.digest_is_valid();
    let accuracy = accuracy(&tx.weights, test).unwrap_or(0.0);
    Verdict {
        accepted: digest_ok && accuracy >= e0,
        digest_ok,
        accuracy,
    }
}

/// `||w - w_prev|| <= eps`.
pub fn has_converged(w: &[f64], w_prev: &[f64], eps: f64) -> Result<bool, FlError> {
    check_dim(w_prev.len(), w.len())?;
    let diff: Vec<f64> = w.iter().zip(w_prev).map(|(a, b)| a - b).collect();
    Ok(norm(&diff) <= eps)
}

/// Euclidean length of `w - w_prev`.
pub fn weight_change(w: &[f64], w_prev: &[f64]) -> Result<f64, FlError> {
    check_dim(w_prev.len(), w.len())?;
    let diff: Vec<f64> = w.iter().zip(w_prev).map(|(a, b)| a - b).collect();
    Ok(norm(&diff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(x: &[f64], y: f64) -> Sample {
        Sample::new(x.to_vec(), y).unwrap()
    }

    fn tx(id: usize, w: &[f64], g: &[f64], n: usize) -> LocalUpdateTx {
        LocalUpdateTx::new(id, w.to_vec(), g.to_vec(), n, 0.0).unwrap()
    }

    #[test]
    fn loss_at_zero_weights_is_ln2() {
        let s = sample(&[3.0, -1.0], 1.0);
        assert_relative_eq!(logistic_loss(&[0.0, 0.0], &s).unwrap(), core::f64::consts::LN_2);
    }

    #[test]
    fn loss_is_overflow_safe() {
        let s = sample(&[1.0], 1.0);
        assert_relative_eq!(logistic_loss(&[100.0], &s).unwrap(), 100.0, max_relative = 1e-15);
        let huge = logistic_loss(&[1000.0], &s).unwrap();
        assert!(huge.is_finite());
        assert_relative_eq!(huge, 1000.0);
        assert!(logistic_loss(&[-1000.0], &s).unwrap() >= 0.0);
    }

    #[test]
    fn loss_hand_value() {
        let s = sample(&[2.0, 0.0], -1.0);
        // log(1 + e^-2)
        assert_relative_eq!(
            logistic_loss(&[1.0, 0.0], &s).unwrap(),
            0.126_928_011_042_972_6,
            max_relative = 1e-12
        );
    }

    #[test]
    fn loss_rejects_dimension_mismatch() {
        let s = sample(&[1.0, 2.0], 1.0);
        assert_eq!(
            logistic_loss(&[1.0], &s),
            Err(FlError::DimensionMismatch { expected: 1, got: 2 })
        );
        assert!(sample_gradient(&[1.0], &s).is_err());
    }

    #[test]
    fn gradient_at_zero_is_half_label_times_x() {
        let s = sample(&[2.0, -4.0], -1.0);
        assert_eq!(sample_gradient(&[0.0, 0.0], &s).unwrap(), vec![-1.0, 2.0]);
    }

    #[test]
    fn gradient_vanishes_at_large_negative_margin() {
        let s = sample(&[1.0], 1.0);
        let g = sample_gradient(&[-800.0], &s).unwrap();
        assert_eq!(g, vec![0.0]);
    }

    #[test]
    fn average_gradient_cases() {
        let single = Dataset::new(vec![sample(&[1.0, 2.0], 1.0)], 0).unwrap();
        let w = [0.3, -0.1];
        assert_eq!(
            average_gradient(&w, &single).unwrap(),
            sample_gradient(&w, &single.samples[0]).unwrap()
        );
        let opposite =
            Dataset::new(vec![sample(&[1.0, 2.0], 1.0), sample(&[-1.0, -2.0], 1.0)], 0).unwrap();
        assert_eq!(average_gradient(&[0.0, 0.0], &opposite).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn average_gradient_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<Sample> = (0..10)
            .map(|i| {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                sample(&x, if i % 3 == 0 { 1.0 } else { -1.0 })
            })
            .collect();
        let d = Dataset::new(samples.clone(), 0).unwrap();
        let w = [0.4, -0.7, 1.1];
        // oracle: textbook formula with explicit exp
        let mut oracle = [0.0; 3];
        for s in &samples {
            let y = f64::from(s.y);
            let z = y * (w[0] * s.x[0] + w[1] * s.x[1] + w[2] * s.x[2]);
            let sig = 1.0 / (1.0 + libm::exp(-z));
            for (o, xj) in oracle.iter_mut().zip(&s.x) {
                *o += y * xj * sig / 10.0;
            }
        }
        let got = average_gradient(&w, &d).unwrap();
        for j in 0..3 {
            assert_relative_eq!(got[j], oracle[j], max_relative = 1e-12);
        }
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert_eq!(Dataset::new(Vec::new(), 0), Err(FlError::EmptyDataset));
        assert_eq!(global_full_gradient(&[]), Err(FlError::NoTransactions));
        assert_eq!(aggregate_global(&[0.0], &[]), Err(FlError::NoTransactions));
        let empty = Dataset {
            samples: Vec::new(),
            owner: 0,
        };
        assert_eq!(accuracy(&[0.0], &empty), Err(FlError::EmptyDataset));
    }

    #[test]
    fn dataset_rejects_mixed_dimensions() {
        let mixed = vec![sample(&[1.0], 1.0), sample(&[1.0, 2.0], 1.0)];
        assert!(matches!(
            Dataset::new(mixed, 0),
            Err(FlError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn global_full_gradient_cases() {
        assert_eq!(
            global_full_gradient(&[tx(0, &[9.0], &[2.5], 4)]).unwrap(),
            vec![2.5]
        );
        assert_eq!(
            global_full_gradient(&[tx(0, &[0.0], &[3.0], 5), tx(1, &[0.0], &[-3.0], 5)]).unwrap(),
            vec![0.0]
        );
        assert_eq!(
            global_full_gradient(&[tx(0, &[0.0], &[4.0], 1), tx(1, &[0.0], &[0.0], 3)]).unwrap(),
            vec![1.0]
        );
    }

    #[test]
    fn aggregation_cases() {
        let single = tx(0, &[0.3, 0.7], &[0.0, 0.0], 17);
        assert_eq!(aggregate_global(&[0.1, 0.9], core::slice::from_ref(&single)).unwrap(), single.weights);
        let pair = [tx(0, &[1.0, 0.0], &[0.0; 2], 3), tx(1, &[0.0, 1.0], &[0.0; 2], 3)];
        assert_eq!(aggregate_global(&[0.0, 0.0], &pair).unwrap(), vec![0.5, 0.5]);
        let prev = [0.25, -1.5];
        let fixed = [tx(0, &prev, &[0.0; 2], 2), tx(1, &prev, &[0.0; 2], 9)];
        assert_eq!(aggregate_global(&prev, &fixed).unwrap(), prev.to_vec());
    }

    #[test]
    fn svrg_with_zero_step_keeps_weights() {
        let d = Dataset::new(vec![sample(&[1.0, -2.0], 1.0)], 0).unwrap();
        let g = GlobalModel {
            weights: vec![0.5, 0.25],
            full_gradient: Some(vec![0.3, 0.1]),
            cycle: 2,
        };
        let p = SystemParams {
            beta: 0.0,
            t_max: Some(25),
            ..SystemParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tx = svrg_local_cycle(&g, &d, &p, 0.0, &mut rng).unwrap();
        assert_eq!(tx.weights, g.weights);
    }

    #[test]
    fn svrg_bracket_vanishes_at_anchor_with_zero_full_gradient() {
        let d = Dataset::new(vec![sample(&[1.0], 1.0), sample(&[-3.0], -1.0)], 0).unwrap();
        let g = GlobalModel {
            weights: vec![0.7],
            full_gradient: Some(vec![0.0]),
            cycle: 1,
        };
        let p = SystemParams {
            t_max: Some(10),
            ..SystemParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tx = svrg_local_cycle(&g, &d, &p, 0.0, &mut rng).unwrap();
        assert_eq!(tx.weights, vec![0.7]);
    }

    #[test]
    fn svrg_one_step_hand_trace() {
        let d = Dataset::new(vec![sample(&[1.0], 1.0)], 3).unwrap();
        let g = GlobalModel {
            weights: vec![0.0],
            full_gradient: Some(vec![0.5]),
            cycle: 0,
        };
        let p = SystemParams {
            beta: 1.0,
            t_max: Some(1),
            ..SystemParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let tx = svrg_local_cycle(&g, &d, &p, 0.125, &mut rng).unwrap();
        assert_eq!(tx.weights, vec![-0.5]);
        assert_eq!(tx.enterprise_id, 3);
        assert_eq!(tx.n_samples, 1);
        assert_eq!(tx.created_at, 0.125);
        assert!(tx.digest_is_valid());
        assert_eq!(tx.shared_gradient, average_gradient(&[-0.5], &d).unwrap());
    }

    #[test]
    fn svrg_requires_anchor_and_reports_divergence() {
        let d = Dataset::new(vec![sample(&[1.0], 1.0)], 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = SystemParams::default();
        assert_eq!(
            svrg_local_cycle(&GlobalModel::bootstrap(1), &d, &p, 0.0, &mut rng),
            Err(FlError::MissingFullGradient)
        );
        let exploding = GlobalModel {
            weights: vec![0.0],
            full_gradient: Some(vec![f64::MAX]),
            cycle: 0,
        };
        let p = SystemParams {
            beta: 1e10,
            ..SystemParams::default()
        };
        assert_eq!(
            svrg_local_cycle(&exploding, &d, &p, 0.0, &mut rng),
            Err(FlError::Diverged)
        );
    }

    #[test]
    fn classify_boundary_and_sign() {
        assert_eq!(classify(&[0.0, 0.0], &[3.0, 1.0]).unwrap(), -1);
        assert_eq!(classify(&[1.0], &[5.0]).unwrap(), -1);
        assert_eq!(classify(&[1.0], &[-5.0]).unwrap(), 1);
        assert!(classify(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn accuracy_counts() {
        let samples: Vec<Sample> = (0..10)
            .map(|i| {
                // w = [-1] predicts +1 for x > 0
                let y = if i == 0 { -1.0 } else { 1.0 };
                sample(&[1.0 + i as f64], y)
            })
            .collect();
        let d = Dataset::new(samples, 0).unwrap();
        assert_eq!(accuracy(&[-1.0], &d).unwrap(), 0.9);
        let balanced = Dataset::new(
            vec![sample(&[1.0], 1.0), sample(&[2.0], -1.0), sample(&[-1.0], -1.0), sample(&[0.5], 1.0)],
            0,
        )
        .unwrap();
        assert_eq!(accuracy(&[0.0], &balanced).unwrap(), 0.5);
        let all_right = Dataset::new(vec![sample(&[1.0], 1.0), sample(&[-1.0], -1.0)], 0).unwrap();
        assert_eq!(accuracy(&[-2.0], &all_right).unwrap(), 1.0);
    }

    fn ten_samples_nine_right() -> (LocalUpdateTx, Dataset) {
        let samples: Vec<Sample> = (0..10)
            .map(|i| sample(&[1.0], if i < 9 { 1.0 } else { -1.0 }))
            .collect();
        let d = Dataset::new(samples, 1).unwrap();
        (tx(0, &[-1.0], &[0.0], 5), d)
    }

    #[test]
    fn verification_threshold_is_inclusive() {
        let (t, d) = ten_samples_nine_right();
        let v = verify_update(&t, &d, 0.8);
        assert!(v.accepted && v.digest_ok);
        assert_eq!(v.accuracy, 0.9);
        assert!(verify_update(&t, &d, 0.9).accepted);
        assert!(!verify_update(&t, &d, 0.95).accepted);
    }

    #[test]
    fn verification_rejects_tampered_digest() {
        let (mut t, d) = ten_samples_nine_right();
        t.n_samples += 1;
        let v = verify_update(&t, &d, 0.0);
        assert!(!v.accepted);
        assert!(!v.digest_ok);
        assert_eq!(v.accuracy, 0.9);
    }

    #[test]
    fn convergence_test() {
        assert!(has_converged(&[1.0, 2.0], &[1.0, 2.0], 1e-12).unwrap());
        assert!(has_converged(&[3.0, 4.0], &[0.0, 0.0], 5.0).unwrap());
        assert!(!has_converged(&[3.0, 4.0], &[0.0, 0.0], 4.9).unwrap());
        assert!(has_converged(&[1e300], &[0.0], f64::INFINITY).unwrap());
        assert!(has_converged(&[1.0], &[1.0, 2.0], 1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-3.0f64..3.0, dim)
        }

        proptest! {
            #[test]
            fn gradient_matches_central_differences(
                w in vector(4), x in vector(4), positive in any::<bool>()
            ) {
                let s = sample(&x, if positive { 1.0 } else { -1.0 });
                let g = sample_gradient(&w, &s).unwrap();
                let h = 1e-6;
                for j in 0..4 {
                    let mut up = w.clone();
                    let mut down = w.clone();
                    up[j] += h;
                    down[j] -= h;
                    let fd = (logistic_loss(&up, &s).unwrap() - logistic_loss(&down, &s).unwrap()) / (2.0 * h);
                    let scale = g[j].abs().max(1e-3);
                    prop_assert!((fd - g[j]).abs() / scale <= 1e-5, "j={} fd={} g={}", j, fd, g[j]);
                }
            }

            #[test]
            fn classification_ignores_positive_scaling(w in vector(3), x in vector(3), c in 1e-3f64..1e3) {
                let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
                prop_assert_eq!(classify(&w, &x).unwrap(), classify(&scaled, &x).unwrap());
            }

            #[test]
            fn aggregation_is_weighted_mean_and_order_free(
                prev in vector(3),
                members in proptest::collection::vec((vector(3), 1usize..50), 1..6),
                rotate in 0usize..6,
            ) {
                let txs: Vec<LocalUpdateTx> = members
                    .iter()
                    .enumerate()
                    .map(|(i, (w, n))| tx(i, w, &[0.0; 3], *n))
                    .collect();
                let got = aggregate_global(&prev, &txs).unwrap();
                let mut shuffled = txs.clone();
                shuffled.rotate_left(rotate % txs.len());
                shuffled.reverse();
                prop_assert_eq!(&got, &aggregate_global(&prev, &shuffled).unwrap());

                let n_d: usize = members.iter().map(|(_, n)| n).sum();
                for j in 0..3 {
                    let mean: f64 = members.iter().map(|(w, n)| *n as f64 / n_d as f64 * (w[j] - prev[j])).sum();
                    prop_assert!((got[j] - prev[j] - mean).abs() <= 1e-12);
                }
            }

            #[test]
            fn equal_sample_counts_give_plain_mean(
                prev in vector(2), ws in proptest::collection::vec(vector(2), 2..5)
            ) {
                let txs: Vec<LocalUpdateTx> = ws.iter().enumerate().map(|(i, w)| tx(i, w, &[0.0; 2], 7)).collect();
                let got = aggregate_global(&prev, &txs).unwrap();
                for j in 0..2 {
                    let mean: f64 = ws.iter().map(|w| w[j] - prev[j]).sum::<f64>() / ws.len() as f64;
                    prop_assert!((got[j] - prev[j] - mean).abs() <= 1e-12);
                }
            }

            #[test]
            fn verification_is_monotone_in_threshold(w in vector(2), e0 in 0.0f64..=1.0, lower in 0.0f64..=1.0) {
                let samples: Vec<Sample> = (0..20)
                    .map(|i| sample(&[i as f64 - 9.5, (i % 3) as f64 - 1.0], if i % 2 == 0 { 1.0 } else { -1.0 }))
                    .collect();
                let d = Dataset::new(samples, 0).unwrap();
                let t = tx(1, &w, &[0.0, 0.0], 3);
                let e_low = lower.min(e0);
                if verify_update(&t, &d, e0).accepted {
                    prop_assert!(verify_update(&t, &d, e_low).accepted);
                }
            }
        }
    }
}
