//! Probe-typed losses and accuracy metrics.
//!
//! Graph scalars train in a compressed space: targets are mapped through
//! `sign(y) * ln(1 + |y|)` so DP-table corners spanning several orders of
//! magnitude stay trainable under MSE, and accuracy is measured back in
//! raw space at 5% relative tolerance.

use super::TrainError;
use crate::tensor::{Tape, TensorId};

/// Model predictions for one output probe over a batch.
pub enum Predictions {
    /// `[N, 1]` node-mask logits
    NodeLogits(TensorId),
    /// `[E, 1]` edge-mask logits
    EdgeLogits(TensorId),
    /// per-graph `[n, n]` pointer score matrices
    PointerScores(Vec<TensorId>),
    /// `[G, k]` class logits
    GraphLogits(TensorId),
    /// `[G, 1]` regressed values (in train space)
    GraphValues(TensorId),
}

/// Supervision targets matching [`Predictions`].
pub enum Targets {
    /// {0,1} per node or per edge
    Mask(Vec<f32>),
    /// per-graph pointer targets
    Pointers(Vec<Vec<u32>>),
    /// class per graph
    Classes(Vec<u32>),
    /// raw-space scalar per graph
    Values(Vec<f32>),
}

pub fn scalar_to_train_space(y: f32) -> f32 {
    y.signum() * y.abs().ln_1p()
}

pub fn scalar_from_train_space(z: f32) -> f32 {
    z.signum() * (z.abs().exp() - 1.0)
}

/// Scalar loss for one probe: mask -> mean BCE on logits, pointer -> mean
/// row-softmax cross-entropy (graphs weighted by node count), categorical
/// -> cross-entropy, scalar -> MSE in train space.
pub fn compute_loss(
    tape: &mut Tape,
    preds: &Predictions,
    targets: &Targets,
) -> Result<TensorId, TrainError> {
    match (preds, targets) {
        (Predictions::NodeLogits(x) | Predictions::EdgeLogits(x), Targets::Mask(t)) => {
            Ok(tape.bce_with_logits_mean(*x, t)?)
        }
        (Predictions::PointerScores(scores), Targets::Pointers(ts)) => {
            let total_rows: usize = ts.iter().map(|t| t.len()).sum();
            let mut acc: Option<TensorId> = None;
            for (s, t) in scores.iter().zip(ts) {
                let l = tape.softmax_cross_entropy_mean(*s, t)?;
                let w = tape.scalar(t.len() as f32 / total_rows as f32);
                let wl = tape.mul(l, w)?;
                acc = Some(match acc {
                    None => wl,
                    Some(a) => tape.add(a, wl)?,
                });
            }
            Ok(acc.expect("at least one graph in the batch"))
        }
        (Predictions::GraphLogits(x), Targets::Classes(t)) => {
            Ok(tape.softmax_cross_entropy_mean(*x, t)?)
        }
        (Predictions::GraphValues(x), Targets::Values(t)) => {
            let z: Vec<f32> = t.iter().map(|&y| scalar_to_train_space(y)).collect();
            Ok(tape.mse_mean(*x, &z)?)
        }
        _ => unreachable!("predictions and targets are paired by the caller"),
    }
}

/// Accuracy counters: correct predictions out of total comparisons.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AccuracyCount {
    pub correct: usize,
    pub total: usize,
}

impl AccuracyCount {
    pub fn merge(&mut self, other: AccuracyCount) {
        self.correct += other.correct;
        self.total += other.total;
    }

    pub fn value(&self) -> f32 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f32 / self.total as f32
        }
    }
}

/// Fraction of rows whose argmax equals the pointer target.
pub fn pointer_accuracy(scores: &[f32], n: usize, targets: &[u32]) -> AccuracyCount {
    let mut c = AccuracyCount::default();
    for (r, &t) in targets.iter().enumerate() {
        let row = &scores[r * n..(r + 1) * n];
        let mut best = 0usize;
        for j in 1..n {
            if row[j] > row[best] {
                best = j;
            }
        }
        c.total += 1;
        c.correct += usize::from(best == t as usize);
    }
    c
}

/// Elementwise mask accuracy at threshold 0.5 (logit 0).
pub fn mask_accuracy(logits: &[f32], targets: &[f32]) -> AccuracyCount {
    let mut c = AccuracyCount::default();
    for (&z, &y) in logits.iter().zip(targets) {
        c.total += 1;
        c.correct += usize::from((z > 0.0) == (y > 0.5));
    }
    c
}

/// Top-1 accuracy over `[G, k]` logits.
pub fn categorical_accuracy(logits: &[f32], k: usize, targets: &[u32]) -> AccuracyCount {
    pointer_accuracy(logits, k, targets)
}

/// Fraction of scalar predictions (train space) within 5% relative error
/// of the raw target, with denominator floored at 1.
pub fn scalar_accuracy(values_train: &[f32], targets_raw: &[f32]) -> AccuracyCount {
    let mut c = AccuracyCount::default();
    for (&z, &y) in values_train.iter().zip(targets_raw) {
        let pred = scalar_from_train_space(z);
        c.total += 1;
        c.correct += usize::from((pred - y).abs() <= 0.05 * y.abs().max(1.0));
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_at_zero_logit_is_ln_two() {
        let mut tape = Tape::new();
        let x = tape.leaf(&[1, 1], vec![0.0]).unwrap();
        let l = compute_loss(
            &mut tape,
            &Predictions::NodeLogits(x),
            &Targets::Mask(vec![1.0]),
        )
        .unwrap();
        assert!((tape.data(l)[0] - std::f32::consts::LN_2).abs() < 1e-6);
    }

    #[test]
    fn saturated_pointer_loss_vanishes() {
        let mut tape = Tape::new();
        let s = tape
            .leaf(&[2, 2], vec![60.0, -60.0, -60.0, 60.0])
            .unwrap();
        let l = compute_loss(
            &mut tape,
            &Predictions::PointerScores(vec![s]),
            &Targets::Pointers(vec![vec![0, 1]]),
        )
        .unwrap();
        assert!(tape.data(l)[0] < 1e-6);
    }

    #[test]
    fn pointer_loss_matches_scalar_loop_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 5;
        let scores: Vec<f32> = (0..n * n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let targets: Vec<u32> = (0..n).map(|_| rng.random_range(0..n as u32)).collect();
        let mut oracle = 0.0f64;
        for r in 0..n {
            let row = &scores[r * n..(r + 1) * n];
            let z: f64 = row.iter().map(|&v| (v as f64).exp()).sum();
            oracle += -((row[targets[r] as usize] as f64) - z.ln());
        }
        oracle /= n as f64;
        let mut tape = Tape::new();
        let s = tape.leaf(&[n, n], scores).unwrap();
        let l = compute_loss(
            &mut tape,
            &Predictions::PointerScores(vec![s]),
            &Targets::Pointers(vec![targets]),
        )
        .unwrap();
        assert!((tape.data(l)[0] as f64 - oracle).abs() < 1e-6);
    }

    #[test]
    fn scalar_space_round_trips() {
        for y in [0.0f32, 1.0, 6.0, 262144.0, -3.5] {
            let z = scalar_to_train_space(y);
            let back = scalar_from_train_space(z);
            assert!((back - y).abs() <= 1e-3 * y.abs().max(1.0), "{y} -> {back}");
        }
    }

    #[test]
    fn accuracy_counters() {
        let pa = pointer_accuracy(&[1.0, 0.0, 0.0, 1.0], 2, &[0, 1]);
        assert_eq!(pa.value(), 1.0);
        let ma = mask_accuracy(&[1.0, -1.0, 1.0], &[1.0, 0.0, 0.0]);
        assert!((ma.value() - 2.0 / 3.0).abs() < 1e-6);
        let sa = scalar_accuracy(&[scalar_to_train_space(100.0)], &[104.0]);
        assert_eq!(sa.value(), 1.0);
        let sa2 = scalar_accuracy(&[scalar_to_train_space(100.0)], &[110.0]);
        assert_eq!(sa2.value(), 0.0);
    }
}
