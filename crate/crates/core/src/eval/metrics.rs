//! Confusion counts and F1 scores for one binary label.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub r#fn: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.r#fn += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.r#fn + self.tn
    }

    /// True iff the positive-class F1 is defined in the strict sense of the
    /// label having at least one positive frame.
    pub fn has_positives(&self) -> bool {
        self.tp + self.r#fn > 0
    }

    fn swapped(&self) -> ConfusionCounts {
        ConfusionCounts { tp: self.tn, fp: self.r#fn, r#fn: self.fp, tn: self.tp }
    }
}

/// Positive-class F1 = 2tp / (2tp + fp + fn), 0 when the denominator is 0.
pub fn f1(counts: &ConfusionCounts) -> f64 {
    let denom = 2 * counts.tp + counts.fp + counts.r#fn;
    if denom == 0 {
        0.0
    } else {
        2.0 * counts.tp as f64 / denom as f64
    }
}

/// Two-class Macro F1: mean of the positive-class F1 and the negative-class
/// F1 (classes swapped). A prevalence-matched random guesser scores about
/// 0.5 for any prevalence under this definition.
pub fn macro_f1(counts: &ConfusionCounts) -> f64 {
    0.5 * (f1(counts) + f1(&counts.swapped()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(tp: u64, fp: u64, r#fn: u64, tn: u64) -> ConfusionCounts {
        ConfusionCounts { tp, fp, r#fn, tn }
    }

    #[test]
    fn perfect_prediction_scores_one() {
        assert_eq!(f1(&counts(1, 0, 0, 0)), 1.0);
        assert_eq!(macro_f1(&counts(3, 0, 0, 5)), 1.0);
    }

    #[test]
    fn zero_tp_scores_zero() {
        assert_eq!(f1(&counts(0, 2, 3, 1)), 0.0);
        assert_eq!(f1(&counts(0, 0, 0, 0)), 0.0);
    }

    #[test]
    fn direct_formula_case() {
        assert!((f1(&counts(2, 1, 1, 0)) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn all_negative_predictor_closed_form() {
        // prevalence pi on n frames, predictor always negative:
        // macro F1 = (0 + 2(1-pi) / (2(1-pi) + pi)) / 2
        let n = 1000u64;
        for pi_millis in [100u64, 250, 500] {
            let pos = n * pi_millis / 1000;
            let c = counts(0, 0, pos, n - pos);
            let pi = pos as f64 / n as f64;
            let expected = 0.5 * (2.0 * (1.0 - pi)) / (2.0 * (1.0 - pi) + pi);
            assert!((macro_f1(&c) - expected).abs() < 1e-12);
        }
    }

    proptest! {
        /// Scaling all counts by a positive integer leaves F1 unchanged.
        #[test]
        fn f1_scale_invariant(
            tp in 0u64..50, fp in 0u64..50, fnn in 0u64..50, tn in 0u64..50,
            scale in 1u64..20,
        ) {
            let a = counts(tp, fp, fnn, tn);
            let b = counts(tp * scale, fp * scale, fnn * scale, tn * scale);
            prop_assert!((f1(&a) - f1(&b)).abs() < 1e-12);
            prop_assert!((macro_f1(&a) - macro_f1(&b)).abs() < 1e-12);
        }

        /// Complementing both labels and predictions preserves macro F1.
        #[test]
        fn macro_f1_complement_symmetric(
            tp in 0u64..50, fp in 0u64..50, fnn in 0u64..50, tn in 0u64..50,
        ) {
            let a = counts(tp, fp, fnn, tn);
            // complementing swaps tp<->tn and fp<->fn
            let b = counts(tn, fnn, fp, tp);
            prop_assert!((macro_f1(&a) - macro_f1(&b)).abs() < 1e-12);
        }

        /// Scores stay in [0, 1].
        #[test]
        fn scores_bounded(
            tp in 0u64..50, fp in 0u64..50, fnn in 0u64..50, tn in 0u64..50,
        ) {
            let c = counts(tp, fp, fnn, tn);
            prop_assert!((0.0..=1.0).contains(&f1(&c)));
            prop_assert!((0.0..=1.0).contains(&macro_f1(&c)));
        }
    }
}
