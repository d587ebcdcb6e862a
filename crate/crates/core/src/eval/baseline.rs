//! Prevalence-matched random-guess baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{f1, macro_f1, ConfusionCounts};
use crate::{Error, Result};

/// How the "true" labels of each trial are obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum BaselineMode {
    /// Labels are drawn independently at the same prevalence as predictions.
    Independent,
    /// Predictions are scored against supplied true labels, one bool row per
    /// frame and label.
    Matched(Vec<Vec<bool>>),
}

impl BaselineMode {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineMode::Independent => "independent_draws",
            BaselineMode::Matched(_) => "matched_to_true_labels",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelBaseline {
    pub prevalence: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineResult {
    pub mode: String,
    pub n_frames: usize,
    pub n_trials: usize,
    pub labels: Vec<LabelBaseline>,
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Monte Carlo estimate of the F1 scores a predictor achieves by emitting a
/// positive with probability equal to each label's prevalence.
pub fn random_guess_baseline(
    prevalences: &[f64],
    n_frames: usize,
    n_trials: usize,
    seed: u64,
    mode: &BaselineMode,
) -> Result<BaselineResult> {
    for &p in prevalences {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::PrevalenceOutOfRange { label: "baseline".into(), value: p });
        }
    }
    if let BaselineMode::Matched(truth) = mode {
        if truth.len() != n_frames || truth.iter().any(|row| row.len() != prevalences.len()) {
            return Err(Error::ShapeMismatch {
                expected: format!("{n_frames} x {} truth matrix", prevalences.len()),
                got: format!("{} rows", truth.len()),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::with_capacity(prevalences.len());
    for (l, &pi) in prevalences.iter().enumerate() {
        let mut f1s = Vec::with_capacity(n_trials);
        let mut macros = Vec::with_capacity(n_trials);
        for _ in 0..n_trials {
            let mut counts = ConfusionCounts::default();
            for t in 0..n_frames {
                let truth = match mode {
                    BaselineMode::Independent => rng.gen_bool(pi),
                    BaselineMode::Matched(rows) => rows[t][l],
                };
                counts.record(truth, rng.gen_bool(pi));
            }
            f1s.push(f1(&counts));
            macros.push(macro_f1(&counts));
        }
        let (f1_mean, f1_std) = mean_std(&f1s);
        let (macro_f1_mean, macro_f1_std) = mean_std(&macros);
        labels.push(LabelBaseline { prevalence: pi, f1_mean, f1_std, macro_f1_mean, macro_f1_std });
    }
    Ok(BaselineResult {
        mode: mode.name().to_string(),
        n_frames,
        n_trials,
        labels,
    })
}
