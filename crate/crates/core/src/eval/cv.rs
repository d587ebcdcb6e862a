//! Speaker-disjoint cross-validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{f1, macro_f1, ConfusionCounts};
use crate::corpus::{FrameGrid, GesturePropertySchema, Tier};
use crate::features::FrameFeatures;
use crate::models::{forward, train, DilatedConvSpec, TrainConfig};
use crate::windows::{build_examples, Example, FoldPlan, FrameFilter, WindowSpec};
use crate::{Error, Result};

/// One recording's rasterized labels and aligned features.
#[derive(Debug, Clone)]
pub struct CvInput {
    pub recording_id: String,
    pub speaker_id: String,
    pub grid: FrameGrid,
    pub features: FrameFeatures,
}

/// Scores of one fold; `None` marks a label with no positive test frames.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_test_frames: usize,
    pub per_label_f1: Vec<Option<f64>>,
    pub per_label_macro_f1: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelSummary {
    pub name: String,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
    /// Folds where the label had positive test frames; the means above are
    /// unweighted means over exactly these folds.
    pub n_defined_folds: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TierSummary {
    pub tier: Tier,
    pub n_folds: usize,
    pub labels: Vec<LabelSummary>,
}

/// Which frames a tier trains and evaluates on.
pub(crate) fn tier_filter(tier: Tier) -> FrameFilter {
    match tier {
        Tier::Existence => FrameFilter::All,
        _ => FrameFilter::GestureOnly,
    }
}

/// Trains a fresh model per fold and scores it on the held-out speakers at
/// threshold 0.5. Folds run in parallel; results are ordered by fold id.
pub fn cross_validate(
    inputs: &[CvInput],
    tier: Tier,
    plan: &FoldPlan,
    window: &WindowSpec,
    model_spec: &DilatedConvSpec,
    train_config: &TrainConfig,
) -> Result<(Vec<FoldResult>, TierSummary)> {
    let schema = GesturePropertySchema;
    let labels: Vec<String> = schema.labels(tier).iter().map(|s| s.to_string()).collect();

    let mut examples: Vec<Example> = Vec::new();
    for input in inputs {
        examples.extend(build_examples(
            &input.recording_id,
            &input.speaker_id,
            &input.grid,
            &input.features,
            window,
            tier,
            tier_filter(tier),
        )?);
    }
    if examples.is_empty() {
        return Err(Error::EmptyInput("no examples for tier"));
    }

    let folds: Vec<FoldResult> = (0..plan.k())
        .into_par_iter()
        .map(|fold| -> Result<FoldResult> {
            let (train_idx, test_idx) = plan.split(&examples, fold);
            let train_set: Vec<Example> = train_idx.iter().map(|&i| examples[i].clone()).collect();
            let (params, _) = train(&train_set, tier, &labels, model_spec, train_config)?;

            let mut counts = vec![ConfusionCounts::default(); labels.len()];
            for &i in &test_idx {
                let probs = forward(&params, &examples[i].features)?;
                for (l, c) in counts.iter_mut().enumerate() {
                    c.record(examples[i].target[l] > 0.5, probs[l] >= 0.5);
                }
            }
            Ok(FoldResult {
                fold,
                n_test_frames: test_idx.len(),
                per_label_f1: counts
                    .iter()
                    .map(|c| c.has_positives().then(|| f1(c)))
                    .collect(),
                per_label_macro_f1: counts
                    .iter()
                    .map(|c| c.has_positives().then(|| macro_f1(c)))
                    .collect(),
            })
        })
        .collect::<Result<_>>()?;

    let summary = summarize(tier, &labels, &folds);
    Ok((folds, summary))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub(crate) fn summarize(tier: Tier, labels: &[String], folds: &[FoldResult]) -> TierSummary {
    let label_summaries = labels
        .iter()
        .enumerate()
        .map(|(l, name)| {
            let f1s: Vec<f64> = folds.iter().filter_map(|f| f.per_label_f1[l]).collect();
            let macros: Vec<f64> =
                folds.iter().filter_map(|f| f.per_label_macro_f1[l]).collect();
            let (f1_mean, f1_std) = mean_std(&f1s);
            let (macro_f1_mean, macro_f1_std) = mean_std(&macros);
            LabelSummary {
                name: name.clone(),
                f1_mean,
                f1_std,
                macro_f1_mean,
                macro_f1_std,
                n_defined_folds: f1s.len(),
            }
        })
        .collect();
    TierSummary { tier, n_folds: folds.len(), labels: label_summaries }
}
