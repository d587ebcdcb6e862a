//! Classifier training loop: weighted BCE, fixed-step stochastic gradient
//! descent, early stopping on validation Macro F1.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::net::{batch_loss_grad, forward};
use super::params::{init_model, DilatedConvSpec, ModelParams};
use crate::corpus::Tier;
use crate::eval::{macro_f1, ConfusionCounts};
use crate::features::FrameFeatures;
use crate::windows::{feature_window, Example, WindowSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Positive-class weights are (1 - pi) / pi clipped into this range.
    pub weight_clip: (f64, f64),
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.1,
            seed: 0,
            weight_clip: (1.0, 100.0),
            patience: 5,
            val_fraction: 0.1,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_macro_f1: f64,
    pub best_so_far: f64,
}

/// Positive-class weight per label from training prevalence. Labels with no
/// positives fall back to weight 1.
fn positive_weights(examples: &[&Example], n_labels: usize, clip: (f64, f64)) -> Vec<f64> {
    (0..n_labels)
        .map(|l| {
            let positives = examples.iter().filter(|e| e.target[l] > 0.5).count();
            if positives == 0 {
                log::warn!("label column {l} has no positive training frames; weight falls back to 1");
                return 1.0;
            }
            let pi = positives as f64 / examples.len() as f64;
            ((1.0 - pi) / pi).clamp(clip.0, clip.1)
        })
        .collect()
}

fn mean_macro_f1(params: &ModelParams, examples: &[&Example]) -> f64 {
    let n_labels = params.n_labels();
    let preds: Vec<Vec<f64>> = examples
        .par_iter()
        .map(|ex| forward(params, &ex.features).expect("shapes checked before training"))
        .collect();
    let mut total = 0.0;
    for l in 0..n_labels {
        let mut counts = ConfusionCounts::default();
        for (ex, p) in examples.iter().zip(&preds) {
            counts.record(ex.target[l] > 0.5, p[l] >= 0.5);
        }
        total += macro_f1(&counts);
    }
    total / n_labels as f64
}

/// Trains a fresh model on `examples`, returning the parameters of the best
/// validation epoch plus the per-epoch log. Deterministic per seed.
pub fn train(
    examples: &[Example],
    tier: Tier,
    labels: &[String],
    spec: &DilatedConvSpec,
    config: &TrainConfig,
) -> Result<(ModelParams, Vec<EpochLog>)> {
    if examples.is_empty() {
        return Err(Error::EmptyInput("training set is empty"));
    }
    let d_in = examples[0].features.ncols();
    let window_frames = examples[0].features.nrows();
    spec.check_window(window_frames)?;
    for ex in examples {
        if ex.features.dim() != (window_frames, d_in) || ex.target.len() != labels.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("({window_frames}, {d_in}) features, {} targets", labels.len()),
                got: format!("({:?}) features, {} targets", ex.features.dim(), ex.target.len()),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((examples.len() as f64 * config.val_fraction).round() as usize)
        .min(examples.len().saturating_sub(1));
    let (val_idx, train_idx) = order.split_at(n_val);
    let train_set: Vec<&Example> = train_idx.iter().map(|&i| &examples[i]).collect();
    // degenerate corpora validate on the training data itself
    let val_set: Vec<&Example> = if val_idx.is_empty() {
        train_set.clone()
    } else {
        val_idx.iter().map(|&i| &examples[i]).collect()
    };

    let weights = positive_weights(&train_set, labels.len(), config.weight_clip);
    let mut params = init_model(spec, tier, labels, d_in, config.seed);
    standardize_from(&mut params, &train_set);

    let mut flat = params.flatten();
    let mut best = params.clone();
    let mut best_score = f64::NEG_INFINITY;
    let mut since_best = 0usize;
    let mut log = Vec::with_capacity(config.epochs);
    let mut batch_order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 0..config.epochs {
        batch_order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        for chunk in batch_order.chunks(config.batch_size.max(1)) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| train_set[i]).collect();
            let (loss, grad) = batch_loss_grad(&params, &batch, &weights)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            for (w, g) in flat.iter_mut().zip(&grad) {
                *w -= config.learning_rate * g;
            }
            params.set_flat(&flat);
            loss_sum += loss;
            n_batches += 1;
        }

        let val_score = mean_macro_f1(&params, &val_set);
        if val_score > best_score {
            since_best = 0;
        } else {
            since_best += 1;
        }
        // ties resolve to the later epoch, so plateaus still early-stop
        if val_score >= best_score {
            best_score = val_score;
            best = params.clone();
        }
        log.push(EpochLog {
            epoch,
            train_loss: loss_sum / n_batches as f64,
            val_macro_f1: val_score,
            best_so_far: best_score,
        });
        if config.patience > 0 && since_best >= config.patience {
            break;
        }
    }
    Ok((best, log))
}

fn standardize_from(params: &mut ModelParams, train_set: &[&Example]) {
    let d = params.d_in;
    let mut mean = vec![0.0f64; d];
    let mut count = 0usize;
    for ex in train_set {
        for row in ex.features.rows() {
            for (i, v) in row.iter().enumerate() {
                mean[i] += v;
            }
        }
        count += ex.features.nrows();
    }
    for m in &mut mean {
        *m /= count as f64;
    }
    let mut var = vec![0.0f64; d];
    for ex in train_set {
        for row in ex.features.rows() {
            for (i, v) in row.iter().enumerate() {
                var[i] += (v - mean[i]).powi(2);
            }
        }
    }
    for (i, v) in var.iter().enumerate() {
        params.norm_mean[i] = mean[i];
        params.norm_std[i] = (v / count as f64).sqrt().max(1e-8);
    }
}

/// Frame-by-frame probabilities over a full recording: row `t` is the forward
/// pass on the edge-replicated window centered at `t`.
pub fn predict(
    params: &ModelParams,
    features: &FrameFeatures,
    window: &WindowSpec,
) -> Result<Array2<f64>> {
    params.spec.check_window(window.len())?;
    let n = features.n_frames();
    let mut out = Array2::<f64>::zeros((n, params.n_labels()));
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|t| forward(params, &feature_window(features, t, window)))
        .collect::<Result<_>>()?;
    for (t, row) in rows.into_iter().enumerate() {
        for (l, v) in row.into_iter().enumerate() {
            out[[t, l]] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2 as A2;

    fn toy_spec() -> DilatedConvSpec {
        DilatedConvSpec { channels: 4, kernel_size: 3, dilations: vec![1, 2] }
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("l{i}")).collect()
    }

    fn example(seed: u64, target: Vec<f64>) -> Example {
        let mut v = seed as f64;
        Example {
            features: A2::from_shape_fn((7, 3), |(i, j)| {
                v = (v * 1.7 + (i * 3 + j) as f64 * 0.31).sin();
                v
            }),
            target,
            recording_id: format!("r{seed}"),
            speaker_id: format!("s{seed}"),
            center_frame: 0,
        }
    }

    #[test]
    fn overfits_a_single_repeated_example() {
        let ex = example(1, vec![1.0, 0.0]);
        let examples: Vec<Example> = (0..8).map(|_| ex.clone()).collect();
        let config = TrainConfig {
            epochs: 400,
            batch_size: 8,
            learning_rate: 0.5,
            patience: 0,
            ..TrainConfig::default()
        };
        let (params, log) = train(&examples, Tier::Category, &labels(2), &toy_spec(), &config).unwrap();
        assert!(log.last().unwrap().train_loss < 1e-3, "loss {}", log.last().unwrap().train_loss);
        let probs = forward(&params, &ex.features).unwrap();
        assert!(probs[0] >= 0.5 && probs[1] < 0.5);
    }

    #[test]
    fn training_is_deterministic() {
        let examples: Vec<Example> =
            (0..20).map(|i| example(i, vec![f64::from(i % 2 == 0)])).collect();
        let config = TrainConfig { epochs: 3, ..TrainConfig::default() };
        let (a, log_a) = train(&examples, Tier::Existence, &labels(1), &toy_spec(), &config).unwrap();
        let (b, log_b) = train(&examples, Tier::Existence, &labels(1), &toy_spec(), &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&log_a).unwrap(),
            serde_json::to_string(&log_b).unwrap()
        );
    }

    #[test]
    fn empty_train_set_rejected() {
        let config = TrainConfig::default();
        assert!(train(&[], Tier::Existence, &labels(1), &toy_spec(), &config).is_err());
    }

    #[test]
    fn all_negative_label_falls_back_to_weight_one() {
        let exs: Vec<Example> = (0..6).map(|i| example(i, vec![0.0])).collect();
        let refs: Vec<&Example> = exs.iter().collect();
        let w = positive_weights(&refs, 1, (1.0, 100.0));
        assert_eq!(w, vec![1.0]);
    }

    #[test]
    fn weights_follow_prevalence_with_clipping() {
        let exs: Vec<Example> = (0..10)
            .map(|i| example(i, vec![f64::from(i < 2), f64::from(i < 5)]))
            .collect();
        let refs: Vec<&Example> = exs.iter().collect();
        let w = positive_weights(&refs, 2, (1.0, 100.0));
        assert!((w[0] - 4.0).abs() < 1e-12); // pi = 0.2
        assert!((w[1] - 1.0).abs() < 1e-12); // pi = 0.5 -> 1, clipped at floor
    }

    #[test]
    fn predict_runs_one_row_per_frame_and_matches_looped_forward() {
        let features = FrameFeatures {
            audio: A2::from_shape_fn((50, 2), |(i, j)| ((i + j) as f64 * 0.2).sin()),
            text: A2::from_shape_fn((50, 1), |(i, _)| (i as f64 * 0.11).cos()),
            fps: 5.0,
        };
        let params = init_model(&toy_spec(), Tier::Existence, &labels(1), 3, 9);
        let wspec = WindowSpec { past_frames: 3, future_frames: 3 };
        let out = predict(&params, &features, &wspec).unwrap();
        assert_eq!(out.dim(), (50, 1));
        for t in 0..50 {
            let direct = forward(&params, &feature_window(&features, t, &wspec)).unwrap();
            assert_eq!(out[[t, 0]], direct[0]);
        }
    }

    #[test]
    fn constant_features_give_constant_rows() {
        let features = FrameFeatures {
            audio: A2::from_elem((30, 2), 0.7),
            text: A2::from_elem((30, 1), -0.1),
            fps: 5.0,
        };
        let params = init_model(&toy_spec(), Tier::Existence, &labels(1), 3, 2);
        let wspec = WindowSpec { past_frames: 3, future_frames: 3 };
        let out = predict(&params, &features, &wspec).unwrap();
        for t in 1..30 {
            assert_eq!(out[[t, 0]], out[[0, 0]]);
        }
    }
}
