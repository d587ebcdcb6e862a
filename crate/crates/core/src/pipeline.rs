//! End-to-end generation: speech features -> should-gesture decision ->
//! property prediction -> pose sampling conditioned on speech and the
//! predicted property bits. The existence threshold gives direct control of
//! gesture frequency. Frames below the threshold get no property call and no
//! pose (rest-pose synthesis is left to consumers).

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedRecording, GesturePropertySchema, Tier, N_PROPERTY_LABELS};
use crate::features::{extract_features, AudioFeatureConfig, FrameFeatures, TextEmbeddingProvider};
use crate::flow::{sample, FlowParams};
use crate::models::{forward, ModelParams};
use crate::windows::{feature_window, WindowSpec};
use crate::{Error, Result};

pub const FRAME_RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Frames with existence probability >= this threshold gesture.
    pub existence_threshold: f64,
    /// Property probabilities are hard-thresholded at this value before
    /// conditioning the pose sampler.
    pub property_threshold: f64,
    pub window: WindowSpec,
    pub fps: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            existence_threshold: 0.5,
            property_threshold: 0.5,
            window: WindowSpec::default(),
            fps: 5.0,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("existence_threshold", self.existence_threshold),
            ("property_threshold", self.property_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ShapeMismatch {
                    expected: format!("{name} in [0, 1]"),
                    got: format!("{v}"),
                });
            }
        }
        if !(self.fps > 0.0) {
            return Err(Error::ShapeMismatch {
                expected: "fps > 0".into(),
                got: format!("{}", self.fps),
            });
        }
        Ok(())
    }
}

/// The four classifiers plus the pose flow, already loaded.
#[derive(Debug, Clone)]
pub struct PipelineModels {
    pub existence: ModelParams,
    pub category: ModelParams,
    pub semantics: ModelParams,
    pub phase: ModelParams,
    pub flow: FlowParams,
}

impl PipelineModels {
    /// Cross-checks tiers and dimensions; called before any frame is
    /// processed so a mismatched checkpoint set fails fast.
    pub fn validate(&self, window: &WindowSpec) -> Result<()> {
        for (model, tier) in [
            (&self.existence, Tier::Existence),
            (&self.category, Tier::Category),
            (&self.semantics, Tier::Semantics),
            (&self.phase, Tier::Phase),
        ] {
            if model.tier != tier {
                return Err(Error::IncompatibleCheckpoint {
                    expected: tier.to_string(),
                    got: model.tier.to_string(),
                });
            }
            if model.d_in != self.existence.d_in {
                return Err(Error::ShapeMismatch {
                    expected: format!("d_in {}", self.existence.d_in),
                    got: format!("d_in {} for tier {tier}", model.d_in),
                });
            }
            model.spec.check_window(window.len())?;
        }
        let want_cond = self.existence.d_in + N_PROPERTY_LABELS;
        if self.flow.spec.d_cond != want_cond {
            return Err(Error::ShapeMismatch {
                expected: format!("flow d_cond {want_cond}"),
                got: format!("{}", self.flow.spec.d_cond),
            });
        }
        Ok(())
    }
}

/// One output frame. `property_probs`, `property_bits` and `pose` are present
/// exactly when the frame gestures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub schema_version: u32,
    pub frame: usize,
    pub time_s: f64,
    pub existence_prob: f64,
    pub gesturing: bool,
    /// 13 probabilities in schema column order (category, semantics, phase).
    pub property_probs: Option<Vec<f64>>,
    pub property_bits: Option<Vec<u8>>,
    pub pose: Option<Vec<f64>>,
}

/// Runs the full pipeline on pre-extracted frame features.
pub fn run_on_features(
    features: &FrameFeatures,
    models: &PipelineModels,
    config: &PipelineConfig,
) -> Result<Vec<FrameRecord>> {
    config.validate()?;
    models.validate(&config.window)?;
    if features.d_total() != models.existence.d_in {
        return Err(Error::ShapeMismatch {
            expected: format!("features with {} columns", models.existence.d_in),
            got: format!("{}", features.d_total()),
        });
    }

    let schema = GesturePropertySchema;
    let mut out = Vec::with_capacity(features.n_frames());
    for t in 0..features.n_frames() {
        let window = feature_window(features, t, &config.window);
        let existence_prob = forward(&models.existence, &window)?[0];
        let gesturing = existence_prob >= config.existence_threshold;

        let (property_probs, property_bits, pose) = if gesturing {
            let mut probs = vec![0.0f64; N_PROPERTY_LABELS];
            for (model, tier) in [
                (&models.category, Tier::Category),
                (&models.semantics, Tier::Semantics),
                (&models.phase, Tier::Phase),
            ] {
                let tier_probs = forward(model, &window)?;
                for (p, slot) in tier_probs.iter().zip(schema.tier_range(tier)) {
                    probs[slot] = *p;
                }
            }
            let bits: Vec<u8> =
                probs.iter().map(|&p| u8::from(p >= config.property_threshold)).collect();
            let mut cond = features.row(t);
            cond.extend(bits.iter().map(|&b| b as f64));
            // the pose draw is seeded per frame, so it does not depend on
            // which other frames cleared the threshold
            let pose = sample(&models.flow, &cond, 1, config.seed ^ t as u64)?
                .pop()
                .expect("one sample requested");
            (Some(probs), Some(bits), Some(pose))
        } else {
            (None, None, None)
        };

        out.push(FrameRecord {
            schema_version: FRAME_RECORD_VERSION,
            frame: t,
            time_s: (t as f64 + 0.5) / config.fps,
            existence_prob,
            gesturing,
            property_probs,
            property_bits,
            pose,
        });
    }
    Ok(out)
}

/// Extracts features from a recording, then runs [`run_on_features`].
pub fn run(
    recording: &AnnotatedRecording,
    provider: &dyn TextEmbeddingProvider,
    models: &PipelineModels,
    config: &PipelineConfig,
) -> Result<Vec<FrameRecord>> {
    let audio_config = AudioFeatureConfig::new(recording.sample_rate_hz);
    let features = extract_features(recording, &audio_config, provider, config.fps)?;
    run_on_features(&features, models, config)
}

/// Fraction of frames that gesture.
pub fn gesture_frequency(records: &[FrameRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no frame records"));
    }
    let gesturing = records.iter().filter(|r| r.gesturing).count();
    Ok(gesturing as f64 / records.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{init_flow, FlowSpec};
    use crate::models::{init_model, DilatedConvSpec};
    use ndarray::Array2;

    const D_IN: usize = 3;

    fn tier_labels(tier: Tier) -> Vec<String> {
        GesturePropertySchema.labels(tier).iter().map(|s| s.to_string()).collect()
    }

    /// Small untrained models; random heads make probabilities vary by frame.
    fn models(seed: u64) -> PipelineModels {
        let spec = DilatedConvSpec { channels: 4, kernel_size: 3, dilations: vec![1, 2] };
        let make = |tier: Tier, seed: u64| init_model(&spec, tier, &tier_labels(tier), D_IN, seed);
        PipelineModels {
            existence: make(Tier::Existence, seed),
            category: make(Tier::Category, seed + 1),
            semantics: make(Tier::Semantics, seed + 2),
            phase: make(Tier::Phase, seed + 3),
            flow: init_flow(&FlowSpec::new(6, D_IN + N_PROPERTY_LABELS), seed + 4),
        }
    }

    fn features(n: usize) -> FrameFeatures {
        FrameFeatures {
            audio: Array2::from_shape_fn((n, 2), |(i, j)| ((i * 3 + j) as f64 * 0.7).sin()),
            text: Array2::from_shape_fn((n, 1), |(i, _)| (i as f64 * 1.3).cos()),
            fps: 5.0,
        }
    }

    fn config(threshold: f64) -> PipelineConfig {
        PipelineConfig {
            existence_threshold: threshold,
            window: WindowSpec { past_frames: 3, future_frames: 3 },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn threshold_zero_gestures_everywhere_threshold_one_nowhere() {
        let m = models(1);
        let f = features(20);
        let all = run_on_features(&f, &m, &config(0.0)).unwrap();
        assert_eq!(gesture_frequency(&all).unwrap(), 1.0);
        assert!(all.iter().all(|r| r.pose.is_some() && r.property_probs.is_some()));

        let none = run_on_features(&f, &m, &config(1.0)).unwrap();
        assert_eq!(gesture_frequency(&none).unwrap(), 0.0);
        assert!(none.iter().all(|r| r.pose.is_none() && r.property_bits.is_none()));
    }

    #[test]
    fn frequency_is_non_increasing_in_threshold() {
        let m = models(2);
        let f = features(40);
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let tau = i as f64 / 20.0;
            let records = run_on_features(&f, &m, &config(tau)).unwrap();
            let freq = gesture_frequency(&records).unwrap();
            assert!(freq <= last, "frequency rose from {last} to {freq} at tau {tau}");
            last = freq;
        }
    }

    #[test]
    fn property_probs_and_pose_do_not_depend_on_threshold() {
        let m = models(3);
        let f = features(25);
        let low = run_on_features(&f, &m, &config(0.0)).unwrap();
        let mid = run_on_features(&f, &m, &config(0.5)).unwrap();
        for (a, b) in low.iter().zip(&mid) {
            assert_eq!(a.existence_prob, b.existence_prob);
            if b.gesturing {
                assert_eq!(a.property_probs, b.property_probs);
                assert_eq!(a.pose, b.pose);
            }
        }
    }

    #[test]
    fn fixed_seed_gives_byte_identical_output() {
        let m = models(4);
        let f = features(15);
        let a = run_on_features(&f, &m, &config(0.3)).unwrap();
        let b = run_on_features(&f, &m, &config(0.3)).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn gesture_frequency_matches_recount() {
        let m = models(5);
        let f = features(30);
        let records = run_on_features(&f, &m, &config(0.5)).unwrap();
        let manual =
            records.iter().filter(|r| r.gesturing).count() as f64 / records.len() as f64;
        assert_eq!(gesture_frequency(&records).unwrap(), manual);
        assert_eq!(records.len(), 30);
    }

    #[test]
    fn empty_output_is_an_error() {
        assert!(matches!(gesture_frequency(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn mismatched_tier_fails_before_processing() {
        let mut m = models(6);
        std::mem::swap(&mut m.category, &mut m.semantics);
        let f = features(10);
        assert!(matches!(
            run_on_features(&f, &m, &config(0.5)),
            Err(Error::IncompatibleCheckpoint { .. })
        ));
    }

    #[test]
    fn wrong_flow_conditioning_width_is_rejected() {
        let mut m = models(7);
        m.flow = init_flow(&FlowSpec::new(6, 4), 0);
        assert!(run_on_features(&features(10), &m, &config(0.5)).is_err());
    }

    #[test]
    fn out_of_range_threshold_is_rejected() {
        let m = models(8);
        let mut c = config(0.5);
        c.existence_threshold = 1.5;
        assert!(run_on_features(&features(10), &m, &c).is_err());
    }

    #[test]
    fn frame_times_are_bin_centers() {
        let m = models(9);
        let records = run_on_features(&features(10), &m, &config(0.0)).unwrap();
        assert!((records[0].time_s - 0.1).abs() < 1e-12);
        assert!((records[9].time_s - 1.9).abs() < 1e-12);
    }
}
