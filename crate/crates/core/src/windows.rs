//! Sliding-window training examples and speaker-disjoint fold planning.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{FrameGrid, Tier};
use crate::features::FrameFeatures;
use crate::{Error, Result};

/// Context width around the center frame, in frames per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub past_frames: usize,
    pub future_frames: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        // +-7 frames (1.4 s at 5 fps): the smallest symmetric window that
        // holds the default classifier's 15-frame receptive field
        WindowSpec { past_frames: 7, future_frames: 7 }
    }
}

impl WindowSpec {
    /// Total window length in frames.
    pub fn len(&self) -> usize {
        self.past_frames + 1 + self.future_frames
    }
}

/// Which center frames become examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameFilter {
    All,
    /// Keep frames with existence = 1 (property-tier training).
    GestureOnly,
}

/// One sliding-window training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    /// (past + 1 + future) x (d_audio + d_text), edge-replicated at bounds.
    pub features: Array2<f64>,
    /// Binary target vector for the center frame, restricted to the tier.
    pub target: Vec<f64>,
    pub recording_id: String,
    pub speaker_id: String,
    pub center_frame: usize,
}

/// Extracts the feature window centered at `frame` with edge replication.
pub fn feature_window(features: &FrameFeatures, frame: usize, spec: &WindowSpec) -> Array2<f64> {
    let n = features.n_frames();
    let d = features.d_total();
    let w = spec.len();
    let mut out = Array2::<f64>::zeros((w, d));
    for (row, offset) in (-(spec.past_frames as isize)..=(spec.future_frames as isize)).enumerate() {
        let src = (frame as isize + offset).clamp(0, n as isize - 1) as usize;
        let values = features.row(src);
        for (c, v) in values.into_iter().enumerate() {
            out[[row, c]] = v;
        }
    }
    out
}

/// Builds one example per retained frame of one recording.
pub fn build_examples(
    recording_id: &str,
    speaker_id: &str,
    grid: &FrameGrid,
    features: &FrameFeatures,
    spec: &WindowSpec,
    tier: Tier,
    filter: FrameFilter,
) -> Result<Vec<Example>> {
    if grid.n_frames() != features.n_frames() {
        return Err(Error::LengthMismatch {
            recording_id: recording_id.to_string(),
            features: features.n_frames(),
            grid: grid.n_frames(),
        });
    }
    let mut out = Vec::new();
    for t in 0..grid.n_frames() {
        if filter == FrameFilter::GestureOnly && grid.existence[t] == 0 {
            continue;
        }
        out.push(Example {
            features: feature_window(features, t, spec),
            target: grid.tier_targets(tier, t),
            recording_id: recording_id.to_string(),
            speaker_id: speaker_id.to_string(),
            center_frame: t,
        });
    }
    Ok(out)
}

/// Speaker-disjoint cross-validation plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    /// One speaker set per fold; disjoint, jointly covering all speakers.
    pub folds: Vec<Vec<String>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Train/test example indices for one fold: test examples come from the
    /// fold's speakers, train examples from everyone else.
    pub fn split(&self, examples: &[Example], fold: usize) -> (Vec<usize>, Vec<usize>) {
        let test_speakers = &self.folds[fold];
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, ex) in examples.iter().enumerate() {
            if test_speakers.iter().any(|s| *s == ex.speaker_id) {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// Shuffles speakers by seed and deals them round-robin into `k` folds, so
/// fold sizes differ by at most one speaker.
pub fn plan_folds(speakers: &[String], k: usize, seed: u64) -> Result<FoldPlan> {
    let mut unique: Vec<String> = speakers.to_vec();
    unique.sort();
    unique.dedup();
    if k == 0 || k > unique.len() {
        return Err(Error::TooManyFolds { k, n_speakers: unique.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    unique.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (i, s) in unique.into_iter().enumerate() {
        folds[i % k].push(s);
    }
    Ok(FoldPlan { seed, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{rasterize, AnnotatedRecording, IntervalAnnotation};
    use ndarray::Array2 as A2;

    fn fixture(duration_s: f64) -> (FrameGrid, FrameFeatures) {
        let rec = AnnotatedRecording {
            recording_id: "r".into(),
            speaker_id: "s".into(),
            sample_rate_hz: 100,
            audio: vec![0.0; (duration_s * 100.0) as usize],
            words: vec![],
            annotations: vec![IntervalAnnotation {
                tier: Tier::Phase,
                label: "stroke".into(),
                start_s: 1.0,
                end_s: 3.4,
            }],
        };
        let grid = rasterize(&rec, 5.0);
        let n = grid.n_frames();
        let features = FrameFeatures {
            audio: A2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64),
            text: A2::from_shape_fn((n, 1), |(i, _)| i as f64 * 10.0),
            fps: 5.0,
        };
        (grid, features)
    }

    #[test]
    fn filter_all_yields_one_example_per_frame() {
        let (grid, features) = fixture(10.0);
        let spec = WindowSpec::default();
        let examples =
            build_examples("r", "s", &grid, &features, &spec, Tier::Existence, FrameFilter::All)
                .unwrap();
        assert_eq!(examples.len(), 50);
    }

    #[test]
    fn edge_replication_at_frame_zero() {
        let (grid, features) = fixture(10.0);
        let spec = WindowSpec { past_frames: 5, future_frames: 5 };
        let examples =
            build_examples("r", "s", &grid, &features, &spec, Tier::Existence, FrameFilter::All)
                .unwrap();
        let first = &examples[0].features;
        for row in 0..5 {
            for c in 0..3 {
                assert_eq!(first[[row, c]], first[[5, c]]);
            }
        }
    }

    #[test]
    fn gesture_only_keeps_gesturing_centers() {
        let (grid, features) = fixture(10.0);
        let expected = grid.n_gesture_frames();
        assert_eq!(expected, 12); // stroke 1.0..3.4 s at 5 fps
        let spec = WindowSpec::default();
        let examples = build_examples(
            "r",
            "s",
            &grid,
            &features,
            &spec,
            Tier::Phase,
            FrameFilter::GestureOnly,
        )
        .unwrap();
        assert_eq!(examples.len(), expected);
        for ex in &examples {
            assert_eq!(grid.existence[ex.center_frame], 1);
        }
    }

    #[test]
    fn length_mismatch_is_fatal() {
        let (grid, features) = fixture(10.0);
        let short = FrameFeatures {
            audio: features.audio.slice(ndarray::s![..10, ..]).to_owned(),
            text: features.text.slice(ndarray::s![..10, ..]).to_owned(),
            fps: 5.0,
        };
        let err = build_examples(
            "r",
            "s",
            &grid,
            &short,
            &WindowSpec::default(),
            Tier::Phase,
            FrameFilter::All,
        )
        .unwrap_err();
        assert!(err.to_string().contains('r'));
    }

    fn speakers(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("spk{i:02}")).collect()
    }

    #[test]
    fn twenty_folds_over_25_speakers() {
        let plan = plan_folds(&speakers(25), 20, 7).unwrap();
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        assert_eq!(sizes.iter().filter(|&&s| s == 2).count(), 5);
        assert_eq!(sizes.iter().filter(|&&s| s == 1).count(), 15);
    }

    #[test]
    fn folds_partition_speakers() {
        let all = speakers(11);
        let plan = plan_folds(&all, 4, 3).unwrap();
        let mut seen: Vec<String> = plan.folds.iter().flatten().cloned().collect();
        seen.sort();
        assert_eq!(seen, all);
    }

    #[test]
    fn single_fold_holds_everyone() {
        let plan = plan_folds(&speakers(5), 1, 0).unwrap();
        assert_eq!(plan.folds[0].len(), 5);
    }

    #[test]
    fn same_seed_same_plan() {
        let a = plan_folds(&speakers(25), 20, 7).unwrap();
        let b = plan_folds(&speakers(25), 20, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_many_folds_rejected() {
        assert!(matches!(
            plan_folds(&speakers(3), 4, 0),
            Err(Error::TooManyFolds { .. })
        ));
    }

    #[test]
    fn split_is_speaker_disjoint() {
        let (grid, features) = fixture(10.0);
        let mut examples = Vec::new();
        for s in ["a", "b", "c", "d"] {
            examples.extend(
                build_examples(
                    s,
                    s,
                    &grid,
                    &features,
                    &WindowSpec::default(),
                    Tier::Existence,
                    FrameFilter::All,
                )
                .unwrap(),
            );
        }
        let plan = plan_folds(
            &["a", "b", "c", "d"].map(String::from),
            2,
            1,
        )
        .unwrap();
        for fold in 0..2 {
            let (train, test) = plan.split(&examples, fold);
            assert_eq!(train.len() + test.len(), examples.len());
            for &i in &train {
                for &j in &test {
                    assert_ne!(examples[i].speaker_id, examples[j].speaker_id);
                }
            }
        }
    }

    #[test]
    fn example_count_independent_of_window() {
        let (grid, features) = fixture(10.0);
        for spec in [
            WindowSpec { past_frames: 0, future_frames: 0 },
            WindowSpec { past_frames: 3, future_frames: 9 },
            WindowSpec { past_frames: 20, future_frames: 20 },
        ] {
            let n = build_examples("r", "s", &grid, &features, &spec, Tier::Phase, FrameFilter::All)
                .unwrap()
                .len();
            assert_eq!(n, 50);
        }
    }
}
