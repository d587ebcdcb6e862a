//! Prevalence statistics over rasterized grids.

use std::collections::BTreeMap;

use super::schema::GesturePropertySchema;
use super::types::FrameGrid;
use crate::{Error, Result};

/// Which frames enter the denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrevalenceScope {
    AllFrames,
    /// Restrict to frames with existence = 1.
    GestureFrames,
}

/// Fraction of frames on which each property label is positive, plus the
/// `gesture` existence label itself (always over all frames).
pub fn prevalence(
    corpus: &[FrameGrid],
    scope: PrevalenceScope,
) -> Result<BTreeMap<String, f64>> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("prevalence needs a non-empty corpus"));
    }
    let schema = GesturePropertySchema;
    let total_frames: usize = corpus.iter().map(FrameGrid::n_frames).sum();
    let gesture_frames: usize = corpus.iter().map(FrameGrid::n_gesture_frames).sum();
    let denom = match scope {
        PrevalenceScope::AllFrames => total_frames,
        PrevalenceScope::GestureFrames => gesture_frames,
    };
    if denom == 0 {
        return Err(Error::NoPositiveFrames);
    }

    let mut out = BTreeMap::new();
    for (col, label) in schema.property_labels().iter().enumerate() {
        let count: usize = corpus
            .iter()
            .map(|g| {
                (0..g.n_frames())
                    .filter(|&t| {
                        g.labels[[t, col]] == 1
                            && (scope == PrevalenceScope::AllFrames || g.existence[t] == 1)
                    })
                    .count()
            })
            .sum();
        out.insert((*label).to_string(), count as f64 / denom as f64);
    }
    out.insert("gesture".to_string(), gesture_frames as f64 / total_frames as f64);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{rasterize, AnnotatedRecording, IntervalAnnotation, Tier};

    fn grid_with(annotations: Vec<IntervalAnnotation>, duration_s: f64) -> FrameGrid {
        let rec = AnnotatedRecording {
            recording_id: "r".into(),
            speaker_id: "s".into(),
            sample_rate_hz: 100,
            audio: vec![0.0; (duration_s * 100.0) as usize],
            words: vec![],
            annotations,
        };
        rasterize(&rec, 5.0)
    }

    #[test]
    fn stroke_on_2_of_10_gesture_frames() {
        // preparation spans 2 s (10 frames, all gesturing), stroke covers 0.4 s
        let grid = grid_with(
            vec![
                IntervalAnnotation { tier: Tier::Phase, label: "preparation".into(), start_s: 0.0, end_s: 2.0 },
                IntervalAnnotation { tier: Tier::Phase, label: "stroke".into(), start_s: 0.0, end_s: 0.4 },
            ],
            4.0,
        );
        assert_eq!(grid.n_gesture_frames(), 10);
        let p = prevalence(&[grid], PrevalenceScope::GestureFrames).unwrap();
        assert_eq!(p["stroke"], 0.2);
        assert_eq!(p["preparation"], 1.0);
    }

    #[test]
    fn all_zero_corpus_under_all_frames() {
        let grid = grid_with(vec![], 2.0);
        let p = prevalence(&[grid], PrevalenceScope::AllFrames).unwrap();
        for label in GesturePropertySchema.property_labels() {
            assert_eq!(p[label], 0.0);
        }
        assert_eq!(p["gesture"], 0.0);
    }

    #[test]
    fn gesture_scope_without_gesture_frames_errors() {
        let grid = grid_with(vec![], 2.0);
        assert!(matches!(
            prevalence(&[grid], PrevalenceScope::GestureFrames),
            Err(Error::NoPositiveFrames)
        ));
    }

    #[test]
    fn all_frames_never_exceeds_gesture_frames_for_inside_labels() {
        // iconic only inside the gesture span
        let grid = grid_with(
            vec![
                IntervalAnnotation { tier: Tier::Phase, label: "stroke".into(), start_s: 1.0, end_s: 3.0 },
                IntervalAnnotation { tier: Tier::Category, label: "iconic".into(), start_s: 1.0, end_s: 2.0 },
            ],
            4.0,
        );
        let all = prevalence(std::slice::from_ref(&grid), PrevalenceScope::AllFrames).unwrap();
        let gest = prevalence(&[grid], PrevalenceScope::GestureFrames).unwrap();
        assert!(all["iconic"] <= gest["iconic"]);
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(prevalence(&[], PrevalenceScope::AllFrames).is_err());
    }
}
