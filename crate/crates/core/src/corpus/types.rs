//! Corpus value types: annotated recordings and rasterized frame grids.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::schema::{GesturePropertySchema, Tier};
use crate::{Error, Result};

/// One interval annotation on a property tier, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalAnnotation {
    pub tier: Tier,
    pub label: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// One transcript token with word-level timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Word {
    pub token: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// One speaker's audio, timestamped transcript and interval annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedRecording {
    pub recording_id: String,
    pub speaker_id: String,
    pub sample_rate_hz: u32,
    pub audio: Vec<f32>,
    pub words: Vec<Word>,
    pub annotations: Vec<IntervalAnnotation>,
}

impl AnnotatedRecording {
    pub fn duration_s(&self) -> f64 {
        self.audio.len() as f64 / self.sample_rate_hz as f64
    }

    /// Checks all structural invariants, returning the first violation.
    pub fn validate(&self) -> Result<()> {
        let schema = GesturePropertySchema;
        let fail = |message: String| Error::InvalidRecord {
            recording_id: self.recording_id.clone(),
            message,
        };
        if self.sample_rate_hz == 0 {
            return Err(fail("sample_rate_hz must be positive".into()));
        }
        let duration = self.duration_s();
        for (i, w) in self.words.iter().enumerate() {
            if !(w.start_s < w.end_s) {
                return Err(fail(format!(
                    "negative-length interval: word {i} ({:?}) has start_s {} >= end_s {}",
                    w.token, w.start_s, w.end_s
                )));
            }
            if i > 0 && w.start_s < self.words[i - 1].end_s {
                return Err(fail(format!(
                    "word intervals overlap or are unsorted at index {i}"
                )));
            }
        }
        for (i, a) in self.annotations.iter().enumerate() {
            if !(a.start_s >= 0.0 && a.start_s < a.end_s) {
                return Err(fail(format!(
                    "negative-length interval: annotation {i} ({}/{}) has start_s {} >= end_s {}",
                    a.tier, a.label, a.start_s, a.end_s
                )));
            }
            if a.end_s > duration + 1e-9 {
                return Err(fail(format!(
                    "annotation {i} ends at {} s, past audio duration {duration} s",
                    a.end_s
                )));
            }
            schema.column(a.tier, &a.label)?;
        }
        Ok(())
    }
}

/// Per-frame binary labels on the 5 fps grid. `labels` has one column per
/// property label (flat schema order); `existence` is derived as the OR of
/// the phase columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGrid {
    pub fps: f64,
    /// n_frames x 13 binary matrix.
    pub labels: Array2<u8>,
    /// n_frames binary vector; 1 iff any phase label is 1.
    pub existence: Vec<u8>,
}

impl FrameGrid {
    pub fn n_frames(&self) -> usize {
        self.labels.nrows()
    }

    pub fn n_gesture_frames(&self) -> usize {
        self.existence.iter().filter(|&&e| e == 1).count()
    }

    /// Recomputes the existence vector from the phase columns.
    pub(crate) fn derive_existence(labels: &Array2<u8>) -> Vec<u8> {
        let phase = GesturePropertySchema.tier_range(Tier::Phase);
        (0..labels.nrows())
            .map(|t| u8::from(phase.clone().any(|c| labels[[t, c]] == 1)))
            .collect()
    }

    /// Target vector for one frame restricted to a tier. Existence yields a
    /// single element.
    pub fn tier_targets(&self, tier: Tier, frame: usize) -> Vec<f64> {
        match tier {
            Tier::Existence => vec![f64::from(self.existence[frame])],
            _ => GesturePropertySchema
                .tier_range(tier)
                .map(|c| f64::from(self.labels[[frame, c]]))
                .collect(),
        }
    }
}

/// Frame count covering `duration_s` at `fps`.
pub(crate) fn frame_count(duration_s: f64, fps: f64) -> usize {
    (duration_s * fps).ceil() as usize
}
