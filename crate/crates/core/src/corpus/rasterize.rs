//! Interval-to-frame rasterization.

use ndarray::Array2;

use super::schema::{GesturePropertySchema, N_PROPERTY_LABELS};
use super::types::{frame_count, AnnotatedRecording, FrameGrid};

/// Rasterizes interval annotations onto the frame grid.
///
/// Frame `t` covers `[t/fps, (t+1)/fps)`. A label is set on every frame its
/// interval overlaps by any positive duration, so even phases much shorter
/// than one frame are kept. Existence is the OR of the phase columns.
pub fn rasterize(recording: &AnnotatedRecording, fps: f64) -> FrameGrid {
    assert!(fps > 0.0, "fps must be positive");
    let n_frames = frame_count(recording.duration_s(), fps);
    let mut labels = Array2::<u8>::zeros((n_frames, N_PROPERTY_LABELS));
    let schema = GesturePropertySchema;

    for ann in &recording.annotations {
        let col = schema
            .column(ann.tier, &ann.label)
            .expect("validated recording has schema labels");
        // first frame whose span [t/fps, (t+1)/fps) has positive overlap
        let first = (ann.start_s * fps).floor() as usize;
        // exclusive end: an end_s exactly on a frame boundary does not reach
        // into the next frame, ceil leaves it unchanged there
        let last = (ann.end_s * fps).ceil() as usize;
        for t in first..last.min(n_frames) {
            labels[[t, col]] = 1;
        }
    }

    let existence = FrameGrid::derive_existence(&labels);
    FrameGrid { fps, labels, existence }
}
