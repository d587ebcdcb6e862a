//! Speech features pooled onto the 5 fps frame grid: log-mel audio features
//! and frame-aligned text embeddings.

mod cache;
mod melspec;
mod pool;
mod text;

use ndarray::Array2;

use crate::corpus::AnnotatedRecording;
use crate::Result;

pub use cache::{load_feature_cache, save_feature_cache};
pub use melspec::{log_mel, mel_band_centers, mel_filterbank, AudioFeatureConfig};
pub use pool::pool_to_fps;
pub use text::{align_text, HashingEmbedder, TextEmbeddingProvider};

/// Frame-aligned features for one recording: one row per 5 fps frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures {
    pub audio: Array2<f64>,
    pub text: Array2<f64>,
    pub fps: f64,
}

impl FrameFeatures {
    pub fn n_frames(&self) -> usize {
        self.audio.nrows()
    }

    pub fn d_audio(&self) -> usize {
        self.audio.ncols()
    }

    pub fn d_text(&self) -> usize {
        self.text.ncols()
    }

    pub fn d_total(&self) -> usize {
        self.d_audio() + self.d_text()
    }

    /// Concatenated [audio | text] row for one frame.
    pub fn row(&self, frame: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.d_total());
        out.extend(self.audio.row(frame).iter());
        out.extend(self.text.row(frame).iter());
        out
    }
}

/// Full front-end for one recording: log-mel, pooling to fps, text alignment.
pub fn extract_features(
    recording: &AnnotatedRecording,
    config: &AudioFeatureConfig,
    provider: &dyn TextEmbeddingProvider,
    fps: f64,
) -> Result<FrameFeatures> {
    let spectral = log_mel(&recording.audio, config)?;
    let n_frames = (recording.duration_s() * fps).ceil() as usize;
    let audio = pool_to_fps(&spectral, config.hop_s, fps, n_frames);
    let text = align_text(&recording.words, provider, n_frames, fps)?;
    Ok(FrameFeatures { audio, text, fps })
}
