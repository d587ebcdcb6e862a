//! Per-recording feature cache file: a length-prefixed JSON header followed
//! by a little-endian float32 payload, row-major, audio block then text block.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::FrameFeatures;
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct CacheHeader {
    n_frames: usize,
    d_audio: usize,
    d_text: usize,
    fps: f64,
    config_hash: String,
}

pub fn save_feature_cache(path: &Path, features: &FrameFeatures, config_hash: &str) -> Result<()> {
    let header = CacheHeader {
        n_frames: features.n_frames(),
        d_audio: features.d_audio(),
        d_text: features.d_text(),
        fps: features.fps,
        config_hash: config_hash.to_string(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&(header_bytes.len() as u32).to_le_bytes())
        .and_then(|_| f.write_all(&header_bytes))
        .map_err(|e| Error::io(path, e))?;
    for block in [&features.audio, &features.text] {
        for &v in block.iter() {
            f.write_all(&(v as f32).to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(())
}

/// Loads a cache file, checking the stored config hash when one is expected.
pub fn load_feature_cache(path: &Path, expected_hash: Option<&str>) -> Result<FrameFeatures> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 4 {
        return Err(Error::MalformedCheckpoint("feature cache too short".into()));
    }
    let header_len = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    let payload_at = 4 + header_len;
    if bytes.len() < payload_at {
        return Err(Error::MalformedCheckpoint("truncated feature cache header".into()));
    }
    let header: CacheHeader = serde_json::from_slice(&bytes[4..payload_at])?;
    if let Some(expected) = expected_hash {
        if header.config_hash != expected {
            return Err(Error::IncompatibleCheckpoint {
                expected: expected.to_string(),
                got: header.config_hash,
            });
        }
    }
    let n_audio = header.n_frames * header.d_audio;
    let n_text = header.n_frames * header.d_text;
    if bytes.len() != payload_at + 4 * (n_audio + n_text) {
        return Err(Error::MalformedCheckpoint(format!(
            "feature cache payload is {} bytes, expected {}",
            bytes.len() - payload_at,
            4 * (n_audio + n_text)
        )));
    }
    let mut values = bytes[payload_at..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
    let audio = Array2::from_shape_vec(
        (header.n_frames, header.d_audio),
        values.by_ref().take(n_audio).collect(),
    )
    .expect("shape checked");
    let text = Array2::from_shape_vec(
        (header.n_frames, header.d_text),
        values.collect(),
    )
    .expect("shape checked");
    Ok(FrameFeatures { audio, text, fps: header.fps })
}
