//! Text embedding provider interface and frame alignment.

use ndarray::Array2;

use crate::corpus::Word;
use crate::{Error, Result};

/// Per-token embedding source. Implementations must be deterministic for a
/// fixed provider state and return exactly one vector per token. A contextual
/// transformer model can be plugged in here; the shipped
/// [`HashingEmbedder`] keeps the pipeline runnable offline.
pub trait TextEmbeddingProvider {
    fn dim(&self) -> usize;

    fn embed(&self, tokens: &[&str]) -> Result<Vec<Vec<f64>>>;
}

/// Deterministic hashing bag-of-character-n-grams embedder.
///
/// Each token's character trigrams (with boundary markers) are hashed with
/// FNV-1a into `dim` signed buckets and the result is L2-normalized. The hash
/// is fixed here rather than taken from the standard library so vectors are
/// identical across processes and toolchain versions.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dim: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder { dim: 32 }
    }
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        HashingEmbedder { dim }
    }

    fn embed_token(&self, token: &str) -> Vec<f64> {
        let mut v = vec![0.0f64; self.dim];
        let chars: Vec<char> = std::iter::once('^')
            .chain(token.chars())
            .chain(std::iter::once('$'))
            .collect();
        if chars.len() < 3 {
            return v;
        }
        for gram in chars.windows(3) {
            let mut h = fnv1a64_seed();
            for ch in gram {
                let mut buf = [0u8; 4];
                for b in ch.encode_utf8(&mut buf).as_bytes() {
                    h = fnv1a64_step(h, *b);
                }
            }
            let bucket = (h % self.dim as u64) as usize;
            let sign = if (h >> 32) & 1 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        v
    }
}

const fn fnv1a64_seed() -> u64 {
    0xcbf29ce484222325
}

const fn fnv1a64_step(h: u64, byte: u8) -> u64 {
    (h ^ byte as u64).wrapping_mul(0x100000001b3)
}

impl TextEmbeddingProvider for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, tokens: &[&str]) -> Result<Vec<Vec<f64>>> {
        Ok(tokens.iter().map(|t| self.embed_token(t)).collect())
    }
}

/// Assigns each frame the embedding of the token covering the frame center;
/// uncovered frames get the zero vector, overlaps resolve to the
/// later-starting token.
pub fn align_text(
    words: &[Word],
    provider: &dyn TextEmbeddingProvider,
    n_frames: usize,
    fps: f64,
) -> Result<Array2<f64>> {
    let tokens: Vec<&str> = words.iter().map(|w| w.token.as_str()).collect();
    let embeddings = provider.embed(&tokens).map_err(|e| Error::EmbeddingFailed {
        token_index: 0,
        message: e.to_string(),
    })?;
    if embeddings.len() != tokens.len() {
        return Err(Error::EmbeddingFailed {
            token_index: embeddings.len(),
            message: format!("provider returned {} vectors for {} tokens", embeddings.len(), tokens.len()),
        });
    }

    let mut out = Array2::<f64>::zeros((n_frames, provider.dim()));
    for t in 0..n_frames {
        let center = (t as f64 + 0.5) / fps;
        let mut chosen: Option<usize> = None;
        for (i, w) in words.iter().enumerate() {
            if w.start_s <= center && center < w.end_s {
                // later-starting token wins on overlap
                if chosen.is_none_or(|c| words[c].start_s <= w.start_s) {
                    chosen = Some(i);
                }
            }
        }
        if let Some(i) = chosen {
            for (c, &v) in embeddings[i].iter().enumerate() {
                out[[t, c]] = v;
            }
        }
    }
    Ok(out)
}
