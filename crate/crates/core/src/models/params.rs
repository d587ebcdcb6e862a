//! Classifier architecture spec and parameter container.

use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Tier;
use crate::{Error, Result};

/// Dilated temporal CNN: input projection, residual dilated conv blocks with
/// a rectifier, then global average over time into an affine head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilatedConvSpec {
    pub channels: usize,
    pub kernel_size: usize,
    /// One dilation per block.
    pub dilations: Vec<usize>,
}

impl Default for DilatedConvSpec {
    fn default() -> Self {
        DilatedConvSpec { channels: 64, kernel_size: 3, dilations: vec![1, 2, 4] }
    }
}

impl DilatedConvSpec {
    pub fn n_blocks(&self) -> usize {
        self.dilations.len()
    }

    /// 1 + sum of (kernel-1) * dilation over blocks.
    pub fn receptive_field(&self) -> usize {
        1 + self.dilations.iter().map(|d| (self.kernel_size - 1) * d).sum::<usize>()
    }

    pub fn check_window(&self, window_frames: usize) -> Result<()> {
        if self.receptive_field() > window_frames {
            return Err(Error::WindowTooSmall {
                receptive_field: self.receptive_field(),
                window: window_frames,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    /// out_channel x in_channel x kernel tap.
    pub w: Array3<f64>,
    pub b: Array1<f64>,
}

/// All weights of one classifier, plus the frozen input standardization
/// computed on its training set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub spec: DilatedConvSpec,
    pub tier: Tier,
    pub labels: Vec<String>,
    pub d_in: usize,
    pub norm_mean: Array1<f64>,
    pub norm_std: Array1<f64>,
    pub in_w: Array2<f64>,
    pub in_b: Array1<f64>,
    pub blocks: Vec<BlockParams>,
    pub head_w: Array2<f64>,
    pub head_b: Array1<f64>,
}

/// Fan-in-scaled uniform initialization, deterministic per seed.
pub fn init_model(
    spec: &DilatedConvSpec,
    tier: Tier,
    labels: &[String],
    d_in: usize,
    seed: u64,
) -> ModelParams {
    assert!(d_in >= 1 && !labels.is_empty());
    let c = spec.channels;
    let k = spec.kernel_size;
    let l = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = |fan_in: usize| {
        let a = 1.0 / (fan_in as f64).sqrt();
        move |rng: &mut ChaCha8Rng| rng.gen_range(-a..a)
    };

    let f = uniform(d_in);
    let in_w = Array2::from_shape_fn((c, d_in), |_| f(&mut rng));
    let f = uniform(c * k);
    let blocks = (0..spec.n_blocks())
        .map(|_| BlockParams {
            w: Array3::from_shape_fn((c, c, k), |_| f(&mut rng)),
            b: Array1::zeros(c),
        })
        .collect();
    let f = uniform(c);
    let head_w = Array2::from_shape_fn((l, c), |_| f(&mut rng));

    ModelParams {
        spec: spec.clone(),
        tier,
        labels: labels.to_vec(),
        d_in,
        norm_mean: Array1::zeros(d_in),
        norm_std: Array1::ones(d_in),
        in_w,
        in_b: Array1::zeros(c),
        blocks,
        head_w,
        head_b: Array1::zeros(l),
    }
}

impl ModelParams {
    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    /// Hash binding a checkpoint to its architecture and label set.
    pub fn spec_hash(&self) -> String {
        let doc = serde_json::json!({
            "spec": self.spec,
            "tier": self.tier,
            "labels": self.labels,
            "d_in": self.d_in,
        });
        let digest = Sha256::digest(doc.to_string().as_bytes());
        hex_prefix(&digest)
    }

    /// Trainable parameters in a fixed order (standardization excluded).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend(self.in_w.iter());
        out.extend(self.in_b.iter());
        for blk in &self.blocks {
            out.extend(blk.w.iter());
            out.extend(blk.b.iter());
        }
        out.extend(self.head_w.iter());
        out.extend(self.head_b.iter());
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for v in self.in_w.iter_mut().chain(self.in_b.iter_mut()) {
            *v = it.next().expect("flat vector too short");
        }
        for blk in &mut self.blocks {
            for v in blk.w.iter_mut().chain(blk.b.iter_mut()) {
                *v = it.next().expect("flat vector too short");
            }
        }
        for v in self.head_w.iter_mut().chain(self.head_b.iter_mut()) {
            *v = it.next().expect("flat vector too short");
        }
        assert!(it.next().is_none(), "flat vector too long");
    }

    pub fn n_params(&self) -> usize {
        let c = self.spec.channels;
        let k = self.spec.kernel_size;
        c * self.d_in
            + c
            + self.spec.n_blocks() * (c * c * k + c)
            + self.n_labels() * c
            + self.n_labels()
    }
}

pub(crate) fn hex_prefix(digest: &[u8]) -> String {
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
