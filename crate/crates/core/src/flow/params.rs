//! Flow architecture spec and parameters.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub d_pose: usize,
    /// Conditioning vector length: d_audio + d_text + 13 property bits.
    pub d_cond: usize,
    pub n_layers: usize,
    /// Hidden width of each 2-layer conditioner network.
    pub hidden: usize,
    /// |log s| stays within this bound via a tanh squash.
    pub log_scale_bound: f64,
}

impl FlowSpec {
    pub fn new(d_pose: usize, d_cond: usize) -> Self {
        FlowSpec { d_pose, d_cond, n_layers: 6, hidden: 32, log_scale_bound: 5.0 }
    }

    /// Split point: even layers pass `[0, mid)` and transform the rest, odd
    /// layers swap roles, so every dimension is transformed when
    /// `n_layers >= 2`.
    pub fn mid(&self) -> usize {
        self.d_pose / 2
    }

    pub fn layer_split(&self, layer: usize) -> (Vec<usize>, Vec<usize>) {
        let mid = self.mid();
        let first: Vec<usize> = (0..mid).collect();
        let second: Vec<usize> = (mid..self.d_pose).collect();
        if layer % 2 == 0 {
            (first, second)
        } else {
            (second, first)
        }
    }
}

/// One coupling layer's conditioner: a 2-layer tanh MLP from
/// [pass-through half, conditioning vector] to [raw log-scale, shift].
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    pub spec: FlowSpec,
    pub layers: Vec<CouplingParams>,
}

/// Initializes a flow at the identity: the first conditioner layer is
/// random, the output layer is zero, so scale = 1 and shift = 0 everywhere.
pub fn init_flow(spec: &FlowSpec, seed: u64) -> FlowParams {
    assert!(spec.d_pose >= 2, "flow needs at least two pose dimensions");
    assert!(spec.n_layers >= 2, "every dimension must be transformed at least once");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = (0..spec.n_layers)
        .map(|layer| {
            let (pass, trans) = spec.layer_split(layer);
            let d_in = pass.len() + spec.d_cond;
            let a = 1.0 / (d_in as f64).sqrt();
            CouplingParams {
                w1: Array2::from_shape_fn((spec.hidden, d_in), |_| rng.gen_range(-a..a)),
                b1: Array1::zeros(spec.hidden),
                w2: Array2::zeros((2 * trans.len(), spec.hidden)),
                b2: Array1::zeros(2 * trans.len()),
            }
        })
        .collect();
    FlowParams { spec: spec.clone(), layers }
}

impl FlowParams {
    pub fn spec_hash(&self) -> String {
        let doc = serde_json::json!({ "spec": self.spec });
        let digest = Sha256::digest(doc.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(layer.w1.iter());
            out.extend(layer.b1.iter());
            out.extend(layer.w2.iter());
            out.extend(layer.b2.iter());
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for layer in &mut self.layers {
            for v in layer
                .w1
                .iter_mut()
                .chain(layer.b1.iter_mut())
                .chain(layer.w2.iter_mut())
                .chain(layer.b2.iter_mut())
            {
                *v = it.next().expect("flat vector too short");
            }
        }
        assert!(it.next().is_none(), "flat vector too long");
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.w1.len() + l.b1.len() + l.w2.len() + l.b2.len())
            .sum()
    }
}
