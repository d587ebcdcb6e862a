//! Flow training (Adam on the exact NLL gradient) and conditional sampling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::coupling::{flow_inverse, nll_and_grad};
use super::params::{init_flow, FlowParams, FlowSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub patience: usize,
    pub val_fraction: f64,
}

impl Default for FlowTrainConfig {
    fn default() -> Self {
        FlowTrainConfig {
            epochs: 40,
            batch_size: 64,
            learning_rate: 1e-2,
            seed: 0,
            patience: 8,
            val_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowEpochLog {
    pub epoch: usize,
    pub train_nll: f64,
    pub val_nll: f64,
    pub best_so_far: bool,
}

/// Fits the flow to (pose, conditioning) pairs. Optimization is Adam with a
/// fixed step; the returned parameters are the ones with the lowest
/// validation NLL seen.
pub fn train_flow(
    spec: &FlowSpec,
    data: &[(Vec<f64>, Vec<f64>)],
    config: &FlowTrainConfig,
) -> Result<(FlowParams, Vec<FlowEpochLog>)> {
    if data.is_empty() {
        return Err(Error::EmptyInput("no training pairs for the flow"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((data.len() as f64) * config.val_fraction).floor() as usize;
    let (val_idx, train_idx) = order.split_at(n_val);
    let train_idx: Vec<usize> = train_idx.to_vec();
    // with too little data to hold anything out, validate on the train set
    let val_idx: Vec<usize> =
        if val_idx.is_empty() { train_idx.clone() } else { val_idx.to_vec() };

    let mut params = init_flow(spec, config.seed);
    let mut best = params.clone();
    let mut best_val = f64::INFINITY;
    let mut since_improvement = 0usize;
    let mut logs = Vec::with_capacity(config.epochs);

    // Adam state
    let n = params.n_params();
    let (mut m, mut v) = (vec![0.0f64; n], vec![0.0f64; n]);
    let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut step = 0usize;

    let mut shuffled = train_idx.clone();
    for epoch in 0..config.epochs {
        shuffled.shuffle(&mut rng);
        let mut epoch_nll = 0.0;
        let mut n_batches = 0usize;
        for chunk in shuffled.chunks(config.batch_size.max(1)) {
            let batch: Vec<(&[f64], &[f64])> = chunk
                .iter()
                .map(|&i| (data[i].0.as_slice(), data[i].1.as_slice()))
                .collect();
            let (nll, grad) = nll_and_grad(&params, &batch)?;
            if !nll.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            epoch_nll += nll;
            n_batches += 1;

            step += 1;
            let mut flat = params.flatten();
            let bc1 = 1.0 - beta1.powi(step as i32);
            let bc2 = 1.0 - beta2.powi(step as i32);
            for i in 0..n {
                m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
                flat[i] -= config.learning_rate * (m[i] / bc1) / ((v[i] / bc2).sqrt() + eps);
            }
            params.set_flat(&flat);
        }
        let train_nll = epoch_nll / n_batches.max(1) as f64;

        let val_batch: Vec<(&[f64], &[f64])> = val_idx
            .iter()
            .map(|&i| (data[i].0.as_slice(), data[i].1.as_slice()))
            .collect();
        let (val_nll, _) = nll_and_grad(&params, &val_batch)?;
        if !val_nll.is_finite() {
            return Err(Error::Diverged { epoch });
        }

        let improved = val_nll < best_val;
        if val_nll <= best_val {
            best_val = val_nll;
            best = params.clone();
        }
        if improved {
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        logs.push(FlowEpochLog { epoch, train_nll, val_nll, best_so_far: improved });
        if since_improvement > config.patience {
            break;
        }
    }
    Ok((best, logs))
}

/// Draws `n` pose vectors for one conditioning vector by pushing standard
/// normal noise through the inverse flow.
pub fn sample(params: &FlowParams, cond: &[f64], n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..params.spec.d_pose)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            flow_inverse(params, &z, cond)
        })
        .collect()
}
