//! Forward pass and exact backprop for the dilated CNN.

use ndarray::{Array1, Array2};

use super::params::ModelParams;
use crate::windows::Example;
use crate::{Error, Result};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

struct Cache {
    /// Standardized input, T x d_in.
    xn: Array2<f64>,
    /// Block inputs: hs[0] is the projection output, hs[b+1] the output of
    /// block b.
    hs: Vec<Array2<f64>>,
    /// Pre-activation of each block.
    us: Vec<Array2<f64>>,
    logits: Vec<f64>,
}

fn check_shape(params: &ModelParams, window: &Array2<f64>) -> Result<()> {
    if window.ncols() != params.d_in {
        return Err(Error::ShapeMismatch {
            expected: format!("{} input columns", params.d_in),
            got: format!("{}", window.ncols()),
        });
    }
    params.spec.check_window(window.nrows())
}

fn forward_cached(params: &ModelParams, window: &Array2<f64>) -> Cache {
    let t_len = window.nrows();
    let c = params.spec.channels;
    let k = params.spec.kernel_size;
    let half_k = (k / 2) as isize;

    let mut xn = window.clone();
    for mut row in xn.rows_mut() {
        for (i, v) in row.iter_mut().enumerate() {
            *v = (*v - params.norm_mean[i]) / params.norm_std[i];
        }
    }

    let mut h = Array2::<f64>::zeros((t_len, c));
    for t in 0..t_len {
        for ch in 0..c {
            let mut acc = params.in_b[ch];
            for i in 0..params.d_in {
                acc += params.in_w[[ch, i]] * xn[[t, i]];
            }
            h[[t, ch]] = acc;
        }
    }

    let mut hs = vec![h];
    let mut us = Vec::with_capacity(params.blocks.len());
    for (blk, &dil) in params.blocks.iter().zip(&params.spec.dilations) {
        let h_in = hs.last().unwrap();
        let mut u = Array2::<f64>::zeros((t_len, c));
        for t in 0..t_len {
            for out in 0..c {
                let mut acc = blk.b[out];
                for j in 0..k {
                    let src = t as isize + (j as isize - half_k) * dil as isize;
                    if src < 0 || src >= t_len as isize {
                        continue;
                    }
                    for e in 0..c {
                        acc += blk.w[[out, e, j]] * h_in[[src as usize, e]];
                    }
                }
                u[[t, out]] = acc;
            }
        }
        let mut h_out = h_in.clone();
        for (ho, &uv) in h_out.iter_mut().zip(u.iter()) {
            *ho += uv.max(0.0);
        }
        us.push(u);
        hs.push(h_out);
    }

    let h_last = hs.last().unwrap();
    let mut g = Array1::<f64>::zeros(c);
    for t in 0..t_len {
        for ch in 0..c {
            g[ch] += h_last[[t, ch]];
        }
    }
    g /= t_len as f64;

    let logits: Vec<f64> = (0..params.n_labels())
        .map(|l| {
            params.head_b[l]
                + (0..c).map(|ch| params.head_w[[l, ch]] * g[ch]).sum::<f64>()
        })
        .collect();

    Cache { xn, hs, us, logits }
}

/// Per-label probabilities for one feature window. Labels are independent
/// logistic outputs, not a softmax.
pub fn forward(params: &ModelParams, window: &Array2<f64>) -> Result<Vec<f64>> {
    check_shape(params, window)?;
    Ok(forward_cached(params, window).logits.iter().map(|&o| sigmoid(o)).collect())
}

/// Mean weighted binary cross-entropy of a batch. `pos_weights` has one
/// positive-class weight per label.
pub fn batch_loss(params: &ModelParams, batch: &[&Example], pos_weights: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for ex in batch {
        check_shape(params, &ex.features)?;
        let cache = forward_cached(params, &ex.features);
        for (l, &o) in cache.logits.iter().enumerate() {
            let y = ex.target[l];
            total += pos_weights[l] * y * softplus(-o) + (1.0 - y) * softplus(o);
        }
    }
    Ok(total / (batch.len() * pos_weights.len()) as f64)
}

/// Loss plus the full analytic gradient in [`ModelParams::flatten`] order.
pub fn batch_loss_grad(
    params: &ModelParams,
    batch: &[&Example],
    pos_weights: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0f64; params.n_params()];
    let mut total = 0.0;
    let scale = 1.0 / (batch.len() * pos_weights.len()) as f64;
    for ex in batch {
        check_shape(params, &ex.features)?;
        let cache = forward_cached(params, &ex.features);
        let mut dlogits = vec![0.0f64; params.n_labels()];
        for (l, &o) in cache.logits.iter().enumerate() {
            let y = ex.target[l];
            total += pos_weights[l] * y * softplus(-o) + (1.0 - y) * softplus(o);
            dlogits[l] = scale * (-pos_weights[l] * y * sigmoid(-o) + (1.0 - y) * sigmoid(o));
        }
        backward(params, &cache, &dlogits, &mut grad);
    }
    Ok((total * scale, grad))
}

/// Accumulates one example's gradient into `grad` (flatten order).
fn backward(params: &ModelParams, cache: &Cache, dlogits: &[f64], grad: &mut [f64]) {
    let t_len = cache.xn.nrows();
    let c = params.spec.channels;
    let k = params.spec.kernel_size;
    let l_out = params.n_labels();
    let half_k = (k / 2) as isize;

    // flat layout offsets, matching ModelParams::flatten
    let off_in_w = 0;
    let off_in_b = off_in_w + c * params.d_in;
    let block_stride = c * c * k + c;
    let off_blocks = off_in_b + c;
    let off_head_w = off_blocks + params.blocks.len() * block_stride;
    let off_head_b = off_head_w + l_out * c;

    let h_last = cache.hs.last().unwrap();
    let mut g = vec![0.0f64; c];
    for t in 0..t_len {
        for ch in 0..c {
            g[ch] += h_last[[t, ch]];
        }
    }
    for v in &mut g {
        *v /= t_len as f64;
    }

    let mut dg = vec![0.0f64; c];
    for (l, &dl) in dlogits.iter().enumerate() {
        for ch in 0..c {
            grad[off_head_w + l * c + ch] += dl * g[ch];
            dg[ch] += params.head_w[[l, ch]] * dl;
        }
        grad[off_head_b + l] += dl;
    }

    let mut dh = Array2::<f64>::from_elem((t_len, c), 0.0);
    for t in 0..t_len {
        for ch in 0..c {
            dh[[t, ch]] = dg[ch] / t_len as f64;
        }
    }

    for b in (0..params.blocks.len()).rev() {
        let blk = &params.blocks[b];
        let dil = params.spec.dilations[b] as isize;
        let h_in = &cache.hs[b];
        let u = &cache.us[b];
        let base = off_blocks + b * block_stride;
        let mut dh_in = dh.clone(); // residual path
        for t in 0..t_len {
            for out in 0..c {
                if u[[t, out]] <= 0.0 {
                    continue;
                }
                let du = dh[[t, out]];
                grad[base + c * c * k + out] += du; // bias
                for j in 0..k {
                    let src = t as isize + (j as isize - half_k) * dil;
                    if src < 0 || src >= t_len as isize {
                        continue;
                    }
                    let src = src as usize;
                    for e in 0..c {
                        grad[base + (out * c + e) * k + j] += du * h_in[[src, e]];
                        dh_in[[src, e]] += blk.w[[out, e, j]] * du;
                    }
                }
            }
        }
        dh = dh_in;
    }

    for t in 0..t_len {
        for ch in 0..c {
            let d = dh[[t, ch]];
            if d == 0.0 {
                continue;
            }
            for i in 0..params.d_in {
                grad[off_in_w + ch * params.d_in + i] += d * cache.xn[[t, i]];
            }
            grad[off_in_b + ch] += d;
        }
    }
}
