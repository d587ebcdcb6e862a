//! Exact forward, inverse, likelihood and gradient of the coupling flow.

use std::f64::consts::TAU;

use super::params::{CouplingParams, FlowParams};
use crate::{Error, Result};

/// Conditioner outputs for one layer at one input.
struct LayerEval {
    /// tanh-squashed log scale per transformed dimension.
    log_s: Vec<f64>,
    shift: Vec<f64>,
    hidden: Vec<f64>,
    mlp_in: Vec<f64>,
}

fn conditioner(layer: &CouplingParams, pass: &[f64], cond: &[f64], bound: f64) -> LayerEval {
    let mlp_in: Vec<f64> = pass.iter().chain(cond.iter()).copied().collect();
    let hidden: Vec<f64> = layer
        .w1
        .rows()
        .into_iter()
        .zip(layer.b1.iter())
        .map(|(row, b)| {
            (row.iter().zip(&mlp_in).map(|(w, x)| w * x).sum::<f64>() + b).tanh()
        })
        .collect();
    let out: Vec<f64> = layer
        .w2
        .rows()
        .into_iter()
        .zip(layer.b2.iter())
        .map(|(row, b)| row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>() + b)
        .collect();
    let m = out.len() / 2;
    let log_s: Vec<f64> = out[..m].iter().map(|&r| bound * (r / bound).tanh()).collect();
    let shift = out[m..].to_vec();
    LayerEval { log_s, shift, hidden, mlp_in }
}

/// Maps a pose to its latent code with the exact log |det Jacobian|.
pub fn flow_forward(params: &FlowParams, x: &[f64], cond: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_dims(params, x, cond)?;
    let mut state = x.to_vec();
    let mut log_det = 0.0;
    for (i, layer) in params.layers.iter().enumerate() {
        let (pass_idx, trans_idx) = params.spec.layer_split(i);
        let pass: Vec<f64> = pass_idx.iter().map(|&j| state[j]).collect();
        let eval = conditioner(layer, &pass, cond, params.spec.log_scale_bound);
        for (k, &j) in trans_idx.iter().enumerate() {
            state[j] = state[j] * eval.log_s[k].exp() + eval.shift[k];
            log_det += eval.log_s[k];
        }
        if state.iter().any(|v| !v.is_finite()) || !log_det.is_finite() {
            return Err(Error::NumericalOverflow(i));
        }
    }
    Ok((state, log_det))
}

/// Exact algebraic inverse of [`flow_forward`].
pub fn flow_inverse(params: &FlowParams, z: &[f64], cond: &[f64]) -> Result<Vec<f64>> {
    check_dims(params, z, cond)?;
    let mut state = z.to_vec();
    for (i, layer) in params.layers.iter().enumerate().rev() {
        let (pass_idx, trans_idx) = params.spec.layer_split(i);
        let pass: Vec<f64> = pass_idx.iter().map(|&j| state[j]).collect();
        let eval = conditioner(layer, &pass, cond, params.spec.log_scale_bound);
        for (k, &j) in trans_idx.iter().enumerate() {
            state[j] = (state[j] - eval.shift[k]) * (-eval.log_s[k]).exp();
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalOverflow(i));
        }
    }
    Ok(state)
}

/// log p(x | c) under the flow: standard-normal base density of the latent
/// code plus the accumulated log-determinant.
pub fn log_likelihood(params: &FlowParams, x: &[f64], cond: &[f64]) -> Result<f64> {
    let (z, log_det) = flow_forward(params, x, cond)?;
    let d = params.spec.d_pose as f64;
    let base = -0.5 * z.iter().map(|v| v * v).sum::<f64>() - 0.5 * d * TAU.ln();
    Ok(base + log_det)
}

/// Mean negative log-likelihood of a batch plus its exact gradient in
/// [`FlowParams::flatten`] order.
pub fn nll_and_grad(
    params: &FlowParams,
    batch: &[(&[f64], &[f64])],
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("flow batch is empty"));
    }
    let mut grad = vec![0.0f64; params.n_params()];
    let scale = 1.0 / batch.len() as f64;
    let d = params.spec.d_pose as f64;
    let mut total = 0.0;

    for &(x, cond) in batch {
        check_dims(params, x, cond)?;
        // forward, caching per-layer inputs and conditioner state
        let mut state = x.to_vec();
        let mut evals: Vec<(Vec<f64>, LayerEval)> = Vec::with_capacity(params.layers.len());
        let mut log_det = 0.0;
        for (i, layer) in params.layers.iter().enumerate() {
            let (pass_idx, trans_idx) = params.spec.layer_split(i);
            let pass: Vec<f64> = pass_idx.iter().map(|&j| state[j]).collect();
            let eval = conditioner(layer, &pass, cond, params.spec.log_scale_bound);
            let q: Vec<f64> = trans_idx.iter().map(|&j| state[j]).collect();
            for (k, &j) in trans_idx.iter().enumerate() {
                state[j] = q[k] * eval.log_s[k].exp() + eval.shift[k];
                log_det += eval.log_s[k];
            }
            evals.push((q, eval));
        }
        let z = state;
        total += scale * (0.5 * z.iter().map(|v| v * v).sum::<f64>() + 0.5 * d * TAU.ln() - log_det);

        // backward
        let mut gstate: Vec<f64> = z.iter().map(|v| scale * v).collect();
        let dldet = -scale;
        let mut offset = params.n_params();
        for (i, layer) in params.layers.iter().enumerate().rev() {
            let n_layer =
                layer.w1.len() + layer.b1.len() + layer.w2.len() + layer.b2.len();
            offset -= n_layer;
            let (pass_idx, trans_idx) = params.spec.layer_split(i);
            let (q, eval) = &evals[i];
            let m = trans_idx.len();
            let bound = params.spec.log_scale_bound;

            let mut g_raw = vec![0.0f64; m];
            let mut g_shift = vec![0.0f64; m];
            let mut gq = vec![0.0f64; m];
            for k in 0..m {
                let gq_out = gstate[trans_idx[k]];
                let s = eval.log_s[k].exp();
                let g_ls = gq_out * q[k] * s + dldet;
                g_shift[k] = gq_out;
                gq[k] = gq_out * s;
                // d log_s / d raw for the tanh squash
                let th = eval.log_s[k] / bound;
                g_raw[k] = g_ls * (1.0 - th * th);
            }

            // second linear layer
            let g_out: Vec<f64> = g_raw.iter().chain(g_shift.iter()).copied().collect();
            let n_hidden = eval.hidden.len();
            let (off_w1, off_b1) = (offset, offset + layer.w1.len());
            let (off_w2, off_b2) =
                (off_b1 + layer.b1.len(), off_b1 + layer.b1.len() + layer.w2.len());
            let mut g_hidden = vec![0.0f64; n_hidden];
            for (r, &go) in g_out.iter().enumerate() {
                for h in 0..n_hidden {
                    grad[off_w2 + r * n_hidden + h] += go * eval.hidden[h];
                    g_hidden[h] += layer.w2[[r, h]] * go;
                }
                grad[off_b2 + r] += go;
            }

            // first linear layer through the tanh
            let d_in = eval.mlp_in.len();
            let mut g_in = vec![0.0f64; d_in];
            for h in 0..n_hidden {
                let ga = g_hidden[h] * (1.0 - eval.hidden[h] * eval.hidden[h]);
                for (iin, &xin) in eval.mlp_in.iter().enumerate() {
                    grad[off_w1 + h * d_in + iin] += ga * xin;
                    g_in[iin] += layer.w1[[h, iin]] * ga;
                }
                grad[off_b1 + h] += ga;
            }

            // reassemble the gradient wrt the layer input
            for (k, &j) in trans_idx.iter().enumerate() {
                gstate[j] = gq[k];
            }
            for (k, &j) in pass_idx.iter().enumerate() {
                gstate[j] += g_in[k];
            }
        }
    }
    Ok((total, grad))
}

fn check_dims(params: &FlowParams, x: &[f64], cond: &[f64]) -> Result<()> {
    if x.len() != params.spec.d_pose || cond.len() != params.spec.d_cond {
        return Err(Error::ShapeMismatch {
            expected: format!("pose {} cond {}", params.spec.d_pose, params.spec.d_cond),
            got: format!("pose {} cond {}", x.len(), cond.len()),
        });
    }
    Ok(())
}
