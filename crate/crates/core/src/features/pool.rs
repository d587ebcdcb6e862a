//! Pooling of spectral frames onto the 5 fps grid.

use ndarray::Array2;

/// Mean-pools spectral frames into `n_out` bins of width `1/fps` seconds.
/// Spectral frame `i` counts toward the bin containing its center
/// `(i + 0.5) * spec_hop_s`; empty bins copy the nearest non-empty bin.
pub fn pool_to_fps(
    spectral: &Array2<f64>,
    spec_hop_s: f64,
    fps: f64,
    n_out: usize,
) -> Array2<f64> {
    assert!(fps > 0.0 && spec_hop_s > 0.0);
    assert!(fps * spec_hop_s <= 1.0, "pooling requires fps * spec_hop_s <= 1");
    let d = spectral.ncols();
    let mut out = Array2::<f64>::zeros((n_out, d));
    let mut counts = vec![0usize; n_out];

    for i in 0..spectral.nrows() {
        let center = (i as f64 + 0.5) * spec_hop_s;
        let bin = (center * fps).floor() as usize;
        if bin >= n_out {
            continue;
        }
        counts[bin] += 1;
        for c in 0..d {
            out[[bin, c]] += spectral[[i, c]];
        }
    }
    for (bin, &n) in counts.iter().enumerate() {
        if n > 0 {
            for c in 0..d {
                out[[bin, c]] /= n as f64;
            }
        }
    }
    // empty bins copy the nearest filled bin (ties go to the earlier one)
    let filled: Vec<usize> = counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(b, _)| b)
        .collect();
    if !filled.is_empty() {
        for bin in 0..n_out {
            if counts[bin] == 0 {
                let nearest = *filled
                    .iter()
                    .min_by_key(|&&f| (f as isize - bin as isize).unsigned_abs())
                    .unwrap();
                let src = out.row(nearest).to_owned();
                out.row_mut(bin).assign(&src);
            }
        }
    }
    out
}
