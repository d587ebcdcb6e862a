//! Log-scaled mel-spectrogram front-end.

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioFeatureConfig {
    pub sample_rate_hz: u32,
    pub window_length_s: f64,
    pub hop_s: f64,
    pub n_mels: usize,
    pub fmin_hz: f64,
    /// Defaults to Nyquist when `None`.
    pub fmax_hz: Option<f64>,
    pub log_floor: f64,
}

impl AudioFeatureConfig {
    pub fn new(sample_rate_hz: u32) -> Self {
        AudioFeatureConfig {
            sample_rate_hz,
            window_length_s: 0.025,
            hop_s: 0.010,
            n_mels: 26,
            fmin_hz: 20.0,
            fmax_hz: None,
            log_floor: 1e-10,
        }
    }

    pub fn window_samples(&self) -> usize {
        (self.window_length_s * self.sample_rate_hz as f64).round() as usize
    }

    pub fn hop_samples(&self) -> usize {
        (self.hop_s * self.sample_rate_hz as f64).round() as usize
    }

    pub fn fmax(&self) -> f64 {
        self.fmax_hz.unwrap_or(self.sample_rate_hz as f64 / 2.0)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.hop_s > 0.0
            && self.hop_s <= self.window_length_s
            && self.n_mels >= 1
            && self.fmin_hz < self.fmax()
            && self.fmax() <= self.sample_rate_hz as f64 / 2.0;
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: "0 < hop <= window, fmin < fmax <= Nyquist, n_mels >= 1".into(),
                got: format!("{self:?}"),
            })
        }
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filterbank, n_mels x (n_fft/2 + 1), filters equally spaced
/// on the mel scale over [fmin, fmax].
pub fn mel_filterbank(config: &AudioFeatureConfig, n_fft: usize) -> Array2<f64> {
    let n_bins = n_fft / 2 + 1;
    let sr = config.sample_rate_hz as f64;
    let mel_lo = hz_to_mel(config.fmin_hz);
    let mel_hi = hz_to_mel(config.fmax());
    let edges: Vec<f64> = (0..config.n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (config.n_mels + 1) as f64))
        .collect();

    let mut fb = Array2::<f64>::zeros((config.n_mels, n_bins));
    for m in 0..config.n_mels {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for bin in 0..n_bins {
            let f = bin as f64 * sr / n_fft as f64;
            let w = if f >= lo && f <= center {
                (f - lo) / (center - lo)
            } else if f > center && f <= hi {
                (hi - f) / (hi - center)
            } else {
                0.0
            };
            fb[[m, bin]] = w;
        }
    }
    fb
}

/// Mel band center frequencies in Hz, useful for placing test tones.
pub fn mel_band_centers(config: &AudioFeatureConfig) -> Vec<f64> {
    let mel_lo = hz_to_mel(config.fmin_hz);
    let mel_hi = hz_to_mel(config.fmax());
    (1..=config.n_mels)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (config.n_mels + 1) as f64))
        .collect()
}

/// Log-mel spectrogram: Hann-windowed power spectrum through the mel
/// filterbank, floored before the log. Frame count is
/// `1 + floor((n_samples - window) / hop)`.
pub fn log_mel(audio: &[f32], config: &AudioFeatureConfig) -> Result<Array2<f64>> {
    config.validate()?;
    let window = config.window_samples();
    let hop = config.hop_samples();
    if audio.len() < window {
        return Err(Error::AudioTooShort { n_samples: audio.len(), window });
    }
    let n_frames = 1 + (audio.len() - window) / hop;
    let n_fft = window.next_power_of_two();
    let n_bins = n_fft / 2 + 1;

    let hann: Vec<f64> = (0..window)
        .map(|i| {
            0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / (window as f64 - 1.0)).cos()
        })
        .collect();
    let fb = mel_filterbank(config, n_fft);

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut out = Array2::<f64>::zeros((n_frames, config.n_mels));
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut power = vec![0.0f64; n_bins];

    for t in 0..n_frames {
        let start = t * hop;
        for i in 0..n_fft {
            let v = if i < window { audio[start + i] as f64 * hann[i] } else { 0.0 };
            buf[i] = Complex::new(v, 0.0);
        }
        fft.process(&mut buf);
        for (bin, p) in power.iter_mut().enumerate() {
            *p = buf[bin].norm_sqr();
        }
        for m in 0..config.n_mels {
            let energy: f64 = fb.row(m).iter().zip(&power).map(|(w, p)| w * p).sum();
            out[[t, m]] = energy.max(config.log_floor).ln();
        }
    }
    Ok(out)
}
