//! Synthetic oracle corpora.
//!
//! Labels are planted so they are predictable from the features by
//! construction: the timeline is cut into fixed slots, each label is active
//! in a slot with its target prevalence, and an active label emits all three
//! of an interval annotation over the slot, a label-specific keyword token,
//! and a label-specific audio tone.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::schema::{GesturePropertySchema, N_PROPERTY_LABELS};
use super::types::{AnnotatedRecording, IntervalAnnotation, Word};
use crate::{Error, Result};

/// Slot length in seconds; a whole number of 5 fps frames.
pub const SLOT_SECONDS: f64 = 3.0;

/// One pure tone per property label, roughly centered on distinct mel bands
/// of the default 26-band front-end at 8 kHz.
pub const LABEL_TONES_HZ: [f64; N_PROPERTY_LABELS] = [
    127.0, 250.0, 390.0, 554.0, 741.0, 955.0, 1203.0, 1486.0, 1812.0, 2185.0, 2615.0, 3108.0,
    3678.0,
];

const TONE_AMPLITUDE: f32 = 0.1;
const KEYWORD_SECONDS: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    /// Target per-label slot activation probability (all-frames prevalence).
    pub prevalences: BTreeMap<String, f64>,
    pub n_recordings: usize,
    /// Duration per recording, ideally a multiple of [`SLOT_SECONDS`].
    pub duration_s: f64,
    pub seed: u64,
    pub sample_rate_hz: u32,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            prevalences: BTreeMap::new(),
            n_recordings: 1,
            duration_s: 60.0,
            seed: 0,
            sample_rate_hz: 8000,
        }
    }
}

impl SyntheticSpec {
    /// Relative label frequencies typical of annotated direction-giving
    /// dialogue, used as the default planting targets.
    pub fn reference_prevalences() -> BTreeMap<String, f64> {
        [
            ("deictic", 0.2905),
            ("beat", 0.1447),
            ("iconic", 0.7203),
            ("discourse", 0.1278),
            ("amount", 0.047),
            ("shape", 0.131),
            ("direction", 0.137),
            ("size", 0.019),
            ("preparation", 0.308),
            ("pre_stroke_hold", 0.006),
            ("stroke", 0.409),
            ("post_stroke_hold", 0.122),
            ("retraction", 0.148),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// Generates a corpus per the planting rule. Deterministic per seed.
pub fn make_synthetic_corpus(spec: &SyntheticSpec) -> Result<Vec<AnnotatedRecording>> {
    let schema = GesturePropertySchema;
    let flat = schema.property_labels();

    // per-column activation probability, zero when unspecified
    let mut probs = [0.0f64; N_PROPERTY_LABELS];
    for (label, &p) in &spec.prevalences {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::PrevalenceOutOfRange { label: label.clone(), value: p });
        }
        let col = flat
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel { tier: "any".into(), label: label.clone() })?;
        probs[col] = p;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sr = spec.sample_rate_hz;
    let n_samples = (spec.duration_s * sr as f64).round() as usize;
    let n_slots = (spec.duration_s / SLOT_SECONDS).floor() as usize;

    let mut corpus = Vec::with_capacity(spec.n_recordings);
    for r in 0..spec.n_recordings {
        let mut audio = vec![0.0f32; n_samples];
        let mut words = Vec::new();
        let mut annotations = Vec::new();

        for slot in 0..n_slots {
            let slot_start = slot as f64 * SLOT_SECONDS;
            for col in 0..N_PROPERTY_LABELS {
                if !rng.gen_bool(probs[col]) {
                    continue;
                }
                annotations.push(IntervalAnnotation {
                    tier: schema.tier_of_column(col),
                    label: flat[col].to_string(),
                    start_s: slot_start,
                    end_s: slot_start + SLOT_SECONDS,
                });
                // both boundaries use the same expression so consecutive
                // keywords abut exactly despite floating-point rounding
                words.push(Word {
                    token: format!("kw_{}", flat[col]),
                    start_s: slot_start + col as f64 * KEYWORD_SECONDS,
                    end_s: slot_start + (col + 1) as f64 * KEYWORD_SECONDS,
                });
                add_tone(
                    &mut audio,
                    sr,
                    LABEL_TONES_HZ[col],
                    slot_start,
                    slot_start + SLOT_SECONDS,
                );
            }
        }
        words.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        annotations.sort_by(|a, b| {
            a.start_s.total_cmp(&b.start_s).then_with(|| a.label.cmp(&b.label))
        });

        let rec = AnnotatedRecording {
            recording_id: format!("rec{r:03}"),
            speaker_id: format!("spk{r:03}"),
            sample_rate_hz: sr,
            audio,
            words,
            annotations,
        };
        debug_assert!(rec.validate().is_ok());
        corpus.push(rec);
    }
    Ok(corpus)
}

fn add_tone(audio: &mut [f32], sample_rate_hz: u32, freq_hz: f64, start_s: f64, end_s: f64) {
    let sr = sample_rate_hz as f64;
    let first = (start_s * sr).round() as usize;
    let last = ((end_s * sr).round() as usize).min(audio.len());
    for i in first..last {
        let t = i as f64 / sr;
        audio[i] += TONE_AMPLITUDE * (TAU * freq_hz * t).sin() as f32;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{prevalence, rasterize, PrevalenceScope};

    #[test]
    fn zero_prevalence_gives_silent_corpus() {
        let spec = SyntheticSpec {
            prevalences: [("stroke".to_string(), 0.0)].into_iter().collect(),
            duration_s: 30.0,
            ..SyntheticSpec::default()
        };
        let corpus = make_synthetic_corpus(&spec).unwrap();
        assert_eq!(corpus.len(), 1);
        assert!(corpus[0].annotations.is_empty());
        assert!(corpus[0].words.is_empty());
        assert!(corpus[0].audio.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn same_seed_gives_identical_corpora() {
        let spec = SyntheticSpec {
            prevalences: SyntheticSpec::reference_prevalences(),
            n_recordings: 2,
            duration_s: 30.0,
            seed: 42,
            ..SyntheticSpec::default()
        };
        let a = make_synthetic_corpus(&spec).unwrap();
        let b = make_synthetic_corpus(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_range_prevalence_rejected() {
        let spec = SyntheticSpec {
            prevalences: [("stroke".to_string(), 1.2)].into_iter().collect(),
            ..SyntheticSpec::default()
        };
        assert!(matches!(
            make_synthetic_corpus(&spec),
            Err(Error::PrevalenceOutOfRange { .. })
        ));
    }

    #[test]
    fn unknown_label_rejected() {
        let spec = SyntheticSpec {
            prevalences: [("gesture".to_string(), 0.5)].into_iter().collect(),
            ..SyntheticSpec::default()
        };
        assert!(make_synthetic_corpus(&spec).is_err());
    }

    #[test]
    fn measured_stroke_prevalence_tracks_target() {
        // Monte Carlo count at one hour of audio, target from observed data
        let spec = SyntheticSpec {
            prevalences: [("stroke".to_string(), 0.409)].into_iter().collect(),
            n_recordings: 6,
            duration_s: 600.0,
            seed: 3,
            ..SyntheticSpec::default()
        };
        let corpus = make_synthetic_corpus(&spec).unwrap();
        let grids: Vec<_> = corpus.iter().map(|r| rasterize(r, 5.0)).collect();
        let p = prevalence(&grids, PrevalenceScope::AllFrames).unwrap();
        assert!(
            (p["stroke"] - 0.409).abs() < 0.05,
            "measured {} vs target 0.409",
            p["stroke"]
        );
    }
}

