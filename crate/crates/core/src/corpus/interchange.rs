//! Corpus interchange format.
//!
//! A corpus directory holds `manifest.json` plus three files per recording:
//!
//! - `<id>.audio.raw`: little-endian float32 mono PCM, sample rate in the
//!   manifest entry;
//! - `<id>.words.jsonl`: one JSON object per line with `token`, `start_s`,
//!   `end_s`;
//! - `<id>.annotations.jsonl`: one JSON object per line with `tier_name`,
//!   `label`, `start_s`, `end_s`.
//!
//! All times are seconds as decimal numbers. A missing manifest is fatal;
//! malformed recordings are skipped and reported per record.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::schema::Tier;
use super::types::{AnnotatedRecording, IntervalAnnotation, Word};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub fps_default: f64,
    pub recordings: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub recording_id: String,
    pub speaker_id: String,
    pub sample_rate_hz: u32,
}

/// One recoverable per-record load failure.
#[derive(Debug, Clone, Serialize)]
pub struct RecordIssue {
    pub recording_id: String,
    pub message: String,
}

/// Result of loading a corpus directory: parsed recordings sorted by
/// recording_id, plus per-record diagnostics for the ones that failed.
#[derive(Debug)]
pub struct CorpusLoad {
    pub manifest: Manifest,
    pub recordings: Vec<AnnotatedRecording>,
    pub issues: Vec<RecordIssue>,
}

#[derive(Debug, Deserialize)]
struct WordLine {
    token: String,
    start_s: f64,
    end_s: f64,
}

#[derive(Debug, Deserialize)]
struct AnnotationLine {
    tier_name: String,
    label: String,
    start_s: f64,
    end_s: f64,
}

pub fn load_corpus(dir: &Path) -> Result<CorpusLoad> {
    let manifest_path = dir.join("manifest.json");
    let manifest_text = fs::read_to_string(&manifest_path)
        .map_err(|_| Error::MissingManifest(manifest_path.clone()))?;
    let manifest: Manifest = serde_json::from_str(&manifest_text)?;

    let mut recordings = Vec::new();
    let mut issues = Vec::new();
    for entry in &manifest.recordings {
        match load_recording(dir, entry) {
            Ok(rec) => recordings.push(rec),
            Err(e) => issues.push(RecordIssue {
                recording_id: entry.recording_id.clone(),
                message: e.to_string(),
            }),
        }
    }
    recordings.sort_by(|a, b| a.recording_id.cmp(&b.recording_id));
    Ok(CorpusLoad { manifest, recordings, issues })
}

fn load_recording(dir: &Path, entry: &ManifestEntry) -> Result<AnnotatedRecording> {
    let id = &entry.recording_id;
    let audio = read_f32_le(&dir.join(format!("{id}.audio.raw")))?;

    let words_path = dir.join(format!("{id}.words.jsonl"));
    let words = read_jsonl::<WordLine>(&words_path)?
        .into_iter()
        .map(|w| Word { token: w.token, start_s: w.start_s, end_s: w.end_s })
        .collect();

    let ann_path = dir.join(format!("{id}.annotations.jsonl"));
    let annotations = read_jsonl::<AnnotationLine>(&ann_path)?
        .into_iter()
        .map(|a| {
            Ok(IntervalAnnotation {
                tier: Tier::parse(&a.tier_name)?,
                label: a.label,
                start_s: a.start_s,
                end_s: a.end_s,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rec = AnnotatedRecording {
        recording_id: id.clone(),
        speaker_id: entry.speaker_id.clone(),
        sample_rate_hz: entry.sample_rate_hz,
        audio,
        words,
        annotations,
    };
    rec.validate()?;
    Ok(rec)
}

/// Writes recordings plus a manifest to `dir`, creating it if needed.
pub fn save_corpus(dir: &Path, recordings: &[AnnotatedRecording], fps_default: f64) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        fps_default,
        recordings: recordings
            .iter()
            .map(|r| ManifestEntry {
                recording_id: r.recording_id.clone(),
                speaker_id: r.speaker_id.clone(),
                sample_rate_hz: r.sample_rate_hz,
            })
            .collect(),
    };
    write_atomic(
        &dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;

    for rec in recordings {
        let id = &rec.recording_id;
        let mut audio_bytes = Vec::with_capacity(rec.audio.len() * 4);
        for s in &rec.audio {
            audio_bytes.extend_from_slice(&s.to_le_bytes());
        }
        write_atomic(&dir.join(format!("{id}.audio.raw")), &audio_bytes)?;

        let mut words = String::new();
        for w in &rec.words {
            words.push_str(&serde_json::to_string(&serde_json::json!({
                "token": w.token, "start_s": w.start_s, "end_s": w.end_s,
            }))?);
            words.push('\n');
        }
        write_atomic(&dir.join(format!("{id}.words.jsonl")), words.as_bytes())?;

        let mut anns = String::new();
        for a in &rec.annotations {
            anns.push_str(&serde_json::to_string(&serde_json::json!({
                "tier_name": a.tier.name(), "label": a.label,
                "start_s": a.start_s, "end_s": a.end_s,
            }))?);
            anns.push('\n');
        }
        write_atomic(&dir.join(format!("{id}.annotations.jsonl")), anns.as_bytes())?;
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp: PathBuf = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn read_f32_le(path: &Path) -> Result<Vec<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::InvalidRecord {
            recording_id: path.display().to_string(),
            message: format!("audio file length {} is not a multiple of 4", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{make_synthetic_corpus, SyntheticSpec};

    #[test]
    fn empty_directory_with_valid_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        save_corpus(dir.path(), &[], 5.0).unwrap();
        let load = load_corpus(dir.path()).unwrap();
        assert!(load.recordings.is_empty());
        assert!(load.issues.is_empty());
    }

    #[test]
    fn missing_manifest_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_corpus(dir.path()), Err(Error::MissingManifest(_))));
    }

    #[test]
    fn negative_length_word_reported_per_record() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            fps_default: 5.0,
            recordings: vec![ManifestEntry {
                recording_id: "bad".into(),
                speaker_id: "s1".into(),
                sample_rate_hz: 100,
            }],
        };
        fs::write(
            dir.path().join("manifest.json"),
            serde_json::to_string(&manifest).unwrap(),
        )
        .unwrap();
        fs::write(dir.path().join("bad.audio.raw"), vec![0u8; 400]).unwrap();
        fs::write(
            dir.path().join("bad.words.jsonl"),
            "{\"token\":\"hi\",\"start_s\":0.5,\"end_s\":0.2}\n",
        )
        .unwrap();
        fs::write(dir.path().join("bad.annotations.jsonl"), "").unwrap();

        let load = load_corpus(dir.path()).unwrap();
        assert!(load.recordings.is_empty());
        assert_eq!(load.issues.len(), 1);
        assert_eq!(load.issues[0].recording_id, "bad");
        assert!(load.issues[0].message.contains("negative-length interval"));
    }

    #[test]
    fn synthetic_corpus_round_trips() {
        let spec = SyntheticSpec {
            prevalences: [("stroke".to_string(), 0.4), ("iconic".to_string(), 0.5)]
                .into_iter()
                .collect(),
            n_recordings: 2,
            duration_s: 12.0,
            seed: 9,
            ..SyntheticSpec::default()
        };
        let corpus = make_synthetic_corpus(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_corpus(dir.path(), &corpus, 5.0).unwrap();
        let load = load_corpus(dir.path()).unwrap();
        assert!(load.issues.is_empty());
        assert_eq!(load.recordings, corpus);
    }
}
