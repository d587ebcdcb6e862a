//! Classifier checkpoints: length-prefixed JSON header plus a little-endian
//! f64 payload (standardization vectors, then trainable parameters in
//! flatten order). f64 keeps save/load bit-exact against the in-memory model.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{init_model, DilatedConvSpec, ModelParams};
use crate::corpus::Tier;
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    spec: DilatedConvSpec,
    tier: Tier,
    labels: Vec<String>,
    d_in: usize,
    spec_hash: String,
}

pub fn save_params(path: &Path, params: &ModelParams) -> Result<()> {
    let header = CheckpointHeader {
        spec: params.spec.clone(),
        tier: params.tier,
        labels: params.labels.clone(),
        d_in: params.d_in,
        spec_hash: params.spec_hash(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut payload: Vec<f64> = Vec::with_capacity(2 * params.d_in + params.n_params());
    payload.extend(params.norm_mean.iter());
    payload.extend(params.norm_std.iter());
    payload.extend(params.flatten());

    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&(header_bytes.len() as u32).to_le_bytes())
        .and_then(|_| f.write_all(&header_bytes))
        .map_err(|e| Error::io(path, e))?;
    for v in payload {
        f.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Loads a checkpoint. When `expected_hash` is given, a mismatch is refused
/// before any tensor is touched.
pub fn load_params(path: &Path, expected_hash: Option<&str>) -> Result<ModelParams> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 4 {
        return Err(Error::MalformedCheckpoint("file shorter than header length".into()));
    }
    let header_len = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    let payload_at = 4 + header_len;
    if bytes.len() < payload_at {
        return Err(Error::MalformedCheckpoint("truncated header".into()));
    }
    let header: CheckpointHeader = serde_json::from_slice(&bytes[4..payload_at])?;

    let mut params = init_model(&header.spec, header.tier, &header.labels, header.d_in, 0);
    if header.spec_hash != params.spec_hash() {
        return Err(Error::IncompatibleCheckpoint {
            expected: params.spec_hash(),
            got: header.spec_hash,
        });
    }
    if let Some(expected) = expected_hash {
        if header.spec_hash != expected {
            return Err(Error::IncompatibleCheckpoint {
                expected: expected.to_string(),
                got: header.spec_hash,
            });
        }
    }

    let n_values = 2 * header.d_in + params.n_params();
    if bytes.len() != payload_at + 8 * n_values {
        return Err(Error::MalformedCheckpoint(format!(
            "payload is {} bytes, expected {}",
            bytes.len() - payload_at,
            8 * n_values
        )));
    }
    let mut values = bytes[payload_at..].chunks_exact(8).map(|c| {
        f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]])
    });
    for v in params.norm_mean.iter_mut().chain(params.norm_std.iter_mut()) {
        *v = values.next().expect("length checked");
    }
    let flat: Vec<f64> = values.collect();
    params.set_flat(&flat);
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::forward;
    use ndarray::Array2;

    fn model() -> ModelParams {
        let spec = DilatedConvSpec { channels: 3, kernel_size: 3, dilations: vec![1, 2] };
        let labels: Vec<String> = ["a", "b"].map(String::from).to_vec();
        let mut m = init_model(&spec, Tier::Semantics, &labels, 4, 11);
        m.norm_mean.fill(0.3);
        m.norm_std.fill(2.0);
        m
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_params(&path, &m).unwrap();
        let loaded = load_params(&path, Some(&m.spec_hash())).unwrap();
        assert_eq!(loaded, m);

        let window = Array2::from_shape_fn((7, 4), |(i, j)| (i as f64 * 0.4 - j as f64).sin());
        assert_eq!(forward(&m, &window).unwrap(), forward(&loaded, &window).unwrap());
    }

    #[test]
    fn truncated_file_leaves_no_partial_model() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_params(&path, &m).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(load_params(&path, None).is_err());
    }

    #[test]
    fn edited_spec_hash_is_rejected() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_params(&path, &m).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        // flip one hex digit of the stored hash inside the JSON header
        let header_len = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
        let header = String::from_utf8(bytes[4..4 + header_len].to_vec()).unwrap();
        let hash = m.spec_hash();
        let flipped = if hash.as_bytes()[0] == b'0' {
            format!("1{}", &hash[1..])
        } else {
            format!("0{}", &hash[1..])
        };
        let edited = header.replace(&hash, &flipped);
        assert_ne!(header, edited);
        bytes.splice(4..4 + header_len, edited.into_bytes());
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_params(&path, None),
            Err(Error::IncompatibleCheckpoint { .. })
        ));
    }
}
