//! Flow checkpoints: same container as classifier checkpoints — length-
//! prefixed JSON header, then the parameters as little-endian f64 in flatten
//! order.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{init_flow, FlowParams, FlowSpec};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct FlowHeader {
    spec: FlowSpec,
    spec_hash: String,
}

pub fn save_flow(path: &Path, params: &FlowParams) -> Result<()> {
    let header = FlowHeader { spec: params.spec.clone(), spec_hash: params.spec_hash() };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&(header_bytes.len() as u32).to_le_bytes())
        .and_then(|_| f.write_all(&header_bytes))
        .map_err(|e| Error::io(path, e))?;
    for v in params.flatten() {
        f.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn load_flow(path: &Path, expected_hash: Option<&str>) -> Result<FlowParams> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 4 {
        return Err(Error::MalformedCheckpoint("file shorter than header length".into()));
    }
    let header_len = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    let payload_at = 4 + header_len;
    if bytes.len() < payload_at {
        return Err(Error::MalformedCheckpoint("truncated header".into()));
    }
    let header: FlowHeader = serde_json::from_slice(&bytes[4..payload_at])?;

    let mut params = init_flow(&header.spec, 0);
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

    let n_values = params.n_params();
    if bytes.len() != payload_at + 8 * n_values {
        return Err(Error::MalformedCheckpoint(format!(
            "payload is {} bytes, expected {}",
            bytes.len() - payload_at,
            8 * n_values
        )));
    }
    let flat: Vec<f64> = bytes[payload_at..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
        .collect();
    params.set_flat(&flat);
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::flow_forward;

    fn flow() -> FlowParams {
        let spec = FlowSpec { d_pose: 4, d_cond: 3, n_layers: 2, hidden: 5, log_scale_bound: 5.0 };
        let mut p = init_flow(&spec, 21);
        let flat: Vec<f64> = p.flatten().iter().map(|v| v + 0.1).collect();
        p.set_flat(&flat);
        p
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let p = flow();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.ckpt");
        save_flow(&path, &p).unwrap();
        let loaded = load_flow(&path, Some(&p.spec_hash())).unwrap();
        assert_eq!(loaded, p);
        let x = [0.5, -1.0, 0.3, 2.0];
        let c = [0.1, 0.2, 0.3];
        assert_eq!(
            flow_forward(&p, &x, &c).unwrap(),
            flow_forward(&loaded, &x, &c).unwrap()
        );
    }

    #[test]
    fn wrong_expected_hash_is_rejected() {
        let p = flow();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.ckpt");
        save_flow(&path, &p).unwrap();
        assert!(matches!(
            load_flow(&path, Some("0000000000000000")),
            Err(Error::IncompatibleCheckpoint { .. })
        ));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let p = flow();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.ckpt");
        save_flow(&path, &p).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(load_flow(&path, None), Err(Error::MalformedCheckpoint(_))));
    }
}
