//! Flat little-endian checkpoint layout (see `docs/checkpoint-format.md`).

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::SpectralState;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"TXSPEC2D";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 64;

pub fn encode(state: &SpectralState) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_BYTES + 16 * state.omega_hat.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(state.m as u32).to_le_bytes());
    for v in [
        state.periods[0],
        state.periods[1],
        state.nu,
        state.t,
        state.mean_flow[0],
        state.mean_flow[1],
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for z in &state.omega_hat {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<SpectralState> {
    let bad = |msg: &str| Error::Format(msg.to_string());
    if bytes.len() < HEADER_BYTES || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("not a TXSPEC2D checkpoint"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(8);
    if version != CHECKPOINT_VERSION {
        return Err(bad(&format!("unsupported checkpoint version {version}")));
    }
    let m = u32_at(12) as usize;
    if bytes.len() != HEADER_BYTES + 16 * m * m {
        return Err(bad("checkpoint length does not match its grid size"));
    }
    let h: Vec<f64> = (0..6).map(|i| f64_at(16 + 8 * i)).collect();
    let omega_hat = (0..m * m)
        .map(|i| {
            let o = HEADER_BYTES + 16 * i;
            Complex64::new(f64_at(o), f64_at(o + 8))
        })
        .collect();
    Ok(SpectralState {
        m,
        periods: [h[0], h[1]],
        nu: h[2],
        t: h[3],
        mean_flow: [h[4], h[5]],
        omega_hat,
    })
}

/// Writes `path` and a JSON sidecar `path.json`; returns the sidecar.
pub fn write_checkpoint(state: &SpectralState, path: &Path, energy: f64) -> Result<Value> {
    let bytes = encode(state);
    fs::write(path, &bytes)?;
    let sidecar = json!({
        "format": "TXSPEC2D",
        "version": CHECKPOINT_VERSION,
        "m": state.m,
        "periods": state.periods,
        "nu": state.nu,
        "t": state.t,
        "mean_flow": state.mean_flow,
        "energy": energy,
        "bytes": bytes.len(),
        "sha256": hex::encode(Sha256::digest(&bytes)),
    });
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    fs::write(side, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(sidecar)
}

pub fn read_checkpoint(path: &Path) -> Result<SpectralState> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_bytes() {
        let state = SpectralState {
            m: 4,
            periods: [1.0, 2.0],
            nu: 0.1,
            t: 3.5,
            mean_flow: [0.25, -1.0],
            omega_hat: (0..16).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect(),
        };
        let bytes = encode(&state);
        assert_eq!(bytes.len(), HEADER_BYTES + 16 * 16);
        assert_eq!(&bytes[..8], b"TXSPEC2D");
        assert_eq!(decode(&bytes).unwrap(), state);
        assert!(decode(&bytes[..100]).is_err());
        let mut wrong = bytes.clone();
        wrong[8] = 9;
        assert!(decode(&wrong).is_err());
    }
}
