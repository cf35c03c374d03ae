//! Recorded IQ captures: a JSON sidecar plus a raw sample payload.
//!
//! The sidecar carries `{"m_r", "n", "noise_variance", "m_t"}`. The payload is
//! little-endian `f64` pairs (I then Q), time-major: sample `k` of antenna 0,
//! sample `k` of antenna 1, ..., then sample `k + 1`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{CMatrix, MimoFrame};
use crate::{Error, Result};

const BYTES_PER_SAMPLE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureMetadata {
    pub m_r: usize,
    pub n: usize,
    pub noise_variance: f64,
    pub m_t: usize,
}

#[derive(Deserialize)]
struct RawMetadata {
    m_r: Option<usize>,
    n: Option<usize>,
    noise_variance: Option<f64>,
    m_t: Option<usize>,
}

impl CaptureMetadata {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawMetadata = serde_json::from_str(text).map_err(|e| Error::Json {
            context: "parsing capture metadata".into(),
            source: e,
        })?;
        let missing = |field: &str| Error::Config(format!("capture metadata is missing `{field}`"));
        let meta = CaptureMetadata {
            m_r: raw.m_r.ok_or_else(|| missing("m_r"))?,
            n: raw.n.ok_or_else(|| missing("n"))?,
            noise_variance: raw
                .noise_variance
                .ok_or_else(|| missing("noise_variance"))?,
            m_t: raw.m_t.ok_or_else(|| missing("m_t"))?,
        };
        if meta.m_r == 0 || meta.n == 0 || meta.m_t == 0 || meta.m_t > meta.m_r {
            return Err(Error::Config(format!(
                "capture metadata needs m_r >= m_t >= 1 and n >= 1, got m_r={}, m_t={}, n={}",
                meta.m_r, meta.m_t, meta.n
            )));
        }
        if !(meta.noise_variance > 0.0 && meta.noise_variance.is_finite()) {
            return Err(Error::Config(format!(
                "capture noise_variance must be positive, got {}",
                meta.noise_variance
            )));
        }
        Ok(meta)
    }

    pub fn expected_payload_len(&self) -> usize {
        BYTES_PER_SAMPLE * self.m_r * self.n
    }
}

/// Serializes an `M_R × N` sample matrix in capture order.
pub fn encode_payload(received: &CMatrix) -> Vec<u8> {
    let (m_r, n) = received.shape();
    let mut out = Vec::with_capacity(BYTES_PER_SAMPLE * m_r * n);
    for k in 0..n {
        for a in 0..m_r {
            let v = received[(a, k)];
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

/// Decodes a payload against its metadata.
///
/// `path` is only used in diagnostics.
pub fn decode_payload(bytes: &[u8], meta: &CaptureMetadata, path: &Path) -> Result<CMatrix> {
    let frame_bytes = BYTES_PER_SAMPLE * meta.m_r;
    if !bytes.len().is_multiple_of(frame_bytes) {
        let whole = bytes.len() / frame_bytes;
        return Err(Error::Payload {
            path: path.to_path_buf(),
            detail: format!(
                "length {} is not a multiple of {frame_bytes} bytes (2 x 8 x m_r={}); \
                 trailing partial instant starts at byte offset {}",
                bytes.len(),
                meta.m_r,
                whole * frame_bytes
            ),
        });
    }
    let expected = meta.expected_payload_len();
    if bytes.len() != expected {
        return Err(Error::Payload {
            path: path.to_path_buf(),
            detail: format!(
                "expected {expected} bytes for n={} instants, found {} bytes ({} instants)",
                meta.n,
                bytes.len(),
                bytes.len() / frame_bytes
            ),
        });
    }
    let mut received = CMatrix::zeros(meta.m_r, meta.n);
    for (idx, chunk) in bytes.chunks_exact(BYTES_PER_SAMPLE).enumerate() {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        received[(idx % meta.m_r, idx / meta.m_r)] = Complex64::new(re, im);
    }
    Ok(received)
}

/// Writes a frame's received samples and its sidecar.
pub fn write_capture(frame: &MimoFrame, meta_path: &Path, payload_path: &Path) -> Result<()> {
    let meta = CaptureMetadata {
        m_r: frame.m_r(),
        n: frame.n(),
        noise_variance: frame.noise_variance,
        m_t: frame.m_t,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Json {
        context: "serializing capture metadata".into(),
        source: e,
    })?;
    fs::write(meta_path, text)
        .map_err(|e| Error::io(format!("writing {}", meta_path.display()), e))?;
    fs::write(payload_path, encode_payload(&frame.received))
        .map_err(|e| Error::io(format!("writing {}", payload_path.display()), e))?;
    Ok(())
}

/// Reads a capture into a frame with no ground truth attached.
pub fn read_capture(meta_path: &Path, payload_path: &Path) -> Result<MimoFrame> {
    let text = fs::read_to_string(meta_path)
        .map_err(|e| Error::io(format!("reading {}", meta_path.display()), e))?;
    let meta = CaptureMetadata::parse(&text)?;
    let bytes = fs::read(payload_path)
        .map_err(|e| Error::io(format!("reading {}", payload_path.display()), e))?;
    let received = decode_payload(&bytes, &meta, payload_path)?;
    MimoFrame::from_received(received, meta.m_t, meta.noise_variance)
}
