//! Side-information stream: one envelope codebook index per 256-sample
//! frame, 8 bits / 16 ms = 500 bits/s.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"BWXSI1\0\0";
const VERSION: u16 = 1;
/// Header layout: magic, version u16, frame_size u16, sample_rate u32,
/// codebook hash u64, frame count u32, all little-endian.
pub const HEADER_LEN: usize = 8 + 2 + 2 + 4 + 8 + 4;

/// Framed envelope indices plus the parameters needed to decode them.
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfoStream {
    pub frame_size: u16,
    pub sample_rate: u32,
    pub codebook_hash: u64,
    /// One codebook index per frame.
    pub payload: Vec<u8>,
}

impl SideInfoStream {
    pub fn new(frame_size: u16, sample_rate: u32, codebook_hash: u64, payload: Vec<u8>) -> Self {
        Self {
            frame_size,
            sample_rate,
            codebook_hash,
            payload,
        }
    }

    pub fn frames(&self) -> usize {
        self.payload.len()
    }

    /// Duration covered by whole frames, in seconds.
    pub fn duration_seconds(&self) -> f64 {
        self.frames() as f64 * self.frame_size as f64 / self.sample_rate as f64
    }

    /// Side-information rate in bits per second. Exactly 500 for the codec
    /// framing of 8 bits per 256 samples at 16 kHz.
    pub fn bits_per_second(&self) -> f64 {
        8.0 * self.sample_rate as f64 / self.frame_size as f64
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.frame_size.to_le_bytes());
        out.extend_from_slice(&self.sample_rate.to_le_bytes());
        out.extend_from_slice(&self.codebook_hash.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        std::fs::File::create(path)?.write_all(&out)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "side-info header: expected {HEADER_LEN} bytes, found {}",
                bytes.len()
            )));
        }
        if &bytes[..8] != MAGIC {
            if bytes.starts_with(b"BWXSI") {
                return Err(Error::Format("unsupported side-info version tag".into()));
            }
            return Err(Error::Format("bad side-info magic".into()));
        }
        let version = u16::from_le_bytes(bytes[8..10].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported side-info version {version}"
            )));
        }
        let frame_size = u16::from_le_bytes(bytes[10..12].try_into().unwrap());
        let sample_rate = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
        let codebook_hash = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let frames = u32::from_le_bytes(bytes[24..28].try_into().unwrap()) as usize;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != frames {
            return Err(Error::Format(format!(
                "side-info payload: expected {frames} bytes, found {}",
                payload.len()
            )));
        }
        Ok(Self {
            frame_size,
            sample_rate,
            codebook_hash,
            payload: payload.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_stream() -> SideInfoStream {
        SideInfoStream::new(256, 16_000, 0xDEAD_BEEF_0123_4567, vec![1, 2, 3, 250])
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bwxsi");
        let s = sample_stream();
        s.write(&path).unwrap();
        assert_eq!(SideInfoStream::read(&path).unwrap(), s);
    }

    #[test]
    fn truncated_payload_names_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bwxsi");
        sample_stream().write(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 2]).unwrap();
        match SideInfoStream::read(&path) {
            Err(Error::Format(msg)) => {
                assert!(msg.contains("expected 4") && msg.contains("found 2"), "{msg}")
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn unsupported_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bwxsi");
        sample_stream().write(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[8..10].copy_from_slice(&99u16.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        match SideInfoStream::read(&path) {
            Err(Error::Format(msg)) => assert!(msg.contains("version 99"), "{msg}"),
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bwxsi");
        std::fs::write(&path, vec![0u8; HEADER_LEN]).unwrap();
        assert!(matches!(SideInfoStream::read(&path), Err(Error::Format(_))));
    }

    #[test]
    fn rate_is_500_bits_per_second() {
        assert_eq!(sample_stream().bits_per_second(), 500.0);
    }
}
