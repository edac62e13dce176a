//! RIFF/WAVE reader and writer, PCM 16-bit little-endian mono only.

use std::io::{Read, Write};
use std::path::Path;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

const SCALE: f64 = 32_768.0;

/// Read a PCM 16-bit mono WAV file at 8 or 16 kHz. Samples are scaled to
/// [-1, 1] by dividing by 32768.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let mut file = std::fs::File::open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    parse_wav(&bytes)
}

fn parse_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    if bytes.len() < 12 {
        return Err(truncated("RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Format("not a RIFF/WAVE file".into()));
    }

    let mut pos = 12;
    let mut format: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        if body_start + size > bytes.len() {
            return Err(truncated("chunk body"));
        }
        let body = &bytes[body_start..body_start + size];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::Format("fmt chunk too small".into()));
                }
                let audio_format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let sample_rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                format = Some((audio_format, channels, sample_rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word-aligned
        pos = body_start + size + (size & 1);
    }

    let (audio_format, channels, sample_rate, bits) =
        format.ok_or_else(|| Error::Format("missing fmt chunk".into()))?;
    if audio_format != 1 {
        return Err(Error::Format(format!(
            "unsupported encoding {audio_format}, only PCM (1) accepted"
        )));
    }
    if channels != 1 {
        return Err(Error::Format(format!(
            "unsupported channel count {channels}, only mono accepted"
        )));
    }
    if bits != 16 {
        return Err(Error::Format(format!(
            "unsupported bit depth {bits}, only 16 accepted"
        )));
    }
    if sample_rate != 8_000 && sample_rate != 16_000 {
        return Err(Error::Format(format!(
            "unsupported sample rate {sample_rate}, only 8000/16000 accepted"
        )));
    }
    let data = data.ok_or_else(|| Error::Format("missing data chunk".into()))?;
    if data.len() % 2 != 0 {
        return Err(truncated("16-bit sample"));
    }

    let samples: Vec<f64> = data
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / SCALE)
        .collect();
    AudioBuffer::new(samples, sample_rate)
}

fn truncated(what: &str) -> Error {
    Error::Io(std::io::Error::new(
        std::io::ErrorKind::UnexpectedEof,
        format!("truncated WAV file ({what})"),
    ))
}

/// Write a PCM 16-bit mono WAV file. Samples are clamped to
/// [-1, 1 - 1/32768] before quantization.
pub fn write_wav(buf: &AudioBuffer, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_wav(buf);
    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

fn encode_wav(buf: &AudioBuffer) -> Vec<u8> {
    let data_len = (buf.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + buf.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&buf.sample_rate().to_le_bytes());
    out.extend_from_slice(&(buf.sample_rate() * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in buf.samples() {
        let clamped = s.clamp(-1.0, 1.0 - 1.0 / SCALE);
        let q = (clamped * SCALE).round().clamp(-SCALE, SCALE - 1.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn scaling_of_known_sample() {
        // one sample of value 16384 -> 0.5
        let buf = AudioBuffer::new(vec![0.5], 8_000).unwrap();
        let bytes = encode_wav(&buf);
        let parsed = parse_wav(&bytes).unwrap();
        assert_eq!(parsed.samples(), &[0.5]);
        assert_eq!(parsed.sample_rate(), 8_000);
    }

    #[test]
    fn round_trip_random_buffer() {
        let samples: Vec<f64> = (0..1000)
            .map(|n| (((n * 2654435761u64 as usize) % 65536) as f64 / 32768.0) - 1.0)
            .collect();
        let buf = AudioBuffer::new(samples, 16_000).unwrap();
        let dir = tmp();
        let path = dir.path().join("rt.wav");
        write_wav(&buf, &path).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.len(), buf.len());
        for (a, b) in buf.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() <= 1.0 / 32768.0, "{a} vs {b}");
        }
    }

    #[test]
    fn clipping_saturates_to_max() {
        let buf = AudioBuffer::new(vec![1.5], 8_000).unwrap();
        let bytes = encode_wav(&buf);
        let parsed = parse_wav(&bytes).unwrap();
        assert_eq!(parsed.samples(), &[32767.0 / 32768.0]);
    }

    #[test]
    fn empty_buffer_round_trips() {
        let dir = tmp();
        let path = dir.path().join("empty.wav");
        write_wav(&AudioBuffer::new(vec![], 16_000).unwrap(), &path).unwrap();
        let back = read_wav(&path).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn rejects_unsupported_rate() {
        let mut bytes = encode_wav(&AudioBuffer::new(vec![0.0], 8_000).unwrap());
        bytes[24..28].copy_from_slice(&44_100u32.to_le_bytes());
        match parse_wav(&bytes) {
            Err(Error::Format(msg)) => assert!(msg.contains("44100")),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_stereo() {
        let mut bytes = encode_wav(&AudioBuffer::new(vec![0.0, 0.0], 8_000).unwrap());
        bytes[22..24].copy_from_slice(&2u16.to_le_bytes());
        assert!(matches!(parse_wav(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_file_is_io_error() {
        let bytes = encode_wav(&AudioBuffer::new(vec![0.1, 0.2, 0.3], 8_000).unwrap());
        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(parse_wav(cut), Err(Error::Io(_))));
    }
}
