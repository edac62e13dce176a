//! Sample-rate conversion between 8 and 16 kHz.
//!
//! Both directions share one windowed-sinc anti-aliasing prototype. The
//! filters are linear phase; group delays are exposed so the pipeline can
//! align streams.

use crate::audio::{AudioBuffer, NARROWBAND_RATE, WIDEBAND_RATE};
use crate::error::{Error, Result};
use crate::fir::{kaiser_lowpass, FirFilter};

/// Prototype length at 16 kHz. 193 taps with beta 8 give a ~430 Hz
/// transition: flat to 3.4 kHz, >60 dB down by 4.0 kHz.
pub const RESAMPLE_TAPS: usize = 193;
const KAISER_BETA: f64 = 8.0;
const CUTOFF_HZ: f64 = 3_750.0;

/// Group delay of upsampling, in 16 kHz samples.
pub const UPSAMPLE_DELAY: usize = (RESAMPLE_TAPS - 1) / 2;
/// Group delay of downsampling, in 8 kHz samples.
pub const DOWNSAMPLE_DELAY: usize = (RESAMPLE_TAPS - 1) / 4;

fn prototype() -> FirFilter {
    kaiser_lowpass(RESAMPLE_TAPS, CUTOFF_HZ, WIDEBAND_RATE as f64, KAISER_BETA)
}

/// Streaming 2x upsampler (8 kHz in, 16 kHz out) with carried history.
/// Polyphase form of zero-stuffing followed by the anti-imaging low-pass
/// with gain 2.
#[derive(Debug, Clone)]
pub struct Upsampler2x {
    // phase r holds taps h[2k + r], scaled by 2
    phases: [Vec<f64>; 2],
    history: Vec<f64>, // last samples of the 8 kHz input
}

impl Upsampler2x {
    pub fn new() -> Self {
        let proto = prototype();
        let taps = proto.taps();
        let mut phases = [Vec::new(), Vec::new()];
        for (i, &t) in taps.iter().enumerate() {
            phases[i % 2].push(2.0 * t);
        }
        let hist_len = phases[0].len().max(phases[1].len());
        Self {
            phases,
            history: vec![0.0; hist_len],
        }
    }

    /// Number of 16 kHz samples of group delay.
    pub fn delay(&self) -> usize {
        UPSAMPLE_DELAY
    }

    pub fn reset(&mut self) {
        self.history.fill(0.0);
    }

    /// Process one block of 8 kHz samples, producing twice as many.
    pub fn process(&mut self, frame: &[f64]) -> Vec<f64> {
        let hist_len = self.history.len();
        let mut out = Vec::with_capacity(frame.len() * 2);
        for (m, _) in frame.iter().enumerate() {
            for phase in &self.phases {
                let mut acc = 0.0;
                for (k, &h) in phase.iter().enumerate() {
                    let x = if k <= m {
                        frame[m - k]
                    } else {
                        let back = k - m;
                        if back > hist_len {
                            0.0
                        } else {
                            self.history[hist_len - back]
                        }
                    };
                    acc += h * x;
                }
                out.push(acc);
            }
        }
        // carry the tail of the input
        if frame.len() >= hist_len {
            self.history.copy_from_slice(&frame[frame.len() - hist_len..]);
        } else {
            self.history.rotate_left(frame.len());
            let start = hist_len - frame.len();
            self.history[start..].copy_from_slice(frame);
        }
        out
    }
}

impl Default for Upsampler2x {
    fn default() -> Self {
        Self::new()
    }
}

/// Upsample an 8 kHz buffer to 16 kHz. Output length is exactly 2N; the
/// result is delayed by [`UPSAMPLE_DELAY`] samples.
pub fn upsample_2x(buf: &AudioBuffer) -> Result<AudioBuffer> {
    if buf.sample_rate() != NARROWBAND_RATE {
        return Err(Error::Precondition(format!(
            "upsample_2x expects 8000 Hz input, got {}",
            buf.sample_rate()
        )));
    }
    let out = Upsampler2x::new().process(buf.samples());
    AudioBuffer::new(out, WIDEBAND_RATE)
}

/// Downsample a 16 kHz buffer to 8 kHz. Output length is floor(N/2); the
/// result is delayed by [`DOWNSAMPLE_DELAY`] samples at 8 kHz.
pub fn downsample_2x(buf: &AudioBuffer) -> Result<AudioBuffer> {
    if buf.sample_rate() != WIDEBAND_RATE {
        return Err(Error::Precondition(format!(
            "downsample_2x expects 16000 Hz input, got {}",
            buf.sample_rate()
        )));
    }
    let filtered = prototype().convolve_truncated(buf.samples());
    let out: Vec<f64> = filtered.iter().step_by(2).take(buf.len() / 2).copied().collect();
    AudioBuffer::new(out, NARROWBAND_RATE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: u32, len: usize) -> AudioBuffer {
        let w = 2.0 * std::f64::consts::PI * freq / rate as f64;
        AudioBuffer::new((0..len).map(|n| (w * n as f64).sin()).collect(), rate).unwrap()
    }

    /// Amplitude of the component at `freq` via a Goertzel-style projection
    /// over an exact number of cycles in the steady-state region.
    fn tone_amplitude(x: &[f64], freq: f64, rate: f64) -> f64 {
        let cycles = (freq * (x.len() as f64 - 400.0) / rate).floor();
        let span = (cycles * rate / freq).round() as usize;
        let start = 200;
        let seg = &x[start..start + span];
        let w = 2.0 * std::f64::consts::PI * freq / rate;
        let (mut re, mut im) = (0.0, 0.0);
        for (n, &s) in seg.iter().enumerate() {
            re += s * (w * n as f64).cos();
            im += s * (w * n as f64).sin();
        }
        2.0 * (re * re + im * im).sqrt() / span as f64
    }

    #[test]
    fn wrong_rate_rejected() {
        let b8 = AudioBuffer::silence(16, 8_000).unwrap();
        let b16 = AudioBuffer::silence(16, 16_000).unwrap();
        assert!(upsample_2x(&b16).is_err());
        assert!(downsample_2x(&b8).is_err());
    }

    #[test]
    fn upsample_preserves_dc() {
        let c = 0.37;
        let buf = AudioBuffer::new(vec![c; 2000], 8_000).unwrap();
        let up = upsample_2x(&buf).unwrap();
        assert_eq!(up.len(), 4000);
        for &s in &up.samples()[500..3500] {
            assert!((s - c).abs() < 1e-3, "{s} vs {c}");
        }
    }

    #[test]
    fn downsample_preserves_dc() {
        let c = -0.25;
        let buf = AudioBuffer::new(vec![c; 4000], 16_000).unwrap();
        let down = downsample_2x(&buf).unwrap();
        assert_eq!(down.len(), 2000);
        for &s in &down.samples()[300..1700] {
            assert!((s - c).abs() < 1e-3);
        }
    }

    #[test]
    fn upsample_keeps_1khz_amplitude() {
        let buf = sine(1000.0, 8_000, 8000);
        let up = upsample_2x(&buf).unwrap();
        let amp = tone_amplitude(up.samples(), 1000.0, 16_000.0);
        let db = 20.0 * amp.log10();
        assert!(db.abs() < 0.1, "1 kHz level changed by {db} dB");
    }

    #[test]
    fn upsample_suppresses_image() {
        // 3.9 kHz at 8 kHz images to 4.1 kHz at 16 kHz
        let buf = sine(3900.0, 8_000, 8000);
        let up = upsample_2x(&buf).unwrap();
        let image = tone_amplitude(up.samples(), 4100.0, 16_000.0);
        let db = 20.0 * image.log10(); // input amplitude 1
        assert!(db < -60.0, "image only {db} dB down");
    }

    #[test]
    fn downsample_rejects_above_nyquist() {
        let buf = sine(5000.0, 16_000, 16_000);
        let down = downsample_2x(&buf).unwrap();
        let out_energy: f64 = down.samples()[200..].iter().map(|s| s * s).sum();
        let in_energy: f64 = buf.samples().iter().map(|s| s * s).sum();
        let db = 10.0 * (out_energy / in_energy).log10();
        assert!(db < -60.0, "alias energy {db} dB");
    }

    #[test]
    fn round_trip_snr_on_1khz() {
        let buf = sine(1000.0, 8_000, 8000);
        let rt = downsample_2x(&upsample_2x(&buf).unwrap()).unwrap();
        // total delay: UPSAMPLE_DELAY at 16k = 96 -> 48 at 8k, plus
        // DOWNSAMPLE_DELAY = 48 at 8k
        let delay = UPSAMPLE_DELAY / 2 + DOWNSAMPLE_DELAY;
        let n = 4000;
        let x = &buf.samples()[1000..1000 + n];
        let y = &rt.samples()[1000 + delay..1000 + delay + n];
        let sig: f64 = x.iter().map(|s| s * s).sum();
        let err: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        let snr = 10.0 * (sig / err).log10();
        assert!(snr >= 40.0, "round-trip SNR {snr} dB");
    }

    #[test]
    fn streaming_upsampler_matches_whole_buffer() {
        let x: Vec<f64> = (0..1024).map(|n| ((n * 37) % 256) as f64 / 128.0 - 1.0).collect();
        let whole = Upsampler2x::new().process(&x);
        let mut up = Upsampler2x::new();
        let mut framed = Vec::new();
        for chunk in x.chunks(128) {
            framed.extend(up.process(chunk));
        }
        assert_eq!(whole, framed);
    }

    #[test]
    fn output_lengths() {
        let b8 = AudioBuffer::silence(101, 8_000).unwrap();
        assert_eq!(upsample_2x(&b8).unwrap().len(), 202);
        let b16 = AudioBuffer::silence(101, 16_000).unwrap();
        assert_eq!(downsample_2x(&b16).unwrap().len(), 50);
    }
}
