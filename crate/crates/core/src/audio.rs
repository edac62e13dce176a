//! Mono audio buffer, the carrier type for every signal in the codec.

use crate::error::{Error, Result};

/// Sample rate of narrowband (telephone-band) signals.
pub const NARROWBAND_RATE: u32 = 8_000;
/// Sample rate of wideband signals.
pub const WIDEBAND_RATE: u32 = 16_000;

/// Mono sample sequence with its sample rate. Samples are nominally in
/// [-1, 1] and must be finite; only 8 and 16 kHz rates are accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate != NARROWBAND_RATE && sample_rate != WIDEBAND_RATE {
            return Err(Error::Precondition(format!(
                "sample rate must be 8000 or 16000 Hz, got {sample_rate}"
            )));
        }
        if let Some(pos) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Precondition(format!(
                "non-finite sample at index {pos}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Zero-filled buffer.
    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Consume the buffer, yielding its samples.
    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    /// Mean power in dB relative to full scale (1.0). Empty or silent
    /// buffers report -infinity.
    pub fn level_dbfs(&self) -> f64 {
        if self.samples.is_empty() {
            return f64::NEG_INFINITY;
        }
        let mean_sq = self.energy() / self.samples.len() as f64;
        if mean_sq <= 0.0 {
            f64::NEG_INFINITY
        } else {
            10.0 * mean_sq.log10()
        }
    }
}
