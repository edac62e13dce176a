//! Mel-frequency cepstral coefficients of narrowband frames.
//!
//! 128-sample frame -> Hanning window -> 256-point zero-padded power
//! spectrum -> 24 triangular mel bands over 0-4000 Hz -> natural log with a
//! 1e-10 floor -> orthonormal DCT-II, keeping c0..c15.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::pitch::PitchInfo;

/// Narrowband analysis frame length at 8 kHz.
pub const MFCC_FRAME: usize = 128;
/// Number of cepstral coefficients produced.
pub const NUM_MFCC: usize = 16;
/// Number of triangular mel bands.
pub const NUM_BANDS: usize = 24;
/// Identifies the front-end configuration inside trained model files.
pub const MFCC_CONFIG_TAG: &str = "mfcc16/mel24/ln/dct2-ortho/c0";

const FFT_SIZE: usize = 256;
const LOG_FLOOR: f64 = 1e-10;

/// The 18-component input vector of the gain predictor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub mfcc: [f64; NUM_MFCC],
    pub pitch_gain: f64,
    pub pitch_delay: f64,
}

/// Total feature dimensionality.
pub const FEATURE_DIM: usize = NUM_MFCC + 2;

impl FeatureVector {
    /// Fixed layout: c0..c15, then pitch gain, then pitch delay.
    pub fn as_array(&self) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        out[..NUM_MFCC].copy_from_slice(&self.mfcc);
        out[NUM_MFCC] = self.pitch_gain;
        out[NUM_MFCC + 1] = self.pitch_delay;
        out
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Concatenate MFCCs and pitch parameters into the network input layout.
pub fn assemble_features(mfcc: [f64; NUM_MFCC], pitch: PitchInfo) -> FeatureVector {
    FeatureVector {
        mfcc,
        pitch_gain: pitch.gain,
        pitch_delay: pitch.delay,
    }
}

/// MFCC analyzer with precomputed window, FFT plan and filterbank.
/// Immutable after construction and safe to share across threads.
pub struct MfccAnalyzer {
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    /// filterbank[band][bin], bins 0..=128
    filterbank: Vec<Vec<f64>>,
}

impl std::fmt::Debug for MfccAnalyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccAnalyzer")
            .field("bands", &self.filterbank.len())
            .finish()
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

impl MfccAnalyzer {
    pub fn new() -> Self {
        let window = crate::dsp::hanning_window(MFCC_FRAME);
        let fft = FftPlanner::new().plan_fft_forward(FFT_SIZE);

        // triangular filters with centres uniform on the mel scale,
        // adjacent triangles overlapping 50%
        let bins = FFT_SIZE / 2 + 1;
        let mel_max = hz_to_mel(4000.0);
        let edges: Vec<f64> = (0..NUM_BANDS + 2)
            .map(|i| mel_to_hz(mel_max * i as f64 / (NUM_BANDS + 1) as f64))
            .collect();
        let mut filterbank = Vec::with_capacity(NUM_BANDS);
        for b in 0..NUM_BANDS {
            let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            let mut row = vec![0.0; bins];
            for (k, w) in row.iter_mut().enumerate() {
                let f = k as f64 * 8000.0 / FFT_SIZE as f64;
                if f > lo && f < hi {
                    *w = if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    };
                }
            }
            filterbank.push(row);
        }

        Self {
            window,
            fft,
            filterbank,
        }
    }

    /// 16 cepstral coefficients of one 128-sample narrowband frame.
    ///
    /// Panics if the frame is not [`MFCC_FRAME`] samples long.
    pub fn mfcc16(&self, frame: &[f64]) -> [f64; NUM_MFCC] {
        assert_eq!(frame.len(), MFCC_FRAME, "MFCC frame must be 128 samples");

        let mut buf = vec![Complex::new(0.0, 0.0); FFT_SIZE];
        for (n, (&x, &w)) in frame.iter().zip(&self.window).enumerate() {
            buf[n] = Complex::new(x * w, 0.0);
        }
        self.fft.process(&mut buf);

        let power: Vec<f64> = buf[..FFT_SIZE / 2 + 1].iter().map(|c| c.norm_sqr()).collect();

        let mut log_bands = [0.0; NUM_BANDS];
        for (b, row) in self.filterbank.iter().enumerate() {
            let e: f64 = row.iter().zip(&power).map(|(w, p)| w * p).sum();
            log_bands[b] = e.max(LOG_FLOOR).ln();
        }

        // orthonormal DCT-II
        let mut out = [0.0; NUM_MFCC];
        let n = NUM_BANDS as f64;
        for (m, c) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (b, &lb) in log_bands.iter().enumerate() {
                acc += lb
                    * (std::f64::consts::PI * m as f64 * (b as f64 + 0.5) / n).cos();
            }
            let scale = if m == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            *c = scale * acc;
        }
        out
    }

    /// Filterbank rows (for diagnostics and tests).
    pub fn filterbank(&self) -> &[Vec<f64>] {
        &self.filterbank
    }
}

impl Default for MfccAnalyzer {
    fn default() -> Self {
        Self::new()
    }
}
