//! Low-frequency band (50-300 Hz) regeneration.
//!
//! Training side: least-squares extraction of the first two harmonic
//! amplitudes from windowed sinusoid bases. Receiver side: phase-continuous
//! sinusoidal oscillator driven by pitch and predicted gains.

use crate::error::{Error, Result};
use crate::fir::{kaiser_lowpass, FirFilter};
use crate::pitch::PitchInfo;

/// Analysis window length of the harmonic fit, at 8 kHz.
pub const BASIS_LEN: usize = 128;
/// Number of basis columns: windowed DC plus sin/cos at 1/T and 2/T.
pub const BASIS_COLS: usize = 5;
/// Pitch gain below which a frame counts as unvoiced.
pub const VOICING_THRESHOLD: f64 = 0.3;
/// Synthesized harmonics must fall inside this band (Hz).
pub const SYNTH_BAND_HZ: (f64, f64) = (50.0, 300.0);
/// Gain cross-fade duration at the start of each frame, in samples.
pub const CROSSFADE_SAMPLES: usize = 64;

const AMP_FLOOR: f64 = 1e-10;

/// 128 x 5 matrix of Hanning-windowed basis functions for pitch period T.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    /// columns[c][n], column-major
    columns: [Vec<f64>; BASIS_COLS],
    period: f64,
}

impl HarmonicBasis {
    pub fn columns(&self) -> &[Vec<f64>; BASIS_COLS] {
        &self.columns
    }

    pub fn period(&self) -> f64 {
        self.period
    }
}

/// Build the basis for pitch period `period` (samples at the analysis
/// rate): column 0 is the Hanning window, columns 1-4 are windowed
/// sin/cos at the fundamental and at twice the fundamental.
pub fn build_basis(period: f64) -> Result<HarmonicBasis> {
    if !(4.0..=(BASIS_LEN as f64 * 2.0)).contains(&period) {
        return Err(Error::Precondition(format!(
            "pitch period {period} outside [4, {}]",
            BASIS_LEN * 2
        )));
    }
    let window = crate::dsp::hanning_window(BASIS_LEN);
    let mut columns: [Vec<f64>; BASIS_COLS] = Default::default();
    for col in columns.iter_mut() {
        col.reserve(BASIS_LEN);
    }
    for n in 0..BASIS_LEN {
        let w = window[n];
        let phase = 2.0 * std::f64::consts::PI * n as f64 / period;
        columns[0].push(w);
        columns[1].push(w * phase.sin());
        columns[2].push(w * phase.cos());
        columns[3].push(w * (2.0 * phase).sin());
        columns[4].push(w * (2.0 * phase).cos());
    }
    Ok(HarmonicBasis {
        columns,
        period,
    })
}

/// Least-squares solution a of min ||X a - y||.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicAmplitudes {
    /// (DC, sin1, cos1, sin2, cos2)
    pub a: [f64; BASIS_COLS],
}

impl HarmonicAmplitudes {
    /// Amplitude of the first harmonic.
    pub fn amp1(&self) -> f64 {
        (self.a[1] * self.a[1] + self.a[2] * self.a[2]).sqrt()
    }

    /// Amplitude of the second harmonic.
    pub fn amp2(&self) -> f64 {
        (self.a[3] * self.a[3] + self.a[4] * self.a[4]).sqrt()
    }

    /// Both harmonic gains in dB, floored to keep logs finite.
    pub fn gains_db(&self) -> [f64; 2] {
        [
            20.0 * (self.amp1() + AMP_FLOOR).log10(),
            20.0 * (self.amp2() + AMP_FLOOR).log10(),
        ]
    }
}

/// Solve the 5x5 normal equations X^T X a = X^T y by Gaussian elimination
/// with partial pivoting. A pivot collapsing below 1e-12 of the largest
/// Gram entry reports a degenerate system.
pub fn ls_fit(basis: &HarmonicBasis, y: &[f64]) -> Result<HarmonicAmplitudes> {
    if y.len() != BASIS_LEN {
        return Err(Error::Precondition(format!(
            "ls_fit needs {BASIS_LEN} samples, got {}",
            y.len()
        )));
    }
    let cols = &basis.columns;
    let mut gram = [[0.0f64; BASIS_COLS]; BASIS_COLS];
    let mut rhs = [0.0f64; BASIS_COLS];
    for i in 0..BASIS_COLS {
        for j in i..BASIS_COLS {
            let dot: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            gram[i][j] = dot;
            gram[j][i] = dot;
        }
        rhs[i] = cols[i].iter().zip(y).map(|(a, b)| a * b).sum();
    }

    let scale = gram
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));

    // Gaussian elimination with partial pivoting
    let mut m = gram;
    let mut b = rhs;
    for col in 0..BASIS_COLS {
        let pivot_row = (col..BASIS_COLS)
            .max_by(|&r1, &r2| m[r1][col].abs().partial_cmp(&m[r2][col].abs()).unwrap())
            .unwrap();
        if m[pivot_row][col].abs() < 1e-12 * scale {
            return Err(Error::Degenerate(
                "harmonic basis Gram matrix numerically singular".into(),
            ));
        }
        m.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..BASIS_COLS {
            let f = m[row][col] / m[col][col];
            for k in col..BASIS_COLS {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut a = [0.0f64; BASIS_COLS];
    for row in (0..BASIS_COLS).rev() {
        let mut acc = b[row];
        for k in row + 1..BASIS_COLS {
            acc -= m[row][k] * a[k];
        }
        a[row] = acc / m[row][row];
    }
    Ok(HarmonicAmplitudes { a })
}

/// Where the training targets come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetSource {
    /// Fit the 0-350 Hz band of the original wideband signal: the targets
    /// equal what the decoder is asked to synthesize.
    #[default]
    WidebandLowBand,
    /// Fit the windowed, full-wave-rectified narrowband signal itself;
    /// rectification demodulates pitch harmonics into the low band.
    RectifiedNarrowband,
}

/// Extracts training targets: the low-band harmonic amplitudes of one
/// codec frame. Holds the 0-350 Hz isolation filter.
#[derive(Debug, Clone)]
pub struct TargetExtractor {
    lowpass: FirFilter,
    source: TargetSource,
}

/// Wideband frame length at 16 kHz.
pub const TARGET_FRAME: usize = 256;

impl TargetExtractor {
    pub fn new() -> Self {
        Self::with_source(TargetSource::default())
    }

    pub fn with_source(source: TargetSource) -> Self {
        // group-delay-compensated measurement filter; 1 kHz content is
        // ~80 dB down
        Self {
            lowpass: kaiser_lowpass(187, 360.0, 16_000.0, 8.0),
            source,
        }
    }

    pub fn source(&self) -> TargetSource {
        self.source
    }

    /// Extract dB gains of the first two harmonics from one frame: a
    /// 256-sample wideband frame for [`TargetSource::WidebandLowBand`], a
    /// 128-sample narrowband frame for
    /// [`TargetSource::RectifiedNarrowband`]. Returns `None` for unvoiced
    /// frames (pitch gain below [`VOICING_THRESHOLD`]) and for degenerate
    /// fits.
    ///
    /// Panics on a wrong frame length for the configured source.
    pub fn extract(&self, frame: &[f64], pitch: PitchInfo) -> Option<HarmonicAmplitudes> {
        if pitch.gain < VOICING_THRESHOLD {
            return None;
        }
        let analysis: Vec<f64> = match self.source {
            TargetSource::WidebandLowBand => {
                assert_eq!(frame.len(), TARGET_FRAME, "wideband target frame must be 256 samples");
                // isolate 0-350 Hz, then decimate to the 8 kHz analysis grid
                let low = self.lowpass.convolve_centered(frame);
                low.iter().step_by(2).copied().collect()
            }
            TargetSource::RectifiedNarrowband => {
                assert_eq!(frame.len(), BASIS_LEN, "narrowband target frame must be 128 samples");
                frame.iter().map(|v| v.abs()).collect()
            }
        };
        debug_assert_eq!(analysis.len(), BASIS_LEN);
        let window = crate::dsp::hanning_window(BASIS_LEN);
        let windowed: Vec<f64> = analysis.iter().zip(&window).map(|(x, w)| x * w).collect();
        // pitch delay is measured at 8 kHz, which is the analysis rate
        let basis = build_basis(pitch.delay).ok()?;
        ls_fit(&basis, &windowed).ok()
    }
}

impl Default for TargetExtractor {
    fn default() -> Self {
        Self::new()
    }
}

/// Oscillator phases and previous gains carried across frames.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorState {
    phase1: f64,
    phase2: f64,
    prev_gain1: f64,
    prev_gain2: f64,
}

impl OscillatorState {
    pub fn new() -> Self {
        Self {
            phase1: 0.0,
            phase2: 0.0,
            prev_gain1: 0.0,
            prev_gain2: 0.0,
        }
    }

    pub fn reset(&mut self) {
        *self = Self::new();
    }
}

impl Default for OscillatorState {
    fn default() -> Self {
        Self::new()
    }
}

/// Synthesize one frame of the low band at 16 kHz.
///
/// Each harmonic k (1, 2) is emitted only while k*f0 lies inside
/// [`SYNTH_BAND_HZ`]; an unvoiced frame (voicing below the threshold)
/// targets zero gains. Gains fade linearly from the previous frame's value
/// over the first [`CROSSFADE_SAMPLES`] samples; phases accumulate across
/// frames so constant-parameter synthesis is seamless.
pub fn synthesize_lowband(
    f0_hz: f64,
    gains_db: [f64; 2],
    voicing: f64,
    len: usize,
    state: &mut OscillatorState,
) -> Vec<f64> {
    assert!(f0_hz > 0.0, "fundamental must be positive");
    // a fundamental outside the pitch range mutes the frame; harmonics of
    // a valid fundamental are emitted only while they fall inside the band
    let valid_f0 = (SYNTH_BAND_HZ.0..=400.0).contains(&f0_hz);
    let voiced = voicing >= VOICING_THRESHOLD && valid_f0;
    let in_band = |f: f64| (SYNTH_BAND_HZ.0..=SYNTH_BAND_HZ.1).contains(&f);
    let target1 = if voiced && in_band(f0_hz) {
        10f64.powf(gains_db[0] / 20.0)
    } else {
        0.0
    };
    let target2 = if voiced && in_band(2.0 * f0_hz) {
        10f64.powf(gains_db[1] / 20.0)
    } else {
        0.0
    };

    let two_pi = 2.0 * std::f64::consts::PI;
    let step1 = two_pi * f0_hz / 16_000.0;
    let step2 = two_pi * 2.0 * f0_hz / 16_000.0;
    let (g1_0, g2_0) = (state.prev_gain1, state.prev_gain2);

    let mut out = Vec::with_capacity(len);
    for n in 0..len {
        let ramp = if n < CROSSFADE_SAMPLES {
            (n + 1) as f64 / CROSSFADE_SAMPLES as f64
        } else {
            1.0
        };
        let g1 = g1_0 + (target1 - g1_0) * ramp;
        let g2 = g2_0 + (target2 - g2_0) * ramp;
        out.push(g1 * state.phase1.sin() + g2 * state.phase2.sin());
        state.phase1 = (state.phase1 + step1).rem_euclid(two_pi);
        state.phase2 = (state.phase2 + step2).rem_euclid(two_pi);
    }
    state.prev_gain1 = target1;
    state.prev_gain2 = target2;
    out
}
