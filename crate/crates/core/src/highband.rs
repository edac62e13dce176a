//! High-frequency band (3.4-8 kHz) regeneration.
//!
//! Transmit side: order-16 LPC on the pre-emphasized wideband frame, log
//! envelope sampled on the 64-point grid, the 40 high points level-
//! normalized against an anchor region and vector quantized. Receive side:
//! the narrowband excitation is extended by full-wave rectification,
//! whitened and gain-matched, then filtered by the full-band model
//! recovered from the concatenated envelope.

use crate::dsp::{
    self, inverse_filter, lpc_analysis, lpc_to_envelope, synthesis_filter, EnvelopeSpectrum,
    FilterState, LpcModel, ENVELOPE_POINTS,
};
use crate::error::{Error, Result};
use crate::fir::{kaiser_highpass, kaiser_lowpass, FirFilter, FirState};
use crate::vq::{decode_index, quantize, Codebook};

/// Codec frame length at 16 kHz.
pub const FRAME_16K: usize = 256;
/// Codec frame length at 8 kHz.
pub const FRAME_8K: usize = 128;
/// Envelope points transmitted per frame (grid indices 24..64,
/// 3000-7875 Hz).
pub const HIGHBAND_DIM: usize = 40;
/// First transmitted grid index.
pub const HIGH_START: usize = ENVELOPE_POINTS - HIGHBAND_DIM;
/// Anchor region (grid indices 20..24, 2500-2875 Hz) used for level
/// normalization; both ends of the link can compute it.
pub const ANCHOR_RANGE: std::ops::Range<usize> = 20..24;

/// LPC order for wideband (16 kHz) analysis.
pub const WIDEBAND_LPC_ORDER: usize = 16;
/// LPC order for the receiver's local narrowband analysis.
pub const NARROWBAND_LPC_ORDER: usize = 10;
/// Order of the adaptive whitening filter.
pub const WHITEN_ORDER: usize = 16;
/// Default pre-emphasis coefficient.
pub const DEFAULT_PREEMPH: f64 = 0.7;

/// Energy of the periodic Hanning analysis window, sum w[n]^2 = 3N/8.
/// Frame envelopes divide the residual energy by this, making envelope
/// values per-sample power spectra; without it the synthesized band would
/// come out 10 log10(3N/8) = 19.8 dB below the excitation's scale.
const ANALYSIS_WINDOW_POWER: f64 = 0.375 * FRAME_16K as f64;

/// Envelope of a frame-analysis model in per-sample power units.
pub fn frame_envelope(model: &LpcModel) -> EnvelopeSpectrum {
    let gain = (model.residual_energy().max(0.0) / ANALYSIS_WINDOW_POWER).sqrt();
    lpc_to_envelope(model, gain)
}

/// One frame of transmitted high-band information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighbandFrameCode {
    pub index: usize,
}

/// Full-wave rectification: extends a band-limited excitation with
/// harmonics above the original band, phase-coherent with the input.
pub fn extend_excitation(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.abs()).collect()
}

/// The 3400 Hz band-split high-pass applied after synthesis. The deep
/// stopband matters: the full-band synthesis filter carries large
/// low-frequency gain that must stay out of the telephone band.
pub fn highpass_3400() -> FirFilter {
    kaiser_highpass(319, 3420.0, 16_000.0, 10.0)
}

/// Low-pass used to measure 0-3.4 kHz band energy for gain matching.
pub fn gain_match_lowpass() -> FirFilter {
    kaiser_lowpass(127, 3400.0, 16_000.0, 8.0)
}

/// Adaptive whitening of the extended excitation: per-frame order-16 LPC
/// (no pre-emphasis) and inverse filtering with carried memory.
///
/// Returns the whitened frame and whether the frame was passed through
/// unfiltered because the analysis was degenerate (silent frame).
pub fn whiten(extended: &[f64], state: &mut FilterState) -> (Vec<f64>, bool) {
    match lpc_analysis(extended, WHITEN_ORDER, 0.0) {
        Ok(model) => (inverse_filter(extended, &model, state), false),
        Err(_) => {
            // keep the memory coherent for the next frame
            let flat = LpcModel::flat(WHITEN_ORDER, 1.0);
            let out = inverse_filter(extended, &flat, state);
            (out, true)
        }
    }
}

/// Scale `whitened` so its 0-3.4 kHz energy equals that of the reference
/// narrowband excitation. Both energies are measured through `lowpass`.
/// A zero-energy whitened frame yields silence.
pub fn gain_match(whitened: &[f64], reference: &[f64], lowpass: &FirFilter) -> Vec<f64> {
    assert_eq!(whitened.len(), reference.len(), "frame length mismatch");
    let e_ref: f64 = lowpass
        .convolve_truncated(reference)
        .iter()
        .map(|v| v * v)
        .sum();
    let e_whit: f64 = lowpass
        .convolve_truncated(whitened)
        .iter()
        .map(|v| v * v)
        .sum();
    if e_whit <= 0.0 {
        return vec![0.0; whitened.len()];
    }
    let gain = (e_ref / e_whit).sqrt();
    whitened.iter().map(|v| v * gain).collect()
}

/// High-band envelope of one wideband frame, normalized against the anchor
/// region. A silent frame maps to the all-zero normalized vector.
pub fn highband_envelope_vector(frame: &[f64], preemph: f64) -> Result<Vec<f64>> {
    assert_eq!(frame.len(), FRAME_16K, "envelope frame must be 256 samples");
    let env = match lpc_analysis(frame, WIDEBAND_LPC_ORDER, preemph) {
        Ok(model) => frame_envelope(&model),
        Err(Error::Degenerate(_)) => return Ok(vec![0.0; HIGHBAND_DIM]),
        Err(e) => return Err(e),
    };
    Ok(normalize_high_points(&env))
}

/// Subtract the anchor-region mean from the transmitted points.
pub fn normalize_high_points(env: &EnvelopeSpectrum) -> Vec<f64> {
    let anchor = anchor_level(env);
    env.points()[HIGH_START..].iter().map(|p| p - anchor).collect()
}

/// Mean envelope level over the anchor region.
pub fn anchor_level(env: &EnvelopeSpectrum) -> f64 {
    let pts = &env.points()[ANCHOR_RANGE];
    pts.iter().sum::<f64>() / pts.len() as f64
}

/// Encode one wideband frame to a codebook index.
pub fn encode_envelope(frame: &[f64], cb: &Codebook, preemph: f64) -> Result<HighbandFrameCode> {
    check_codebook(cb)?;
    let v = highband_envelope_vector(frame, preemph)?;
    Ok(HighbandFrameCode {
        index: quantize(cb, &v)?,
    })
}

/// Receiver-side order-10 analysis of the (pre-emphasized, upsampled)
/// narrowband frame. A silent frame yields a flat model.
pub fn local_analysis(upsampled_frame: &[f64]) -> LpcModel {
    assert_eq!(upsampled_frame.len(), FRAME_16K);
    lpc_analysis(upsampled_frame, NARROWBAND_LPC_ORDER, 0.0)
        .unwrap_or_else(|_| LpcModel::flat(NARROWBAND_LPC_ORDER, 1e-20))
}

/// Decode a codebook index into the full-band synthesis model by
/// concatenating the local narrowband envelope with the re-anchored
/// codeword and refitting order 16.
///
/// Returns the model together with the concatenated 64-point envelope.
pub fn decode_envelope(
    code: HighbandFrameCode,
    cb: &Codebook,
    local: &LpcModel,
) -> Result<(LpcModel, EnvelopeSpectrum)> {
    check_codebook(cb)?;
    let codeword = decode_index(cb, code.index)?;
    let local_env = frame_envelope(local);
    let anchor = anchor_level(&local_env);
    let mut points = [0.0f64; ENVELOPE_POINTS];
    points[..HIGH_START].copy_from_slice(&local_env.points()[..HIGH_START]);
    for (p, c) in points[HIGH_START..].iter_mut().zip(&codeword) {
        *p = c + anchor;
    }
    let env = EnvelopeSpectrum::new(points)?;
    let model = dsp::envelope_to_lpc(&env, WIDEBAND_LPC_ORDER)?;
    Ok((model, env))
}

fn check_codebook(cb: &Codebook) -> Result<()> {
    if cb.dim() != HIGHBAND_DIM {
        return Err(Error::Precondition(format!(
            "codebook dim {} does not match the {HIGHBAND_DIM}-point high band",
            cb.dim()
        )));
    }
    Ok(())
}

/// Carried state of the synthesis chain.
#[derive(Debug, Clone)]
pub struct HighbandSynthState {
    pub synthesis: FilterState,
    pub deemph_prev: f64,
    pub highpass: FirState,
}

impl HighbandSynthState {
    pub fn new(highpass: &FirFilter) -> Self {
        Self {
            synthesis: FilterState::zeros(WIDEBAND_LPC_ORDER),
            deemph_prev: 0.0,
            highpass: FirState::new(highpass),
        }
    }

    pub fn reset(&mut self, highpass: &FirFilter) {
        *self = Self::new(highpass);
    }
}

/// Run the matched excitation through the full-band synthesis filter,
/// undo the pre-emphasis, and select the 3.4-8 kHz band.
pub fn synthesize_highband(
    excitation: &[f64],
    model: &LpcModel,
    preemph: f64,
    highpass: &FirFilter,
    state: &mut HighbandSynthState,
) -> Result<Vec<f64>> {
    let synth = synthesis_filter(excitation, model, &mut state.synthesis)?;
    let deemph = dsp::de_emphasis(&synth, preemph, &mut state.deemph_prev);
    Ok(state.highpass.process(highpass, &deemph))
}
