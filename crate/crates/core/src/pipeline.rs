//! End-to-end encoder and decoder: frame scheduling, band summation,
//! stream state and delay alignment.
//!
//! The encoder turns 16 kHz wideband speech into an 8 kHz narrowband
//! signal plus one envelope index per 256-sample frame (500 bits/s). The
//! decoder regenerates the 50-300 Hz band with a sinusoidal oscillator
//! driven by the gain predictor, and the 3.4-8 kHz band from the extended
//! excitation shaped by the transmitted envelope.

use crate::audio::{AudioBuffer, NARROWBAND_RATE, WIDEBAND_RATE};
use crate::dsp::{pre_emphasis_streaming, FilterState};
use crate::error::{Error, Result};
use crate::exec;
use crate::fir::{DelayLine, FirFilter, FirState};
use crate::highband::{
    self, decode_envelope, encode_envelope, extend_excitation, gain_match, gain_match_lowpass,
    highpass_3400, local_analysis, synthesize_highband, whiten, HighbandFrameCode,
    HighbandSynthState, FRAME_16K, FRAME_8K, NARROWBAND_LPC_ORDER, WHITEN_ORDER,
};
use crate::lowband::{synthesize_lowband, OscillatorState};
use crate::mfcc::{assemble_features, MfccAnalyzer, MFCC_CONFIG_TAG};
use crate::mlp::MlpNetwork;
use crate::pitch::{estimate_pitch, PITCH_FRAME};
use crate::resample::{downsample_2x, Upsampler2x, UPSAMPLE_DELAY};
use crate::sideinfo::SideInfoStream;
use crate::vq::Codebook;

/// Codec parameters shared by encoder and decoder.
#[derive(Debug, Clone)]
pub struct CodecConfig {
    /// Pre-emphasis coefficient for all LPC front-ends.
    pub preemph: f64,
    /// Optional shaping filter: applied to the narrowband signal after
    /// downsampling on encode, and before upsampling on decode (the
    /// inverse-shaping stage). Identity when absent.
    pub irs_filter: Option<FirFilter>,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            preemph: highband::DEFAULT_PREEMPH,
            irs_filter: None,
        }
    }
}

/// Encode wideband speech: downsample to the narrowband signal and emit
/// one envelope index per 256-sample frame. The last partial frame is
/// zero-padded.
pub fn encode(
    wideband: &AudioBuffer,
    cb: &Codebook,
    config: &CodecConfig,
) -> Result<(AudioBuffer, SideInfoStream)> {
    if wideband.sample_rate() != WIDEBAND_RATE {
        return Err(Error::Precondition(format!(
            "encode expects 16 kHz input, got {}",
            wideband.sample_rate()
        )));
    }
    if cb.bits() > 8 {
        return Err(Error::Precondition(format!(
            "side info carries 8 bits per frame; codebook has {} bits",
            cb.bits()
        )));
    }

    let mut narrowband = downsample_2x(wideband)?;
    if let Some(filter) = &config.irs_filter {
        narrowband = filter.apply(&narrowband);
    }

    let samples = wideband.samples();
    let n_frames = samples.len().div_ceil(FRAME_16K);
    let frame_indices: Vec<usize> = (0..n_frames).collect();
    let preemph = config.preemph;
    let codes = exec::ordered_map(&frame_indices, |&i| -> Result<u8> {
        let start = i * FRAME_16K;
        let end = ((i + 1) * FRAME_16K).min(samples.len());
        let code = if end - start == FRAME_16K {
            encode_envelope(&samples[start..end], cb, preemph)?
        } else {
            let mut padded = vec![0.0; FRAME_16K];
            padded[..end - start].copy_from_slice(&samples[start..end]);
            encode_envelope(&padded, cb, preemph)?
        };
        Ok(code.index as u8)
    });
    let payload: Vec<u8> = codes.into_iter().collect::<Result<_>>()?;

    let side = SideInfoStream::new(
        FRAME_16K as u16,
        WIDEBAND_RATE,
        cb.content_hash(),
        payload,
    );
    Ok((narrowband, side))
}

/// All carried decoder state. `reset` returns every memory to zero.
#[derive(Debug)]
struct StreamState {
    irs: Option<FirState>,
    upsampler: Upsampler2x,
    preemph_prev: f64,
    /// Pre-emphasis memory of the 8 kHz excitation analysis.
    preemph8_prev: f64,
    /// Inverse-filter memory of the 8 kHz excitation analysis.
    nb_inverse: FilterState,
    /// Carries the 8 kHz excitation up to 16 kHz.
    excitation_upsampler: Upsampler2x,
    whiten: FilterState,
    synth: HighbandSynthState,
    oscillator: OscillatorState,
    /// Aligns the upsampled narrowband with the high-pass group delay of
    /// the high-band path.
    narrowband_delay: DelayLine,
    /// Previous narrowband frame, history for the pitch window.
    pitch_history: Vec<f64>,
}

/// Streaming decoder. Frame-by-frame decoding with carried state is
/// bit-identical to decoding a whole file in one call.
pub struct Decoder {
    cb: Codebook,
    net: MlpNetwork,
    config: CodecConfig,
    mfcc: MfccAnalyzer,
    highpass: FirFilter,
    gain_lowpass: FirFilter,
    state: StreamState,
}

impl Decoder {
    pub fn new(cb: Codebook, net: MlpNetwork, config: CodecConfig) -> Result<Self> {
        if cb.dim() != highband::HIGHBAND_DIM {
            return Err(Error::Precondition(format!(
                "codebook dim {} does not match the codec",
                cb.dim()
            )));
        }
        if net.mfcc_tag() != MFCC_CONFIG_TAG {
            return Err(Error::Precondition(format!(
                "model front-end tag {:?} does not match this build ({MFCC_CONFIG_TAG:?})",
                net.mfcc_tag()
            )));
        }
        let highpass = highpass_3400();
        let state = StreamState {
            irs: config.irs_filter.as_ref().map(FirState::new),
            upsampler: Upsampler2x::new(),
            preemph_prev: 0.0,
            preemph8_prev: 0.0,
            nb_inverse: FilterState::zeros(NARROWBAND_LPC_ORDER),
            excitation_upsampler: Upsampler2x::new(),
            whiten: FilterState::zeros(WHITEN_ORDER),
            synth: HighbandSynthState::new(&highpass),
            oscillator: OscillatorState::new(),
            narrowband_delay: DelayLine::new((highpass.taps().len() - 1) / 2),
            pitch_history: vec![0.0; FRAME_8K],
        };
        Ok(Self {
            cb,
            net,
            config,
            mfcc: MfccAnalyzer::new(),
            gain_lowpass: gain_match_lowpass(),
            highpass,
            state,
        })
    }

    /// Zero all carried memories.
    pub fn reset(&mut self) {
        self.state.irs = self.config.irs_filter.as_ref().map(FirState::new);
        self.state.upsampler.reset();
        self.state.preemph_prev = 0.0;
        self.state.preemph8_prev = 0.0;
        self.state.nb_inverse.reset();
        self.state.excitation_upsampler.reset();
        self.state.whiten.reset();
        self.state.synth.reset(&self.highpass);
        self.state.oscillator.reset();
        self.state.narrowband_delay.reset();
        self.state.pitch_history.fill(0.0);
    }

    /// Decoder output delay relative to the upsampled narrowband input,
    /// in 16 kHz samples (the band-split group delay).
    pub fn output_delay(&self) -> usize {
        (self.highpass.taps().len() - 1) / 2
    }

    /// Total decoder delay relative to the 8 kHz input, in 16 kHz samples.
    pub fn total_delay(&self) -> usize {
        UPSAMPLE_DELAY + self.output_delay()
    }

    /// Decode one 128-sample narrowband frame into 256 wideband samples.
    pub fn decode_frame(&mut self, nb_frame: &[f64], index: u8) -> Result<Vec<f64>> {
        if nb_frame.len() != FRAME_8K {
            return Err(Error::Precondition(format!(
                "decoder frame must be {FRAME_8K} samples, got {}",
                nb_frame.len()
            )));
        }

        // optional inverse shaping
        let nb: Vec<f64> = match (&mut self.state.irs, &self.config.irs_filter) {
            (Some(st), Some(filter)) => st.process(filter, nb_frame),
            _ => nb_frame.to_vec(),
        };

        // pitch over history + current, features over the current frame
        let mut pitch_frame = Vec::with_capacity(PITCH_FRAME);
        pitch_frame.extend_from_slice(&self.state.pitch_history);
        pitch_frame.extend_from_slice(&nb);
        let pitch = estimate_pitch(&pitch_frame);
        self.state.pitch_history.copy_from_slice(&nb);

        let features = assemble_features(self.mfcc.mfcc16(&nb), pitch);
        let gains_db = self.net.forward(&features)?;

        // 16 kHz front end: local envelope for the concatenation anchor,
        // computed with the same rate and pre-emphasis as the encoder
        let up = self.state.upsampler.process(&nb);
        let upe = pre_emphasis_streaming(&up, self.config.preemph, &mut self.state.preemph_prev);
        let local = local_analysis(&upe);

        // narrowband excitation at 8 kHz, where the telephone band fills
        // the spectrum and order-10 whitening reaches the true residual
        // scale, then brought up to 16 kHz
        let nb8 = crate::dsp::pre_emphasis_streaming(
            &nb,
            self.config.preemph,
            &mut self.state.preemph8_prev,
        );
        let local8 = crate::dsp::lpc_analysis(&nb8, NARROWBAND_LPC_ORDER, 0.0)
            .unwrap_or_else(|_| crate::dsp::LpcModel::flat(NARROWBAND_LPC_ORDER, 1e-20));
        let exc8 = crate::dsp::inverse_filter(&nb8, &local8, &mut self.state.nb_inverse);
        let nb_excitation = self.state.excitation_upsampler.process(&exc8);

        // high band: extended excitation through the transmitted envelope
        let extended = extend_excitation(&nb_excitation);
        let (whitened, _degenerate) = whiten(&extended, &mut self.state.whiten);
        let matched = gain_match(&whitened, &nb_excitation, &self.gain_lowpass);
        let (model, _env) = decode_envelope(
            HighbandFrameCode {
                index: index as usize,
            },
            &self.cb,
            &local,
        )?;
        let high = synthesize_highband(
            &matched,
            &model,
            self.config.preemph,
            &self.highpass,
            &mut self.state.synth,
        )?;

        // low band: predicted harmonics
        let low = synthesize_lowband(
            pitch.f0_hz(),
            gains_db,
            pitch.gain,
            FRAME_16K,
            &mut self.state.oscillator,
        );

        // delay-aligned sum
        let aligned = self.state.narrowband_delay.process(&up);
        let out: Vec<f64> = (0..FRAME_16K)
            .map(|i| aligned[i] + low[i] + high[i])
            .collect();
        Ok(out)
    }
}

/// Decode a whole narrowband file against its side-info stream. The output
/// is always exactly twice the narrowband length.
pub fn decode(
    narrowband: &AudioBuffer,
    side: &SideInfoStream,
    cb: &Codebook,
    net: &MlpNetwork,
    config: &CodecConfig,
) -> Result<AudioBuffer> {
    if narrowband.sample_rate() != NARROWBAND_RATE {
        return Err(Error::Precondition(format!(
            "decode expects 8 kHz input, got {}",
            narrowband.sample_rate()
        )));
    }
    if side.codebook_hash != cb.content_hash() {
        return Err(Error::CodebookMismatch(format!(
            "stream was encoded with codebook {:016x}, supplied {:016x}",
            side.codebook_hash,
            cb.content_hash()
        )));
    }
    if side.frame_size as usize != FRAME_16K || side.sample_rate != WIDEBAND_RATE {
        return Err(Error::Stream(format!(
            "unsupported framing {} @ {} Hz",
            side.frame_size, side.sample_rate
        )));
    }
    let n_frames = narrowband.len().div_ceil(FRAME_8K);
    if n_frames.abs_diff(side.frames()) > 1 {
        return Err(Error::Stream(format!(
            "{} narrowband frames vs {} side-info frames",
            n_frames,
            side.frames()
        )));
    }

    let mut decoder = Decoder::new(cb.clone(), net.clone(), config.clone())?;
    let samples = narrowband.samples();
    let mut out = Vec::with_capacity(n_frames * FRAME_16K);
    let mut last_index = 0u8;
    for i in 0..n_frames {
        let start = i * FRAME_8K;
        let end = ((i + 1) * FRAME_8K).min(samples.len());
        // a missing final index reuses the previous one
        let index = side.payload.get(i).copied().unwrap_or(last_index);
        last_index = index;
        let frame = if end - start == FRAME_8K {
            decoder.decode_frame(&samples[start..end], index)?
        } else {
            let mut padded = vec![0.0; FRAME_8K];
            padded[..end - start].copy_from_slice(&samples[start..end]);
            decoder.decode_frame(&padded, index)?
        };
        out.extend(frame);
    }
    out.truncate(2 * narrowband.len());
    AudioBuffer::new(out, WIDEBAND_RATE)
}
