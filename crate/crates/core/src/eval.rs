//! Evaluation metrics: spectral distortion over the high band, harmonic
//! gain error, band-limited SNR and spectrum dumps.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::AudioBuffer;
use crate::dsp::{
    hanning_window, lpc_analysis, pre_emphasis, EnvelopeSpectrum, ENVELOPE_GRID_HZ,
    ENVELOPE_POINTS,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::fir::kaiser_bandpass;
use crate::highband::{
    decode_envelope, encode_envelope, local_analysis, HighbandFrameCode, FRAME_16K, FRAME_8K,
    WIDEBAND_LPC_ORDER,
};
use crate::lowband::TargetExtractor;
use crate::mfcc::{assemble_features, FeatureVector, MfccAnalyzer};
use crate::pitch::{estimate_pitch, PitchInfo, PITCH_FRAME};
use crate::pipeline::CodecConfig;
use crate::resample::{downsample_2x, upsample_2x, DOWNSAMPLE_DELAY, UPSAMPLE_DELAY};
use crate::vq::Codebook;

/// Frames below this mean power are silence and excluded from training and
/// corpus metrics.
pub const SILENCE_DBFS: f64 = -60.0;

/// SNR values are capped here to keep identical signals finite.
pub const SNR_CAP_DB: f64 = 120.0;

/// RMS dB difference between two envelopes over the grid points inside
/// `band` (Hz, inclusive).
pub fn spectral_distortion(
    reference: &EnvelopeSpectrum,
    test: &EnvelopeSpectrum,
    band: (f64, f64),
) -> Result<f64> {
    let ks = band_grid_points(band)?;
    let mut acc = 0.0;
    for &k in &ks {
        let d = reference.points()[k] - test.points()[k];
        acc += d * d;
    }
    Ok((acc / ks.len() as f64).sqrt())
}

fn band_grid_points(band: (f64, f64)) -> Result<Vec<usize>> {
    let ks: Vec<usize> = (0..ENVELOPE_POINTS)
        .filter(|&k| {
            let f = k as f64 * ENVELOPE_GRID_HZ;
            f >= band.0 && f <= band.1
        })
        .collect();
    if ks.is_empty() {
        return Err(Error::Precondition(format!(
            "band {:?} contains no envelope grid points",
            band
        )));
    }
    Ok(ks)
}

/// Corpus spectral distortion summary.
#[derive(Debug, Clone)]
pub struct DistortionReport {
    pub per_frame: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub frames: usize,
    pub band: (f64, f64),
}

impl DistortionReport {
    fn from_values(mut values: Vec<f64>, band: (f64, f64)) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition(
                "no frames survived silence stripping".into(),
            ));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        values.shrink_to_fit();
        Ok(Self {
            frames: values.len(),
            per_frame: values,
            mean,
            median,
            band,
        })
    }
}

/// Run the envelope codec over a wideband buffer and measure the spectral
/// distortion of the decoded concatenated envelope against the encoder's
/// reference envelope, frame by frame, over `band`. Silent frames are
/// skipped. The narrowband front end is delay-aligned with the wideband
/// framing so the comparison is simultaneous.
pub fn corpus_spectral_distortion(
    wideband: &AudioBuffer,
    cb: &Codebook,
    config: &CodecConfig,
    band: (f64, f64),
) -> Result<DistortionReport> {
    band_grid_points(band)?;
    let nb = downsample_2x(wideband)?;
    let up = upsample_2x(&nb)?;
    // total front-end delay: downsample + upsample group delays
    let lag = 2 * DOWNSAMPLE_DELAY + UPSAMPLE_DELAY;
    let mut aligned: Vec<f64> = up.samples()[lag.min(up.len())..].to_vec();
    aligned.resize(wideband.len(), 0.0);
    let aligned_pre = pre_emphasis(&aligned, config.preemph);

    let n_frames = wideband.len() / FRAME_16K;
    let frame_ids: Vec<usize> = (0..n_frames).collect();
    let preemph = config.preemph;
    let values = exec::ordered_map(&frame_ids, |&i| -> Result<Option<f64>> {
        let wb_frame = &wideband.samples()[i * FRAME_16K..(i + 1) * FRAME_16K];
        let mean_sq = wb_frame.iter().map(|v| v * v).sum::<f64>() / FRAME_16K as f64;
        if mean_sq <= 0.0 || 10.0 * mean_sq.log10() < SILENCE_DBFS {
            return Ok(None);
        }
        let reference = match lpc_analysis(wb_frame, WIDEBAND_LPC_ORDER, preemph) {
            Ok(model) => crate::highband::frame_envelope(&model),
            Err(_) => return Ok(None),
        };
        let code = encode_envelope(wb_frame, cb, preemph)?;
        let up_frame = &aligned_pre[i * FRAME_16K..(i + 1) * FRAME_16K];
        let local = local_analysis(up_frame);
        let (_, decoded) = decode_envelope(code, cb, &local)?;
        Ok(Some(spectral_distortion(&reference, &decoded, band)?))
    });

    let mut flat = Vec::new();
    for v in values {
        if let Some(sd) = v? {
            flat.push(sd);
        }
    }
    DistortionReport::from_values(flat, band)
}

/// Mean absolute dB error between predicted and reference harmonic gain
/// pairs, averaged over frames and both harmonics.
pub fn harmonic_gain_error(predicted: &[[f64; 2]], target: &[[f64; 2]]) -> Result<f64> {
    if predicted.is_empty() {
        return Err(Error::Precondition("no frames to compare".into()));
    }
    if predicted.len() != target.len() {
        return Err(Error::Precondition(format!(
            "{} predictions vs {} targets",
            predicted.len(),
            target.len()
        )));
    }
    let total: f64 = predicted
        .iter()
        .zip(target)
        .map(|(p, t)| (p[0] - t[0]).abs() + (p[1] - t[1]).abs())
        .sum();
    Ok(total / (2.0 * predicted.len() as f64))
}

/// Band-limited SNR: both signals pass the same band-pass (transition
/// bands folded inside the stated edges so out-of-band content is
/// rejected), then SNR = 10 log10(sum x_b^2 / sum (x_b - y_b)^2), capped
/// at [`SNR_CAP_DB`].
pub fn band_snr(x: &AudioBuffer, y: &AudioBuffer, band: (f64, f64)) -> Result<f64> {
    if x.sample_rate() != y.sample_rate() {
        return Err(Error::Precondition("sample rates differ".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Precondition(format!(
            "lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let rate = x.sample_rate() as f64;
    // transitions fold inside the stated edges: full rejection is reached
    // at the band limits themselves
    let inset = 200.0;
    if band.1 - band.0 <= 2.0 * inset {
        return Err(Error::Precondition(format!("band {band:?} too narrow")));
    }
    let filter = kaiser_bandpass(639, band.0 + inset, band.1 - inset, rate, 8.0);
    let delay = (filter.taps().len() - 1) / 2;
    if x.len() <= 2 * delay {
        return Err(Error::Precondition(format!(
            "signals too short ({} samples) for the measurement filter",
            x.len()
        )));
    }
    let xb = filter.convolve_centered(x.samples());
    let yb = filter.convolve_centered(y.samples());
    // only full-support samples count; edges carry partial convolutions
    let span = delay..x.len() - delay;
    let sig: f64 = xb[span.clone()].iter().map(|v| v * v).sum();
    if sig <= 0.0 {
        return Err(Error::Degenerate("reference has no energy in band".into()));
    }
    let err: f64 = xb[span.clone()]
        .iter()
        .zip(&yb[span])
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if err <= 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (sig / err).log10()).min(SNR_CAP_DB))
}

/// One point of a spectrum dump.
pub type SpectrumPoint = (f64, f64); // (Hz, dB)

/// Hanning-windowed periodogram of `window_ms` milliseconds of signal
/// starting at `at_sample`. The linear power values satisfy Parseval:
/// their sum equals the windowed time-domain energy. `offset_db` shifts
/// the dB values for overlay plots.
pub fn dump_spectrum(
    buf: &AudioBuffer,
    window_ms: f64,
    at_sample: usize,
    offset_db: f64,
) -> Result<Vec<SpectrumPoint>> {
    let rate = buf.sample_rate() as f64;
    let len = (window_ms * rate / 1000.0).round() as usize;
    if len < 2 {
        return Err(Error::Precondition(format!(
            "window of {window_ms} ms too short"
        )));
    }
    if at_sample + len > buf.len() {
        return Err(Error::Precondition(format!(
            "window [{at_sample}, {}) exceeds signal length {}",
            at_sample + len,
            buf.len()
        )));
    }
    let window = hanning_window(len);
    let mut fft_buf: Vec<Complex<f64>> = buf.samples()[at_sample..at_sample + len]
        .iter()
        .zip(&window)
        .map(|(x, w)| Complex::new(x * w, 0.0))
        .collect();
    let fft: Arc<dyn rustfft::Fft<f64>> = FftPlanner::new().plan_fft_forward(len);
    fft.process(&mut fft_buf);

    let mut out = Vec::with_capacity(len / 2 + 1);
    for (k, c) in fft_buf[..len / 2 + 1].iter().enumerate() {
        let mut p = c.norm_sqr() / len as f64;
        if k != 0 && !(len % 2 == 0 && k == len / 2) {
            p *= 2.0; // one-sided spectrum
        }
        let db = 10.0 * (p + 1e-20).log10() + offset_db;
        out.push((k as f64 * rate / len as f64, db));
    }
    Ok(out)
}

/// Per-frame analysis record pairing predictor features with training
/// targets. Produced with the narrowband front end delay-aligned to the
/// wideband framing.
#[derive(Debug, Clone)]
pub struct FrameRecord {
    pub frame_index: usize,
    pub features: FeatureVector,
    pub pitch: PitchInfo,
    /// dB gains of the first two low-band harmonics; `None` for unvoiced
    /// frames.
    pub targets_db: Option<[f64; 2]>,
    /// Frame mean power below [`SILENCE_DBFS`].
    pub silent: bool,
}

/// Analyze a wideband buffer into per-frame features and harmonic targets.
pub fn analyze_corpus_frames(wideband: &AudioBuffer) -> Result<Vec<FrameRecord>> {
    let nb = downsample_2x(wideband)?;
    // align the narrowband stream with the wideband framing
    let mut nb_aligned: Vec<f64> = nb.samples()[DOWNSAMPLE_DELAY.min(nb.len())..].to_vec();
    nb_aligned.resize(wideband.len() / 2, 0.0);

    let n_frames = wideband.len() / FRAME_16K;
    let frame_ids: Vec<usize> = (0..n_frames).collect();
    let mfcc = MfccAnalyzer::new();
    let extractor = TargetExtractor::new();

    let records = exec::ordered_map(&frame_ids, |&i| {
        let wb_frame = &wideband.samples()[i * FRAME_16K..(i + 1) * FRAME_16K];
        let nb_frame = &nb_aligned[i * FRAME_8K..(i + 1) * FRAME_8K];

        let mut pitch_frame = vec![0.0; PITCH_FRAME];
        if i > 0 {
            pitch_frame[..FRAME_8K].copy_from_slice(&nb_aligned[(i - 1) * FRAME_8K..i * FRAME_8K]);
        }
        pitch_frame[FRAME_8K..].copy_from_slice(nb_frame);
        let pitch = estimate_pitch(&pitch_frame);

        let features = assemble_features(mfcc.mfcc16(nb_frame), pitch);
        let targets_db = extractor.extract(wb_frame, pitch).map(|amps| amps.gains_db());
        let mean_sq = wb_frame.iter().map(|v| v * v).sum::<f64>() / FRAME_16K as f64;
        let silent = mean_sq <= 0.0 || 10.0 * mean_sq.log10() < SILENCE_DBFS;

        FrameRecord {
            frame_index: i,
            features,
            pitch,
            targets_db,
            silent,
        }
    });
    Ok(records)
}

/// Level-normalized high-band envelope vectors of all non-silent frames,
/// the training material for the envelope codebook.
pub fn envelope_training_vectors(wideband: &AudioBuffer, preemph: f64) -> Result<Vec<Vec<f64>>> {
    let n_frames = wideband.len() / FRAME_16K;
    let frame_ids: Vec<usize> = (0..n_frames).collect();
    let vectors = exec::ordered_map(&frame_ids, |&i| -> Result<Option<Vec<f64>>> {
        let frame = &wideband.samples()[i * FRAME_16K..(i + 1) * FRAME_16K];
        let mean_sq = frame.iter().map(|v| v * v).sum::<f64>() / FRAME_16K as f64;
        if mean_sq <= 0.0 || 10.0 * mean_sq.log10() < SILENCE_DBFS {
            return Ok(None);
        }
        Ok(Some(crate::highband::highband_envelope_vector(
            frame, preemph,
        )?))
    });
    let mut out = Vec::new();
    for v in vectors {
        if let Some(vec) = v? {
            out.push(vec);
        }
    }
    Ok(out)
}

/// Helper tying [`analyze_corpus_frames`] to a trained network: predicted
/// and reference dB gains for every voiced, non-silent frame.
pub fn harmonic_eval_pairs(
    wideband: &AudioBuffer,
    net: &crate::mlp::MlpNetwork,
) -> Result<(Vec<[f64; 2]>, Vec<[f64; 2]>)> {
    let mut predicted = Vec::new();
    let mut reference = Vec::new();
    for rec in analyze_corpus_frames(wideband)? {
        if rec.silent {
            continue;
        }
        if let Some(t) = rec.targets_db {
            predicted.push(net.forward(&rec.features)?);
            reference.push(t);
        }
    }
    if predicted.is_empty() {
        return Err(Error::Precondition("no voiced frames in corpus".into()));
    }
    Ok((predicted, reference))
}

/// Decode the envelope-coding path only, returning the per-frame code
/// stream. Shared by `corpus_spectral_distortion` callers that also need
/// indices.
pub fn frame_codes(wideband: &AudioBuffer, cb: &Codebook, preemph: f64) -> Result<Vec<HighbandFrameCode>> {
    let n_frames = wideband.len() / FRAME_16K;
    let frame_ids: Vec<usize> = (0..n_frames).collect();
    exec::ordered_map(&frame_ids, |&i| {
        encode_envelope(
            &wideband.samples()[i * FRAME_16K..(i + 1) * FRAME_16K],
            cb,
            preemph,
        )
    })
    .into_iter()
    .collect()
}
