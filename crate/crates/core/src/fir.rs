//! FIR filters: Kaiser-window designs, application modes, tap files.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Finite impulse response filter. Linear-phase (symmetric, odd-length)
/// designs are preferred; arbitrary tap vectors are accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
    description: String,
}

impl FirFilter {
    pub fn new(taps: Vec<f64>, description: impl Into<String>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Precondition("FIR filter needs at least 1 tap".into()));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::Precondition("FIR taps must be finite".into()));
        }
        Ok(Self {
            taps,
            description: description.into(),
        })
    }

    /// Identity (pass-through) filter.
    pub fn identity() -> Self {
        Self {
            taps: vec![1.0],
            description: "identity".into(),
        }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Group delay of a linear-phase filter, (taps - 1) / 2 input samples.
    pub fn group_delay(&self) -> f64 {
        (self.taps.len() as f64 - 1.0) / 2.0
    }

    /// Causal linear convolution truncated to the input length.
    pub fn apply(&self, buf: &AudioBuffer) -> AudioBuffer {
        let out = self.convolve_truncated(buf.samples());
        AudioBuffer::new(out, buf.sample_rate()).expect("filtering preserves validity")
    }

    /// Causal convolution on a raw slice, output length equals input length.
    pub fn convolve_truncated(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (n, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            let kmax = self.taps.len().min(n + 1);
            for k in 0..kmax {
                acc += self.taps[k] * x[n - k];
            }
            *out = acc;
        }
        y
    }

    /// Group-delay-compensated convolution: output sample n is centred on
    /// input sample n. Samples beyond either edge are taken as zero. Used
    /// for measurement filters where alignment matters more than causality.
    pub fn convolve_centered(&self, x: &[f64]) -> Vec<f64> {
        let delay = (self.taps.len() - 1) / 2;
        let mut y = vec![0.0; x.len()];
        for (n, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &t) in self.taps.iter().enumerate() {
                let idx = n as isize + delay as isize - k as isize;
                if idx >= 0 && (idx as usize) < x.len() {
                    acc += t * x[idx as usize];
                }
            }
            *out = acc;
        }
        y
    }

    /// Magnitude response at a single frequency.
    pub fn magnitude_at(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        let omega = 2.0 * std::f64::consts::PI * freq_hz / sample_rate;
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &t) in self.taps.iter().enumerate() {
            re += t * (omega * k as f64).cos();
            im -= t * (omega * k as f64).sin();
        }
        (re * re + im * im).sqrt()
    }

    /// Load taps from a text file, one decimal value per line, `#` comments
    /// and blank lines allowed.
    pub fn load_taps(path: impl AsRef<Path>, description: impl Into<String>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut taps = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            let trimmed = line.split('#').next().unwrap_or("").trim();
            if trimmed.is_empty() {
                continue;
            }
            let tap: f64 = trimmed.parse().map_err(|_| {
                Error::Format(format!("tap file line {}: not a number: {trimmed:?}", lineno + 1))
            })?;
            taps.push(tap);
        }
        Self::new(taps, description)
    }

    pub fn save_taps(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "# {}", self.description)?;
        for t in &self.taps {
            writeln!(file, "{t:.17}")?;
        }
        Ok(())
    }
}

/// Streaming FIR state: the last `taps - 1` input samples.
#[derive(Debug, Clone)]
pub struct FirState {
    history: Vec<f64>,
}

impl FirState {
    pub fn new(filter: &FirFilter) -> Self {
        Self {
            history: vec![0.0; filter.taps().len().saturating_sub(1)],
        }
    }

    /// Filter one frame, carrying history across calls. Splitting a signal
    /// into frames and processing them in order is bit-identical to
    /// filtering the whole signal at once.
    pub fn process(&mut self, filter: &FirFilter, frame: &[f64]) -> Vec<f64> {
        let taps = filter.taps();
        let hist_len = self.history.len();
        debug_assert_eq!(hist_len, taps.len() - 1);
        let mut y = vec![0.0; frame.len()];
        for (n, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let x = if k <= n {
                    frame[n - k]
                } else {
                    // reach back into history: sample n - k of the virtual
                    // concatenated signal
                    let back = k - n; // 1..=hist_len
                    if back > hist_len {
                        0.0
                    } else {
                        self.history[hist_len - back]
                    }
                };
                acc += t * x;
            }
            *out = acc;
        }
        // update history with the tail of the concatenated signal
        if frame.len() >= hist_len {
            self.history.copy_from_slice(&frame[frame.len() - hist_len..]);
        } else {
            self.history.rotate_left(frame.len());
            let start = hist_len - frame.len();
            self.history[start..].copy_from_slice(frame);
        }
        y
    }

    pub fn reset(&mut self) {
        self.history.fill(0.0);
    }
}

/// Fixed-length sample delay line (linear-phase alignment between paths).
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: std::collections::VecDeque<f64>,
}

impl DelayLine {
    pub fn new(delay: usize) -> Self {
        Self {
            buf: std::collections::VecDeque::from(vec![0.0; delay]),
        }
    }

    pub fn process(&mut self, frame: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(frame.len());
        for &x in frame {
            self.buf.push_back(x);
            out.push(self.buf.pop_front().expect("delay line never empty"));
        }
        out
    }

    pub fn reset(&mut self) {
        for v in self.buf.iter_mut() {
            *v = 0.0;
        }
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

/// Kaiser window of the given length.
pub fn kaiser_window(len: usize, beta: f64) -> Vec<f64> {
    let denom = bessel_i0(beta);
    let m = (len - 1) as f64;
    (0..len)
        .map(|n| {
            let r = 2.0 * n as f64 / m - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / denom
        })
        .collect()
}

/// Windowed-sinc low-pass with unity DC gain.
pub fn kaiser_lowpass(num_taps: usize, cutoff_hz: f64, sample_rate: f64, beta: f64) -> FirFilter {
    assert!(num_taps % 2 == 1, "linear-phase design needs odd tap count");
    assert!(cutoff_hz > 0.0 && cutoff_hz < sample_rate / 2.0);
    let fc = cutoff_hz / sample_rate; // cycles per sample
    let mid = (num_taps - 1) as f64 / 2.0;
    let window = kaiser_window(num_taps, beta);
    let mut taps: Vec<f64> = (0..num_taps)
        .map(|n| {
            let t = n as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * fc
            } else {
                (2.0 * std::f64::consts::PI * fc * t).sin() / (std::f64::consts::PI * t)
            };
            sinc * window[n]
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in taps.iter_mut() {
        *t /= sum;
    }
    FirFilter::new(
        taps,
        format!("kaiser lowpass {cutoff_hz} Hz @ {sample_rate} Hz, {num_taps} taps, beta {beta}"),
    )
    .expect("designed taps are finite")
}

/// High-pass by spectral inversion of the complementary low-pass.
pub fn kaiser_highpass(num_taps: usize, cutoff_hz: f64, sample_rate: f64, beta: f64) -> FirFilter {
    let lp = kaiser_lowpass(num_taps, cutoff_hz, sample_rate, beta);
    let mid = (num_taps - 1) / 2;
    let taps: Vec<f64> = lp
        .taps()
        .iter()
        .enumerate()
        .map(|(n, &t)| if n == mid { 1.0 - t } else { -t })
        .collect();
    FirFilter::new(
        taps,
        format!("kaiser highpass {cutoff_hz} Hz @ {sample_rate} Hz, {num_taps} taps, beta {beta}"),
    )
    .expect("designed taps are finite")
}

/// Band-pass as the difference of two low-passes.
pub fn kaiser_bandpass(
    num_taps: usize,
    low_hz: f64,
    high_hz: f64,
    sample_rate: f64,
    beta: f64,
) -> FirFilter {
    assert!(low_hz < high_hz);
    let lp_hi = kaiser_lowpass(num_taps, high_hz, sample_rate, beta);
    let lp_lo = kaiser_lowpass(num_taps, low_hz, sample_rate, beta);
    let taps: Vec<f64> = lp_hi
        .taps()
        .iter()
        .zip(lp_lo.taps())
        .map(|(a, b)| a - b)
        .collect();
    FirFilter::new(
        taps,
        format!("kaiser bandpass {low_hz}-{high_hz} Hz @ {sample_rate} Hz, {num_taps} taps"),
    )
    .expect("designed taps are finite")
}

/// Frequency-sampling design: build a linear-phase filter matching the given
/// magnitude response, specified in dB at uniformly spaced frequencies from
/// 0 to Nyquist inclusive. Utility for user-supplied shaping filters.
pub fn design_from_magnitudes_db(mags_db: &[f64], num_taps: usize) -> Result<FirFilter> {
    if mags_db.len() < 2 {
        return Err(Error::Precondition(
            "need at least 2 magnitude points (DC and Nyquist)".into(),
        ));
    }
    if num_taps % 2 == 0 {
        return Err(Error::Precondition("tap count must be odd".into()));
    }
    if mags_db.iter().any(|m| !m.is_finite()) {
        return Err(Error::Precondition("magnitudes must be finite".into()));
    }
    let mid = (num_taps - 1) as f64 / 2.0;
    let grid = mags_db.len() - 1;
    // inverse DFT of the piecewise-linear magnitude over a dense grid,
    // tapered with a Hann window to control ripple
    let dense = 8 * num_taps.next_power_of_two();
    let mut taps = vec![0.0; num_taps];
    for (n, tap) in taps.iter_mut().enumerate() {
        let t = n as f64 - mid;
        let mut acc = 0.0;
        for k in 0..=dense / 2 {
            let f = k as f64 / dense as f64; // 0..0.5 cycles/sample
            let pos = f * 2.0 * grid as f64;
            let i = (pos.floor() as usize).min(grid - 1);
            let frac = pos - i as f64;
            let db = mags_db[i] * (1.0 - frac) + mags_db[i + 1] * frac;
            let mag = 10f64.powf(db / 20.0);
            let weight = if k == 0 || k == dense / 2 { 1.0 } else { 2.0 };
            acc += weight * mag * (2.0 * std::f64::consts::PI * f * t).cos();
        }
        *tap = acc / dense as f64;
    }
    let window = crate::dsp::hanning_window(num_taps + 2);
    for (n, tap) in taps.iter_mut().enumerate() {
        *tap *= window[n + 1];
    }
    FirFilter::new(taps, format!("frequency-sampled, {num_taps} taps"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_tap_is_identity() {
        let f = FirFilter::new(vec![1.0], "id").unwrap();
        let x = AudioBuffer::new(vec![0.5, -0.25, 0.125], 8_000).unwrap();
        assert_eq!(f.apply(&x).samples(), x.samples());
    }

    #[test]
    fn single_delay_tap_shifts_by_one() {
        let f = FirFilter::new(vec![0.0, 1.0], "delay").unwrap();
        let x = AudioBuffer::new(vec![1.0, 2.0, 3.0], 8_000).unwrap();
        assert_eq!(f.apply(&x).samples(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn impulse_response_equals_taps() {
        let taps = vec![0.25, -0.5, 1.0, -0.5, 0.25];
        let f = FirFilter::new(taps.clone(), "t").unwrap();
        let mut x = vec![0.0; 5];
        x[0] = 1.0;
        assert_eq!(f.convolve_truncated(&x), taps);
    }

    #[test]
    fn empty_taps_rejected() {
        assert!(FirFilter::new(vec![], "bad").is_err());
    }

    #[test]
    fn streaming_matches_whole_signal() {
        let f = kaiser_lowpass(31, 1000.0, 8000.0, 6.0);
        let x: Vec<f64> = (0..400).map(|n| ((n * n) % 17) as f64 / 17.0 - 0.5).collect();
        let whole = f.convolve_truncated(&x);
        let mut state = FirState::new(&f);
        let mut framed = Vec::new();
        for chunk in x.chunks(64) {
            framed.extend(state.process(&f, chunk));
        }
        assert_eq!(whole, framed);
    }

    #[test]
    fn streaming_frames_smaller_than_history() {
        let f = kaiser_lowpass(31, 1000.0, 8000.0, 6.0);
        let x: Vec<f64> = (0..100).map(|n| (n as f64 * 0.3).sin()).collect();
        let whole = f.convolve_truncated(&x);
        let mut state = FirState::new(&f);
        let mut framed = Vec::new();
        for chunk in x.chunks(7) {
            framed.extend(state.process(&f, chunk));
        }
        assert_eq!(whole, framed);
    }

    #[test]
    fn kaiser_lowpass_response() {
        let f = kaiser_lowpass(193, 3750.0, 16_000.0, 8.0);
        // passband flat
        for freq in [100.0, 1000.0, 2000.0, 3000.0, 3400.0] {
            let db = 20.0 * f.magnitude_at(freq, 16_000.0).log10();
            assert!(db.abs() < 0.1, "passband deviation {db} dB at {freq} Hz");
        }
        // stopband deep
        for freq in [4100.0, 5000.0, 7000.0] {
            let db = 20.0 * f.magnitude_at(freq, 16_000.0).log10();
            assert!(db < -60.0, "stopband only {db} dB at {freq} Hz");
        }
    }

    #[test]
    fn kaiser_highpass_response() {
        let f = kaiser_highpass(255, 3420.0, 16_000.0, 8.0);
        for freq in [1000.0, 2500.0, 3000.0, 3200.0] {
            let db = 20.0 * f.magnitude_at(freq, 16_000.0).log10();
            assert!(db < -50.0, "stopband only {db} dB at {freq} Hz");
        }
        for freq in [3600.0, 5000.0, 7500.0] {
            let db = 20.0 * f.magnitude_at(freq, 16_000.0).log10();
            assert!(db.abs() < 0.5, "passband deviation {db} dB at {freq} Hz");
        }
    }

    #[test]
    fn delay_line_shifts() {
        let mut d = DelayLine::new(3);
        let out = d.process(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(out, vec![0.0, 0.0, 0.0, 1.0, 2.0]);
        let out2 = d.process(&[6.0]);
        assert_eq!(out2, vec![3.0]);
    }

    #[test]
    fn tap_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("taps.txt");
        let f = kaiser_lowpass(31, 1000.0, 8000.0, 6.0);
        f.save_taps(&path).unwrap();
        let g = FirFilter::load_taps(&path, "reloaded").unwrap();
        for (a, b) in f.taps().iter().zip(g.taps()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn tap_file_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("taps.txt");
        std::fs::write(&path, "# comment\n0.5\n\n0.25 # trailing\n").unwrap();
        let f = FirFilter::load_taps(&path, "t").unwrap();
        assert_eq!(f.taps(), &[0.5, 0.25]);
    }

    #[test]
    fn tap_file_bad_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("taps.txt");
        std::fs::write(&path, "0.5\nnot-a-number\n").unwrap();
        assert!(FirFilter::load_taps(&path, "t").is_err());
    }

    #[test]
    fn frequency_sampling_approximates_table() {
        // gentle tilt: -6 dB at DC to 0 dB at Nyquist
        let mags: Vec<f64> = (0..=32).map(|k| -6.0 + 6.0 * k as f64 / 32.0).collect();
        let f = design_from_magnitudes_db(&mags, 63).unwrap();
        for (freq, want_db) in [(0.0, -6.0), (2000.0, -3.0), (4000.0, 0.0)] {
            let got = 20.0 * f.magnitude_at(freq, 8000.0).log10();
            assert!(
                (got - want_db).abs() < 0.5,
                "at {freq} Hz wanted {want_db} dB got {got} dB"
            );
        }
    }
}
