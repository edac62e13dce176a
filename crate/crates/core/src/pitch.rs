//! Open-loop pitch estimation from narrowband speech.
//!
//! Normalized autocorrelation over integer lags 20..=160 samples at 8 kHz
//! (50-400 Hz), with a sub-multiple check against pitch period doubling.

/// Analysis frame: the current 128-sample codec frame plus 128 samples of
/// history.
pub const PITCH_FRAME: usize = 256;
/// Shortest searched lag (400 Hz).
pub const PITCH_MIN_LAG: usize = 20;
/// Longest searched lag (50 Hz).
pub const PITCH_MAX_LAG: usize = 160;

/// Pitch delay and gain estimated from one narrowband frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchInfo {
    /// Pitch period in samples at 8 kHz, within [20, 160].
    pub delay: f64,
    /// Normalized correlation at the chosen delay, clamped to [0, 1].
    pub gain: f64,
}

impl PitchInfo {
    /// Fundamental frequency in Hz implied by the delay.
    pub fn f0_hz(&self) -> f64 {
        8_000.0 / self.delay
    }
}

/// Tunable constants for the estimator.
#[derive(Debug, Clone, Copy)]
pub struct PitchConfig {
    /// A sub-multiple lag T/2 replaces T when rho(T/2) >= this fraction of
    /// rho(T).
    pub submultiple_threshold: f64,
    /// Frames with energy below this are treated as silence.
    pub silence_energy: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            submultiple_threshold: 0.85,
            silence_energy: 1e-8,
        }
    }
}

/// Estimate pitch from a 256-sample narrowband frame (history + current).
///
/// Panics if the frame is not [`PITCH_FRAME`] samples long.
pub fn estimate_pitch(frame: &[f64]) -> PitchInfo {
    estimate_pitch_with(frame, &PitchConfig::default())
}

pub fn estimate_pitch_with(frame: &[f64], config: &PitchConfig) -> PitchInfo {
    assert_eq!(frame.len(), PITCH_FRAME, "pitch frame must be 256 samples");

    let energy: f64 = frame.iter().map(|x| x * x).sum();
    if energy < config.silence_energy {
        return PitchInfo {
            delay: 80.0,
            gain: 0.0,
        };
    }

    let mut best_lag = PITCH_MIN_LAG;
    let mut best_rho = f64::NEG_INFINITY;
    for lag in PITCH_MIN_LAG..=PITCH_MAX_LAG {
        let rho = normalized_correlation(frame, lag);
        if rho > best_rho {
            best_rho = rho;
            best_lag = lag;
        }
    }

    // sub-multiple correction against period doubling
    loop {
        let half = best_lag / 2;
        if half < PITCH_MIN_LAG {
            break;
        }
        // for odd lags both roundings of T/2 are plausible
        let candidates = [half, best_lag - half];
        let mut improved = false;
        for &cand in &candidates {
            if cand < PITCH_MIN_LAG || cand == best_lag {
                continue;
            }
            let rho = normalized_correlation(frame, cand);
            if rho >= config.submultiple_threshold * best_rho {
                best_lag = cand;
                best_rho = rho;
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }

    PitchInfo {
        delay: best_lag as f64,
        gain: best_rho.clamp(0.0, 1.0),
    }
}

/// rho(T) = sum x[n] x[n-T] / sqrt(sum x[n]^2 sum x[n-T]^2), summed over
/// the part of the frame where both indices are valid.
fn normalized_correlation(frame: &[f64], lag: usize) -> f64 {
    let n = frame.len();
    let mut cross = 0.0;
    let mut e_cur = 0.0;
    let mut e_lag = 0.0;
    for i in lag..n {
        cross += frame[i] * frame[i - lag];
        e_cur += frame[i] * frame[i];
        e_lag += frame[i - lag] * frame[i - lag];
    }
    let denom = (e_cur * e_lag).sqrt();
    if denom <= 0.0 {
        0.0
    } else {
        cross / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_frame(freq: f64) -> Vec<f64> {
        (0..PITCH_FRAME)
            .map(|n| (2.0 * std::f64::consts::PI * freq * n as f64 / 8000.0).sin())
            .collect()
    }

    #[test]
    fn hundred_hertz_sine() {
        let p = estimate_pitch(&sine_frame(100.0));
        assert!((p.delay - 80.0).abs() <= 0.5, "delay {}", p.delay);
        assert!(p.gain >= 0.99, "gain {}", p.gain);
    }

    #[test]
    fn silence_rule() {
        let p = estimate_pitch(&vec![0.0; PITCH_FRAME]);
        assert_eq!(p.delay, 80.0);
        assert_eq!(p.gain, 0.0);
    }

    #[test]
    fn white_noise_has_low_gain() {
        let mut seed = 99u64;
        let mut low = 0;
        for _ in 0..100 {
            let frame: Vec<f64> = (0..PITCH_FRAME)
                .map(|_| {
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (seed >> 33) as f64 / (1u64 << 30) as f64 - 1.0
                })
                .collect();
            if estimate_pitch(&frame).gain < 0.4 {
                low += 1;
            }
        }
        assert!(low >= 95, "only {low}/100 noise frames below 0.4");
    }

    #[test]
    fn exact_periodic_frames_recover_period() {
        let mut seed = 1234u64;
        for period in [20usize, 33, 47, 80, 121, 160] {
            // one random cycle tiled across the frame
            let cycle: Vec<f64> = (0..period)
                .map(|_| {
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
                    (seed >> 33) as f64 / (1u64 << 30) as f64 - 1.0
                })
                .collect();
            let frame: Vec<f64> = (0..PITCH_FRAME).map(|n| cycle[n % period]).collect();
            let p = estimate_pitch(&frame);
            assert_eq!(p.delay, period as f64, "period {period}");
            assert!(p.gain >= 0.99);
        }
    }

    #[test]
    fn scale_invariance() {
        let frame = sine_frame(123.0);
        let scaled: Vec<f64> = frame.iter().map(|x| x * 37.5).collect();
        let a = estimate_pitch(&frame);
        let b = estimate_pitch(&scaled);
        assert_eq!(a.delay, b.delay);
        assert!((a.gain - b.gain).abs() < 1e-12);
    }

    #[test]
    fn gain_always_clamped() {
        // pathological ramp
        let frame: Vec<f64> = (0..PITCH_FRAME).map(|n| n as f64).collect();
        let p = estimate_pitch(&frame);
        assert!((0.0..=1.0).contains(&p.gain));
    }

    #[test]
    #[should_panic]
    fn wrong_frame_size_panics() {
        estimate_pitch(&[0.0; 100]);
    }
}
