//! Deterministic test signals: tones, noise, and a formant-synthesis
//! speech-like generator for desk-scale training and evaluation runs.
//!
//! The speech generator strings together voiced, unvoiced and silent
//! segments. Voiced segments drive drifting formant resonators with a
//! tilted glottal pulse train (plus jitter, shimmer and aspiration);
//! unvoiced segments shape noise with one or two broad resonators. It is
//! not speech, but its envelope and pitch statistics are wideband-speech-
//! like, which is what the trainers and metrics need.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::AudioBuffer;

/// Pure sine tone.
pub fn sine(freq_hz: f64, amplitude: f64, len: usize, sample_rate: u32) -> AudioBuffer {
    let w = 2.0 * std::f64::consts::PI * freq_hz / sample_rate as f64;
    AudioBuffer::new(
        (0..len).map(|n| amplitude * (w * n as f64).sin()).collect(),
        sample_rate,
    )
    .expect("sine is finite")
}

/// Uniform white noise in [-amplitude, amplitude].
pub fn white_noise(amplitude: f64, len: usize, sample_rate: u32, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AudioBuffer::new(
        (0..len)
            .map(|_| amplitude * rng.random_range(-1.0..1.0))
            .collect(),
        sample_rate,
    )
    .expect("noise is finite")
}

/// Two-pole resonator at `freq` Hz with bandwidth `bw` Hz.
#[derive(Debug, Clone, Copy)]
struct Resonator {
    c1: f64,
    c2: f64,
    gain: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bw: f64, fs: f64) -> Self {
        let r = (-std::f64::consts::PI * bw / fs).exp();
        let theta = 2.0 * std::f64::consts::PI * freq / fs;
        Self {
            c1: 2.0 * r * theta.cos(),
            c2: -r * r,
            gain: (1.0 - r).max(1e-4),
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn retune(&mut self, freq: f64, bw: f64, fs: f64) {
        let r = (-std::f64::consts::PI * bw / fs).exp();
        let theta = 2.0 * std::f64::consts::PI * freq / fs;
        self.c1 = 2.0 * r * theta.cos();
        self.c2 = -r * r;
        self.gain = (1.0 - r).max(1e-4);
    }

    fn tick(&mut self, x: f64) -> f64 {
        let y = self.gain * x + self.c1 * self.y1 + self.c2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

const FS: f64 = 16_000.0;

/// Formant frequency ranges (Hz) and bandwidth ranges for voiced segments.
const FORMANT_RANGES: [(f64, f64, f64, f64); 5] = [
    (280.0, 850.0, 50.0, 110.0),
    (900.0, 2300.0, 70.0, 160.0),
    (2400.0, 3400.0, 100.0, 220.0),
    (3600.0, 5000.0, 150.0, 320.0),
    (5200.0, 7200.0, 250.0, 500.0),
];

/// Generate `seconds` of deterministic speech-like audio at 16 kHz.
pub fn speech_like(seconds: f64, seed: u64) -> AudioBuffer {
    let total = (seconds * FS).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(total);

    // per-"speaker" traits, redrawn every few seconds
    let mut base_f0 = rng.random_range(85.0..230.0);
    let mut formant_scale = rng.random_range(0.85..1.15);
    let mut speaker_left = (rng.random_range(2.0..5.0) * FS) as usize;

    while out.len() < total {
        if speaker_left == 0 {
            base_f0 = rng.random_range(85.0..230.0);
            formant_scale = rng.random_range(0.85..1.15);
            speaker_left = (rng.random_range(2.0..5.0) * FS) as usize;
        }
        let kind = rng.random_range(0.0..1.0);
        let segment = if kind < 0.55 {
            voiced_segment(&mut rng, base_f0, formant_scale)
        } else if kind < 0.80 {
            unvoiced_segment(&mut rng)
        } else {
            vec![0.0; (rng.random_range(0.05..0.25) * FS) as usize]
        };
        speaker_left = speaker_left.saturating_sub(segment.len());
        out.extend(segment);
    }
    out.truncate(total);

    // keep headroom
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let scale = 0.6 / peak;
        for v in out.iter_mut() {
            *v *= scale;
        }
    }
    AudioBuffer::new(out, 16_000).expect("generator output is finite")
}

fn voiced_segment(rng: &mut ChaCha8Rng, base_f0: f64, scale: f64) -> Vec<f64> {
    let len = (rng.random_range(0.10..0.35) * FS) as usize;
    let f0_start = base_f0 * rng.random_range(0.85..1.2);
    let f0_end = (f0_start * rng.random_range(0.8..1.25)).clamp(60.0, 320.0);

    // formant tracks drift linearly across the segment
    let mut start = [0.0; 5];
    let mut end = [0.0; 5];
    let mut bws = [0.0; 5];
    for (i, (lo, hi, blo, bhi)) in FORMANT_RANGES.iter().enumerate() {
        start[i] = rng.random_range(*lo..*hi) * scale;
        let drift = rng.random_range(0.85..1.18);
        end[i] = (start[i] * drift).clamp(*lo * 0.9 * scale, *hi * 1.05 * scale);
        bws[i] = rng.random_range(*blo..*bhi);
    }
    let mut resonators: Vec<Resonator> = (0..5)
        .map(|i| Resonator::new(start[i], bws[i], FS))
        .collect();
    // heavier formants get more weight; upper formants carry less energy
    let weights = [1.0, 0.63, 0.4, 0.25, 0.16];

    let level = 10f64.powf(rng.random_range(-26.0..-6.0) / 20.0);
    let aspiration = 10f64.powf(rng.random_range(-40.0..-26.0) / 20.0);
    let jitter = rng.random_range(0.0..0.025);
    let shimmer_db = rng.random_range(0.0..1.5);

    let mut phase = 1.0f64; // trigger a pulse at start
    let mut lp1 = 0.0f64;
    let mut lp2 = 0.0f64;
    let mut seg = Vec::with_capacity(len);
    for n in 0..len {
        let frac = n as f64 / len as f64;
        let f0 = f0_start + (f0_end - f0_start) * frac;
        if n % 64 == 0 {
            for (i, r) in resonators.iter_mut().enumerate() {
                let f = start[i] + (end[i] - start[i]) * frac;
                r.retune(f, bws[i], FS);
            }
        }

        // glottal source: impulse train with jitter/shimmer through a
        // two-pole low-pass for spectral tilt
        phase += f0 / FS;
        let mut src = 0.0;
        if phase >= 1.0 {
            phase -= 1.0 + rng.random_range(-jitter..=jitter);
            src = 10f64.powf(rng.random_range(-shimmer_db..=shimmer_db) / 20.0);
        }
        lp1 = 0.82 * lp1 + src;
        lp2 = 0.82 * lp2 + lp1;
        let glottal = lp2 + aspiration * rng.random_range(-1.0..1.0);

        let mut v = 0.0;
        for (r, w) in resonators.iter_mut().zip(&weights) {
            v += w * r.tick(glottal);
        }

        // raised-cosine attack and release
        let env = edge_envelope(n, len, (0.015 * FS) as usize);
        seg.push(v * level * env * 10.0);
    }
    seg
}

fn unvoiced_segment(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = (rng.random_range(0.06..0.22) * FS) as usize;
    let centers = [
        rng.random_range(1500.0..4000.0),
        rng.random_range(3500.0..7200.0),
    ];
    let mut r1 = Resonator::new(centers[0], rng.random_range(400.0..1200.0), FS);
    let mut r2 = Resonator::new(centers[1], rng.random_range(500.0..1600.0), FS);
    let mix = rng.random_range(0.2..0.8);
    let level = 10f64.powf(rng.random_range(-34.0..-14.0) / 20.0);
    let tilt = rng.random_range(0.3..0.9);

    let mut prev = 0.0;
    let mut seg = Vec::with_capacity(len);
    for n in 0..len {
        let white = rng.random_range(-1.0..1.0);
        let emphasized = white - tilt * prev;
        prev = white;
        let v = mix * r1.tick(emphasized) + (1.0 - mix) * r2.tick(emphasized);
        let env = edge_envelope(n, len, (0.01 * FS) as usize);
        seg.push(v * level * env * 12.0);
    }
    seg
}

fn edge_envelope(n: usize, len: usize, ramp: usize) -> f64 {
    let ramp = ramp.max(1).min(len / 2);
    let pos = if n < ramp {
        n as f64 / ramp as f64
    } else if n + ramp >= len {
        (len - 1 - n) as f64 / ramp as f64
    } else {
        return 1.0;
    };
    0.5 - 0.5 * (std::f64::consts::PI * pos).cos()
}
