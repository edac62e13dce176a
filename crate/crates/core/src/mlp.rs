//! The 18-10-10-2 perceptron predicting the two low-band harmonic gains in
//! dB, its backpropagation trainer and model files.
//!
//! Hidden layers use tanh; the output layer is linear so predictions are
//! not confined to [-1, 1]. Inputs are z-score normalized with statistics
//! stored in the model file.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mfcc::{FeatureVector, FEATURE_DIM, MFCC_CONFIG_TAG};

const MAGIC: &[u8; 8] = b"BWXMLP1\0";
/// Layer widths, input to output.
pub const LAYER_SIZES: [usize; 4] = [FEATURE_DIM, 10, 10, 2];
/// Output dimensionality (gains for two harmonics).
pub const NUM_OUTPUTS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>, // out x in, row-major
    biases: Vec<f64>,
}

impl Layer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
        }
    }

    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.biases[o];
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            out.push(acc);
        }
    }
}

/// Feature vector with dB-gain targets for supervised training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSample {
    pub features: FeatureVector,
    pub targets: [f64; NUM_OUTPUTS],
}

/// The harmonic-gain predictor network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    layers: Vec<Layer>, // three weight layers for the 18-10-10-2 shape
    feature_means: [f64; FEATURE_DIM],
    feature_stds: [f64; FEATURE_DIM],
    mfcc_tag: String,
}

impl MlpNetwork {
    /// Network with seeded uniform init in +/- sqrt(6 / (fan_in + fan_out))
    /// and pass-through normalization.
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for w in LAYER_SIZES.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut layer = Layer::zeros(fan_in, fan_out);
            for v in layer.weights.iter_mut() {
                *v = rng.random_range(-bound..bound);
            }
            layers.push(layer);
        }
        Self {
            layers,
            feature_means: [0.0; FEATURE_DIM],
            feature_stds: [1.0; FEATURE_DIM],
            mfcc_tag: MFCC_CONFIG_TAG.to_string(),
        }
    }

    pub fn mfcc_tag(&self) -> &str {
        &self.mfcc_tag
    }

    pub fn feature_means(&self) -> &[f64; FEATURE_DIM] {
        &self.feature_means
    }

    pub fn feature_stds(&self) -> &[f64; FEATURE_DIM] {
        &self.feature_stds
    }

    pub fn set_normalization(&mut self, means: [f64; FEATURE_DIM], stds: [f64; FEATURE_DIM]) {
        assert!(stds.iter().all(|s| *s > 0.0), "feature stds must be positive");
        self.feature_means = means;
        self.feature_stds = stds;
    }

    fn normalize(&self, features: &FeatureVector) -> [f64; FEATURE_DIM] {
        let raw = features.as_array();
        let mut out = [0.0; FEATURE_DIM];
        for i in 0..FEATURE_DIM {
            out[i] = (raw[i] - self.feature_means[i]) / self.feature_stds[i];
        }
        out
    }

    /// Predicted dB gains for the two low-band harmonics.
    pub fn forward(&self, features: &FeatureVector) -> Result<[f64; NUM_OUTPUTS]> {
        if !features.is_finite() {
            return Err(Error::Precondition("non-finite feature".into()));
        }
        let x = self.normalize(features);
        let acts = self.activations(&x);
        let out = acts.last().expect("network has layers");
        Ok([out[0], out[1]])
    }

    /// Post-activation values per layer, input excluded.
    fn activations(&self, normalized: &[f64]) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut buf = Vec::new();
        let mut cur: &[f64] = normalized;
        for (li, layer) in self.layers.iter().enumerate() {
            layer.forward(cur, &mut buf);
            if li + 1 < self.layers.len() {
                for v in buf.iter_mut() {
                    *v = v.tanh();
                }
            }
            acts.push(buf.clone());
            cur = acts.last().unwrap();
        }
        acts
    }

    /// Squared-error loss 0.5 |y - t|^2 of one sample.
    fn sample_loss(&self, sample: &TrainingSample) -> f64 {
        let y = self.forward(&sample.features).expect("finite features");
        0.5 * y
            .iter()
            .zip(&sample.targets)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    }

    /// Backpropagated gradient of the sample loss, same shapes as layers.
    fn gradient(&self, sample: &TrainingSample) -> Vec<Layer> {
        let x = self.normalize(&sample.features);
        let acts = self.activations(&x);
        let num = self.layers.len();
        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer::zeros(l.in_dim, l.out_dim))
            .collect();

        // delta of the linear output layer: y - t
        let mut delta: Vec<f64> = acts[num - 1]
            .iter()
            .zip(&sample.targets)
            .map(|(y, t)| y - t)
            .collect();

        for li in (0..num).rev() {
            let input: &[f64] = if li == 0 { &x } else { &acts[li - 1] };
            let layer = &self.layers[li];
            for o in 0..layer.out_dim {
                grads[li].biases[o] = delta[o];
                let row = &mut grads[li].weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (g, xi) in row.iter_mut().zip(input) {
                    *g = delta[o] * xi;
                }
            }
            if li > 0 {
                // propagate through the tanh of the previous layer
                let mut prev = vec![0.0; layer.in_dim];
                for (i, p) in prev.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for o in 0..layer.out_dim {
                        acc += delta[o] * layer.weights[o * layer.in_dim + i];
                    }
                    let a = acts[li - 1][i];
                    *p = acc * (1.0 - a * a);
                }
                delta = prev;
            }
        }
        grads
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(LAYER_SIZES.len() as u32).to_le_bytes());
        for s in LAYER_SIZES {
            out.extend_from_slice(&(s as u32).to_le_bytes());
        }
        let tag = self.mfcc_tag.as_bytes();
        out.extend_from_slice(&(tag.len() as u32).to_le_bytes());
        out.extend_from_slice(tag);
        for v in self.feature_means.iter().chain(&self.feature_stds) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for layer in &self.layers {
            for v in layer.weights.iter().chain(&layer.biases) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::File::create(path)?.write_all(&out)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
            if *pos + n > bytes.len() {
                return Err(Error::Format("model file truncated".into()));
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        let magic = take(&mut pos, 8)?;
        if magic != MAGIC {
            return Err(Error::Format(
                if magic.starts_with(b"BWXMLP") {
                    "unsupported model version".into()
                } else {
                    "bad model magic".into()
                },
            ));
        }
        let n_sizes = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let mut sizes = Vec::with_capacity(n_sizes);
        for _ in 0..n_sizes {
            sizes.push(u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize);
        }
        if sizes != LAYER_SIZES {
            return Err(Error::Format(format!(
                "unsupported layer sizes {sizes:?}, expected {LAYER_SIZES:?}"
            )));
        }
        let tag_len = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let tag = String::from_utf8(take(&mut pos, tag_len)?.to_vec())
            .map_err(|_| Error::Format("model tag is not UTF-8".into()))?;

        let read_f64s = |pos: &mut usize, n: usize| -> Result<Vec<f64>> {
            let raw = take(pos, n * 8)?;
            Ok(raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let means_v = read_f64s(&mut pos, FEATURE_DIM)?;
        let stds_v = read_f64s(&mut pos, FEATURE_DIM)?;
        let mut layers = Vec::new();
        for w in LAYER_SIZES.windows(2) {
            let (in_dim, out_dim) = (w[0], w[1]);
            let weights = read_f64s(&mut pos, in_dim * out_dim)?;
            let biases = read_f64s(&mut pos, out_dim)?;
            layers.push(Layer {
                in_dim,
                out_dim,
                weights,
                biases,
            });
        }
        if pos != bytes.len() {
            return Err(Error::Format(format!(
                "model file has {} trailing bytes",
                bytes.len() - pos
            )));
        }
        let mut means = [0.0; FEATURE_DIM];
        let mut stds = [0.0; FEATURE_DIM];
        means.copy_from_slice(&means_v);
        stds.copy_from_slice(&stds_v);
        let all = means
            .iter()
            .chain(stds.iter())
            .chain(layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases)));
        for v in all {
            if !v.is_finite() {
                return Err(Error::Format("model contains non-finite parameters".into()));
            }
        }
        if stds.iter().any(|s| *s <= 0.0) {
            return Err(Error::Format("model feature stds must be positive".into()));
        }
        Ok(Self {
            layers,
            feature_means: means,
            feature_stds: stds,
            mfcc_tag: tag,
        })
    }

    /// Flat view over all parameters for gradient checking.
    fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    fn param_mut(&mut self, idx: usize) -> &mut f64 {
        let mut i = idx;
        for layer in self.layers.iter_mut() {
            if i < layer.weights.len() {
                return &mut layer.weights[i];
            }
            i -= layer.weights.len();
            if i < layer.biases.len() {
                return &mut layer.biases[i];
            }
            i -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }

    fn grad_at(grads: &[Layer], idx: usize) -> f64 {
        let mut i = idx;
        for layer in grads {
            if i < layer.weights.len() {
                return layer.weights[i];
            }
            i -= layer.weights.len();
            if i < layer.biases.len() {
                return layer.biases[i];
            }
            i -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }
}

/// Optimizer settings. Defaults: lr 1e-3, 200 epochs, batch 32,
/// momentum 0.9.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 32,
            momentum: 0.9,
            seed: 0,
        }
    }
}

/// Loss trajectory from training.
#[derive(Debug, Clone)]
pub struct TrainSummary {
    /// Mean squared error per epoch, measured on pre-update parameters.
    pub epoch_mse: Vec<f64>,
    pub final_mse: f64,
}

/// Train a network by mini-batch gradient descent with momentum,
/// minimizing mean squared error on the dB targets. Deterministic for a
/// given seed: initialization, shuffling and summation order are all fixed.
pub fn train(samples: &[TrainingSample], config: &TrainConfig) -> Result<(MlpNetwork, TrainSummary)> {
    if samples.is_empty() {
        return Err(Error::Precondition("training needs at least one sample".into()));
    }
    if samples
        .iter()
        .any(|s| !s.features.is_finite() || s.targets.iter().any(|t| !t.is_finite()))
    {
        return Err(Error::Precondition("training samples must be finite".into()));
    }

    let mut net = MlpNetwork::new(config.seed);

    // normalization statistics from the training set
    let mut means = [0.0; FEATURE_DIM];
    for s in samples {
        let f = s.features.as_array();
        for (m, v) in means.iter_mut().zip(&f) {
            *m += v;
        }
    }
    for m in means.iter_mut() {
        *m /= samples.len() as f64;
    }
    let mut stds = [0.0; FEATURE_DIM];
    for s in samples {
        let f = s.features.as_array();
        for (sd, (v, m)) in stds.iter_mut().zip(f.iter().zip(&means)) {
            *sd += (v - m) * (v - m);
        }
    }
    for sd in stds.iter_mut() {
        *sd = (*sd / samples.len() as f64).sqrt().max(1e-8);
    }
    net.set_normalization(means, stds);

    let batch = config.batch_size.max(1).min(samples.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut velocity: Vec<Layer> = net
        .layers
        .iter()
        .map(|l| Layer::zeros(l.in_dim, l.out_dim))
        .collect();

    let mut summary = TrainSummary {
        epoch_mse: Vec::with_capacity(config.epochs),
        final_mse: f64::NAN,
    };

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_sq = 0.0;
        for chunk in order.chunks(batch) {
            // accumulate per-sample gradients in fixed order
            let mut acc: Vec<Layer> = net
                .layers
                .iter()
                .map(|l| Layer::zeros(l.in_dim, l.out_dim))
                .collect();
            for &si in chunk {
                let s = &samples[si];
                epoch_sq += 2.0 * net.sample_loss(s); // |y - t|^2
                let g = net.gradient(s);
                for (a, b) in acc.iter_mut().zip(&g) {
                    for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                        *x += y;
                    }
                    for (x, y) in a.biases.iter_mut().zip(&b.biases) {
                        *x += y;
                    }
                }
            }
            let scale = 1.0 / chunk.len() as f64;
            for (layer, (v, g)) in net
                .layers
                .iter_mut()
                .zip(velocity.iter_mut().zip(&acc))
            {
                for ((w, vel), grad) in layer
                    .weights
                    .iter_mut()
                    .zip(v.weights.iter_mut())
                    .zip(&g.weights)
                {
                    *vel = config.momentum * *vel - config.learning_rate * grad * scale;
                    *w += *vel;
                }
                for ((b, vel), grad) in layer
                    .biases
                    .iter_mut()
                    .zip(v.biases.iter_mut())
                    .zip(&g.biases)
                {
                    *vel = config.momentum * *vel - config.learning_rate * grad * scale;
                    *b += *vel;
                }
            }
        }
        summary
            .epoch_mse
            .push(epoch_sq / (samples.len() * NUM_OUTPUTS) as f64);
    }

    let final_sq: f64 = samples.iter().map(|s| 2.0 * net.sample_loss(s)).sum();
    summary.final_mse = final_sq / (samples.len() * NUM_OUTPUTS) as f64;
    Ok((net, summary))
}

/// Compare backpropagation to central finite differences (step 1e-5) over
/// every parameter; returns the maximum relative error. Differences below
/// 1e-8 absolute count as zero.
pub fn gradient_check(net: &MlpNetwork, sample: &TrainingSample) -> f64 {
    const STEP: f64 = 1e-5;
    let grads = net.gradient(sample);
    let mut worst = 0.0f64;
    for idx in 0..net.param_count() {
        let analytic = MlpNetwork::grad_at(&grads, idx);
        let mut plus = net.clone();
        *plus.param_mut(idx) += STEP;
        let mut minus = net.clone();
        *minus.param_mut(idx) -= STEP;
        let numeric = (plus.sample_loss(sample) - minus.sample_loss(sample)) / (2.0 * STEP);
        let diff = (analytic - numeric).abs();
        let err = if diff <= 1e-8 {
            0.0
        } else {
            diff / analytic.abs().max(numeric.abs())
        };
        worst = worst.max(err);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mfcc::assemble_features;
    use crate::pitch::PitchInfo;

    fn feature(seed: u64) -> FeatureVector {
        let mut s = seed;
        let mut rng = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 33) as f64 / (1u64 << 30) as f64 - 1.0
        };
        let mut mfcc = [0.0; 16];
        for v in mfcc.iter_mut() {
            *v = rng() * 3.0;
        }
        assemble_features(
            mfcc,
            PitchInfo {
                delay: 80.0 + rng() * 40.0,
                gain: (rng() * 0.5 + 0.5).clamp(0.0, 1.0),
            },
        )
    }

    #[test]
    fn constant_network_outputs_biases() {
        let mut net = MlpNetwork::new(0);
        for layer in net.layers.iter_mut() {
            layer.weights.fill(0.0);
            layer.biases.fill(0.0);
        }
        net.layers[2].biases = vec![3.0, -2.0];
        for seed in 0..5 {
            let out = net.forward(&feature(seed)).unwrap();
            assert_eq!(out, [3.0, -2.0]);
        }
    }

    #[test]
    fn hand_computed_single_path() {
        // one input feeds one hidden unit per layer, then the output
        let mut net = MlpNetwork::new(0);
        for layer in net.layers.iter_mut() {
            layer.weights.fill(0.0);
            layer.biases.fill(0.0);
        }
        net.layers[0].weights[0] = 0.5; // h1_0 <- x0
        net.layers[1].weights[0] = -1.2; // h2_0 <- h1_0
        net.layers[2].weights[0] = 2.0; // y0 <- h2_0
        net.layers[2].biases[0] = 0.25;
        let mut fv = feature(1);
        fv.mfcc = [0.0; 16];
        fv.mfcc[0] = 0.8;
        fv.pitch_gain = 0.0;
        fv.pitch_delay = 0.0;
        let y = net.forward(&fv).unwrap();
        let expected = 2.0 * ((-1.2 * (0.5f64 * 0.8).tanh()).tanh()) + 0.25;
        assert!((y[0] - expected).abs() < 1e-12);
        assert_eq!(y[1], 0.0);
    }

    #[test]
    fn outputs_not_confined_to_unit_interval() {
        let mut net = MlpNetwork::new(0);
        net.layers[2].weights.fill(5.0);
        net.layers[2].biases.fill(10.0);
        let out = net.forward(&feature(2)).unwrap();
        assert!(out[0].abs() > 1.0);
    }

    #[test]
    fn forward_rejects_non_finite() {
        let net = MlpNetwork::new(0);
        let mut fv = feature(0);
        fv.mfcc[3] = f64::NAN;
        assert!(net.forward(&fv).is_err());
    }

    #[test]
    fn gradient_check_random_networks() {
        for seed in 0..20 {
            let net = MlpNetwork::new(seed);
            let sample = TrainingSample {
                features: feature(seed + 100),
                targets: [3.0, -7.0],
            };
            let err = gradient_check(&net, &sample);
            assert!(err < 1e-4, "seed {seed}: gradient error {err}");
        }
    }

    #[test]
    fn gradient_check_at_minimum() {
        // output equals target: gradients vanish on the output layer
        let mut net = MlpNetwork::new(3);
        for layer in net.layers.iter_mut() {
            layer.weights.fill(0.0);
            layer.biases.fill(0.0);
        }
        let sample = TrainingSample {
            features: feature(4),
            targets: [0.0, 0.0],
        };
        let err = gradient_check(&net, &sample);
        assert!(err <= 1e-8, "error at minimum: {err}");
    }

    #[test]
    fn memorizes_single_sample() {
        let sample = TrainingSample {
            features: feature(9),
            targets: [-12.5, 4.0],
        };
        let config = TrainConfig {
            epochs: 4000,
            learning_rate: 1e-2,
            ..Default::default()
        };
        let (_, summary) = train(&[sample], &config).unwrap();
        assert!(summary.final_mse < 1e-4, "final MSE {}", summary.final_mse);
    }

    #[test]
    fn learns_linear_mapping_better_than_mean() {
        // targets are a fixed linear function of two features
        let mut samples = Vec::new();
        for seed in 0..400 {
            let f = feature(seed);
            let t0 = 2.0 * f.mfcc[0] - 0.05 * f.pitch_delay;
            let t1 = -1.5 * f.mfcc[1] + 3.0 * f.pitch_gain;
            samples.push(TrainingSample {
                features: f,
                targets: [t0, t1],
            });
        }
        let (train_set, test_set) = samples.split_at(300);
        let (net, _) = train(
            train_set,
            &TrainConfig {
                epochs: 300,
                ..Default::default()
            },
        )
        .unwrap();

        let mut mean = [0.0; 2];
        for s in train_set {
            mean[0] += s.targets[0];
            mean[1] += s.targets[1];
        }
        mean[0] /= train_set.len() as f64;
        mean[1] /= train_set.len() as f64;

        let mut mse_net = 0.0;
        let mut mse_mean = 0.0;
        for s in test_set {
            let y = net.forward(&s.features).unwrap();
            for j in 0..2 {
                mse_net += (y[j] - s.targets[j]).powi(2);
                mse_mean += (mean[j] - s.targets[j]).powi(2);
            }
        }
        assert!(
            mse_net < mse_mean,
            "net {mse_net} should beat mean predictor {mse_mean}"
        );
    }

    #[test]
    fn training_is_deterministic() {
        let samples: Vec<TrainingSample> = (0..50)
            .map(|i| TrainingSample {
                features: feature(i),
                targets: [i as f64 * 0.1, -(i as f64) * 0.2],
            })
            .collect();
        let config = TrainConfig {
            epochs: 10,
            seed: 77,
            ..Default::default()
        };
        let (a, _) = train(&samples, &config).unwrap();
        let (b, _) = train(&samples, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_batch_loss_non_increasing() {
        let samples: Vec<TrainingSample> = (0..64)
            .map(|i| TrainingSample {
                features: feature(i + 1000),
                targets: [(i % 5) as f64, -((i % 3) as f64)],
            })
            .collect();
        let config = TrainConfig {
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: samples.len(),
            momentum: 0.0,
            seed: 5,
        };
        let (_, summary) = train(&samples, &config).unwrap();
        for pair in summary.epoch_mse.windows(2) {
            assert!(
                pair[1] <= pair[0] * (1.0 + 1e-9),
                "loss rose: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn empty_training_set_rejected() {
        assert!(train(&[], &TrainConfig::default()).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let samples: Vec<TrainingSample> = (0..40)
            .map(|i| TrainingSample {
                features: feature(i),
                targets: [1.0, 2.0],
            })
            .collect();
        let (net, _) = train(
            &samples,
            &TrainConfig {
                epochs: 5,
                ..Default::default()
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bwxmlp");
        net.save(&path).unwrap();
        let back = MlpNetwork::load(&path).unwrap();
        assert_eq!(net, back);
        for i in 0..100 {
            let f = feature(i + 500);
            assert_eq!(net.forward(&f).unwrap(), back.forward(&f).unwrap());
        }
    }

    #[test]
    fn load_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bwxmlp");
        let net = MlpNetwork::new(1);
        net.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        // truncated
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(MlpNetwork::load(&path), Err(Error::Format(_))));

        // wrong magic
        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(MlpNetwork::load(&path), Err(Error::Format(_))));

        // future version
        let mut v2 = bytes;
        v2[6] = b'9';
        std::fs::write(&path, &v2).unwrap();
        match MlpNetwork::load(&path) {
            Err(Error::Format(msg)) => assert!(msg.contains("version"), "{msg}"),
            other => panic!("expected version error, got {other:?}"),
        }
    }
}
