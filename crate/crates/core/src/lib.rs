//! Wideband speech bandwidth extension codec.
//!
//! Reconstructs 50-8000 Hz speech from telephone-band narrowband speech
//! plus a 500 bits/s side-information stream: the 50-300 Hz band is
//! regenerated by a sinusoidal oscillator whose harmonic gains a small
//! perceptron predicts from narrowband features, and the 3.4-8 kHz band by
//! extending the narrowband excitation through a transmitted spectral
//! envelope. Includes both training procedures (LBG envelope codebook,
//! gain-predictor backpropagation) and the evaluation metrics.

pub mod audio;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod exec;
pub mod fir;
pub mod highband;
pub mod lowband;
pub mod mfcc;
pub mod mlp;
pub mod pipeline;
pub mod pitch;
pub mod resample;
pub mod sideinfo;
pub mod testsig;
pub mod vq;
pub mod wav;

pub use audio::{AudioBuffer, NARROWBAND_RATE, WIDEBAND_RATE};
pub use error::{Error, Result};
pub use pipeline::{decode, encode, CodecConfig, Decoder};
pub use sideinfo::SideInfoStream;
pub use vq::Codebook;
