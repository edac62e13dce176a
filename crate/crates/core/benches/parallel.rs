//! Parallel vs sequential throughput of the data-parallel kernels:
//! frame encoding, codebook search, and corpus distortion measurement.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use bwx_core::eval::envelope_training_vectors;
use bwx_core::exec;
use bwx_core::highband::{encode_envelope, DEFAULT_PREEMPH, FRAME_16K};
use bwx_core::pipeline::{encode, CodecConfig};
use bwx_core::testsig::speech_like;
use bwx_core::vq::{lbg_train, mean_distortion, Codebook};

fn corpus() -> bwx_core::AudioBuffer {
    speech_like(20.0, 42)
}

fn codebook(bits: u32) -> Codebook {
    let wb = corpus();
    let vectors = envelope_training_vectors(&wb, DEFAULT_PREEMPH).unwrap();
    lbg_train(&vectors, bits, 0).unwrap().0
}

fn bench_frame_encoding(c: &mut Criterion) {
    let wb = corpus();
    let cb = codebook(6);
    let frames: Vec<Vec<f64>> = wb
        .samples()
        .chunks_exact(FRAME_16K)
        .map(|f| f.to_vec())
        .collect();

    let mut group = c.benchmark_group("envelope_encode");
    group.throughput(Throughput::Elements(frames.len() as u64));
    group.bench_with_input(BenchmarkId::new("parallel", frames.len()), &frames, |b, frames| {
        b.iter(|| {
            exec::ordered_map(frames, |f| encode_envelope(f, &cb, DEFAULT_PREEMPH).unwrap())
        })
    });
    group.bench_with_input(BenchmarkId::new("sequential", frames.len()), &frames, |b, frames| {
        b.iter(|| {
            exec::ordered_map_seq(frames, |f| encode_envelope(f, &cb, DEFAULT_PREEMPH).unwrap())
        })
    });
    group.finish();
}

fn bench_codebook_search(c: &mut Criterion) {
    let wb = corpus();
    let cb = codebook(8);
    let vectors = envelope_training_vectors(&wb, DEFAULT_PREEMPH).unwrap();

    let mut group = c.benchmark_group("codebook_distortion");
    group.throughput(Throughput::Elements(vectors.len() as u64));
    group.bench_function("parallel", |b| b.iter(|| mean_distortion(&cb, &vectors)));
    group.bench_function("sequential", |b| {
        b.iter(|| {
            // same chunked accumulation, sequential chunks
            let dim = cb.dim();
            let partials = exec::chunked_map_seq(vectors.len(), |range| {
                let mut acc = 0.0;
                for v in &vectors[range] {
                    let mut best = f64::INFINITY;
                    for i in 0..cb.size() {
                        let d: f64 = cb
                            .vector(i)
                            .iter()
                            .zip(v.iter())
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum();
                        best = best.min(d);
                    }
                    acc += best;
                }
                acc
            });
            partials.iter().sum::<f64>() / (vectors.len() * dim) as f64
        })
    });
    group.finish();
}

fn bench_full_encode(c: &mut Criterion) {
    let wb = corpus();
    let cb = codebook(8);
    let config = CodecConfig::default();

    let mut group = c.benchmark_group("pipeline_encode");
    group.throughput(Throughput::Elements((wb.len() / FRAME_16K) as u64));
    group.sample_size(10);
    group.bench_function("as_built", |b| b.iter(|| encode(&wb, &cb, &config).unwrap()));
    group.finish();
}

fn configured() -> Criterion {
    Criterion::default()
        .configure_from_args()
        .warm_up_time(Duration::from_secs(1))
        .measurement_time(Duration::from_secs(5))
        .sample_size(20)
}

criterion_group! {
    name = benches;
    config = configured();
    targets = bench_frame_encoding, bench_codebook_search, bench_full_encode
}
criterion_main!(benches);
