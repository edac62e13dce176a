//! Vector quantization: binary-split LBG training, nearest-neighbour
//! quantization and codebook files.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec;

const MAGIC: &[u8; 8] = b"BWXVQ1\0\0";
const MAX_BITS: u32 = 16;
const LLOYD_MAX_ITERATIONS: usize = 100;
const LLOYD_STOP_REL: f64 = 1e-6;

/// Trained codebook of `size = 2^bits` vectors of `dim` components,
/// log-domain dB values for the envelope application.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dim: usize,
    vectors: Vec<f64>, // size x dim, row-major
}

impl Codebook {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn bits(&self) -> u32 {
        self.size().trailing_zeros()
    }

    /// Codeword by index.
    pub fn vector(&self, index: usize) -> &[f64] {
        &self.vectors[index * self.dim..(index + 1) * self.dim]
    }

    /// 64-bit content hash binding side-info streams to this codebook.
    pub fn content_hash(&self) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update((self.dim as u32).to_le_bytes());
        hasher.update((self.size() as u32).to_le_bytes());
        for v in &self.vectors {
            hasher.update(v.to_le_bytes());
        }
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::with_capacity(16 + self.vectors.len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.size() as u32).to_le_bytes());
        for v in &self.vectors {
            out.extend_from_slice(&v.to_le_bytes());
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
        if bytes.len() < 16 {
            return Err(Error::Format("codebook file truncated".into()));
        }
        if &bytes[..8] != MAGIC {
            return Err(Error::Format("bad codebook magic".into()));
        }
        let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let size = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        if dim == 0 || size == 0 || !size.is_power_of_two() {
            return Err(Error::Format(format!(
                "invalid codebook dimensions {size} x {dim}"
            )));
        }
        let expected = 16 + size * dim * 8;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "codebook payload: expected {expected} bytes, found {}",
                bytes.len()
            )));
        }
        let vectors: Vec<f64> = bytes[16..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("codebook contains non-finite entries".into()));
        }
        Ok(Self { dim, vectors })
    }
}

/// Index of the codeword minimizing squared Euclidean distance; ties break
/// to the lowest index.
pub fn quantize(cb: &Codebook, v: &[f64]) -> Result<usize> {
    if v.len() != cb.dim {
        return Err(Error::Precondition(format!(
            "vector has {} components, codebook dim is {}",
            v.len(),
            cb.dim
        )));
    }
    Ok(nearest(&cb.vectors, cb.dim, v).0)
}

/// Copy of the codeword at `index`.
pub fn decode_index(cb: &Codebook, index: usize) -> Result<Vec<f64>> {
    if index >= cb.size() {
        return Err(Error::Index(format!(
            "index {index} >= codebook size {}",
            cb.size()
        )));
    }
    Ok(cb.vector(index).to_vec())
}

fn nearest(codewords: &[f64], dim: usize, v: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, cw) in codewords.chunks_exact(dim).enumerate() {
        let mut d = 0.0;
        for (a, b) in cw.iter().zip(v) {
            let diff = a - b;
            d += diff * diff;
        }
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    (best, best_d)
}

/// Distortion trajectory and final figure from LBG training.
#[derive(Debug, Clone)]
pub struct TrainingLog {
    /// Per split stage: mean per-dimension squared error after each Lloyd
    /// iteration. Within a stage the sequence is non-increasing.
    pub stages: Vec<Vec<f64>>,
    /// Final mean per-dimension squared error.
    pub final_distortion: f64,
}

impl TrainingLog {
    /// Distortion at the end of each split stage (after refinement).
    pub fn stage_distortion(&self) -> Vec<f64> {
        self.stages
            .iter()
            .map(|s| *s.last().expect("stages are never empty"))
            .collect()
    }
}

/// Mean per-dimension squared error of the training set against a codebook.
pub fn mean_distortion(cb: &Codebook, vectors: &[Vec<f64>]) -> f64 {
    let dim = cb.dim;
    let partials = exec::chunked_map(vectors.len(), |range| {
        let mut acc = 0.0;
        for v in &vectors[range] {
            acc += nearest(&cb.vectors, dim, v).1;
        }
        acc
    });
    partials.iter().sum::<f64>() / (vectors.len() * dim) as f64
}

/// Train a `2^bits`-entry codebook with binary-split LBG.
///
/// Starts from the global centroid; each stage perturb-splits every
/// codeword by +/- epsilon (0.01 of the per-dimension standard deviation)
/// and refines with Lloyd iterations until the relative distortion
/// improvement drops below 1e-6 or 100 iterations. Empty cells are reseeded
/// from the most populous cell's farthest member. Deterministic: the seed
/// only drives tiny jitter used when duplicate codewords must be separated.
pub fn lbg_train(vectors: &[Vec<f64>], bits: u32, seed: u64) -> Result<(Codebook, TrainingLog)> {
    if bits > MAX_BITS {
        return Err(Error::Precondition(format!("bits {bits} > {MAX_BITS}")));
    }
    let target = 1usize << bits;
    if vectors.len() < target {
        return Err(Error::Precondition(format!(
            "{} training vectors for {target} codewords",
            vectors.len()
        )));
    }
    let dim = vectors[0].len();
    if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Precondition("training vectors must share a nonzero dim".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // global centroid
    let mut centroid = vec![0.0; dim];
    for v in vectors {
        for (c, x) in centroid.iter_mut().zip(v) {
            *c += x;
        }
    }
    for c in centroid.iter_mut() {
        *c /= vectors.len() as f64;
    }

    // split perturbation: 1% of per-dimension std
    let mut epsilon = vec![0.0; dim];
    for v in vectors {
        for (e, (x, c)) in epsilon.iter_mut().zip(v.iter().zip(&centroid)) {
            *e += (x - c) * (x - c);
        }
    }
    for e in epsilon.iter_mut() {
        *e = 0.01 * (*e / vectors.len() as f64).sqrt();
        if *e == 0.0 {
            *e = 1e-6;
        }
    }

    let mut codewords = centroid;
    let mut log = TrainingLog {
        stages: Vec::new(),
        final_distortion: 0.0,
    };

    // size-1 stage: the centroid itself, refined trivially
    if target == 1 {
        let mut trace = Vec::new();
        lloyd_refine(&mut codewords, dim, vectors, &mut trace)?;
        log.stages.push(trace);
    }

    while codewords.len() / dim < target {
        // split every codeword into c + eps and c - eps
        let mut split = Vec::with_capacity(codewords.len() * 2);
        for cw in codewords.chunks_exact(dim) {
            for (x, e) in cw.iter().zip(&epsilon) {
                split.push(x + e);
            }
            for (x, e) in cw.iter().zip(&epsilon) {
                split.push(x - e);
            }
        }
        codewords = split;
        let mut trace = Vec::new();
        lloyd_refine(&mut codewords, dim, vectors, &mut trace)?;
        log.stages.push(trace);
    }

    // separate any duplicate codewords so each is its own nearest neighbour
    let mut attempts = 0;
    while let Some(dup) = find_duplicate(&codewords, dim) {
        if attempts >= 8 {
            return Err(Error::Degenerate(
                "training data has too few distinct vectors for the codebook size".into(),
            ));
        }
        attempts += 1;
        for (j, e) in epsilon.iter().enumerate() {
            codewords[dup * dim + j] += e * rng.random_range(-1.0..1.0);
        }
        let mut trace = Vec::new();
        lloyd_refine(&mut codewords, dim, vectors, &mut trace)?;
        log.stages.push(trace);
    }

    log.final_distortion = *log
        .stages
        .last()
        .and_then(|s| s.last())
        .expect("at least one stage");
    Ok((
        Codebook {
            dim,
            vectors: codewords,
        },
        log,
    ))
}

/// Lloyd iterations until convergence. Returns the final distortion and
/// appends each iteration's distortion to `trace`.
fn lloyd_refine(
    codewords: &mut Vec<f64>,
    dim: usize,
    vectors: &[Vec<f64>],
    trace: &mut Vec<f64>,
) -> Result<f64> {
    let size = codewords.len() / dim;
    let mut prev = f64::INFINITY;
    let mut last = f64::INFINITY;
    for _ in 0..LLOYD_MAX_ITERATIONS {
        // assignment (data-parallel, order-stable)
        let chunk_results = exec::chunked_map(vectors.len(), |range| {
            let mut sums = vec![0.0; size * dim];
            let mut counts = vec![0usize; size];
            let mut distortion = 0.0;
            let mut assignment = Vec::with_capacity(range.len());
            for v in &vectors[range] {
                let (idx, d) = nearest(codewords, dim, v);
                distortion += d;
                counts[idx] += 1;
                for (s, x) in sums[idx * dim..(idx + 1) * dim].iter_mut().zip(v) {
                    *s += x;
                }
                assignment.push(idx);
            }
            (sums, counts, distortion, assignment)
        });

        let mut sums = vec![0.0; size * dim];
        let mut counts = vec![0usize; size];
        let mut distortion = 0.0;
        let mut assignment = Vec::with_capacity(vectors.len());
        for (s, c, d, a) in chunk_results {
            for (acc, x) in sums.iter_mut().zip(&s) {
                *acc += x;
            }
            for (acc, x) in counts.iter_mut().zip(&c) {
                *acc += x;
            }
            distortion += d;
            assignment.extend(a);
        }
        distortion /= (vectors.len() * dim) as f64;
        trace.push(distortion);
        last = distortion;

        // centroid update
        for i in 0..size {
            if counts[i] > 0 {
                for j in 0..dim {
                    codewords[i * dim + j] = sums[i * dim + j] / counts[i] as f64;
                }
            }
        }

        // reseed empty cells from the most populous cell's farthest member
        let empties: Vec<usize> = (0..size).filter(|&i| counts[i] == 0).collect();
        for empty in empties {
            let donor = (0..size)
                .max_by_key(|&i| counts[i])
                .expect("nonempty codebook");
            if counts[donor] == 0 {
                break;
            }
            let mut far_idx = None;
            let mut far_d = -1.0;
            for (vi, v) in vectors.iter().enumerate() {
                if assignment[vi] != donor {
                    continue;
                }
                let cw = &codewords[donor * dim..(donor + 1) * dim];
                let d: f64 = cw.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                if d > far_d {
                    far_d = d;
                    far_idx = Some(vi);
                }
            }
            if let Some(vi) = far_idx {
                codewords[empty * dim..(empty + 1) * dim].copy_from_slice(&vectors[vi]);
                counts[empty] = 1;
            }
        }

        if prev.is_finite() && (prev - distortion) <= LLOYD_STOP_REL * prev {
            break;
        }
        prev = distortion;
    }
    Ok(last)
}

fn find_duplicate(codewords: &[f64], dim: usize) -> Option<usize> {
    let size = codewords.len() / dim;
    for i in 0..size {
        for j in 0..i {
            if codewords[i * dim..(i + 1) * dim] == codewords[j * dim..(j + 1) * dim] {
                return Some(i);
            }
        }
    }
    None
}
