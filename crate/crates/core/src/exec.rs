//! Data-parallel execution helpers.
//!
//! Corpus and batch loops (frame encoding, codebook training, evaluation
//! sweeps) map independently over items. With the `parallel` feature the map
//! runs on rayon; without it the same code runs sequentially. Results are
//! collected in input order and reductions use fixed chunk boundaries, so
//! parallel and sequential builds produce bit-identical floating-point
//! output regardless of thread count.

/// Fixed chunk size for order-stable reductions.
pub const REDUCE_CHUNK: usize = 4096;

/// Order-preserving map over independent items.
#[cfg(feature = "parallel")]
pub fn ordered_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Order-preserving map over independent items.
#[cfg(not(feature = "parallel"))]
pub fn ordered_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Always-sequential map, kept as the baseline for benchmarks.
pub fn ordered_map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Map over fixed-size index chunks, in order. Each chunk produces a partial
/// result; the caller folds the partials sequentially. Both feature builds
/// use the same chunk boundaries, keeping float summation order identical.
#[cfg(feature = "parallel")]
pub fn chunked_map<U, F>(len: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(std::ops::Range<usize>) -> U + Sync + Send,
{
    use rayon::prelude::*;
    let ranges: Vec<_> = chunk_ranges(len);
    ranges.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn chunked_map<U, F>(len: usize, f: F) -> Vec<U>
where
    F: Fn(std::ops::Range<usize>) -> U,
{
    chunk_ranges(len).into_iter().map(f).collect()
}

/// Sequential twin of [`chunked_map`].
pub fn chunked_map_seq<U, F>(len: usize, f: F) -> Vec<U>
where
    F: Fn(std::ops::Range<usize>) -> U,
{
    chunk_ranges(len).into_iter().map(f).collect()
}

fn chunk_ranges(len: usize) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::with_capacity(len / REDUCE_CHUNK + 1);
    let mut start = 0;
    while start < len {
        let end = (start + REDUCE_CHUNK).min(len);
        out.push(start..end);
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_map_preserves_order() {
        let items: Vec<u64> = (0..10_000).collect();
        let mapped = ordered_map(&items, |&x| x * 2);
        let seq = ordered_map_seq(&items, |&x| x * 2);
        assert_eq!(mapped, seq);
    }

    #[test]
    fn chunked_map_covers_all_indices() {
        let sums = chunked_map(10_001, |r| r.len());
        assert_eq!(sums.iter().sum::<usize>(), 10_001);
        assert_eq!(sums, chunked_map_seq(10_001, |r| r.len()));
    }

    #[test]
    fn chunk_ranges_empty_input() {
        assert!(chunk_ranges(0).is_empty());
    }
}
