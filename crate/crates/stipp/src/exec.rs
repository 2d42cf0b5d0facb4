//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the chunk bodies run on the rayon
//! pool; without it they run in order on the calling thread. Work is always
//! split at the same fixed chunk boundaries, so reductions accumulate in the
//! same order and results are bit-identical across both modes.

/// Default block size for query-sized loops.
pub(crate) const DEFAULT_BATCH: usize = 1024;

#[cfg(feature = "parallel")]
pub(crate) fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &[T]) -> R + Sync,
{
    use rayon::prelude::*;
    items
        .par_chunks(chunk.max(1))
        .enumerate()
        .map(|(i, c)| f(i * chunk.max(1), c))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
where
    F: Fn(usize, &[T]) -> R,
{
    items
        .chunks(chunk.max(1))
        .enumerate()
        .map(|(i, c)| f(i * chunk.max(1), c))
        .collect()
}

/// Applies `f` to disjoint mutable chunks of `out`, passing each chunk's
/// starting offset.
#[cfg(feature = "parallel")]
pub(crate) fn for_each_chunk_mut<T, F>(out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    use rayon::prelude::*;
    out.par_chunks_mut(chunk.max(1))
        .enumerate()
        .for_each(|(i, c)| f(i * chunk.max(1), c));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_chunk_mut<T, F>(out: &mut [T], chunk: usize, f: F)
where
    F: Fn(usize, &mut [T]),
{
    out.chunks_mut(chunk.max(1))
        .enumerate()
        .for_each(|(i, c)| f(i * chunk.max(1), c));
}

/// Chunked sum: partial sums are taken per fixed-size block and folded in
/// block order, giving the same rounding in parallel and sequential builds.
pub(crate) fn sum_chunked(values: &[f64], chunk: usize) -> f64 {
    map_chunks(values, chunk, |_, c| c.iter().sum::<f64>())
        .into_iter()
        .sum()
}
