//! Fixed-partition data parallelism.
//!
//! Work is split into chunks whose boundaries depend only on the input length,
//! never on the number of workers. Partial results come back in chunk order
//! and are combined sequentially by the caller, so a reduction evaluates the
//! same floating-point expression tree with or without rayon.

use alloc::vec::Vec;
use core::ops::Range;

/// Items (blocks, points) per chunk.
pub(crate) const CHUNK: usize = 128;

fn ranges(len: usize, chunk: usize) -> impl Iterator<Item = Range<usize>> + Clone {
    let chunk = chunk.max(1);
    (0..len.div_ceil(chunk)).map(move |c| c * chunk..((c + 1) * chunk).min(len))
}

/// Maps every chunk of `0..len` through `f`, returning the partials in chunk
/// order.
#[cfg(feature = "parallel")]
pub(crate) fn map_chunks<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let all: Vec<Range<usize>> = ranges(len, CHUNK).collect();
    if all.len() <= 1 {
        return all.into_iter().map(f).collect();
    }
    all.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_chunks<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(Range<usize>) -> T,
{
    ranges(len, CHUNK).map(f).collect()
}

/// Runs `f` over disjoint mutable chunks of `out`, each holding `CHUNK` items
/// of `item_len` values. `f` receives the first item index and the slice.
#[cfg(feature = "parallel")]
pub(crate) fn for_each_chunk_mut<F>(out: &mut [f64], item_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    use rayon::prelude::*;
    let step = CHUNK * item_len.max(1);
    if out.len() <= step {
        f(0, out);
        return;
    }
    out.par_chunks_mut(step).enumerate().for_each(|(c, slice)| f(c * CHUNK, slice));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_chunk_mut<F>(out: &mut [f64], item_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]),
{
    let step = CHUNK * item_len.max(1);
    for (c, slice) in out.chunks_mut(step).enumerate() {
        f(c * CHUNK, slice);
    }
}

/// Like [`for_each_chunk_mut`], returning one partial per chunk in order.
#[cfg(feature = "parallel")]
pub(crate) fn map_chunks_mut<T, F>(out: &mut [f64], item_len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut [f64]) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let step = CHUNK * item_len.max(1);
    if out.len() <= step {
        return alloc::vec![f(0, out)];
    }
    out.par_chunks_mut(step).enumerate().map(|(c, slice)| f(c * CHUNK, slice)).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_chunks_mut<T, F>(out: &mut [f64], item_len: usize, f: F) -> Vec<T>
where
    F: Fn(usize, &mut [f64]) -> T,
{
    let step = CHUNK * item_len.max(1);
    if out.is_empty() {
        return alloc::vec![f(0, out)];
    }
    out.chunks_mut(step).enumerate().map(|(c, slice)| f(c * CHUNK, slice)).collect()
}

/// Sums equal-length vector partials in order.
pub(crate) fn sum_vectors(parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    let mut acc = alloc::vec![0.0; len];
    for part in parts {
        for (a, p) in acc.iter_mut().zip(&part) {
            *a += p;
        }
    }
    acc
}
