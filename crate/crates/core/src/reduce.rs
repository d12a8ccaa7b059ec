//! Fixed-order summation.
//!
//! Terms are grouped into chunks of [`CHUNK`] consecutive indices. Each chunk
//! is accumulated left to right, then the chunk partials are combined by a
//! balanced binary tree whose shape depends only on the chunk count. Workers
//! may evaluate chunks in any order and the result is bit-identical for every
//! thread count.

use std::ops::Add;

use rayon::prelude::*;

pub const CHUNK: usize = 1024;

/// Balanced pairwise sum; the split point is always `len / 2`.
pub fn pairwise<T>(values: &[T]) -> T
where
    T: Copy + Default + Add<Output = T>,
{
    match values.len() {
        0 => T::default(),
        1 => values[0],
        n => {
            let (left, right) = values.split_at(n / 2);
            pairwise(left) + pairwise(right)
        }
    }
}

/// `sum_{i < len} term(i)` in the fixed chunked order.
pub fn chunked_sum<T, F>(len: usize, term: F) -> T
where
    T: Copy + Default + Add<Output = T> + Send,
    F: Fn(usize) -> T + Sync,
{
    let chunk_sum = |c: usize| {
        let hi = ((c + 1) * CHUNK).min(len);
        (c * CHUNK..hi).fold(T::default(), |acc, i| acc + term(i))
    };
    let chunks = len.div_ceil(CHUNK);
    if chunks <= 1 {
        return chunk_sum(0);
    }
    let partials: Vec<T> = (0..chunks).into_par_iter().map(chunk_sum).collect();
    pairwise(&partials)
}
