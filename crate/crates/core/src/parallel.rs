//! Deterministic data-parallel building blocks.
//!
//! Every stage of the pipeline is required to produce bitwise identical
//! results no matter how many worker threads execute it. The helpers here
//! enforce the two patterns that guarantee that:
//!
//! * partition the *output* into fixed-size disjoint blocks and compute each
//!   block independently (block boundaries depend on the block size constant,
//!   never on the worker count);
//! * reduce by computing ordered per-block partial results and combining them
//!   in a fixed-shape pairwise tree, sequentially.
//!
//! Floating-point reductions must never go through `rayon::reduce`, whose
//! combination order is scheduler-dependent.

use rayon::prelude::*;

/// Default number of items per parallel block. Also the block size of the
/// tree-structured extrema reduction.
pub const BLOCK: usize = 4096;

/// Map fixed-size blocks of `0..len` to values, in block order.
pub fn par_block_map<T, F>(len: usize, block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync,
{
    let block = block.max(1);
    let n_blocks = len.div_ceil(block);
    (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * block;
            let end = (start + block).min(len);
            f(start, end)
        })
        .collect()
}

/// Run `f` over disjoint row bands of a `width * height` single-channel
/// buffer. Band boundaries are fixed, so the output is independent of the
/// worker count.
pub fn par_row_bands<F>(out: &mut [f64], width: usize, rows_per_band: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let band = rows_per_band.max(1) * width;
    if band == 0 {
        return;
    }
    out.par_chunks_mut(band).enumerate().for_each(|(i, chunk)| {
        let y0 = i * rows_per_band.max(1);
        f(y0, chunk);
    });
}

/// Sum with a fixed-shape pairwise tree. The result does not depend on any
/// thread scheduling because the recursion shape is a function of `len` only.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Parallel deterministic sum: ordered per-block partial sums, then a
/// sequential pairwise combine over the block results.
pub fn par_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 2 * BLOCK {
        return pairwise_sum(xs);
    }
    let partials = par_block_map(xs.len(), BLOCK, |a, b| pairwise_sum(&xs[a..b]));
    pairwise_sum(&partials)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_sequential_closely() {
        let xs: Vec<f64> = (0..10_000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
        assert!((par_sum(&xs) - naive).abs() < 1e-9);
    }

    #[test]
    fn par_block_map_preserves_order() {
        let blocks = par_block_map(10, 3, |a, b| (a, b));
        assert_eq!(blocks, vec![(0, 3), (3, 6), (6, 9), (9, 10)]);
    }

    #[test]
    fn par_sum_worker_count_independent() {
        let xs: Vec<f64> = (0..100_000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| par_sum(&xs));
        let eight = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| par_sum(&xs));
        assert_eq!(one.to_bits(), eight.to_bits());
    }
}
