//! Data-parallel helpers with a deterministic sequential fallback.
//!
//! `map_indexed` fans an index range out over rayon when the `parallel`
//! feature is enabled and preserves index order in the output, so parallel
//! and sequential runs produce bit-identical vectors. Reductions over the
//! results must use [`pairwise_sum`], whose summation tree depends only on
//! the slice length, never on thread scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, preserving index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Send + Sync) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `f` over `0..n`, preserving index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Send + Sync) -> Vec<T> {
    map_indexed_sequential(n, f)
}

/// Sequential twin of [`map_indexed`]; always available for benchmarks and
/// determinism checks.
pub fn map_indexed_sequential<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Sums a slice with a fixed-shape pairwise tree.
///
/// The result depends only on the contents and length of the slice, which
/// makes ensemble statistics reproducible across thread counts and also
/// keeps rounding error at O(log n) instead of O(n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_smooth_data() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }

    #[test]
    fn map_indexed_preserves_order() {
        let v = map_indexed(100, |i| i * i);
        let s = map_indexed_sequential(100, |i| i * i);
        assert_eq!(v, s);
    }
}
