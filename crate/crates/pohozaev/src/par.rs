//! Thin facade over rayon so the crate builds with a sequential fallback.
//!
//! Only embarrassingly parallel, index-ordered work goes through here:
//! per-sample sweeps and pointwise maps. Floating-point reductions stay
//! sequential so results are bit-identical for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Elementwise map below this length runs sequentially even with rayon.
const PAR_MAP_MIN_LEN: usize = 16 * 1024;

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Map `f` over a slice, collecting results in index order.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Elementwise map over sample values; parallel only for large vectors.
pub fn map_values<F>(values: &[f64], f: F) -> Vec<f64>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if values.len() >= PAR_MAP_MIN_LEN {
            return values.par_iter().map(|&v| f(v)).collect();
        }
    }
    values.iter().map(|&v| f(v)).collect()
}

/// Deterministic pairwise sum; accuracy close to compensated summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise-weighted dot product Σ wᵢ aᵢ bᵢ without materializing a buffer.
pub fn pairwise_dot3(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(w.len(), a.len());
    debug_assert_eq!(w.len(), b.len());
    fn rec(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
        if w.len() <= 32 {
            let mut s = 0.0;
            for i in 0..w.len() {
                s += w[i] * a[i] * b[i];
            }
            return s;
        }
        let mid = w.len() / 2;
        rec(&w[..mid], &a[..mid], &b[..mid]) + rec(&w[mid..], &a[mid..], &b[mid..])
    }
    rec(w, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn map_indices_is_ordered() {
        let v = map_indices(1000, |i| 2 * i);
        assert_eq!(v[0], 0);
        assert_eq!(v[999], 1998);
    }
}
