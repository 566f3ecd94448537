//! Execution helpers: data-parallel batch maps with a sequential fallback.
//!
//! With the default `parallel` feature the indexed maps run on the rayon
//! thread pool. Reductions are always performed in index order afterwards, so
//! results are bit-identical regardless of thread count. The `_seq` variants
//! are always available; the criterion bench suite compares the two.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Configure the global thread pool size. Returns the effective setting.
/// Calling more than once keeps the first configuration (rayon limitation);
/// that is fine for a CLI that configures threads exactly once at startup.
pub fn init_threads(n: Option<usize>) -> usize {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = n {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        1
    }
}

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
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
        map_indexed_seq(n, f)
    }
}

/// Sequential twin of [`map_indexed`].
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let a = map_indexed(1000, |i| (i as f64).sin());
        let b = map_indexed_seq(1000, |i| (i as f64).sin());
        assert_eq!(a, b);
    }
}
