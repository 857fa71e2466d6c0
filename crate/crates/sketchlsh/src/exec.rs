//! Execution strategy for bulk per-item work.
//!
//! With the `parallel` feature (default) bulk maps run on the rayon thread
//! pool; without it the same closures run sequentially. Both paths produce
//! results in input order, and callers only hand in closures whose outputs
//! are independent per item, so the two builds are observably identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to every index in `0..n`, collecting results in order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Applies `f` to every index in `0..n`, collecting results in order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    (0..n).map(f).collect()
}

/// Caps the worker pool at `n` threads. Returns whether the cap took effect;
/// it cannot once the pool has already started (or without the `parallel`
/// feature, where the answer is moot). Call before any bulk map.
pub fn set_worker_threads(n: usize) -> bool {
    assert!(n >= 1, "thread count must be at least 1");
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        n == 1
    }
}

/// Number of worker threads the bulk maps will use.
pub fn worker_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
