//! Utterance-level data parallelism.
//!
//! With the `parallel` feature (default) batch maps run on rayon and
//! reduce sequentially in input order, so results are deterministic
//! regardless of thread count. Without the feature everything runs
//! sequentially with the same API.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential map kept available alongside the parallel path for
/// benchmarks and the non-parallel build.
pub fn map_items_seq<T: Sync, U: Send, F: Fn(&T) -> U + Sync>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_items<T: Sync, U: Send, F: Fn(&T) -> U + Send + Sync>(items: &[T], f: F) -> Vec<U> {
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_items<T: Sync, U: Send, F: Fn(&T) -> U + Send + Sync>(items: &[T], f: F) -> Vec<U> {
    map_items_seq(items, f)
}

/// Configures the global thread pool size. `jobs = 0` keeps the
/// default; has no effect on the sequential build or when a pool
/// already exists.
pub fn configure_jobs(jobs: usize) {
    #[cfg(feature = "parallel")]
    if jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
}
