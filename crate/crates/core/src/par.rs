//! Ensemble-level parallelism.
//!
//! With the `parallel` feature, [`map`] fans work out over the current
//! rayon pool; without it, it is a plain sequential map. Output order always
//! follows input order, so reductions are deterministic either way.

/// Order-preserving map over independent tasks.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Order-preserving map over independent tasks.
#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_sequential(items, f)
}

/// Sequential reference path, always compiled.
pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Runs `op` with at most `workers` threads (ignored without `parallel`).
#[cfg(feature = "parallel")]
pub fn with_workers<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(op),
        Err(_) => op(),
    }
}

/// Runs `op` with at most `workers` threads (ignored without `parallel`).
#[cfg(not(feature = "parallel"))]
pub fn with_workers<R: Send>(_workers: usize, op: impl FnOnce() -> R + Send) -> R {
    op()
}
