//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) `par_map` runs on the rayon pool;
//! without it the same call is a plain sequential map. Results are collected
//! in input order either way, so outputs are bit-identical across modes.

#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Always-sequential map, kept for benchmark comparison against `par_map`.
pub fn seq_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Cap the rayon pool size (used by the CLI via `DVA_THREADS`). No-op when
/// the pool was already initialized or the crate is built without `parallel`.
pub fn limit_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}
