//! Order-preserving data-parallel map.
//!
//! With the `parallel` feature enabled, work fans out over a rayon pool sized
//! by [`Jobs`]. Without it every call runs sequentially. Either way the output
//! order matches the input order, so callers never observe scheduling.

use std::num::NonZeroUsize;

/// Upper bound on worker threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Jobs(NonZeroUsize);

impl Jobs {
    pub const SEQUENTIAL: Jobs = Jobs(NonZeroUsize::MIN);

    pub fn new(n: usize) -> Option<Jobs> {
        NonZeroUsize::new(n).map(Jobs)
    }

    /// Logical CPU count, or 1 when it cannot be determined.
    pub fn available() -> Jobs {
        Jobs(std::thread::available_parallelism().unwrap_or(NonZeroUsize::MIN))
    }

    pub fn get(self) -> usize {
        self.0.get()
    }
}

impl Default for Jobs {
    fn default() -> Self {
        Jobs::available()
    }
}

/// Applies `f` to every item, returning results in input order.
pub fn map_ordered<T, R, F>(items: &[T], jobs: Jobs, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if jobs.get() == 1 || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    parallel_map(items, jobs, f)
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], jobs: Jobs, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;

    match rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.get())
        .build()
    {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        // Thread creation can fail under tight resource limits.
        Err(_) => items.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], _jobs: Jobs, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}
