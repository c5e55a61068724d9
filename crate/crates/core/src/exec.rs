//! Ordered data-parallel map over scan points.
//!
//! Results always come back in input order. With the `parallel` feature a
//! dedicated rayon pool of the requested size is used; `threads == 1` or a
//! build without the feature runs sequentially on the calling thread.

use crate::error::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Executor {
    /// Worker count; `0` lets the pool pick one per core.
    pub threads: usize,
}

impl Executor {
    pub fn sequential() -> Self {
        Executor { threads: 1 }
    }

    pub fn with_threads(threads: usize) -> Self {
        Executor { threads }
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && self.threads != 1
    }

    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Result<Vec<U>>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        if !self.is_parallel() {
            return Ok(items.iter().map(f).collect());
        }
        self.map_parallel(items, f)
    }

    #[cfg(feature = "parallel")]
    fn map_parallel<T, U, F>(&self, items: &[T], f: F) -> Result<Vec<U>>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| crate::error::Error::InvalidConfig(format!("thread pool: {e}")))?;
        Ok(pool.install(|| items.par_iter().map(f).collect()))
    }

    #[cfg(not(feature = "parallel"))]
    fn map_parallel<T, U, F>(&self, items: &[T], f: F) -> Result<Vec<U>>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        Ok(items.iter().map(f).collect())
    }
}
