//! Execution strategy for the data-parallel loops.
//!
//! With the `parallel` feature the loops run on rayon; without it (or with
//! [`Execution::Sequential`]) they run as plain iterators. Every reduction in
//! the crate is order-independent, so both paths produce identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
use crate::error::Error;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon's global pool.
    #[default]
    Parallel,
    /// A dedicated pool of this many threads.
    Workers(usize),
}

impl Execution {
    /// `1` selects the sequential path, anything else a pool of that size.
    pub fn with_workers(workers: usize) -> Self {
        match workers {
            0 | 1 => Execution::Sequential,
            n => Execution::Workers(n),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self != Execution::Sequential
    }

    /// Runs `f` inside the configured pool.
    pub fn install<T: Send>(self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Workers(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Configuration(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
            _ => Ok(f()),
        }
    }

    /// `f(0..n)` collected in index order.
    pub(crate) fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Applies `f` to every `(index, chunk)` of `data` split into `chunk_len` pieces.
    pub(crate) fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk_len = chunk_len.max(1);
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        data.chunks_mut(chunk_len).enumerate().for_each(|(i, c)| f(i, c));
    }

    /// Folds `0..n` into per-worker accumulators and merges them.
    ///
    /// `merge` must be associative and commutative for results to be
    /// independent of the worker count.
    pub(crate) fn fold_range<A, I, F, M>(self, n: usize, init: I, fold: F, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(A, usize) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n)
                .into_par_iter()
                .fold(&init, &fold)
                .reduce(&init, &merge);
        }
        let _ = &merge;
        (0..n).fold(init(), fold)
    }
}
