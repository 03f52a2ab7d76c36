//! Execution strategy for the crate's data-parallel loops.
//!
//! Multistart solving, witness searches over code subsets, candidate-radius
//! sweeps and per-disc patch verification are all embarrassingly parallel.
//! With the `parallel` feature (the default) they run on rayon; without it
//! every strategy degrades to plain sequential iteration. [`Exec`] selects
//! the strategy at runtime so benchmarks can compare both in one binary.
//!
//! Results are collected in input order either way, so output is
//! deterministic regardless of the strategy.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to run an independent-iteration loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// Use the rayon thread pool when compiled in; otherwise sequential.
    #[default]
    Parallel,
    /// Plain iteration on the calling thread.
    Sequential,
}

impl Exec {
    /// True when `Parallel` will actually fan out.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, U, F>(exec: Exec, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Maps `f` over owned `items`, preserving order.
pub fn map_into<T, U, F>(exec: Exec, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.into_par_iter().map(f).collect(),
        _ => items.into_iter().map(f).collect(),
    }
}
