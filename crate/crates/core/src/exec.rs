//! Parallel or sequential execution of independent blocks of work.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] fans blocks
//! out over rayon; without it, both variants run sequentially. Reductions
//! are expected to be associative and commutative, so the two modes give
//! identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether `Parallel` actually uses worker threads in this build.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Maps `0..blocks` through `map` and folds the results with `reduce`.
    pub fn map_reduce<T, M, R>(self, blocks: usize, identity: T, map: M, reduce: R) -> T
    where
        T: Send + Sync + Clone,
        M: Fn(usize) -> T + Sync + Send,
        R: Fn(T, T) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..blocks)
                .into_par_iter()
                .map(map)
                .reduce(|| identity.clone(), &reduce),
            _ => (0..blocks).map(map).fold(identity, reduce),
        }
    }

    /// Maps `0..n` through `map`, keeping index order.
    pub fn map_collect<T, M>(self, n: usize, map: M) -> Vec<T>
    where
        T: Send,
        M: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(map).collect(),
            _ => (0..n).map(map).collect(),
        }
    }
}
