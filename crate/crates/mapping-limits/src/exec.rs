//! Parallel/sequential execution shim.
//!
//! Every reduction used by the enumeration cores goes through this module.
//! With the `parallel` feature (default) `ExecMode::Auto` dispatches to rayon;
//! without it, or with `ExecMode::Sequential`, a plain iterator runs instead.
//! All reductions are commutative and associative over exact values, so the
//! two paths produce identical results.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecMode {
    /// rayon when the `parallel` feature is enabled, sequential otherwise.
    Auto,
    /// Always single-threaded, regardless of features.
    Sequential,
}

#[cfg(feature = "parallel")]
pub fn sum_over<T, F>(mode: ExecMode, n: usize, f: F) -> T
where
    T: Send + std::iter::Sum<T>,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        ExecMode::Auto => (0..n).into_par_iter().map(f).sum(),
        ExecMode::Sequential => (0..n).map(f).sum(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn sum_over<T, F>(_mode: ExecMode, n: usize, f: F) -> T
where
    T: Send + std::iter::Sum<T>,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).sum()
}

#[cfg(feature = "parallel")]
pub fn max_over<T, F>(mode: ExecMode, n: usize, f: F) -> Option<T>
where
    T: Send + Ord,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        ExecMode::Auto => (0..n).into_par_iter().map(f).max(),
        ExecMode::Sequential => (0..n).map(f).max(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn max_over<T, F>(_mode: ExecMode, n: usize, f: F) -> Option<T>
where
    T: Send + Ord,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).max()
}

/// Map each index and merge the results pairwise (used for histograms).
#[cfg(feature = "parallel")]
pub fn map_merge<T, F, M>(mode: ExecMode, n: usize, f: F, merge: M) -> Option<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        ExecMode::Auto => (0..n).into_par_iter().map(f).reduce_with(merge),
        ExecMode::Sequential => (0..n).map(f).reduce(merge),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_merge<T, F, M>(_mode: ExecMode, n: usize, f: F, merge: M) -> Option<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
{
    (0..n).map(f).reduce(merge)
}
