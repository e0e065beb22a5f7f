//! Data-parallel map over particle indices with a sequential fallback.
//!
//! Every parallel pass in this crate writes one value per index into an
//! ordered vector and reduces it sequentially afterwards, so parallel and
//! sequential execution produce bit-identical results.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Parallel,
}

pub(crate) fn map_indices<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().with_min_len(64).map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}
