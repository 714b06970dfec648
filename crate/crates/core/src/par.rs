//! Execution policy for the data-parallel loops.
//!
//! With the `parallel` feature (on by default) row-wise loops run on the rayon
//! global pool; without it, or with [`Exec::Sequential`], they run on the calling
//! thread. Both paths produce bit-identical results since every row is computed
//! independently.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Below this many rows the parallel path is not worth the scheduling overhead.
pub const MIN_PARALLEL_ROWS: usize = 64;

/// Fills `out` chunk by chunk: `f(row, chunk)` receives the index of the first row
/// and a mutable slice of `width` entries per row.
pub fn for_each_row_chunk<F>(exec: Exec, out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    assert!(width > 0 && out.len().is_multiple_of(width));
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel if out.len() / width >= MIN_PARALLEL_ROWS => {
            use rayon::prelude::*;
            out.par_chunks_mut(width)
                .enumerate()
                .for_each(|(i, row)| f(i, row));
        }
        _ => {
            for (i, row) in out.chunks_mut(width).enumerate() {
                f(i, row);
            }
        }
    }
}

/// Maps `f` over `0..n` and collects in index order.
pub fn map_indices<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel if n >= MIN_PARALLEL_ROWS => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Maps `f` over a slice of independent jobs (solver sweeps), preserving order.
/// Unlike [`map_indices`] there is no size threshold: each job is expensive.
pub fn map_jobs<I, T, F>(exec: Exec, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Send + Sync,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}
