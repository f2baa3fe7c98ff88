//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) work is spread over the rayon
//! pool; without it, or with [`Execution::Sequential`], the same closures run
//! in a plain loop. Results are always returned in index order, so every
//! reduction downstream is performed in a fixed order and is bit-for-bit
//! reproducible regardless of the execution mode.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How data-parallel loops are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise sequential.
    #[default]
    Parallel,
}

impl Execution {
    /// True when this mode actually fans out to the thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(i)` for `i in 0..n` and returns the results in index order.
pub fn map_indices<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Applies `f(i, item)` to every element of `items` in place.
pub fn for_each_mut<T, F>(exec: Execution, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
        return;
    }
    let _ = exec;
    items.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
}

/// Applies `f(row_index, row)` to consecutive rows of length `width`.
pub fn for_each_row_mut<T, F>(exec: Execution, data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    let _ = exec;
    data.chunks_mut(width)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

/// Splits `total` samples into chunks of at most `chunk` samples.
/// Returns `(chunk_index, chunk_len)` pairs.
pub fn sample_chunks(total: usize, chunk: usize) -> Vec<(u64, usize)> {
    let chunk = chunk.max(1);
    let mut out = Vec::with_capacity(total.div_ceil(chunk));
    let mut left = total;
    let mut idx = 0u64;
    while left > 0 {
        let len = left.min(chunk);
        out.push((idx, len));
        left -= len;
        idx += 1;
    }
    out
}

/// Samples handled by one random stream in the Monte Carlo drivers.
pub const MC_CHUNK: usize = 4096;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let a = map_indices(Execution::Sequential, 1000, |i| (i as f64).sqrt());
        let b = map_indices(Execution::Parallel, 1000, |i| (i as f64).sqrt());
        assert_eq!(a, b);
    }

    #[test]
    fn chunking_covers_total() {
        let c = sample_chunks(10_001, 4096);
        assert_eq!(c.len(), 3);
        assert_eq!(c.iter().map(|x| x.1).sum::<usize>(), 10_001);
        assert!(sample_chunks(0, 10).is_empty());
    }

    #[test]
    fn rows_visited_once() {
        let mut v = vec![0usize; 12];
        for_each_row_mut(Execution::Parallel, &mut v, 4, |r, row| {
            row.iter_mut().for_each(|x| *x += r + 1)
        });
        assert_eq!(v, vec![1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3]);
    }
}
