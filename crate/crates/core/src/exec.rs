//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] fans
//! work out over the rayon global pool. Without it, both variants run
//! sequentially. Results are always returned in input order, so parallel and
//! sequential runs produce identical output.

/// How batch work (restarts, instance grids, oracle sweeps) is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `0..len`, preserving index order in the output.
pub fn map_indexed<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Folds `0..len` in chunks and merges the partial results with `reduce`.
///
/// `reduce` must be associative; chunk boundaries are fixed so the result
/// does not depend on scheduling.
pub fn chunked_reduce<T, F, R>(exec: Execution, len: usize, chunk: usize, fold: F, reduce: R) -> Option<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> Option<T> + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let n_chunks = len.div_ceil(chunk);
    let partials = map_indexed(exec, n_chunks, |c| {
        let start = c * chunk;
        fold(start..(start + chunk).min(len))
    });
    partials.into_iter().flatten().reduce(reduce)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_indexed(Execution::Sequential, 100, |i| i * i);
        let par = map_indexed(Execution::Parallel, 100, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }

    #[test]
    fn chunked_sum_matches() {
        let total = chunked_reduce(
            Execution::Parallel,
            1001,
            64,
            |r| Some(r.sum::<usize>()),
            |a, b| a + b,
        );
        assert_eq!(total, Some(1000 * 1001 / 2));
        assert_eq!(
            chunked_reduce(Execution::Sequential, 0, 8, |_| Some(1usize), |a, b| a + b),
            None
        );
    }
}
