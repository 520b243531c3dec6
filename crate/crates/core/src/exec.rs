//! Execution policy for the data-parallel loops.

use serde::{Deserialize, Serialize};

/// How independent tasks are scheduled. Every task is a pure function of its
/// index, and results are collected in index order, so the output is the same
/// under either policy and any worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Execution {
    Sequential,
    /// `workers = None` uses rayon's global pool. Without the `parallel`
    /// feature this runs sequentially.
    #[default]
    Parallel,
    ParallelWith(usize),
}

impl Execution {
    pub fn workers(n: usize) -> Self {
        if n <= 1 {
            Execution::Sequential
        } else {
            Execution::ParallelWith(n)
        }
    }

    /// Maps `f` over `0..n`, returning results in index order.
    pub fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Execution::ParallelWith(workers) => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new()
                    .num_threads(*workers)
                    .build()
                {
                    Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
                    Err(e) => {
                        log::warn!(
                            "could not build a {workers}-thread pool ({e}); running sequentially"
                        );
                        (0..n).map(f).collect()
                    }
                }
            }
            #[cfg(not(feature = "parallel"))]
            _ => (0..n).map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let f = |i: usize| i * i;
        let seq = Execution::Sequential.map_indexed(1000, f);
        assert_eq!(seq, Execution::Parallel.map_indexed(1000, f));
        assert_eq!(seq, Execution::workers(3).map_indexed(1000, f));
    }
}
