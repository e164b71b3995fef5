//! Execution strategy for the data-parallel loops.
//!
//! Every parallel path has a sequential twin that produces bit-identical
//! output. Without the `parallel` feature, [`Execution::Parallel`] quietly
//! runs sequentially.

use std::ops::Range;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Maps `f` over `range`, preserving order.
    pub(crate) fn map_range<T, F>(self, range: Range<u64>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                range.into_par_iter().map(f).collect()
            }
            _ => range.map(f).collect(),
        }
    }

    /// Folds fixed-size chunks of `items` with `fold` and merges the partial
    /// results with an associative `merge`.
    pub(crate) fn chunked_reduce<I, T, F, M>(
        self,
        items: &[I],
        chunk: usize,
        fold: F,
        merge: M,
    ) -> T
    where
        I: Sync,
        T: Send + Default,
        F: Fn(&[I]) -> T + Sync + Send,
        M: Fn(T, T) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items
                    .par_chunks(chunk)
                    .map(&fold)
                    .reduce(T::default, &merge)
            }
            _ => items.chunks(chunk).map(&fold).fold(T::default(), &merge),
        }
    }

    /// Number of worker threads this strategy uses.
    pub fn threads(self) -> usize {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => rayon::current_num_threads(),
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_strategies_agree() {
        let f = |k: u64| k.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 7;
        assert_eq!(
            Execution::Sequential.map_range(3..5000, f),
            Execution::Parallel.map_range(3..5000, f)
        );
        let xs: Vec<u64> = (0..10_007).collect();
        let sum = |c: &[u64]| c.iter().sum::<u64>();
        assert_eq!(
            Execution::Sequential.chunked_reduce(&xs, 64, sum, |a, b| a + b),
            Execution::Parallel.chunked_reduce(&xs, 1000, sum, |a, b| a + b)
        );
    }
}
