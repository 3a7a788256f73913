//! Trial execution: rayon when the `parallel` feature is on, a plain loop otherwise.
//!
//! Every trial is a pure function of its index, and results are collected in
//! index order, so both strategies produce identical output.

/// How to run a batch of independent trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

/// Evaluates `f(0), …, f(trials − 1)` and returns the results in index order.
pub fn map_trials<T, F>(exec: Execution, trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..trials).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..trials).into_par_iter().map(f).collect()
        }
    }
}
