//! Sequential / data-parallel execution switch.
//!
//! `Exec::Parallel` runs on the rayon pool when the `parallel` feature is
//! enabled and silently degrades to the sequential path otherwise. Both
//! paths produce identical results: work items never share mutable state
//! and results are collected in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
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

impl Exec {
    /// `(0..n).map(f)` collected in order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    /// Applies `f` to every element, returning per-element results in order.
    pub fn map_mut<I, T, F>(self, items: &mut [I], f: F) -> Vec<T>
    where
        I: Send,
        T: Send,
        F: Fn(usize, &mut I) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => items
                .par_iter_mut()
                .enumerate()
                .map(|(i, it)| f(i, it))
                .collect(),
            _ => items.iter_mut().enumerate().map(|(i, it)| f(i, it)).collect(),
        }
    }
}
