//! Replicate-level execution: rayon when the `parallel` feature is on,
//! a plain loop otherwise. Output order is always replicate order.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Maps `f` over `0..reps`, giving each worker its own scratch state.
    pub fn map_reps<S, T, I, F>(self, reps: u64, init: I, f: F) -> Vec<T>
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, u64) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..reps).into_par_iter().map_init(&init, |s, r| f(s, r)).collect()
            }
            _ => {
                let mut scratch = init();
                (0..reps).map(|r| f(&mut scratch, r)).collect()
            }
        }
    }

    /// Like [`Execution::map_reps`] for fallible work; the first error in
    /// replicate order wins.
    pub fn try_map_reps<S, T, E, I, F>(self, reps: u64, init: I, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, u64) -> Result<T, E> + Sync + Send,
    {
        self.map_reps(reps, init, f).into_iter().collect()
    }
}
