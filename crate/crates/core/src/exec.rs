//! Per-subject work scheduling.
//!
//! E-step contributions are independent across subjects. An [`Executor`]
//! maps a closure over subject indices and must return results in index
//! order, so reductions downstream are bit-stable however the work is
//! scheduled.

use alloc::vec::Vec;

pub trait Executor {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
