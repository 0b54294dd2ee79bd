use rayon::prelude::*;
use rayon::ThreadPool;
use warpfit_core::Executor;

/// Runs per-subject work on a rayon pool. Results come back in index
/// order, so fits are identical to sequential runs.
pub struct Rayon {
    pool: Option<ThreadPool>,
}

impl Rayon {
    /// Uses the global pool.
    pub fn global() -> Self {
        Self { pool: None }
    }

    /// A dedicated pool with `threads` workers; `0` means one per core.
    pub fn with_threads(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Self { pool: Some(pool) })
    }
}

impl Executor for Rayon {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        let run = || (0..n).into_par_iter().map(&f).collect();
        match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        }
    }
}
