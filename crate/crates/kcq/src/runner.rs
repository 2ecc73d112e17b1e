//! Thread-pool trial runner.
//!
//! Blocks are reduced independently on the pool and folded back in block
//! order, exactly like [`Serial`], so results match bit for bit.

use kcq_core::mc::{block_count, run_block, Serial, Tally, TrialRng, TrialRunner};
use rayon::prelude::*;

use crate::error::Result;

pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    pub fn new(jobs: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
        Ok(Self { pool })
    }

    pub fn jobs(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl TrialRunner for Parallel {
    fn run<T, F>(&self, seed: u64, trials: u64, f: F) -> T
    where
        T: Tally,
        F: Fn(u64, &mut TrialRng, &mut T) + Sync,
    {
        let blocks: Vec<T> = self.pool.install(|| {
            (0..block_count(trials))
                .into_par_iter()
                .map(|b| run_block(seed, b, trials, &f))
                .collect()
        });
        let mut total = T::default();
        for t in blocks {
            total.merge(t);
        }
        total
    }
}

/// Serial when `jobs <= 1`, otherwise a dedicated pool.
pub enum Runner {
    Serial(Serial),
    Parallel(Parallel),
}

impl Runner {
    pub fn with_jobs(jobs: usize) -> Result<Self> {
        Ok(if jobs <= 1 {
            Runner::Serial(Serial)
        } else {
            Runner::Parallel(Parallel::new(jobs)?)
        })
    }
}

impl TrialRunner for Runner {
    fn run<T, F>(&self, seed: u64, trials: u64, f: F) -> T
    where
        T: Tally,
        F: Fn(u64, &mut TrialRng, &mut T) + Sync,
    {
        match self {
            Runner::Serial(s) => s.run(seed, trials, f),
            Runner::Parallel(p) => p.run(seed, trials, f),
        }
    }
}
