//! Monte Carlo plumbing: per-trial random streams, tallies and estimates.
//!
//! Every trial gets its own ChaCha8 stream. The generator is keyed by the run
//! seed (expanded with `SeedableRng::seed_from_u64`) and the trial index is
//! used as the ChaCha stream id, so trial `i` draws the same numbers no matter
//! which thread runs it or in which order.
//!
//! Trials are grouped into fixed blocks of [`BLOCK`] indices. A runner reduces
//! each block serially and then merges block tallies in ascending block order,
//! which keeps floating point sums identical between serial and parallel
//! execution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type TrialRng = ChaCha8Rng;

/// Trials per reduction block.
pub const BLOCK: u64 = 4096;

/// Random stream for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derive an independent run seed from a parent seed and a label, so that
/// sub-experiments (e.g. key draws vs. noise draws) never share streams.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Accumulator for a batch of trials. `merge` must be associative.
pub trait Tally: Default + Send {
    fn merge(&mut self, other: Self);
}

/// Executes trials `0..trials`, calling `f(index, rng, tally)` for each.
pub trait TrialRunner {
    fn run<T, F>(&self, seed: u64, trials: u64, f: F) -> T
    where
        T: Tally,
        F: Fn(u64, &mut TrialRng, &mut T) + Sync;
}

/// Reduce one block of trials. Runners must use this so that all executors
/// agree bit for bit.
pub fn run_block<T, F>(seed: u64, block: u64, trials: u64, f: &F) -> T
where
    T: Tally,
    F: Fn(u64, &mut TrialRng, &mut T),
{
    let start = block * BLOCK;
    let end = core::cmp::min(start + BLOCK, trials);
    let mut tally = T::default();
    for index in start..end {
        let mut rng = trial_rng(seed, index);
        f(index, &mut rng, &mut tally);
    }
    tally
}

pub fn block_count(trials: u64) -> u64 {
    trials.div_ceil(BLOCK)
}

/// Single-threaded runner.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl TrialRunner for Serial {
    fn run<T, F>(&self, seed: u64, trials: u64, f: F) -> T
    where
        T: Tally,
        F: Fn(u64, &mut TrialRng, &mut T) + Sync,
    {
        let mut total = T::default();
        for block in 0..block_count(trials) {
            total.merge(run_block(seed, block, trials, &f));
        }
        total
    }
}

/// Success/failure counter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub hits: u64,
    pub total: u64,
}

impl Counts {
    pub fn record(&mut self, hit: bool) {
        self.hits += hit as u64;
        self.total += 1;
    }

    pub fn add(&mut self, hits: u64, total: u64) {
        self.hits += hits;
        self.total += total;
    }

    pub fn estimate(&self) -> Estimate {
        Estimate::binomial(self.hits, self.total)
    }
}

impl Tally for Counts {
    fn merge(&mut self, other: Self) {
        self.hits += other.hits;
        self.total += other.total;
    }
}

/// Running first and second moments.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub sum: f64,
    pub sum_sq: f64,
    pub n: u64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
        self.n += 1;
    }

    pub fn estimate(&self) -> Estimate {
        if self.n == 0 {
            return Estimate {
                value: f64::NAN,
                std_err: f64::NAN,
                samples: 0,
            };
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            value: mean,
            std_err: libm::sqrt(var / n),
            samples: self.n,
        }
    }
}

impl Tally for Moments {
    fn merge(&mut self, other: Self) {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.n += other.n;
    }
}

/// A Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn binomial(hits: u64, total: u64) -> Self {
        if total == 0 {
            return Self {
                value: f64::NAN,
                std_err: f64::NAN,
                samples: 0,
            };
        }
        let p = hits as f64 / total as f64;
        Self {
            value: p,
            std_err: libm::sqrt(p * (1.0 - p) / total as f64),
            samples: total,
        }
    }

    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_err: 0.0,
            samples: 0,
        }
    }

    /// Binomial standard deviation of the sample proportion under `p`.
    pub fn binomial_sigma(&self, p: f64) -> f64 {
        libm::sqrt(p * (1.0 - p) / self.samples as f64)
    }

    /// `|value - p| <= k σ` with σ the binomial σ at the reference `p`.
    pub fn within_binomial_sigmas(&self, p: f64, k: f64) -> bool {
        libm::fabs(self.value - p) <= k * self.binomial_sigma(p)
    }

    /// `|value - reference| <= k · std_err` with the sample standard error.
    pub fn within_sigmas(&self, reference: f64, k: f64) -> bool {
        libm::fabs(self.value - reference) <= k * self.std_err
    }
}

/// Element-wise merged vector of counts, used for histograms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Histogram {
    pub bins: alloc::vec::Vec<u64>,
}

impl Histogram {
    pub fn bump(&mut self, bin: usize) {
        if self.bins.len() <= bin {
            self.bins.resize(bin + 1, 0);
        }
        self.bins[bin] += 1;
    }
}

impl Tally for Histogram {
    fn merge(&mut self, other: Self) {
        if self.bins.len() < other.bins.len() {
            self.bins.resize(other.bins.len(), 0);
        }
        for (a, b) in self.bins.iter_mut().zip(other.bins) {
            *a += b;
        }
    }
}

impl<A: Tally, B: Tally> Tally for (A, B) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
        self.1.merge(other.1);
    }
}

impl<T: Tally> Tally for alloc::vec::Vec<T> {
    fn merge(&mut self, other: Self) {
        if self.is_empty() {
            *self = other;
            return;
        }
        for (a, b) in self.iter_mut().zip(other) {
            a.merge(b);
        }
    }
}
