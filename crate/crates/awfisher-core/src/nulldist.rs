//! Monte Carlo null distribution of the AW statistic.
//!
//! Under the complete null every study p-value is an independent
//! Uniform(0, 1) draw, so the null of S is sampled directly instead of by
//! label permutation; the two are identical in distribution and direct
//! sampling is far cheaper. Draws are partitioned into [`crate::rng`] chunks
//! so a table is reproducible for a given (k, draws, seed) no matter how the
//! chunks were scheduled.

use alloc::vec::Vec;

use crate::combine::aw_sorted_from_log_pvalues;
use crate::error::{Error, Result};
use crate::rng::{self, uniform_open_closed};
use crate::special::ln_two_pow_minus_one;

/// Sorted Monte Carlo sample of the AW statistic under the complete null.
#[derive(Debug, Clone, PartialEq)]
pub struct NullTable {
    k: usize,
    seed: u64,
    samples: Vec<f64>,
}

impl NullTable {
    /// Draws `draws` iid statistics for `k` studies and sorts them.
    /// Deterministic in (k, draws, seed).
    pub fn build(k: usize, draws: u64, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroStudies);
        }
        if draws == 0 {
            return Err(Error::ZeroDraws);
        }
        let mut samples = Vec::with_capacity(draws as usize);
        for chunk in 0..rng::chunk_count(draws) {
            statistic_chunk(k, draws, seed, chunk, &mut samples);
        }
        samples.sort_unstable_by(f64::total_cmp);
        Ok(Self { k, seed, samples })
    }

    /// Assembles a table from already-sorted samples (file loads and
    /// worker-parallel builds). Validates ordering and nonnegativity.
    pub fn from_sorted_samples(k: usize, seed: u64, samples: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroStudies);
        }
        if samples.is_empty() {
            return Err(Error::ZeroDraws);
        }
        let ordered = samples
            .windows(2)
            .all(|w| w[0] <= w[1])
            && samples.iter().all(|&s| s.is_finite() && s >= 0.0);
        if !ordered {
            return Err(Error::UnsortedSamples);
        }
        Ok(Self { k, seed, samples })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn draws(&self) -> u64 {
        self.samples.len() as u64
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Ascending-sorted null statistics.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn max_sample(&self) -> f64 {
        *self.samples.last().expect("table is nonempty")
    }

    /// Monte Carlo p-value (r + 1) / (N + 1), where r counts samples
    /// >= `s_obs`. Never returns 0; monotone nonincreasing in `s_obs`.
    pub fn p_value(&self, s_obs: f64) -> f64 {
        let below = self.samples.partition_point(|&s| s < s_obs);
        let r = self.samples.len() - below;
        (r as f64 + 1.0) / (self.samples.len() as f64 + 1.0)
    }
}

/// Generates the statistics of one draw chunk into `out`. Exposed so
/// callers with a thread pool can build chunks in parallel; appending chunks
/// in index order and sorting reproduces [`NullTable::build`] exactly.
pub fn statistic_chunk(k: usize, draws: u64, seed: u64, chunk: u64, out: &mut Vec<f64>) {
    let mut rng = rng::stream_rng(seed, chunk);
    let mut log_p = alloc::vec![0.0f64; k];
    for _ in 0..rng::chunk_len(draws, chunk) {
        for slot in log_p.iter_mut() {
            *slot = libm::log(uniform_open_closed(&mut rng));
        }
        out.push(aw_sorted_from_log_pvalues(&log_p).statistic);
    }
}

/// Analytic sandwich for the AW p-value at an observed log level:
/// `L_obs <= P(S >= s_obs) <= (2^K - 1) L_obs`, the upper side truncated
/// at 1. Held in log space so levels near the underflow limit survive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPair {
    log_lower: f64,
    log_upper: f64,
}

impl BoundPair {
    pub fn lower(&self) -> f64 {
        libm::exp(self.log_lower)
    }

    pub fn upper(&self) -> f64 {
        libm::exp(self.log_upper)
    }

    pub fn log_lower(&self) -> f64 {
        self.log_lower
    }

    pub fn log_upper(&self) -> f64 {
        self.log_upper
    }
}

/// Bonferroni bounds on the AW p-value from the observed minimized log
/// level (`log_level_obs = -s_obs`).
pub fn bonferroni_bounds(log_level_obs: f64, k: usize) -> Result<BoundPair> {
    if k == 0 {
        return Err(Error::ZeroStudies);
    }
    if log_level_obs.is_nan() || log_level_obs > 0.0 {
        return Err(Error::PositiveLogLevel(log_level_obs));
    }
    Ok(BoundPair {
        log_lower: log_level_obs,
        log_upper: (log_level_obs + ln_two_pow_minus_one(k)).min(0.0),
    })
}
