//! Simulation laboratory for the adaptive weights' asymptotic behavior.
//!
//! Studies follow a two-sample z-test model: with per-study sample size n
//! split evenly between two groups, the standardized mean difference is
//! normal with variance 4/n, so the z statistic is N(mu sqrt(n)/2, 1) and
//! the two-sided p-value is 2 Phi(-|z|). The lab estimates, over a grid of
//! sample sizes, how often the adaptive weights miss a study with real
//! effect or include a null study, fits the decay laws `a n exp(-b n)` and
//! `1 / (a + b n)` to those rates, and estimates empirical exact slopes
//! `-(2/n) ln p` for single studies, Fisher, and the AW statistic.
//!
//! Replicates are partitioned into [`crate::rng`] chunks; every chunk owns
//! one RNG stream, so results are independent of worker scheduling and mean
//! accumulation order is fixed by chunk index.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use rand_core::RngCore;

use crate::combine::{aw_sorted_from_log_pvalues, chi2_even_log_sf_raw};
use crate::error::{Error, Result};
use crate::nulldist::NullTable;
use crate::rng::{self, standard_normal};
use crate::special::{ln_two_pow_minus_one, standard_normal_log_sf};

/// One study in a simulated meta-analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    /// Standardized mean difference mu.
    pub effect: f64,
    /// Share of the average sample size assigned to this study.
    pub lambda: f64,
}

impl StudyConfig {
    pub fn new(effect: f64) -> Self {
        Self {
            effect,
            lambda: 1.0,
        }
    }

    pub fn with_lambda(effect: f64, lambda: f64) -> Self {
        Self { effect, lambda }
    }
}

fn validate_configs(configs: &[StudyConfig]) -> Result<()> {
    if configs.is_empty() {
        return Err(Error::NoStudyConfigs);
    }
    for (study, c) in configs.iter().enumerate() {
        if !c.effect.is_finite() || !c.lambda.is_finite() || c.lambda <= 0.0 {
            return Err(Error::InvalidStudyConfig {
                study: study + 1,
                effect: c.effect,
                lambda: c.lambda,
            });
        }
    }
    Ok(())
}

fn validate_even(n: u64) -> Result<()> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidSampleSize { n });
    }
    Ok(())
}

/// Per-study sample sizes round(lambda_k * n). The rounded size may be odd
/// when lambda != 1; the difference-of-means model is well defined for any
/// size >= 2, so only the floor is enforced here.
fn study_sizes(configs: &[StudyConfig], n: u64) -> Result<Vec<u64>> {
    configs
        .iter()
        .enumerate()
        .map(|(study, c)| {
            let nk = libm::round(c.lambda * n as f64) as i64;
            if nk < 2 {
                Err(Error::StudySampleTooSmall {
                    study: study + 1,
                    n: nk.max(0) as u64,
                })
            } else {
                Ok(nk as u64)
            }
        })
        .collect()
}

/// ln of the two-sided p-value 2 Phi(-|z|).
fn two_sided_log_p(z: f64) -> f64 {
    LN_2 + standard_normal_log_sf(libm::fabs(z))
}

fn study_log_pvalue<R: RngCore>(n: u64, mu: f64, rng: &mut R) -> f64 {
    let z = standard_normal(rng) + 0.5 * mu * libm::sqrt(n as f64);
    two_sided_log_p(z)
}

/// Draws one two-sided z-test p-value for a study of (even) size `n` and
/// effect `mu`. Uniform(0, 1) under `mu = 0`. Consumes one `next_u64`.
///
/// The value is clamped to the smallest positive normal double when the
/// tail underflows; the log-domain paths used internally never clamp.
pub fn simulate_study_pvalue<R: RngCore>(n: u64, mu: f64, rng: &mut R) -> Result<f64> {
    validate_even(n)?;
    Ok(libm::exp(study_log_pvalue(n, mu, rng)).max(f64::MIN_POSITIVE))
}

/// Which weight error a rate tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    /// P(w_hat = 0 | true effect nonzero).
    Miss,
    /// P(w_hat = 1 | true effect zero).
    FalseInclusion,
}

impl RateKind {
    pub fn name(&self) -> &'static str {
        match self {
            RateKind::Miss => "miss",
            RateKind::FalseInclusion => "false_inclusion",
        }
    }
}

/// One estimated error rate at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    /// Average sample size (the grid value).
    pub n: u64,
    /// 1-based study number.
    pub study: usize,
    pub kind: RateKind,
    pub estimate: f64,
    pub reps: u64,
}

impl RatePoint {
    /// Binomial standard error of the estimate.
    pub fn std_error(&self) -> f64 {
        libm::sqrt(self.estimate * (1.0 - self.estimate) / self.reps as f64)
    }
}

/// Weight-error counts for one replicate chunk at one grid point: entry k
/// counts misses when study k has a real effect, false inclusions when it
/// does not. Exposed so a thread pool can run chunks in parallel; summing
/// chunk counts reproduces [`estimate_weight_error_rates`] exactly.
pub fn weight_error_chunk(
    configs: &[StudyConfig],
    n: u64,
    reps: u64,
    seed: u64,
    grid_index: u64,
    chunk: u64,
) -> Result<Vec<u64>> {
    validate_configs(configs)?;
    validate_even(n)?;
    let sizes = study_sizes(configs, n)?;
    let stream = grid_index * rng::chunk_count(reps) + chunk;
    let mut rng = rng::stream_rng(seed, stream);
    let mut log_p = alloc::vec![0.0f64; configs.len()];
    let mut errors = alloc::vec![0u64; configs.len()];
    for _ in 0..rng::chunk_len(reps, chunk) {
        for (slot, (c, &nk)) in log_p.iter_mut().zip(configs.iter().zip(sizes.iter())) {
            *slot = study_log_pvalue(nk, c.effect, &mut rng);
        }
        let weights = aw_sorted_from_log_pvalues(&log_p).weights;
        for (k, c) in configs.iter().enumerate() {
            let selected = weights.is_selected(k);
            let erred = if c.effect != 0.0 { !selected } else { selected };
            if erred {
                errors[k] += 1;
            }
        }
    }
    Ok(errors)
}

/// Estimates miss and false-inclusion rates of the adaptive weights over a
/// sample-size grid: `reps` replicates per grid point, one [`RatePoint`]
/// per (grid value, study). Deterministic in `seed`.
pub fn estimate_weight_error_rates(
    configs: &[StudyConfig],
    n_grid: &[u64],
    reps: u64,
    seed: u64,
) -> Result<Vec<RatePoint>> {
    validate_configs(configs)?;
    if n_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if reps == 0 {
        return Err(Error::ZeroReps);
    }
    let mut points = Vec::with_capacity(n_grid.len() * configs.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        let mut errors = alloc::vec![0u64; configs.len()];
        for chunk in 0..rng::chunk_count(reps) {
            let chunk_errors = weight_error_chunk(configs, n, reps, seed, gi as u64, chunk)?;
            for (total, e) in errors.iter_mut().zip(chunk_errors) {
                *total += e;
            }
        }
        points.extend(rate_points_from_errors(configs, n, reps, &errors));
    }
    Ok(points)
}

/// Turns summed chunk error counts into rate points (shared with the
/// parallel driver in the CLI).
pub fn rate_points_from_errors(
    configs: &[StudyConfig],
    n: u64,
    reps: u64,
    errors: &[u64],
) -> Vec<RatePoint> {
    configs
        .iter()
        .zip(errors.iter())
        .enumerate()
        .map(|(k, (c, &e))| RatePoint {
            n,
            study: k + 1,
            kind: if c.effect != 0.0 {
                RateKind::Miss
            } else {
                RateKind::FalseInclusion
            },
            estimate: e as f64 / reps as f64,
            reps,
        })
        .collect()
}

/// Functional form of a fitted decay law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitForm {
    /// rate = a * n * exp(-b n)
    NExpDecay,
    /// rate = 1 / (a + b n)
    ReciprocalLinear,
}

impl FitForm {
    pub fn name(&self) -> &'static str {
        match self {
            FitForm::NExpDecay => "n_exp_decay",
            FitForm::ReciprocalLinear => "reciprocal_linear",
        }
    }
}

/// Least-squares fit of a decay law on its linearizing scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub form: FitForm,
    pub a: f64,
    pub b: f64,
    /// Coefficient of determination on the transformed (log or reciprocal)
    /// scale.
    pub r_squared: f64,
    pub used_points: usize,
    /// Points with rate 0 (or otherwise unusable) excluded from the fit.
    pub dropped_points: usize,
}

impl FitResult {
    /// A fitted decay constant of zero or below means the rates did not
    /// actually decay over the grid.
    pub fn is_decaying(&self) -> bool {
        self.b > 0.0
    }

    /// Fitted rate at sample size `n`.
    pub fn predict(&self, n: f64) -> f64 {
        match self.form {
            FitForm::NExpDecay => self.a * n * libm::exp(-self.b * n),
            FitForm::ReciprocalLinear => 1.0 / (self.a + self.b * n),
        }
    }
}

fn usable_points(points: &[(f64, f64)]) -> (Vec<(f64, f64)>, usize) {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(n, rate)| n > 0.0 && rate > 0.0 && rate.is_finite() && n.is_finite())
        .collect();
    let dropped = points.len() - usable.len();
    (usable, dropped)
}

fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let m = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let fit = intercept + slope * x;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - y_mean) * (y - y_mean);
    }
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (slope, intercept, r_squared)
}

/// Fits rate = a n exp(-b n) by regressing ln(rate) - ln(n) on n.
/// Zero-rate points are dropped (counted in the result); at least three
/// usable points are required.
pub fn fit_n_exp_decay(points: &[(f64, f64)]) -> Result<FitResult> {
    let (usable, dropped) = usable_points(points);
    if usable.len() < 3 {
        return Err(Error::TooFewFitPoints {
            needed: 3,
            got: usable.len(),
        });
    }
    let xs: Vec<f64> = usable.iter().map(|&(n, _)| n).collect();
    let ys: Vec<f64> = usable
        .iter()
        .map(|&(n, rate)| libm::log(rate) - libm::log(n))
        .collect();
    let (slope, intercept, r_squared) = ols(&xs, &ys);
    Ok(FitResult {
        form: FitForm::NExpDecay,
        a: libm::exp(intercept),
        b: -slope,
        r_squared,
        used_points: usable.len(),
        dropped_points: dropped,
    })
}

/// Fits rate = 1 / (a + b n) by regressing 1/rate on n. Zero-rate points
/// are dropped; at least two usable points are required.
pub fn fit_reciprocal_linear(points: &[(f64, f64)]) -> Result<FitResult> {
    let (usable, dropped) = usable_points(points);
    if usable.len() < 2 {
        return Err(Error::TooFewFitPoints {
            needed: 2,
            got: usable.len(),
        });
    }
    let xs: Vec<f64> = usable.iter().map(|&(n, _)| n).collect();
    let ys: Vec<f64> = usable.iter().map(|&(_, rate)| 1.0 / rate).collect();
    let (slope, intercept, r_squared) = ols(&xs, &ys);
    Ok(FitResult {
        form: FitForm::ReciprocalLinear,
        a: intercept,
        b: slope,
        r_squared,
        used_points: usable.len(),
        dropped_points: dropped,
    })
}

/// Which test's empirical exact slope to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeMethod {
    SingleStudy,
    Fisher,
    AwFisher,
}

impl SlopeMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SlopeMethod::SingleStudy => "single_study",
            SlopeMethod::Fisher => "fisher",
            SlopeMethod::AwFisher => "aw_fisher",
        }
    }
}

/// Mean of -(2/n) ln p over replicates, with n the average sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeEstimate {
    pub method: SlopeMethod,
    pub n: u64,
    pub estimate: f64,
    pub reps: u64,
    /// Monte Carlo standard error of the mean.
    pub std_error: f64,
}

/// Sum and sum of squares of the per-replicate slope values for one chunk.
/// Chunk results must be accumulated in chunk-index order to reproduce
/// [`estimate_exact_slope`] bit for bit.
pub fn slope_chunk(
    method: SlopeMethod,
    configs: &[StudyConfig],
    n: u64,
    reps: u64,
    seed: u64,
    chunk: u64,
    table: Option<&NullTable>,
) -> Result<(f64, f64)> {
    validate_slope_inputs(method, configs, n, table)?;
    let sizes = study_sizes(configs, n)?;
    let k = configs.len();
    let ln_bonferroni = ln_two_pow_minus_one(k);
    let mut rng = rng::stream_rng(seed, chunk);
    let mut log_p = alloc::vec![0.0f64; k];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..rng::chunk_len(reps, chunk) {
        for (slot, (c, &nk)) in log_p.iter_mut().zip(configs.iter().zip(sizes.iter())) {
            *slot = study_log_pvalue(nk, c.effect, &mut rng);
        }
        let combined_log_p = match method {
            SlopeMethod::SingleStudy => log_p[0],
            SlopeMethod::Fisher => {
                let t = -2.0 * log_p.iter().sum::<f64>();
                chi2_even_log_sf_raw(t, k)
            }
            SlopeMethod::AwFisher => {
                let table = table.expect("validated above");
                let s = aw_sorted_from_log_pvalues(&log_p).statistic;
                if s <= table.max_sample() {
                    libm::log(table.p_value(s))
                } else {
                    // Beyond the table's range the Bonferroni upper bound
                    // stands in; the log(2^K - 1) offset vanishes in -(2/n).
                    (-s + ln_bonferroni).min(0.0)
                }
            }
        };
        let value = -2.0 * combined_log_p / n as f64;
        sum += value;
        sum_sq += value * value;
    }
    Ok((sum, sum_sq))
}

fn validate_slope_inputs(
    method: SlopeMethod,
    configs: &[StudyConfig],
    n: u64,
    table: Option<&NullTable>,
) -> Result<()> {
    validate_configs(configs)?;
    validate_even(n)?;
    if method == SlopeMethod::SingleStudy && configs.len() != 1 {
        return Err(Error::NotSingleStudy(configs.len()));
    }
    if method == SlopeMethod::AwFisher {
        match table {
            None => return Err(Error::MissingNullTable),
            Some(t) if t.k() != configs.len() => {
                return Err(Error::StudyCountMismatch {
                    table_k: t.k(),
                    data_k: configs.len(),
                })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Builds the slope statistics from ordered chunk sums.
pub fn slope_from_sums(
    method: SlopeMethod,
    n: u64,
    reps: u64,
    sum: f64,
    sum_sq: f64,
) -> SlopeEstimate {
    let reps_f = reps as f64;
    let mean = sum / reps_f;
    let var = if reps > 1 {
        ((sum_sq - sum * sum / reps_f) / (reps_f - 1.0)).max(0.0)
    } else {
        0.0
    };
    SlopeEstimate {
        method,
        n,
        estimate: mean,
        reps,
        std_error: libm::sqrt(var / reps_f),
    }
}

/// Estimates the empirical exact slope of `method` at average sample size
/// `n`: generates per-study p-values with sizes round(lambda_k n), combines
/// them, and averages -(2/n) ln p over `reps` replicates.
pub fn estimate_exact_slope(
    method: SlopeMethod,
    configs: &[StudyConfig],
    n: u64,
    reps: u64,
    seed: u64,
    table: Option<&NullTable>,
) -> Result<SlopeEstimate> {
    if reps == 0 {
        return Err(Error::ZeroReps);
    }
    validate_slope_inputs(method, configs, n, table)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for chunk in 0..rng::chunk_count(reps) {
        let (s, s2) = slope_chunk(method, configs, n, reps, seed, chunk, table)?;
        sum += s;
        sum_sq += s2;
    }
    Ok(slope_from_sums(method, n, reps, sum, sum_sq))
}

/// One-sample Kolmogorov-Smirnov distance of `samples` from Uniform(0, 1).
/// Sorts in place.
pub fn ks_uniform_distance(samples: &mut [f64]) -> f64 {
    samples.sort_unstable_by(f64::total_cmp);
    let m = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        d = d.max((i + 1) as f64 / m - x).max(x - i as f64 / m);
    }
    d
}
