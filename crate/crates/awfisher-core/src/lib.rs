//! Adaptively weighted Fisher p-value combination.
//!
//! Meta-analysis combiner that assigns each study a binary weight per
//! feature and minimizes the weighted Fisher significance level over all
//! nonzero weight vectors; the selected weights expose which studies drive
//! a feature's significance. The crate provides:
//!
//! - [`combine`]: Fisher, AW-Fisher (exhaustive and sorted-prefix searches)
//!   and classical comparators (Stouffer, logit, min-P, max-P), all in log
//!   space;
//! - [`nulldist`]: Monte Carlo null tables of the AW statistic, p-value
//!   lookup, and the analytic Bonferroni sandwich around the Monte Carlo
//!   estimate;
//! - [`simlab`]: a simulation lab that measures how fast the adaptive
//!   weights converge to the truly active studies and estimates empirical
//!   Bahadur exact slopes;
//! - [`rng`]: the chunked substream scheme that makes every randomized
//!   operation reproducible independently of worker count.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats and the command
//! line live in the companion `awfisher-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod combine;
mod error;
pub mod nulldist;
pub mod rng;
pub mod simlab;
pub mod special;

pub use combine::{
    aw_sorted_from_log_pvalues, aw_statistic_exhaustive, aw_statistic_sorted, chi2_even_log_sf,
    comparator_combine, fisher_statistic, AWResult, CombinedResult, Method, PValueVector,
    WeightVector, MAX_EXHAUSTIVE_STUDIES,
};
pub use error::{Error, Result};
pub use nulldist::{bonferroni_bounds, statistic_chunk, BoundPair, NullTable};
pub use simlab::{
    estimate_exact_slope, estimate_weight_error_rates, fit_n_exp_decay, fit_reciprocal_linear,
    simulate_study_pvalue, FitForm, FitResult, RateKind, RatePoint, SlopeEstimate, SlopeMethod,
    StudyConfig,
};
