use thiserror::Error;

/// Errors raised by statistic construction, null-table handling and the
/// simulation lab.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("p-value vector must contain at least one entry")]
    EmptyPValues,
    #[error("p-value at index {index} is {value}; must lie in (0, 1]")]
    InvalidPValue { index: usize, value: f64 },
    #[error("exhaustive weight search supports at most {max} studies, got {k}")]
    TooManyStudies { k: usize, max: usize },
    #[error("chi-square argument {t} is negative")]
    NegativeStatistic { t: f64 },
    #[error("half degrees of freedom must be at least 1")]
    ZeroDegreesOfFreedom,
    #[error("log significance level {0} must be nonpositive")]
    PositiveLogLevel(f64),
    #[error("number of studies must be at least 1")]
    ZeroStudies,
    #[error("number of draws must be at least 1")]
    ZeroDraws,
    #[error("null-table samples must be sorted ascending, finite and nonnegative")]
    UnsortedSamples,
    #[error("null table was built for {table_k} studies but data has {data_k}")]
    StudyCountMismatch { table_k: usize, data_k: usize },
    #[error("the aw_fisher slope estimate requires a null table")]
    MissingNullTable,
    #[error("sample size {n} is invalid; need an even n >= 2")]
    InvalidSampleSize { n: u64 },
    #[error("per-study sample size round(lambda * n) = {n} for study {study}; must be >= 2")]
    StudySampleTooSmall { study: usize, n: u64 },
    #[error("study {study} has invalid config (effect {effect}, lambda {lambda})")]
    InvalidStudyConfig {
        study: usize,
        effect: f64,
        lambda: f64,
    },
    #[error("at least one study config is required")]
    NoStudyConfigs,
    #[error("single-study slope estimation takes exactly one study config, got {0}")]
    NotSingleStudy(usize),
    #[error("sample-size grid is empty")]
    EmptyGrid,
    #[error("replicate count must be at least 1")]
    ZeroReps,
    #[error("curve fit needs at least {needed} points with positive rate, got {got}")]
    TooFewFitPoints { needed: usize, got: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
