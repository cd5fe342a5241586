//! P-value combination statistics.
//!
//! The adaptively weighted Fisher statistic assigns each study a binary
//! weight, scores every candidate weight vector by the chi-square tail
//! probability of its weighted Fisher statistic (degrees of freedom = twice
//! the number of selected studies), and keeps the weights that minimize that
//! significance level:
//!
//! ```text
//!   T(w; p) = -2 * sum_k w_k ln p_k
//!   L(w; p) = P(chi2_{2*ones(w)} >= T(w; p))
//!   S       = -ln min_w L(w; p)
//! ```
//!
//! Two search strategies are provided: full enumeration of the 2^K - 1
//! nonzero weight vectors, and a linear scan over prefixes of the
//! ascending-sorted p-values. For a fixed number of selected studies the
//! level is minimized by taking the smallest p-values, so the prefix scan is
//! exact; the enumeration is kept as the independent slow route.
//!
//! Everything is computed and compared in log space, so statistics stay
//! finite down to p-values far below the smallest positive double.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::special::{log1m_exp, log_sum_exp, standard_normal_log_sf, standard_normal_quantile,
                     students_t_log_sf};

/// Upper bound on K for the exhaustive search (2^K - 1 candidates).
pub const MAX_EXHAUSTIVE_STUDIES: usize = 25;

/// A validated vector of per-study p-values, each in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct PValueVector {
    values: Vec<f64>,
}

impl PValueVector {
    /// Validates that the vector is nonempty and every entry lies in (0, 1].
    /// Exactly 1 is accepted (it contributes nothing to any statistic);
    /// 0, negatives, values above 1, and non-finite entries are rejected.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyPValues);
        }
        for (index, &value) in values.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::InvalidPValue { index, value });
            }
        }
        Ok(Self { values })
    }

    /// Number of studies K.
    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn log_values(&self) -> Vec<f64> {
        self.values.iter().map(|&p| libm::log(p)).collect()
    }
}

/// Binary study weights; at least one study is always selected.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct WeightVector {
    bits: Vec<bool>,
}

impl WeightVector {
    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::ZeroStudies);
        }
        if !bits.iter().any(|&b| b) {
            return Err(Error::EmptyPValues);
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_selected(&self, study: usize) -> bool {
        self.bits[study]
    }

    /// Renders the weights as a bit-string, e.g. `101`.
    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// Outcome of the adaptive-weight search for one p-value vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AWResult {
    /// S = -log_level.
    pub statistic: f64,
    pub weights: WeightVector,
    /// Natural log of the minimized significance level.
    pub log_level: f64,
}

/// P-value combination methods with analytic nulls (plus the AW statistic,
/// whose null requires a Monte Carlo table).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Fisher,
    AwFisher,
    Stouffer,
    Logit,
    MinP,
    MaxP,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Fisher => "fisher",
            Method::AwFisher => "aw_fisher",
            Method::Stouffer => "stouffer",
            Method::Logit => "logit",
            Method::MinP => "min_p",
            Method::MaxP => "max_p",
        }
    }
}

/// Statistic and (when analytically available) combined log p-value.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedResult {
    pub method: Method,
    pub statistic: f64,
    /// ln of the combined p-value under the complete null; `None` for the
    /// AW statistic, which needs a null table.
    pub log_p: Option<f64>,
}

/// Fisher's combination statistic -2 * sum ln p_k.
pub fn fisher_statistic(p: &PValueVector) -> f64 {
    -2.0 * p.values.iter().map(|&v| libm::log(v)).sum::<f64>()
}

/// log of the chi-square survival function for even degrees of freedom
/// 2 * `half_df` at `t`:
///
/// ```text
///   ln Q(t) = -t/2 + ln( sum_{j=0}^{half_df-1} (t/2)^j / j! )
/// ```
///
/// The sum is taken with log-sum-exp, so the result is exact in log space
/// even when the survival probability itself underflows.
pub fn chi2_even_log_sf(t: f64, half_df: usize) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeStatistic { t });
    }
    if half_df == 0 {
        return Err(Error::ZeroDegreesOfFreedom);
    }
    Ok(chi2_even_log_sf_raw(t, half_df))
}

pub(crate) fn chi2_even_log_sf_raw(t: f64, half_df: usize) -> f64 {
    debug_assert!(t >= 0.0 && half_df >= 1);
    if t == 0.0 {
        return 0.0;
    }
    let ln_half_t = libm::log(0.5 * t);
    // log-space Poisson terms: l_j = j ln(t/2) - ln j!
    let mut stack = [0.0f64; 32];
    if half_df <= stack.len() {
        fill_terms(&mut stack[..half_df], ln_half_t);
        (log_sum_exp(&stack[..half_df]) - 0.5 * t).min(0.0)
    } else {
        let mut terms = alloc::vec![0.0f64; half_df];
        fill_terms(&mut terms, ln_half_t);
        (log_sum_exp(&terms) - 0.5 * t).min(0.0)
    }
}

fn fill_terms(terms: &mut [f64], ln_half_t: f64) {
    let mut l = 0.0;
    terms[0] = 0.0;
    for (j, slot) in terms.iter_mut().enumerate().skip(1) {
        l += ln_half_t - libm::log(j as f64);
        *slot = l;
    }
}

/// Study order used by both searches: ascending p-value, ties broken toward
/// the larger original index so that tied inputs resolve to the
/// lexicographically smallest weight vector.
fn search_order(log_p: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..log_p.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        log_p[a]
            .partial_cmp(&log_p[b])
            .expect("p-values are finite")
            .then(b.cmp(&a))
    });
    order
}

fn weights_from_selection(k: usize, selected: impl Iterator<Item = usize>) -> WeightVector {
    let mut bits = alloc::vec![false; k];
    for study in selected {
        bits[study] = true;
    }
    WeightVector { bits }
}

/// Adaptive-weight search by full enumeration of all 2^K - 1 nonzero weight
/// vectors. Ties on the level prefer fewer selected studies, then the
/// lexicographically smallest weight vector.
pub fn aw_statistic_exhaustive(p: &PValueVector) -> Result<AWResult> {
    let k = p.k();
    if k > MAX_EXHAUSTIVE_STUDIES {
        return Err(Error::TooManyStudies {
            k,
            max: MAX_EXHAUSTIVE_STUDIES,
        });
    }
    let log_p = p.log_values();
    let order = search_order(&log_p);
    // Summation runs in sorted-position order so that prefix subsets
    // accumulate exactly like the sorted search and S matches bit for bit.
    let sorted_logs: Vec<f64> = order.iter().map(|&i| log_p[i]).collect();

    let mut best_mask = 0u32;
    let mut best_level = f64::INFINITY;
    let mut best_count = usize::MAX;
    for mask in 1u32..(1u32 << k) {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (pos, &lp) in sorted_logs.iter().enumerate() {
            if mask & (1 << pos) != 0 {
                sum += lp;
                count += 1;
            }
        }
        let level = chi2_even_log_sf_raw(-2.0 * sum, count);
        let better = if level != best_level {
            level < best_level
        } else if count != best_count {
            count < best_count
        } else {
            mask_weights(k, mask, &order) < mask_weights(k, best_mask, &order)
        };
        if better {
            best_mask = mask;
            best_level = level;
            best_count = count;
        }
    }

    Ok(AWResult {
        statistic: -best_level,
        weights: mask_weights(k, best_mask, &order),
        log_level: best_level,
    })
}

fn mask_weights(k: usize, mask: u32, order: &[usize]) -> WeightVector {
    weights_from_selection(
        k,
        (0..k).filter(|&pos| mask & (1 << pos) != 0).map(|pos| order[pos]),
    )
}

/// Adaptive-weight search over the K prefixes of the ascending-sorted
/// p-values. Equals the exhaustive search on every input: with the selection
/// count fixed, the level is minimized by the smallest p-values.
pub fn aw_statistic_sorted(p: &PValueVector) -> AWResult {
    aw_sorted_from_log_pvalues(&p.log_values())
}

/// Log-domain entry point for the sorted search; `log_p[k] = ln p_k`.
/// Used directly by the Monte Carlo and simulation paths so that p-values
/// below the smallest positive double never have to be materialized.
pub fn aw_sorted_from_log_pvalues(log_p: &[f64]) -> AWResult {
    debug_assert!(!log_p.is_empty());
    let k = log_p.len();
    let order = search_order(log_p);

    let mut cum = 0.0;
    let mut best_level = f64::INFINITY;
    let mut best_j = 0usize;
    for j in 1..=k {
        cum += log_p[order[j - 1]];
        let level = chi2_even_log_sf_raw(-2.0 * cum, j);
        // Strict improvement keeps the smallest selection count on ties.
        if level < best_level {
            best_level = level;
            best_j = j;
        }
    }

    AWResult {
        statistic: -best_level,
        weights: weights_from_selection(k, order[..best_j].iter().copied()),
        log_level: best_level,
    }
}

/// Combines a p-value vector with the requested method, returning the
/// method's statistic and its analytic combined log p-value under the
/// complete null (absent for the AW statistic).
pub fn comparator_combine(p: &PValueVector, method: Method) -> CombinedResult {
    let k = p.k();
    let kf = k as f64;
    match method {
        Method::Fisher => {
            let t = fisher_statistic(p);
            CombinedResult {
                method,
                statistic: t,
                log_p: Some(chi2_even_log_sf_raw(t, k)),
            }
        }
        Method::AwFisher => {
            let aw = aw_sorted_from_log_pvalues(&p.log_values());
            CombinedResult {
                method,
                statistic: aw.statistic,
                log_p: None,
            }
        }
        Method::Stouffer => {
            // Z = sum Phi^-1(1 - p_k) / sqrt(K); -Phi^-1(p) keeps precision
            // for tiny p where 1 - p rounds to 1.
            let z: f64 = p.values.iter().map(|&v| -standard_normal_quantile(v)).sum();
            let z = z / libm::sqrt(kf);
            CombinedResult {
                method,
                statistic: z,
                log_p: Some(standard_normal_log_sf(z)),
            }
        }
        Method::Logit => {
            // G = -sum ln(p/(1-p)), referred to a scaled t distribution with
            // nu = 5K + 4 and scale sqrt(K pi^2 (5K+2) / (3 (5K+4))).
            if p.values.contains(&1.0) {
                // ln(p/(1-p)) diverges at p = 1; the statistic degenerates
                // and the combined p-value is 1.
                return CombinedResult {
                    method,
                    statistic: f64::NEG_INFINITY,
                    log_p: Some(0.0),
                };
            }
            let g: f64 = p
                .values
                .iter()
                .map(|&v| libm::log1p(-v) - libm::log(v))
                .sum();
            let nu = 5.0 * kf + 4.0;
            let scale = libm::sqrt(kf * PI_SQ * (5.0 * kf + 2.0) / (3.0 * nu));
            CombinedResult {
                method,
                statistic: g,
                log_p: Some(students_t_log_sf(g / scale, nu)),
            }
        }
        Method::MinP => {
            let pmin = p.values.iter().cloned().fold(f64::INFINITY, f64::min);
            // combined p = 1 - (1 - pmin)^K
            let log_p = if pmin == 1.0 {
                0.0
            } else {
                log1m_exp(kf * libm::log1p(-pmin))
            };
            CombinedResult {
                method,
                statistic: pmin,
                log_p: Some(log_p),
            }
        }
        Method::MaxP => {
            let pmax = p.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            CombinedResult {
                method,
                statistic: pmax,
                log_p: Some(kf * libm::log(pmax)),
            }
        }
    }
}

const PI_SQ: f64 = core::f64::consts::PI * core::f64::consts::PI;
