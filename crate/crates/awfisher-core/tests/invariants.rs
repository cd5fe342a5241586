//! Property tests for the combiner invariants, plus cross-checks of the
//! chi-square tail against an independent incomplete-gamma implementation.

use awfisher_core::rng::{stream_rng, uniform_open_closed};
use awfisher_core::{
    aw_statistic_exhaustive, aw_statistic_sorted, bonferroni_bounds, chi2_even_log_sf,
    fisher_statistic, NullTable, PValueVector,
};
use proptest::prelude::*;
use rand_core::RngCore;

/// p-values spanning both the bulk and the extreme-tail regime.
fn pvalue() -> impl Strategy<Value = f64> {
    prop_oneof![
        4 => 1e-12..=1.0f64,
        1 => (-600.0..-1e-3f64).prop_map(f64::exp),
    ]
}

fn pvec(max_k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(pvalue(), 1..=max_k)
}

fn shuffled(values: &[f64], seed: u64) -> (Vec<f64>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..values.len()).collect();
    let mut rng = stream_rng(seed, 0);
    for i in (1..perm.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        perm.swap(i, j);
    }
    let moved = perm.iter().map(|&i| values[i]).collect();
    (moved, perm)
}

proptest! {
    // The sorted prefix scan must agree with full enumeration: identical
    // weights, statistics within 1e-10 (bit-identical by construction).
    #[test]
    fn sorted_search_equals_exhaustive(values in pvec(12)) {
        let p = PValueVector::new(values).unwrap();
        let fast = aw_statistic_sorted(&p);
        let slow = aw_statistic_exhaustive(&p).unwrap();
        prop_assert_eq!(&fast.weights, &slow.weights);
        prop_assert!((fast.statistic - slow.statistic).abs() < 1e-10);
        prop_assert_eq!(fast.statistic, -fast.log_level);
    }

    // Permuting the inputs permutes the optimal weights identically and
    // leaves S unchanged exactly.
    #[test]
    fn permutation_equivariance(values in pvec(10), seed in any::<u64>()) {
        let base = aw_statistic_sorted(&PValueVector::new(values.clone()).unwrap());
        let (moved, perm) = shuffled(&values, seed);
        let permuted = aw_statistic_sorted(&PValueVector::new(moved).unwrap());
        prop_assert_eq!(base.statistic, permuted.statistic);
        for (new_pos, &old_pos) in perm.iter().enumerate() {
            prop_assert_eq!(
                base.weights.is_selected(old_pos),
                permuted.weights.is_selected(new_pos)
            );
        }
    }

    // Decreasing any single p-value never decreases S.
    #[test]
    fn statistic_monotone_in_each_pvalue(
        values in pvec(10),
        which in any::<prop::sample::Index>(),
        shrink in 1e-6..=1.0f64,
    ) {
        let s_before = aw_statistic_sorted(&PValueVector::new(values.clone()).unwrap()).statistic;
        let mut smaller = values;
        let i = which.index(smaller.len());
        smaller[i] *= shrink;
        if smaller[i] > 0.0 {
            let s_after = aw_statistic_sorted(&PValueVector::new(smaller).unwrap()).statistic;
            prop_assert!(s_after >= s_before - 1e-12, "{s_after} < {s_before}");
        }
    }

    // The all-ones weight vector is always a candidate, so S dominates the
    // Fisher log level of the same vector.
    #[test]
    fn dominates_fisher(values in pvec(10)) {
        let p = PValueVector::new(values).unwrap();
        let s = aw_statistic_sorted(&p).statistic;
        let fisher_log_level = chi2_even_log_sf(fisher_statistic(&p), p.k()).unwrap();
        prop_assert!(s >= -fisher_log_level - 1e-12);
    }

    // Identical inputs give bit-identical outputs.
    #[test]
    fn searches_are_pure(values in pvec(8)) {
        let p = PValueVector::new(values).unwrap();
        let a = aw_statistic_sorted(&p);
        let b = aw_statistic_sorted(&p);
        prop_assert_eq!(a.statistic.to_bits(), b.statistic.to_bits());
        prop_assert_eq!(a.weights, b.weights);
    }

    // Monte Carlo p-values never return 0 and respect the add-one floor.
    #[test]
    fn table_pvalue_in_range(s_obs in 0.0..60.0f64) {
        let table = NullTable::build(2, 2000, 11).unwrap();
        let p = table.p_value(s_obs);
        prop_assert!((1.0 / 2001.0..=1.0).contains(&p));
    }
}

#[test]
fn exact_ones_are_handled_by_both_searches() {
    for values in [vec![1.0], vec![1.0, 1.0, 1.0], vec![1.0, 0.02, 1.0]] {
        let p = PValueVector::new(values).unwrap();
        let fast = aw_statistic_sorted(&p);
        let slow = aw_statistic_exhaustive(&p).unwrap();
        assert_eq!(fast.weights, slow.weights);
        assert_eq!(fast.statistic, slow.statistic);
        assert!(fast.statistic >= 0.0);
    }
}

#[test]
fn chi2_log_sf_matches_incomplete_gamma() {
    // independent oracle: regularized upper incomplete gamma Q(m, t/2);
    // statrs rejects x = 0, where the survival is exactly 1 by definition
    for half_df in 1..=20usize {
        assert_eq!(chi2_even_log_sf(0.0, half_df).unwrap(), 0.0);
        for i in 1..=100 {
            let t = 400.0 * i as f64 / 100.0;
            let ours = chi2_even_log_sf(t, half_df).unwrap().exp();
            let oracle = statrs::function::gamma::gamma_ur(half_df as f64, t / 2.0);
            let err = (ours - oracle).abs() / oracle.max(f64::MIN_POSITIVE);
            assert!(
                err < 1e-10,
                "df={} t={t}: {ours} vs {oracle} (rel {err:.2e})",
                2 * half_df
            );
        }
    }
}

#[test]
fn observed_vector_pvalue_sits_inside_bonferroni_sandwich() {
    // p = (0.01, 0.5): the minimized level is 0.01, so the true AW p-value
    // lies in [0.01, 0.03]; the Monte Carlo estimate lands inside with
    // margin at this table size.
    let p = PValueVector::new(vec![0.01, 0.5]).unwrap();
    let aw = aw_statistic_sorted(&p);
    let bounds = bonferroni_bounds(aw.log_level, 2).unwrap();
    assert!((bounds.lower() - 0.01).abs() < 1e-12);
    assert!((bounds.upper() - 0.03).abs() < 1e-12);

    let table = NullTable::build(2, 300_000, 20260809).unwrap();
    let p_mc = table.p_value(aw.statistic);
    let se = (p_mc * (1.0 - p_mc) / table.draws() as f64).sqrt();
    assert!(
        p_mc >= bounds.lower() - 3.0 * se && p_mc <= bounds.upper() + 3.0 * se,
        "p_mc {p_mc} outside [{}, {}]",
        bounds.lower(),
        bounds.upper()
    );
}

#[test]
fn fisher_slope_is_additive_over_studies() {
    // the combined rate splits into per-study rates: at large n the Fisher
    // slope equals the sum of the single-study slopes up to Monte Carlo
    // error and the O(log n / n) prefactor remainder
    use awfisher_core::{estimate_exact_slope, SlopeMethod, StudyConfig};
    let n = 10_000;
    let reps = 4_000;
    let s1 = estimate_exact_slope(
        SlopeMethod::SingleStudy,
        &[StudyConfig::new(0.4)],
        n,
        reps,
        31,
        None,
    )
    .unwrap();
    let s2 = estimate_exact_slope(
        SlopeMethod::SingleStudy,
        &[StudyConfig::new(0.5)],
        n,
        reps,
        32,
        None,
    )
    .unwrap();
    let fisher = estimate_exact_slope(
        SlopeMethod::Fisher,
        &[StudyConfig::new(0.4), StudyConfig::new(0.5)],
        n,
        reps,
        33,
        None,
    )
    .unwrap();
    let sum = s1.estimate + s2.estimate;
    let mc = 3.0 * (s1.std_error + s2.std_error + fisher.std_error);
    assert!(
        (fisher.estimate - sum).abs() < 0.005 + mc,
        "fisher {} vs sum {} (mc band {mc:.2e})",
        fisher.estimate,
        sum
    );
    // and both sit near the analytic rates mu^2/4
    assert!((sum - (0.16 + 0.25) / 4.0).abs() / sum < 0.05);
}

#[test]
fn uniform_draws_feed_valid_pvalue_vectors() {
    let mut rng = stream_rng(5, 9);
    for _ in 0..1000 {
        let values: Vec<f64> = (0..4).map(|_| uniform_open_closed(&mut rng)).collect();
        assert!(PValueVector::new(values).is_ok());
    }
}
