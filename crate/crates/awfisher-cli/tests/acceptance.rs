//! Acceptance suite: one test per sign-off criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them all).
//!
//! Monte Carlo criteria run at fixed seeds, so the whole suite is
//! deterministic; tolerances are the 3-sigma (or stated) bands of the
//! estimators involved.

use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;
use std::time::Instant;

use awfisher_core::rng::{stream_rng, uniform_open_closed};
use awfisher_core::simlab::ks_uniform_distance;
use awfisher_core::{
    aw_statistic_exhaustive, aw_statistic_sorted, bonferroni_bounds, chi2_even_log_sf,
    estimate_exact_slope, fit_n_exp_decay, fit_reciprocal_linear, NullTable, PValueVector,
    RateKind, RatePoint, SlopeMethod, StudyConfig,
};
use awfisher_cli::simcmd::parallel_rates;

const TABLE_DRAWS: u64 = 1_000_000;

/// Shared 10^6-draw null tables for K = 1..=6.
fn table(k: usize) -> &'static NullTable {
    static TABLES: OnceLock<Vec<NullTable>> = OnceLock::new();
    &TABLES.get_or_init(|| {
        (1..=6)
            .map(|k| NullTable::build(k, TABLE_DRAWS, 1000 + k as u64).unwrap())
            .collect()
    })[k - 1]
}

fn check(name: &str, pass: bool, detail: String) {
    println!(
        "acceptance {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {name} failed: {detail}");
}

#[test]
fn a01_sorted_search_equals_exhaustive() {
    let start = Instant::now();
    let mut rng = stream_rng(2024, 0);
    let total = 100_000usize;
    let mut max_ds: f64 = 0.0;
    for i in 0..total {
        let k = i % 10 + 1;
        let values: Vec<f64> = (0..k).map(|_| uniform_open_closed(&mut rng)).collect();
        let p = PValueVector::new(values).unwrap();
        let fast = aw_statistic_sorted(&p);
        let slow = aw_statistic_exhaustive(&p).unwrap();
        assert_eq!(
            fast.weights, slow.weights,
            "weights differ at vector {i}: {:?}",
            p.values()
        );
        max_ds = max_ds.max((fast.statistic - slow.statistic).abs());
    }
    let elapsed = start.elapsed();
    check(
        "01 sorted-vs-exhaustive equivalence",
        max_ds < 1e-10 && elapsed.as_secs() < 60,
        format!("{total} vectors, K in 1..=10, max |dS| = {max_ds:.2e}, {elapsed:.2?}"),
    );
}

#[test]
fn a02_chi2_tail_matches_incomplete_gamma() {
    // 20 dfs x 500 t values = 10^4 grid points; statrs' regularized upper
    // incomplete gamma is the independent oracle (it rejects x = 0, where
    // the survival is exactly 1 by construction)
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for half_df in 1..=20usize {
        for i in 1..=500 {
            let t = 400.0 * i as f64 / 500.0;
            let ours = chi2_even_log_sf(t, half_df).unwrap().exp();
            let oracle = statrs::function::gamma::gamma_ur(half_df as f64, t / 2.0);
            worst = worst.max((ours - oracle).abs() / oracle);
            checked += 1;
        }
        assert_eq!(chi2_even_log_sf(0.0, half_df).unwrap(), 0.0);
    }
    check(
        "02 chi-square tail vs incomplete gamma",
        worst < 1e-10,
        format!("{checked} grid points, df 2..=40, t in (0, 400], worst rel err {worst:.2e}"),
    );
}

#[test]
fn a03_null_calibration() {
    // uniform-null features through the K = 3 table give uniform p-values
    let t3 = table(3);
    let mut rng = stream_rng(42, 0);
    let m = 100_000usize;
    let mut pvals: Vec<f64> = Vec::with_capacity(m);
    let mut log_p = vec![0.0f64; 3];
    for _ in 0..m {
        for slot in log_p.iter_mut() {
            *slot = uniform_open_closed(&mut rng).ln();
        }
        let s = awfisher_core::aw_sorted_from_log_pvalues(&log_p).statistic;
        pvals.push(t3.p_value(s));
    }
    let d = ks_uniform_distance(&mut pvals);
    let ks_limit = 1.63 / (m as f64).sqrt();

    // K = 1: the null of S is Exponential(1)
    let t1 = table(1);
    let mut worst_z = 0.0f64;
    for s in 1..=10 {
        let s = s as f64;
        let expect = (-s).exp();
        let below = t1.samples().partition_point(|&x| x < s);
        let got = (t1.draws() as usize - below) as f64 / t1.draws() as f64;
        let se = (expect * (1.0 - expect) / t1.draws() as f64).sqrt();
        worst_z = worst_z.max((got - expect).abs() / se);
    }

    check(
        "03 null calibration",
        d < ks_limit && worst_z < 3.0,
        format!(
            "KS {d:.5} < {ks_limit:.5} over {m} features; K=1 survival worst |z| = {worst_z:.2} at s in 1..=10"
        ),
    );
}

#[test]
fn a04_bonferroni_sandwich() {
    let mut rng = stream_rng(7, 1);
    let mut hard_violations = 0usize;
    let mut worst_margin = f64::NEG_INFINITY;
    for i in 0..1000 {
        let k = i % 6 + 1;
        let t = table(k);
        let values: Vec<f64> = (0..k).map(|_| uniform_open_closed(&mut rng)).collect();
        let aw = aw_statistic_sorted(&PValueVector::new(values).unwrap());
        let p_mc = t.p_value(aw.statistic);
        let bounds = bonferroni_bounds(aw.log_level, k).unwrap();
        let se = (p_mc * (1.0 - p_mc) / t.draws() as f64).sqrt();
        let low_excess = bounds.lower() - 3.0 * se - p_mc;
        let high_excess = p_mc - bounds.upper() - 3.0 * se;
        worst_margin = worst_margin.max(low_excess).max(high_excess);
        if low_excess > 0.0 || high_excess > 0.0 {
            hard_violations += 1;
        }
    }
    check(
        "04 bonferroni sandwich",
        hard_violations == 0,
        format!("1000 vectors, K in 1..=6, {hard_violations} violations beyond 3 SE (worst excess {worst_margin:.2e})"),
    );
}

fn study_series(points: &[RatePoint], study: usize) -> Vec<&RatePoint> {
    points.iter().filter(|p| p.study == study).collect()
}

fn monotone_within_3se(series: &[&RatePoint]) -> bool {
    series.windows(2).all(|w| {
        let joint_se = (w[0].std_error().powi(2) + w[1].std_error().powi(2)).sqrt();
        w[1].estimate <= w[0].estimate + 3.0 * joint_se
    })
}

#[test]
fn a05_miss_rates_decay_like_n_exp() {
    let start = Instant::now();
    let configs = [
        StudyConfig::new(0.2),
        StudyConfig::new(0.3),
        StudyConfig::new(0.4),
        StudyConfig::new(0.5),
    ];
    let grid: Vec<u64> = (200..=1000).step_by(100).collect();
    let reps = 100_000;
    let points = parallel_rates(&configs, &grid, reps, 51).unwrap();

    let mut all_monotone = true;
    let mut min_r2 = f64::INFINITY;
    for study in 1..=4 {
        let series = study_series(&points, study);
        assert!(series.iter().all(|p| p.kind == RateKind::Miss));
        all_monotone &= monotone_within_3se(&series);
        if configs[study - 1].effect >= 0.3 {
            let data: Vec<(f64, f64)> =
                series.iter().map(|p| (p.n as f64, p.estimate)).collect();
            let fit = fit_n_exp_decay(&data).unwrap();
            min_r2 = min_r2.min(fit.r_squared);
        }
    }
    let elapsed = start.elapsed();
    check(
        "05 miss-rate decay reproduction",
        all_monotone && min_r2 >= 0.95 && elapsed.as_secs() < 900,
        format!(
            "effects 0.2..0.5, n 200..=1000, reps {reps}: monotone {all_monotone}, min R^2 {min_r2:.4} (effects >= 0.3), {elapsed:.2?}"
        ),
    );
}

#[test]
fn a06_false_inclusion_decays_reciprocally() {
    let configs = [
        StudyConfig::new(0.4),
        StudyConfig::new(0.4),
        StudyConfig::new(0.4),
        StudyConfig::new(0.0),
    ];
    let grid: Vec<u64> = (200..=1000).step_by(100).collect();
    let points = parallel_rates(&configs, &grid, 100_000, 52).unwrap();

    let series = study_series(&points, 4);
    assert!(series.iter().all(|p| p.kind == RateKind::FalseInclusion));
    assert!(monotone_within_3se(&series), "inclusion rate not decreasing");
    let data: Vec<(f64, f64)> = series.iter().map(|p| (p.n as f64, p.estimate)).collect();
    let fit = fit_reciprocal_linear(&data).unwrap();

    // a real effect is forgotten faster than a null study is excluded:
    // at the largest n the miss rates sit below study 4's inclusion rate
    let inclusion_at_max = series.last().unwrap().estimate;
    let asymmetry = (1..=3).all(|study| {
        study_series(&points, study).last().unwrap().estimate < inclusion_at_max
    });

    check(
        "06 false-inclusion reciprocal fit",
        fit.r_squared >= 0.95 && fit.b > 0.0 && asymmetry,
        format!(
            "study 4: R^2 {:.4}, b {:.2e}; miss < inclusion at n=1000: {asymmetry}",
            fit.r_squared, fit.b
        ),
    );
}

#[test]
fn a07_single_study_slope_oracle() {
    let est = estimate_exact_slope(
        SlopeMethod::SingleStudy,
        &[StudyConfig::new(0.5)],
        10_000,
        10_000,
        61,
        None,
    )
    .unwrap();
    let expect = 0.0625; // mu^2 / 4 for the two-sided z-test
    let rel = (est.estimate - expect).abs() / expect;

    let null_est = estimate_exact_slope(
        SlopeMethod::SingleStudy,
        &[StudyConfig::new(0.0)],
        10_000,
        10_000,
        62,
        None,
    )
    .unwrap();

    check(
        "07 single-study slope oracle",
        rel < 0.05 && null_est.estimate < 0.005,
        format!(
            "mu=0.5: {:.5} vs {expect} (rel {rel:.3}); mu=0: {:.5} < 0.005",
            est.estimate, null_est.estimate
        ),
    );
}

#[test]
fn a08_aw_slope_matches_fisher_slope() {
    let configs = [
        StudyConfig::new(0.5),
        StudyConfig::new(0.5),
        StudyConfig::new(0.5),
    ];
    let fisher = estimate_exact_slope(SlopeMethod::Fisher, &configs, 10_000, 10_000, 63, None)
        .unwrap();
    let aw = estimate_exact_slope(
        SlopeMethod::AwFisher,
        &configs,
        10_000,
        10_000,
        63,
        Some(table(3)),
    )
    .unwrap();
    let rel = (aw.estimate - fisher.estimate).abs() / fisher.estimate;
    // the Fisher slope itself sits at the sum of per-study rates, 3 mu^2/4
    let analytic = 3.0 * 0.25 * 0.25;
    let rel_analytic = (fisher.estimate - analytic).abs() / analytic;
    check(
        "08 asymptotic slope agreement",
        rel < 0.05 && rel_analytic < 0.05,
        format!(
            "K=3, mu=0.5, n=10^4: aw {:.5} vs fisher {:.5} (rel {rel:.4}); fisher vs {analytic} (rel {rel_analytic:.4})",
            aw.estimate, fisher.estimate
        ),
    );
}

fn awfisher(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_awfisher"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn a09_outputs_independent_of_thread_count() {
    let root = tempfile::tempdir().unwrap();
    let matrix_csv = {
        let mut s = String::from("feature_id,s1,s2,s3\n");
        let mut rng = stream_rng(77, 0);
        for i in 0..200 {
            s.push_str(&format!(
                "g{i},{},{},{}\n",
                uniform_open_closed(&mut rng),
                uniform_open_closed(&mut rng),
                uniform_open_closed(&mut rng)
            ));
        }
        s
    };

    let run_all = |threads: &str| -> (std::path::PathBuf, Vec<Vec<u8>>) {
        let dir = root.path().join(format!("t{threads}"));
        std::fs::create_dir(&dir).unwrap();
        std::fs::write(dir.join("m.csv"), &matrix_csv).unwrap();
        let mut stdouts = Vec::new();
        let commands: Vec<Vec<&str>> = vec![
            vec!["null", "build", "-k", "3", "--draws", "30000", "--seed", "5", "-o", "k3.awnull"],
            vec!["null", "inspect", "k3.awnull"],
            vec!["combine", "--input", "m.csv", "--null-table", "k3.awnull", "--fdr", "0.1", "--out", "r.csv"],
            vec!["sim", "rates", "--effects", "0.3,0.4,0.0", "--n", "200:400:100", "--reps", "20000", "--seed", "9", "--out-rates", "rates.csv", "--out-fits", "fits.csv"],
            vec!["sim", "slopes", "--methods", "fisher,aw-fisher", "--effects", "0.4,0.4,0.0", "--n", "400", "--reps", "20000", "--seed", "11", "--null-table", "k3.awnull", "--out", "slopes.csv"],
            vec!["plotdata", "categories", "--input", "r.csv", "--out", "cats.csv"],
            vec!["plotdata", "rates", "--rates", "rates.csv", "--fits", "fits.csv", "--out", "tidy.csv"],
        ];
        for cmd in commands {
            let mut args = cmd.clone();
            args.push("--threads");
            args.push(threads);
            stdouts.push(awfisher(&dir, &args).stdout);
        }
        (dir, stdouts)
    };

    let (dir_a, stdout_a) = run_all("1");
    let (dir_b, stdout_b) = run_all("3");

    let files = [
        "k3.awnull", "r.csv", "rates.csv", "fits.csv", "slopes.csv", "cats.csv", "tidy.csv",
    ];
    let mut all_equal = stdout_a == stdout_b;
    for f in files {
        let a = std::fs::read(dir_a.join(f)).unwrap();
        let b = std::fs::read(dir_b.join(f)).unwrap();
        if a != b {
            all_equal = false;
            eprintln!("file {f} differs between thread counts");
        }
    }
    check(
        "09 thread-count determinism",
        all_equal,
        format!(
            "{} subcommands, {} output files byte-compared across --threads 1 and 3",
            stdout_a.len(),
            files.len()
        ),
    );
}

#[test]
fn a10_combine_throughput() {
    let dir = tempfile::tempdir().unwrap();
    // prebuilt 10^6-draw table for K = 5
    awfisher_cli::table_io::write_table(table(5), &dir.path().join("k5.awnull")).unwrap();

    let mut csv = String::from("feature_id,s1,s2,s3,s4,s5\n");
    let mut rng = stream_rng(99, 0);
    for i in 0..20_000 {
        csv.push_str(&format!("g{i}"));
        for _ in 0..5 {
            // ~10% of features carry signal
            let p = if i % 10 == 0 {
                uniform_open_closed(&mut rng) * 1e-4
            } else {
                uniform_open_closed(&mut rng)
            };
            csv.push_str(&format!(",{p}"));
        }
        csv.push('\n');
    }
    std::fs::write(dir.path().join("m.csv"), &csv).unwrap();

    let start = Instant::now();
    awfisher(
        dir.path(),
        &[
            "combine", "--input", "m.csv", "--null-table", "k5.awnull", "--fdr", "0.01",
            "--out", "r.csv",
        ],
    );
    let elapsed = start.elapsed();

    let results = awfisher_cli::analyze::read_results_csv(&dir.path().join("r.csv")).unwrap();
    check(
        "10 combine throughput",
        elapsed.as_secs_f64() < 10.0 && results.len() == 20_000,
        format!("20000 x 5 matrix with a 10^6-draw table in {elapsed:.2?}"),
    );
}
