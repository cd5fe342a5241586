//! Parallel drivers for the simulation lab.
//!
//! Chunks fan out over the current rayon pool and are merged back in chunk
//! index order, so outputs match the serial library functions byte for byte
//! regardless of `--threads`.

use std::io::Write;
use std::path::Path;

use awfisher_core::{
    rng, simlab, FitResult, NullTable, RateKind, RatePoint, SlopeEstimate, SlopeMethod,
    StudyConfig,
};
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Estimates weight error rates over the grid, chunk-parallel.
pub fn parallel_rates(
    configs: &[StudyConfig],
    n_grid: &[u64],
    reps: u64,
    seed: u64,
) -> Result<Vec<RatePoint>> {
    if n_grid.is_empty() {
        return Err(CliError::Usage("sample-size grid is empty".into()));
    }
    if reps == 0 {
        return Err(CliError::Usage("replicate count must be at least 1".into()));
    }
    let chunks = rng::chunk_count(reps);
    let jobs: Vec<(usize, u64)> = (0..n_grid.len())
        .flat_map(|gi| (0..chunks).map(move |c| (gi, c)))
        .collect();
    let tallies: Vec<(usize, Vec<u64>)> = jobs
        .into_par_iter()
        .map(|(gi, chunk)| {
            simlab::weight_error_chunk(configs, n_grid[gi], reps, seed, gi as u64, chunk)
                .map(|errors| (gi, errors))
        })
        .collect::<std::result::Result<_, _>>()?;

    let mut per_point = vec![vec![0u64; configs.len()]; n_grid.len()];
    for (gi, errors) in tallies {
        for (total, e) in per_point[gi].iter_mut().zip(errors) {
            *total += e; // integer sums: order-independent
        }
    }

    let mut points = Vec::with_capacity(n_grid.len() * configs.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        points.extend(simlab::rate_points_from_errors(
            configs,
            n,
            reps,
            &per_point[gi],
        ));
    }
    Ok(points)
}

/// Estimates exact slopes for each requested method at each grid point,
/// chunk-parallel.
pub fn parallel_slopes(
    methods: &[SlopeMethod],
    configs: &[StudyConfig],
    n_grid: &[u64],
    reps: u64,
    seed: u64,
    table: Option<&NullTable>,
) -> Result<Vec<SlopeEstimate>> {
    if reps == 0 {
        return Err(CliError::Usage("replicate count must be at least 1".into()));
    }
    let mut estimates = Vec::with_capacity(methods.len() * n_grid.len());
    for &method in methods {
        for &n in n_grid {
            let sums: Vec<(f64, f64)> = (0..rng::chunk_count(reps))
                .into_par_iter()
                .map(|chunk| simlab::slope_chunk(method, configs, n, reps, seed, chunk, table))
                .collect::<std::result::Result<_, _>>()?;
            // float accumulation must run in chunk order
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for (s, s2) in sums {
                sum += s;
                sum_sq += s2;
            }
            estimates.push(simlab::slope_from_sums(method, n, reps, sum, sum_sq));
        }
    }
    Ok(estimates)
}

/// A fitted decay law for one study's error-rate curve.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyFit {
    pub study: usize,
    pub kind: RateKind,
    pub fit: FitResult,
}

/// Fits the matching decay law to each study's rate curve: miss rates get
/// `a n exp(-b n)`, false-inclusion rates get `1/(a + b n)`. Studies whose
/// fit fails (e.g. every rate zero) are reported in the second list.
pub fn fit_rate_curves(
    configs: &[StudyConfig],
    points: &[RatePoint],
) -> (Vec<StudyFit>, Vec<(usize, CliError)>) {
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for study in 1..=configs.len() {
        let series: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| p.study == study)
            .map(|p| (p.n as f64, p.estimate))
            .collect();
        let kind = points
            .iter()
            .find(|p| p.study == study)
            .map(|p| p.kind)
            .expect("every study has points");
        let fitted = match kind {
            RateKind::Miss => simlab::fit_n_exp_decay(&series),
            RateKind::FalseInclusion => simlab::fit_reciprocal_linear(&series),
        };
        match fitted {
            Ok(fit) => fits.push(StudyFit { study, kind, fit }),
            Err(e) => failures.push((study, e.into())),
        }
    }
    (fits, failures)
}

pub fn write_rates_csv<W: Write>(writer: W, points: &[RatePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n", "study", "kind", "estimate", "reps", "stderr"])?;
    for p in points {
        w.write_record(&[
            p.n.to_string(),
            p.study.to_string(),
            p.kind.name().to_string(),
            p.estimate.to_string(),
            p.reps.to_string(),
            p.std_error().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rates_csv(path: &Path) -> Result<Vec<RatePoint>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let r = record?;
        if r.len() < 5 {
            return Err(CliError::Data(format!(
                "{}: not a rates csv",
                path.display()
            )));
        }
        let kind = match &r[2] {
            "miss" => RateKind::Miss,
            "false_inclusion" => RateKind::FalseInclusion,
            other => {
                return Err(CliError::Data(format!(
                    "{}: unknown rate kind `{other}`",
                    path.display()
                )))
            }
        };
        out.push(RatePoint {
            n: parse(path, &r[0])?,
            study: parse(path, &r[1])?,
            kind,
            estimate: parse(path, &r[3])?,
            reps: parse(path, &r[4])?,
        });
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(path: &Path, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| CliError::Data(format!("{}: bad field `{s}`", path.display())))
}

pub fn write_fits_csv<W: Write>(writer: W, fits: &[StudyFit]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "study",
        "kind",
        "form",
        "a",
        "b",
        "r_squared",
        "used_points",
        "dropped_points",
        "decaying",
    ])?;
    for f in fits {
        w.write_record(&[
            f.study.to_string(),
            f.kind.name().to_string(),
            f.fit.form.name().to_string(),
            f.fit.a.to_string(),
            f.fit.b.to_string(),
            f.fit.r_squared.to_string(),
            f.fit.used_points.to_string(),
            f.fit.dropped_points.to_string(),
            f.fit.is_decaying().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fits_csv(path: &Path) -> Result<Vec<StudyFit>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let r = record?;
        if r.len() < 8 {
            return Err(CliError::Data(format!("{}: not a fits csv", path.display())));
        }
        let kind = match &r[1] {
            "miss" => RateKind::Miss,
            "false_inclusion" => RateKind::FalseInclusion,
            other => {
                return Err(CliError::Data(format!(
                    "{}: unknown rate kind `{other}`",
                    path.display()
                )))
            }
        };
        let form = match &r[2] {
            "n_exp_decay" => awfisher_core::FitForm::NExpDecay,
            "reciprocal_linear" => awfisher_core::FitForm::ReciprocalLinear,
            other => {
                return Err(CliError::Data(format!(
                    "{}: unknown fit form `{other}`",
                    path.display()
                )))
            }
        };
        out.push(StudyFit {
            study: parse(path, &r[0])?,
            kind,
            fit: FitResult {
                form,
                a: parse(path, &r[3])?,
                b: parse(path, &r[4])?,
                r_squared: parse(path, &r[5])?,
                used_points: parse(path, &r[6])?,
                dropped_points: parse(path, &r[7])?,
            },
        });
    }
    Ok(out)
}

pub fn write_slopes_csv<W: Write>(writer: W, estimates: &[SlopeEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["method", "n", "estimate", "reps", "stderr"])?;
    for e in estimates {
        w.write_record(&[
            e.method.name().to_string(),
            e.n.to_string(),
            e.estimate.to_string(),
            e.reps.to_string(),
            e.std_error.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_rates_match_serial_library() {
        let configs = [
            StudyConfig::new(0.4),
            StudyConfig::new(0.3),
            StudyConfig::new(0.0),
        ];
        let grid = [200u64, 400];
        let serial = simlab::estimate_weight_error_rates(&configs, &grid, 5000, 42).unwrap();
        let parallel = parallel_rates(&configs, &grid, 5000, 42).unwrap();
        assert_eq!(serial, parallel);
        // different pool sizes agree too
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| parallel_rates(&configs, &grid, 5000, 42)).unwrap();
        assert_eq!(serial, single);
    }

    #[test]
    fn parallel_slopes_match_serial_library() {
        let configs = [StudyConfig::new(0.5)];
        let serial =
            simlab::estimate_exact_slope(SlopeMethod::SingleStudy, &configs, 1000, 9000, 3, None)
                .unwrap();
        let parallel = parallel_slopes(
            &[SlopeMethod::SingleStudy],
            &configs,
            &[1000],
            9000,
            3,
            None,
        )
        .unwrap();
        assert_eq!(parallel.len(), 1);
        assert_eq!(serial, parallel[0]);
        assert_eq!(serial.estimate.to_bits(), parallel[0].estimate.to_bits());
    }

    #[test]
    fn fit_rate_curves_assigns_forms_by_kind() {
        let configs = [StudyConfig::new(0.4), StudyConfig::new(0.0)];
        // synthetic clean curves
        let mut points = Vec::new();
        for &n in &[200u64, 400, 600, 800] {
            points.push(RatePoint {
                n,
                study: 1,
                kind: RateKind::Miss,
                estimate: 2.0 * n as f64 * (-0.01 * n as f64).exp(),
                reps: 1000,
            });
            points.push(RatePoint {
                n,
                study: 2,
                kind: RateKind::FalseInclusion,
                estimate: 1.0 / (1.0 + 0.02 * n as f64),
                reps: 1000,
            });
        }
        let (fits, failures) = fit_rate_curves(&configs, &points);
        assert!(failures.is_empty());
        assert_eq!(fits.len(), 2);
        assert_eq!(fits[0].fit.form, awfisher_core::FitForm::NExpDecay);
        assert!((fits[0].fit.b - 0.01).abs() < 1e-9);
        assert_eq!(fits[1].fit.form, awfisher_core::FitForm::ReciprocalLinear);
        assert!((fits[1].fit.b - 0.02).abs() < 1e-9);
    }

    #[test]
    fn all_zero_rates_report_fit_failure() {
        let configs = [StudyConfig::new(3.0)];
        let points: Vec<RatePoint> = [200u64, 400, 600]
            .iter()
            .map(|&n| RatePoint {
                n,
                study: 1,
                kind: RateKind::Miss,
                estimate: 0.0,
                reps: 100,
            })
            .collect();
        let (fits, failures) = fit_rate_curves(&configs, &points);
        assert!(fits.is_empty());
        assert_eq!(failures.len(), 1);
        assert_eq!(failures[0].1.exit_code(), 4);
    }

    #[test]
    fn rates_csv_roundtrip() {
        let configs = [StudyConfig::new(0.3), StudyConfig::new(0.0)];
        let points = parallel_rates(&configs, &[200, 400], 500, 1).unwrap();
        let mut buf = Vec::new();
        write_rates_csv(&mut buf, &points).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rates.csv");
        std::fs::write(&path, &buf).unwrap();
        let back = read_rates_csv(&path).unwrap();
        assert_eq!(points, back);
    }
}
