//! Tidy, plot-ready CSVs derived from previous command outputs.

use std::io::Write;
use std::path::Path;

use crate::analyze::{categorize, read_results_csv};
use crate::error::Result;
use crate::simcmd::{read_fits_csv, read_rates_csv, StudyFit};

/// Weight-category counts of the significant features in a results CSV.
pub fn categories_csv<W: Write>(results_path: &Path, writer: W) -> Result<u64> {
    let results = read_results_csv(results_path)?;
    let cats = categorize(&results);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["category", "count"])?;
    let mut total = 0;
    for (cat, count) in cats {
        w.write_record(&[cat, count.to_string()])?;
        total += count;
    }
    w.flush()?;
    Ok(total)
}

/// Rate points joined with their fitted curve values: one row per point
/// with the fitted rate alongside, ready for overlay plots.
pub fn rates_csv<W: Write>(rates_path: &Path, fits_path: Option<&Path>, writer: W) -> Result<()> {
    let points = read_rates_csv(rates_path)?;
    let fits: Vec<StudyFit> = match fits_path {
        Some(p) => read_fits_csv(p)?,
        None => Vec::new(),
    };
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n", "study", "kind", "estimate", "stderr", "fitted"])?;
    for p in &points {
        let fitted = fits
            .iter()
            .find(|f| f.study == p.study && f.kind == p.kind)
            .map(|f| f.fit.predict(p.n as f64).to_string())
            .unwrap_or_default();
        w.write_record(&[
            p.n.to_string(),
            p.study.to_string(),
            p.kind.name().to_string(),
            p.estimate.to_string(),
            p.std_error().to_string(),
            fitted,
        ])?;
    }
    w.flush()?;
    Ok(())
}
