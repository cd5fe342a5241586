//! Per-feature combination, FDR control, and weight-category summaries.

use std::io::Write;

use awfisher_core::{
    aw_statistic_sorted, bonferroni_bounds, comparator_combine, Method, NullTable, PValueVector,
};
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::matrix::FeatureMatrix;

/// One analyzed feature. For `aw_fisher`, `p_mc` is the Monte Carlo table
/// estimate and `p_lower`/`p_upper` the analytic sandwich around it; for
/// methods with analytic nulls all three carry the exact p-value.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureResult {
    pub feature_id: String,
    pub statistic: f64,
    /// Weight bit-string, e.g. `101`; empty for non-adaptive methods.
    pub weights: String,
    pub p_mc: f64,
    pub p_lower: f64,
    pub p_upper: f64,
    pub q_value: f64,
    /// Weight category used for grouping (same bit-string as `weights`).
    pub category: String,
    pub significant: bool,
}

/// Analysis output plus the count of features whose Monte Carlo p-value
/// fell outside the analytic sandwich by more than 3 standard errors.
#[derive(Debug)]
pub struct AnalyzeOutput {
    pub results: Vec<FeatureResult>,
    pub bound_violations: usize,
}

/// Runs `method` over every matrix row, attaches Benjamini-Hochberg
/// q-values on the p column, flags `q <= fdr` as significant, and sorts by
/// (p, feature id). `table` is required for [`Method::AwFisher`] and must
/// match the matrix study count.
pub fn analyze(
    matrix: &FeatureMatrix,
    method: Method,
    table: Option<&NullTable>,
    fdr: f64,
) -> Result<AnalyzeOutput> {
    if method == Method::AwFisher {
        let table = table.ok_or(awfisher_core::Error::MissingNullTable)?;
        if table.k() != matrix.k() {
            return Err(awfisher_core::Error::StudyCountMismatch {
                table_k: table.k(),
                data_k: matrix.k(),
            }
            .into());
        }
    }

    let rows: Vec<(f64, String, f64, f64, f64)> = (0..matrix.len())
        .into_par_iter()
        .map(|i| feature_stats(matrix.row(i), method, table))
        .collect::<std::result::Result<_, _>>()?;

    let pvals: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let qvals = benjamini_hochberg(&pvals);

    let mut bound_violations = 0usize;
    let mut results: Vec<FeatureResult> = Vec::with_capacity(rows.len());
    for (i, ((statistic, weights, p, lower, upper), q)) in rows.into_iter().zip(qvals).enumerate() {
        if method == Method::AwFisher {
            let t = table.expect("checked above");
            let se = (p * (1.0 - p) / t.draws() as f64).sqrt();
            if p < lower - 3.0 * se || p > upper + 3.0 * se {
                bound_violations += 1;
            }
        }
        results.push(FeatureResult {
            feature_id: matrix.feature_id(i).to_owned(),
            statistic,
            weights: weights.clone(),
            p_mc: p,
            p_lower: lower,
            p_upper: upper,
            q_value: q,
            category: weights,
            significant: q <= fdr,
        });
    }

    results.sort_by(|a, b| {
        a.p_mc
            .total_cmp(&b.p_mc)
            .then_with(|| a.feature_id.cmp(&b.feature_id))
    });
    Ok(AnalyzeOutput {
        results,
        bound_violations,
    })
}

// statistic, weights, p, lower bound, upper bound (bounds collapse to p
// itself for analytic methods)
fn feature_stats(
    row: &[f64],
    method: Method,
    table: Option<&NullTable>,
) -> Result<(f64, String, f64, f64, f64)> {
    let p = PValueVector::new(row.to_vec())?;
    if method == Method::AwFisher {
        let table = table.expect("checked by analyze");
        let aw = aw_statistic_sorted(&p);
        let p_mc = table.p_value(aw.statistic);
        let bounds = bonferroni_bounds(aw.log_level, p.k())?;
        Ok((
            aw.statistic,
            aw.weights.bit_string(),
            p_mc,
            bounds.lower(),
            bounds.upper(),
        ))
    } else {
        let combined = comparator_combine(&p, method);
        let pval = combined
            .log_p
            .expect("non-AW methods have analytic nulls")
            .exp();
        Ok((combined.statistic, String::new(), pval, pval, pval))
    }
}

/// Benjamini-Hochberg step-up adjustment; input p-values need not be sorted.
pub fn benjamini_hochberg(pvals: &[f64]) -> Vec<f64> {
    let m = pvals.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut q = vec![0.0f64; m];
    let mut running_min = f64::INFINITY;
    for (rank, &idx) in order.iter().enumerate().rev() {
        let adjusted = (pvals[idx] * m as f64 / (rank + 1) as f64).min(1.0);
        running_min = running_min.min(adjusted);
        q[idx] = running_min;
    }
    q
}

/// Groups significant features by weight category; counts descending, ties
/// by category string.
pub fn categorize(results: &[FeatureResult]) -> Vec<(String, u64)> {
    let mut counts: std::collections::BTreeMap<&str, u64> = std::collections::BTreeMap::new();
    for r in results.iter().filter(|r| r.significant) {
        *counts.entry(r.category.as_str()).or_default() += 1;
    }
    let mut out: Vec<(String, u64)> = counts
        .into_iter()
        .map(|(cat, n)| (cat.to_owned(), n))
        .collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

const RESULT_HEADER: [&str; 9] = [
    "feature_id",
    "statistic",
    "weights",
    "p_mc",
    "p_lower",
    "p_upper",
    "q_value",
    "category",
    "significant",
];

pub fn write_results_csv<W: Write>(writer: W, results: &[FeatureResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULT_HEADER)?;
    for r in results {
        w.write_record([
            r.feature_id.as_str(),
            &r.statistic.to_string(),
            &r.weights,
            &r.p_mc.to_string(),
            &r.p_lower.to_string(),
            &r.p_upper.to_string(),
            &r.q_value.to_string(),
            &r.category,
            if r.significant { "true" } else { "false" },
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv(path: &std::path::Path) -> Result<Vec<FeatureResult>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != RESULT_HEADER {
        return Err(CliError::Data(format!(
            "{}: not a results csv (unexpected header)",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let r = record?;
        let field = |i: usize| -> Result<f64> {
            r[i].parse::<f64>()
                .map_err(|_| CliError::Data(format!("{}: bad number `{}`", path.display(), &r[i])))
        };
        out.push(FeatureResult {
            feature_id: r[0].to_string(),
            statistic: field(1)?,
            weights: r[2].to_string(),
            p_mc: field(3)?,
            p_lower: field(4)?,
            p_upper: field(5)?,
            q_value: field(6)?,
            category: r[7].to_string(),
            significant: &r[8] == "true",
        });
    }
    Ok(out)
}
