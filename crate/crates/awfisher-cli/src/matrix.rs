//! Feature x study p-value matrices.
//!
//! Input CSV dialect: UTF-8, comma-separated, first column the feature id,
//! remaining header cells the study names, every data cell a p-value in
//! (0, 1] (scientific notation accepted). Missing values are rejected: the
//! combiner is defined on complete p-value vectors.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvalidPolicy {
    /// Abort on the first invalid cell, naming its row and column.
    Error,
    /// Drop rows containing invalid cells and report how many.
    Drop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    feature_ids: Vec<String>,
    study_names: Vec<String>,
    values: Vec<f64>, // row-major, len = features * k
}

impl FeatureMatrix {
    pub fn new(
        feature_ids: Vec<String>,
        study_names: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if study_names.is_empty() {
            return Err(CliError::Data("matrix has no study columns".into()));
        }
        if values.len() != feature_ids.len() * study_names.len() {
            return Err(CliError::Data("matrix shape mismatch".into()));
        }
        let mut seen = HashSet::new();
        for id in &feature_ids {
            if !seen.insert(id.as_str()) {
                return Err(CliError::Data(format!("duplicate feature id `{id}`")));
            }
        }
        Ok(Self {
            feature_ids,
            study_names,
            values,
        })
    }

    pub fn k(&self) -> usize {
        self.study_names.len()
    }

    pub fn len(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature_ids.is_empty()
    }

    pub fn feature_id(&self, row: usize) -> &str {
        &self.feature_ids[row]
    }

    pub fn study_names(&self) -> &[String] {
        &self.study_names
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let k = self.k();
        &self.values[row * k..(row + 1) * k]
    }
}

/// Loads and validates a matrix CSV. Returns the matrix and the number of
/// rows dropped under [`InvalidPolicy::Drop`].
pub fn load_matrix(path: &Path, policy: InvalidPolicy) -> Result<(FeatureMatrix, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .clone();
    if headers.len() < 2 {
        return Err(CliError::Data(format!(
            "{}: header needs a feature id column plus at least one study",
            path.display()
        )));
    }
    let study_names: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    let k = study_names.len();

    let mut feature_ids = Vec::new();
    let mut values = Vec::new();
    let mut dropped = 0usize;

    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // 1-based, after the header
        let record = record?;
        if record.len() != k + 1 {
            return Err(CliError::Data(format!(
                "{}: line {line}: expected {} fields, found {}",
                path.display(),
                k + 1,
                record.len()
            )));
        }
        let id = record[0].to_string();
        let mut row = Vec::with_capacity(k);
        let mut bad: Option<String> = None;
        for (col, cell) in record.iter().skip(1).enumerate() {
            match cell.trim().parse::<f64>() {
                Ok(v) if v > 0.0 && v <= 1.0 => row.push(v),
                Ok(v) => {
                    bad = Some(format!(
                        "{}: line {line} (feature `{id}`), column `{}`: p-value {v} outside (0, 1]",
                        path.display(),
                        study_names[col]
                    ));
                    break;
                }
                Err(_) => {
                    bad = Some(format!(
                        "{}: line {line} (feature `{id}`), column `{}`: `{cell}` is not a p-value",
                        path.display(),
                        study_names[col]
                    ));
                    break;
                }
            }
        }
        match (bad, policy) {
            (None, _) => {
                feature_ids.push(id);
                values.extend(row);
            }
            (Some(msg), InvalidPolicy::Error) => return Err(CliError::Data(msg)),
            (Some(_), InvalidPolicy::Drop) => dropped += 1,
        }
    }

    Ok((FeatureMatrix::new(feature_ids, study_names, values)?, dropped))
}
