//! CSV ingestion with quantile discretization.
//!
//! Every non-outcome column becomes one categorical feature. A column whose
//! non-empty cells all parse as finite numbers and that has more distinct
//! values than the configured bin count is cut into equal-frequency bins;
//! every other column keeps its distinct cell texts as categories. Empty cells
//! map to a dedicated missing category. Category codes follow the order of
//! first appearance in the file.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::data::{DiscreteDataset, FeatureSchema};
use crate::error::{Result, SafsError};

pub const DEFAULT_MISSING_LABEL: &str = "⟨missing⟩";
pub const DEFAULT_BINS: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizationSpec {
    /// Number of quantile bins for numeric columns.
    pub bins: usize,
    /// Category label given to empty cells.
    pub missing_label: String,
}

impl Default for DiscretizationSpec {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            missing_label: DEFAULT_MISSING_LABEL.to_string(),
        }
    }
}

impl DiscretizationSpec {
    pub fn with_bins(bins: usize) -> Self {
        Self {
            bins,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.bins == 0 {
            return Err(SafsError::InvalidParameter(
                "bin count must be at least 1".into(),
            ));
        }
        if self.missing_label.is_empty() {
            return Err(SafsError::InvalidParameter(
                "missing-category label is empty".into(),
            ));
        }
        Ok(())
    }
}

/// Loads a CSV file with a header row.
pub fn load_csv(
    path: impl AsRef<Path>,
    outcome_column: &str,
    spec: &DiscretizationSpec,
) -> Result<DiscreteDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| SafsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, outcome_column, spec)
}

/// Reads CSV text from any reader; see [`load_csv`].
pub fn read_csv<R: Read>(
    reader: R,
    outcome_column: &str,
    spec: &DiscretizationSpec,
) -> Result<DiscreteDataset> {
    spec.validate()?;
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = csv.headers()?.clone();
    let outcome_idx = header
        .iter()
        .position(|h| h == outcome_column)
        .ok_or_else(|| SafsError::MissingOutcome(outcome_column.to_string()))?;

    let feature_cols: Vec<usize> = (0..header.len()).filter(|&c| c != outcome_idx).collect();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); feature_cols.len()];
    let mut outcome = Vec::new();
    for (record_idx, record) in csv.records().enumerate() {
        let record = record?;
        let raw = record.get(outcome_idx).unwrap_or("");
        outcome.push(parse_outcome(raw).ok_or_else(|| SafsError::InvalidOutcome {
            record: record_idx,
            value: raw.to_string(),
        })?);
        for (slot, &c) in cells.iter_mut().zip(&feature_cols) {
            slot.push(record.get(c).unwrap_or("").to_string());
        }
    }
    if outcome.is_empty() {
        return Err(SafsError::EmptyDataset);
    }

    let mut schemas = Vec::with_capacity(feature_cols.len());
    let mut columns = Vec::with_capacity(feature_cols.len());
    for (column_cells, &c) in cells.iter().zip(&feature_cols) {
        let labels = discretize_column(column_cells, spec);
        let (schema_labels, codes) = encode(&labels);
        schemas.push(FeatureSchema::new(&header[c], schema_labels)?);
        columns.push(codes);
    }
    DiscreteDataset::new(schemas, columns, outcome, outcome_column)
}

fn parse_outcome(raw: &str) -> Option<u8> {
    let t = raw.trim();
    if t == "1" || t.eq_ignore_ascii_case("true") {
        Some(1)
    } else if t == "0" || t.eq_ignore_ascii_case("false") {
        Some(0)
    } else {
        None
    }
}

fn is_missing(cell: &str) -> bool {
    cell.trim().is_empty()
}

/// Maps raw cells to category labels, binning numeric columns.
fn discretize_column(cells: &[String], spec: &DiscretizationSpec) -> Vec<String> {
    let mut numeric = Vec::with_capacity(cells.len());
    let mut all_numeric = true;
    for cell in cells.iter().filter(|c| !is_missing(c)) {
        match cell.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => numeric.push(v),
            _ => {
                all_numeric = false;
                break;
            }
        }
    }
    let mut distinct = numeric.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let binned = all_numeric && !numeric.is_empty() && distinct.len() > spec.bins;

    if !binned {
        return cells
            .iter()
            .map(|c| {
                if is_missing(c) {
                    spec.missing_label.clone()
                } else {
                    c.clone()
                }
            })
            .collect();
    }

    let edges = quantile_edges(&numeric, spec.bins);
    let labels = bin_labels(&edges);
    cells
        .iter()
        .map(|c| {
            if is_missing(c) {
                spec.missing_label.clone()
            } else {
                let v: f64 = c.trim().parse().expect("checked numeric above");
                labels[bin_index(&edges, v)].clone()
            }
        })
        .collect()
}

/// Interior cut points at the `j / bins` quantiles (linear interpolation
/// between order statistics), strictly increasing after dropping duplicates
/// and any edge at or above the maximum.
pub fn quantile_edges(values: &[f64], bins: usize) -> Vec<f64> {
    if values.is_empty() || bins <= 1 {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let max = sorted[n - 1];
    let mut edges: Vec<f64> = (1..bins)
        .map(|j| {
            let pos = (n - 1) * j;
            let lo = pos / bins;
            let frac = (pos % bins) as f64 / bins as f64;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        })
        .filter(|&e| e < max)
        .collect();
    edges.dedup();
    edges
}

/// Bin of `v` given interior edges: bin `i` covers `(edges[i-1], edges[i]]`.
pub fn bin_index(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e < v)
}

fn bin_labels(edges: &[f64]) -> Vec<String> {
    if edges.is_empty() {
        return vec!["(-inf, inf)".to_string()];
    }
    let mut labels = Vec::with_capacity(edges.len() + 1);
    labels.push(format!("(-inf, {}]", edges[0]));
    for w in edges.windows(2) {
        labels.push(format!("({}, {}]", w[0], w[1]));
    }
    labels.push(format!("({}, inf)", edges[edges.len() - 1]));
    labels
}

/// Assigns codes in first-appearance order.
fn encode(labels: &[String]) -> (Vec<String>, Vec<u32>) {
    let mut index: HashMap<&str, u32> = HashMap::new();
    let mut order = Vec::new();
    let codes = labels
        .iter()
        .map(|l| {
            *index.entry(l.as_str()).or_insert_with(|| {
                order.push(l.clone());
                (order.len() - 1) as u32
            })
        })
        .collect();
    (order, codes)
}
