//! Categorical dataset model.
//!
//! Records are stored column-major: one vector of category codes per feature,
//! plus a binary outcome vector. A dataset is immutable once built and its
//! buffers are reference counted, so outcome-permuted copies share the feature
//! columns.

use std::collections::HashSet;
use std::sync::Arc;

use crate::descriptor::SubgroupDescriptor;
use crate::error::{Result, SafsError};

/// Name and ordered category labels of one feature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSchema {
    name: String,
    labels: Vec<String>,
}

impl FeatureSchema {
    pub fn new(name: impl Into<String>, labels: Vec<String>) -> Result<Self> {
        let name = name.into();
        if labels.is_empty() {
            return Err(SafsError::InvalidSchema(format!(
                "feature `{name}` has no categories"
            )));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if label.is_empty() {
                return Err(SafsError::InvalidSchema(format!(
                    "feature `{name}` has an empty category label"
                )));
            }
            if !seen.insert(label.as_str()) {
                return Err(SafsError::InvalidSchema(format!(
                    "feature `{name}` repeats category `{label}`"
                )));
            }
        }
        Ok(Self { name, labels })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, code: u32) -> Option<&str> {
        self.labels.get(code as usize).map(String::as_str)
    }

    pub fn code_of(&self, label: &str) -> Option<u32> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| i as u32)
    }
}

/// N records over M categorical features with a binary outcome.
#[derive(Clone, Debug)]
pub struct DiscreteDataset {
    schemas: Arc<[FeatureSchema]>,
    columns: Arc<[Vec<u32>]>,
    outcome: Arc<[u8]>,
    outcome_name: String,
    positives: u64,
}

impl DiscreteDataset {
    /// Builds a dataset from per-feature code columns.
    pub fn new(
        schemas: Vec<FeatureSchema>,
        columns: Vec<Vec<u32>>,
        outcome: Vec<u8>,
        outcome_name: impl Into<String>,
    ) -> Result<Self> {
        if outcome.is_empty() {
            return Err(SafsError::EmptyDataset);
        }
        if schemas.len() != columns.len() {
            return Err(SafsError::InvalidSchema(format!(
                "{} schemas for {} columns",
                schemas.len(),
                columns.len()
            )));
        }
        for (feature, (schema, column)) in schemas.iter().zip(&columns).enumerate() {
            if column.len() != outcome.len() {
                return Err(SafsError::InvalidSchema(format!(
                    "column `{}` has {} codes for {} records",
                    schema.name(),
                    column.len(),
                    outcome.len()
                )));
            }
            let cardinality = schema.cardinality();
            if let Some(&bad) = column.iter().find(|&&c| c as usize >= cardinality) {
                return Err(SafsError::ValueOutOfRange {
                    feature,
                    value: bad,
                    cardinality,
                });
            }
        }
        if let Some(&bad) = outcome.iter().find(|&&y| y > 1) {
            return Err(SafsError::InvalidOutcome {
                record: outcome.iter().position(|&y| y > 1).unwrap_or(0),
                value: bad.to_string(),
            });
        }
        let positives = outcome.iter().map(|&y| y as u64).sum();
        Ok(Self {
            schemas: schemas.into(),
            columns: columns.into(),
            outcome: outcome.into(),
            outcome_name: outcome_name.into(),
            positives,
        })
    }

    /// Builds a dataset from row-major records (each row holds M codes).
    pub fn from_rows(
        schemas: Vec<FeatureSchema>,
        rows: &[Vec<u32>],
        outcome: Vec<u8>,
        outcome_name: impl Into<String>,
    ) -> Result<Self> {
        if rows.len() != outcome.len() {
            return Err(SafsError::InvalidSchema(format!(
                "{} rows for {} outcomes",
                rows.len(),
                outcome.len()
            )));
        }
        let m = schemas.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); m];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(SafsError::InvalidSchema(format!(
                    "row {i} has {} codes, expected {m}",
                    row.len()
                )));
            }
            for (column, &code) in columns.iter_mut().zip(row) {
                column.push(code);
            }
        }
        Self::new(schemas, columns, outcome, outcome_name)
    }

    /// Same features with a replacement outcome vector.
    pub fn with_outcome(&self, outcome: Vec<u8>) -> Result<Self> {
        if outcome.len() != self.n_records() {
            return Err(SafsError::InvalidParameter(format!(
                "replacement outcome has {} entries for {} records",
                outcome.len(),
                self.n_records()
            )));
        }
        if let Some(record) = outcome.iter().position(|&y| y > 1) {
            return Err(SafsError::InvalidOutcome {
                record,
                value: outcome[record].to_string(),
            });
        }
        let positives = outcome.iter().map(|&y| y as u64).sum();
        Ok(Self {
            schemas: Arc::clone(&self.schemas),
            columns: Arc::clone(&self.columns),
            outcome: outcome.into(),
            outcome_name: self.outcome_name.clone(),
            positives,
        })
    }

    /// Keeps only the listed features, in the given order.
    pub fn select_features(&self, features: &[usize]) -> Result<Self> {
        let mut schemas = Vec::with_capacity(features.len());
        let mut columns = Vec::with_capacity(features.len());
        for &f in features {
            self.check_feature(f)?;
            schemas.push(self.schemas[f].clone());
            columns.push(self.columns[f].clone());
        }
        Ok(Self {
            schemas: schemas.into(),
            columns: columns.into(),
            outcome: Arc::clone(&self.outcome),
            outcome_name: self.outcome_name.clone(),
            positives: self.positives,
        })
    }

    pub fn n_records(&self) -> usize {
        self.outcome.len()
    }

    pub fn n_features(&self) -> usize {
        self.schemas.len()
    }

    pub fn schemas(&self) -> &[FeatureSchema] {
        &self.schemas
    }

    pub fn schema(&self, feature: usize) -> &FeatureSchema {
        &self.schemas[feature]
    }

    pub fn column(&self, feature: usize) -> &[u32] {
        &self.columns[feature]
    }

    pub fn code(&self, record: usize, feature: usize) -> u32 {
        self.columns[feature][record]
    }

    pub fn outcome(&self) -> &[u8] {
        &self.outcome
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    /// Number of records with outcome 1.
    pub fn positives(&self) -> u64 {
        self.positives
    }

    /// Global outcome mean.
    pub fn global_rate(&self) -> f64 {
        self.positives as f64 / self.n_records() as f64
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.schemas.iter().position(|s| s.name() == name)
    }

    pub(crate) fn check_feature(&self, feature: usize) -> Result<()> {
        if feature < self.n_features() {
            Ok(())
        } else {
            Err(SafsError::FeatureOutOfRange {
                feature,
                features: self.n_features(),
            })
        }
    }

    pub(crate) fn check_value(&self, feature: usize, value: u32) -> Result<()> {
        self.check_feature(feature)?;
        let cardinality = self.schemas[feature].cardinality();
        if (value as usize) < cardinality {
            Ok(())
        } else {
            Err(SafsError::ValueOutOfRange {
                feature,
                value,
                cardinality,
            })
        }
    }

    /// Per-value (record count, positive count) for one feature.
    pub fn value_counts(&self, feature: usize) -> Vec<(u64, u64)> {
        let mut counts = vec![(0u64, 0u64); self.schemas[feature].cardinality()];
        for (&code, &y) in self.columns[feature].iter().zip(self.outcome.iter()) {
            let cell = &mut counts[code as usize];
            cell.0 += 1;
            cell.1 += y as u64;
        }
        counts
    }
}

/// 2×2 table of a stratum against its complement.
///
/// `alpha`/`beta` count outcome 1/0 inside the stratum, `delta`/`gamma` count
/// outcome 1/0 in the complement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ContingencyTable {
    pub alpha: u64,
    pub beta: u64,
    pub delta: u64,
    pub gamma: u64,
}

impl ContingencyTable {
    pub fn new(alpha: u64, beta: u64, delta: u64, gamma: u64) -> Self {
        Self {
            alpha,
            beta,
            delta,
            gamma,
        }
    }

    /// Table for a stratum of `n` records with `s` positives, out of a
    /// dataset of `total` records with `total_positives` positives.
    pub(crate) fn from_stratum(n: u64, s: u64, total: u64, total_positives: u64) -> Self {
        Self {
            alpha: s,
            beta: n - s,
            delta: total_positives - s,
            gamma: (total - n) - (total_positives - s),
        }
    }

    pub fn total(&self) -> u64 {
        self.alpha + self.beta + self.delta + self.gamma
    }

    pub fn stratum_size(&self) -> u64 {
        self.alpha + self.beta
    }

    pub fn has_zero_cell(&self) -> bool {
        self.alpha == 0 || self.beta == 0 || self.delta == 0 || self.gamma == 0
    }

    /// Cells as reals, with 0.5 added to every cell when any cell is zero.
    pub fn corrected(&self) -> [f64; 4] {
        let shift = if self.has_zero_cell() { 0.5 } else { 0.0 };
        [
            self.alpha as f64 + shift,
            self.beta as f64 + shift,
            self.delta as f64 + shift,
            self.gamma as f64 + shift,
        ]
    }

    /// Table with the stratum and complement rows exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: self.delta,
            beta: self.gamma,
            delta: self.alpha,
            gamma: self.beta,
        }
    }
}

/// Splits the dataset on `feature == value` and counts outcomes.
pub fn stratify(dataset: &DiscreteDataset, feature: usize, value: u32) -> Result<ContingencyTable> {
    dataset.check_value(feature, value)?;
    let mut n = 0u64;
    let mut s = 0u64;
    for (&code, &y) in dataset.column(feature).iter().zip(dataset.outcome()) {
        if code == value {
            n += 1;
            s += y as u64;
        }
    }
    Ok(ContingencyTable::from_stratum(
        n,
        s,
        dataset.n_records() as u64,
        dataset.positives(),
    ))
}

/// Indices of the records satisfying every constraint of `descriptor`.
pub fn subgroup_mask(
    dataset: &DiscreteDataset,
    descriptor: &SubgroupDescriptor,
) -> Result<Vec<usize>> {
    descriptor.validate(dataset)?;
    let filters: Vec<(&[u32], Vec<bool>)> = descriptor
        .iter()
        .map(|(feature, values)| {
            let mut allowed = vec![false; dataset.schema(feature).cardinality()];
            for &v in values {
                allowed[v as usize] = true;
            }
            (dataset.column(feature), allowed)
        })
        .collect();
    Ok((0..dataset.n_records())
        .filter(|&i| {
            filters
                .iter()
                .all(|(col, allowed)| allowed[col[i] as usize])
        })
        .collect())
}
