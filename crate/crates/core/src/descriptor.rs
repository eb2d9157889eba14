use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::data::DiscreteDataset;
use crate::error::{Result, SafsError};

/// A conjunction over features of disjunctions over each feature's values.
///
/// Only constrained features are stored. A record matches when, for every
/// stored feature, its code is in that feature's included set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SubgroupDescriptor {
    constraints: BTreeMap<usize, BTreeSet<u32>>,
}

impl SubgroupDescriptor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the included values of `feature`, replacing any previous set.
    /// An empty value set removes the constraint.
    pub fn insert(&mut self, feature: usize, values: impl IntoIterator<Item = u32>) {
        let values: BTreeSet<u32> = values.into_iter().collect();
        if values.is_empty() {
            self.constraints.remove(&feature);
        } else {
            self.constraints.insert(feature, values);
        }
    }

    pub fn remove(&mut self, feature: usize) -> Option<BTreeSet<u32>> {
        self.constraints.remove(&feature)
    }

    pub fn get(&self, feature: usize) -> Option<&BTreeSet<u32>> {
        self.constraints.get(&feature)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &BTreeSet<u32>)> {
        self.constraints.iter().map(|(&f, v)| (f, v))
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Number of constrained features.
    pub fn n_features(&self) -> usize {
        self.constraints.len()
    }

    /// Total number of included values over all constrained features.
    pub fn n_values(&self) -> usize {
        self.constraints.values().map(BTreeSet::len).sum()
    }

    pub fn validate(&self, dataset: &DiscreteDataset) -> Result<()> {
        for (&feature, values) in &self.constraints {
            dataset.check_feature(feature)?;
            if values.is_empty() {
                return Err(SafsError::InvalidParameter(format!(
                    "feature {feature} has an empty included set"
                )));
            }
            for &v in values {
                dataset.check_value(feature, v)?;
            }
        }
        Ok(())
    }

    /// Drops constraints whose included set covers every category.
    pub fn normalize(&mut self, dataset: &DiscreteDataset) {
        self.constraints
            .retain(|&f, values| values.len() < dataset.schema(f).cardinality());
    }

    pub fn matches(&self, dataset: &DiscreteDataset, record: usize) -> bool {
        self.constraints
            .iter()
            .all(|(&f, values)| values.contains(&dataset.code(record, f)))
    }

    /// Orders descriptors by simplicity: fewer constrained features, then
    /// fewer included values, then lexicographically.
    pub fn simplicity_cmp(&self, other: &Self) -> Ordering {
        self.n_features()
            .cmp(&other.n_features())
            .then_with(|| self.n_values().cmp(&other.n_values()))
            .then_with(|| self.constraints.iter().cmp(other.constraints.iter()))
    }

    /// Feature names with included category labels.
    pub fn describe(&self, dataset: &DiscreteDataset) -> Vec<(String, Vec<String>)> {
        self.constraints
            .iter()
            .map(|(&f, values)| {
                let schema = dataset.schema(f);
                let labels = values
                    .iter()
                    .map(|&v| schema.label(v).unwrap_or("?").to_string())
                    .collect();
                (schema.name().to_string(), labels)
            })
            .collect()
    }

    /// Human-readable rendering such as `sex ∈ {F} ∧ age ∈ {(30, 40], (40, 50]}`.
    pub fn render(&self, dataset: &DiscreteDataset) -> String {
        if self.is_empty() {
            return "(all records)".to_string();
        }
        self.describe(dataset)
            .into_iter()
            .map(|(name, labels)| format!("{name} ∈ {{{}}}", labels.join(", ")))
            .collect::<Vec<_>>()
            .join(" ∧ ")
    }
}

impl fmt::Display for SubgroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self
            .constraints
            .iter()
            .map(|(feature, values)| {
                let vals: Vec<String> = values.iter().map(u32::to_string).collect();
                format!("f{feature}∈{{{}}}", vals.join(","))
            })
            .collect();
        write!(f, "{}", parts.join(" ∧ "))
    }
}
