use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SafsError>;

#[derive(Debug, Error)]
pub enum SafsError {
    #[error("failed to read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("outcome column `{0}` not found in header")]
    MissingOutcome(String),
    #[error("record {record}: outcome value `{value}` is neither 0 nor 1")]
    InvalidOutcome { record: usize, value: String },
    #[error("dataset has no records")]
    EmptyDataset,
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("feature index {feature} out of range (dataset has {features} features)")]
    FeatureOutOfRange { feature: usize, features: usize },
    #[error("value code {value} out of range for feature {feature} (cardinality {cardinality})")]
    ValueOutOfRange {
        feature: usize,
        value: u32,
        cardinality: usize,
    },
    #[error("contingency table has no counts")]
    EmptyTable,
    #[error("sparsity input contains a negative or non-finite entry ({0})")]
    InvalidSparsityInput(f64),
    #[error("k = {k} outside 1..={max}")]
    InvalidK { k: usize, max: usize },
    #[error("global outcome rate {0} is degenerate (all records share one outcome)")]
    DegenerateOutcome(f64),
    #[error("subgroup matches no records")]
    EmptySubgroup,
    #[error("feature list is empty")]
    NoFeatures,
    #[error("exhaustive search over {0:.3e} descriptors exceeds the limit")]
    SearchSpaceTooLarge(f64),
    #[error("rankings do not cover the same set of items")]
    RankingMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
