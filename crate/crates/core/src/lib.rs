//! Sparsity-based automatic feature selection (SAFS) and divergent subgroup
//! discovery for tabular data with a binary outcome.
//!
//! The crate covers the whole path from a discretized table to a characterized
//! subgroup:
//!
//! - [`data`] and [`ingest`]: the categorical dataset model and CSV loading
//!   with quantile discretization of numeric columns.
//! - [`objective`]: Yule's Y per feature value, Gini sparsity per feature and
//!   the resulting feature ranking, plus a mutual-information filter ranking.
//! - [`scan`]: multi-dimensional subset scanning with a Bernoulli
//!   likelihood-ratio score, coordinate ascent and random restarts.
//! - [`report`]: odds ratio with confidence interval and permutation p-values.
//! - [`eval`]: rank-biased overlap, Jaccard similarity and top-K sweeps.
//!
//! ```
//! use safs::prelude::*;
//!
//! let planted = synth::planted_subgroup(&synth::PlantedConfig::default());
//! let ranking = safs_rank(&planted.dataset).unwrap();
//! let features = top_k(&ranking, 6).unwrap();
//! let result = scan(&planted.dataset, &features, &ScanConfig::default()).unwrap();
//! assert!(result.score > 0.0);
//! ```

pub mod data;
pub mod descriptor;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod objective;
pub mod pipeline;
pub mod report;
pub mod scan;
pub mod synth;

mod seed;

pub use data::{stratify, subgroup_mask, ContingencyTable, DiscreteDataset, FeatureSchema};
pub use descriptor::SubgroupDescriptor;
pub use error::{Result, SafsError};
pub use ingest::{load_csv, read_csv, DiscretizationSpec, DEFAULT_MISSING_LABEL};
pub use objective::{
    gini_index, mutual_information_rank, objective_vector, safs_rank, top_k, yules_y,
    FeatureRanking, ObjectiveVector, RankMethod,
};
pub use report::{
    build_report, empirical_p_value, odds_ratio_ci, OddsRatio, PermutationTest, SubgroupReport,
};
pub use scan::{
    brute_force_scan, optimize_feature, q_mle, scan, score_counts, score_subgroup, Direction,
    ScanConfig, ScanResult, Score,
};

pub use pipeline::{run_pipeline, PipelineOptions, PipelineOutput};

pub mod prelude {
    pub use crate::eval::{jaccard, rank_biased_overlap, sweep_k};
    pub use crate::synth;
    pub use crate::*;
}
