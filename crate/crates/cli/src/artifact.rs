//! JSON documents written by the CLI.
//!
//! Every document carries `"schema": "safs/1"`. Wall-clock measurements live
//! under `volatile`; everything else is reproducible for fixed inputs and seed.

use std::time::Duration;

use safs::eval::TimingRecord;
use safs::{DiscreteDataset, SubgroupDescriptor, SubgroupReport};
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "safs/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankedFeature {
    pub feature: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub phase: String,
    pub method: String,
    pub k: usize,
    pub seconds: f64,
}

impl From<&TimingRecord> for Timing {
    fn from(t: &TimingRecord) -> Self {
        Self {
            phase: t.phase.name().to_string(),
            method: t.method.clone(),
            k: t.k,
            seconds: t.duration.as_secs_f64(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Volatile {
    pub timings: Vec<Timing>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankingArtifact {
    pub schema: String,
    pub kind: String,
    pub method: String,
    pub outcome: String,
    pub n_records: usize,
    pub top_k: Option<usize>,
    pub features: Vec<RankedFeature>,
    pub volatile: Volatile,
}

impl RankingArtifact {
    pub const KIND: &'static str = "ranking";

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.feature.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub feature: String,
    pub values: Vec<String>,
}

pub fn constraints(descriptor: &SubgroupDescriptor, dataset: &DiscreteDataset) -> Vec<Constraint> {
    descriptor
        .describe(dataset)
        .into_iter()
        .map(|(feature, values)| Constraint { feature, values })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanArtifact {
    pub schema: String,
    pub kind: String,
    /// Ranking that chose the scanned features; absent when all were scanned.
    pub method: Option<String>,
    pub top_k: Option<usize>,
    pub direction: String,
    pub restarts: usize,
    pub seed: u64,
    pub features: Vec<String>,
    pub descriptor: Vec<Constraint>,
    pub rule: String,
    pub score: f64,
    /// `null` when the subgroup holds only positives (unbounded odds).
    pub q_hat: Option<f64>,
    pub subset_size: usize,
    pub subset_fraction: f64,
    pub volatile: ScanVolatile,
}

impl ScanArtifact {
    pub const KIND: &'static str = "scan";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanVolatile {
    pub elapsed_ms: f64,
}

pub fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Table-style subgroup summary shared by `pipeline` and `sweep`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportBody {
    pub descriptor: Vec<Constraint>,
    pub rule: String,
    pub n_features: usize,
    pub n_values: usize,
    pub subset_size: usize,
    pub subset_percent: u32,
    pub subset_fraction: f64,
    pub score: f64,
    pub q_hat: Option<f64>,
    pub odds_ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: Option<f64>,
    pub permutations: usize,
    pub no_divergence: bool,
}

impl ReportBody {
    pub fn new(report: &SubgroupReport, dataset: &DiscreteDataset) -> Self {
        Self {
            descriptor: constraints(&report.descriptor, dataset),
            rule: report.descriptor.render(dataset),
            n_features: report.n_features,
            n_values: report.n_values,
            subset_size: report.subset_size,
            subset_percent: report.subset_percent,
            subset_fraction: report.subset_fraction,
            score: report.score,
            q_hat: finite(report.q_hat),
            odds_ratio: report.odds_ratio.estimate,
            ci_low: report.odds_ratio.ci_low,
            ci_high: report.odds_ratio.ci_high,
            p_value: report.p_value(),
            permutations: report.permutation.as_ref().map_or(0, |p| p.permutations),
            no_divergence: report.no_divergence,
        }
    }
}

pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportArtifact {
    pub schema: String,
    pub kind: String,
    pub method: String,
    pub top_k: usize,
    pub direction: String,
    pub restarts: usize,
    pub seed: u64,
    pub n_records: usize,
    pub selected: Vec<String>,
    pub report: ReportBody,
    pub volatile: Volatile,
}

impl ReportArtifact {
    pub const KIND: &'static str = "report";
}

/// One line of `safs sweep` output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepLine {
    pub schema: String,
    pub kind: String,
    pub method: String,
    pub k: usize,
    /// Scanned features in ranking order.
    pub features: Vec<String>,
    /// Features constrained by the detected subgroup.
    pub anomalous_features: Vec<String>,
    /// Jaccard similarity of the matched records with the all-feature scan.
    pub jaccard_vs_full: f64,
    pub report: ReportBody,
    pub volatile: Volatile,
}

impl SweepLine {
    pub const KIND: &'static str = "sweep";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapArtifact {
    pub schema: String,
    pub kind: String,
    pub persistence: f64,
    pub inputs: Vec<String>,
    pub methods: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl OverlapArtifact {
    pub const KIND: &'static str = "rank_overlap";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthArtifact {
    pub schema: String,
    pub kind: String,
    pub planted_features: Vec<String>,
    pub descriptor: Vec<Constraint>,
    pub members: usize,
}

impl TruthArtifact {
    pub const KIND: &'static str = "truth";
}
