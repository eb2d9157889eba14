//! Rank, select, scan and characterize in one call.

use std::time::Duration;

use crate::data::DiscreteDataset;
use crate::error::Result;
use crate::eval::{timed, Phase, TimingRecord};
use crate::objective::{top_k, FeatureRanking, RankMethod};
use crate::report::{build_report, empirical_p_value, SubgroupReport};
use crate::scan::{scan, ScanConfig, ScanResult};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOptions {
    pub method: RankMethod,
    /// Number of top-ranked features to scan; `None` scans all of them.
    pub top_k: Option<usize>,
    pub scan: ScanConfig,
    /// Permutations for the empirical p-value; 0 skips the test.
    pub permutations: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            method: RankMethod::Safs,
            top_k: None,
            scan: ScanConfig::default(),
            permutations: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub ranking: FeatureRanking,
    pub selected: Vec<usize>,
    pub scan: ScanResult,
    pub report: SubgroupReport,
    pub timings: Vec<TimingRecord>,
}

pub fn run_pipeline(
    dataset: &DiscreteDataset,
    options: &PipelineOptions,
) -> Result<PipelineOutput> {
    options.scan.validate()?;
    let (ranking, rank_time) = timed(|| options.method.rank(dataset));
    let ranking = ranking?;
    let k = options.top_k.unwrap_or(ranking.len());
    let selected = top_k(&ranking, k)?;
    let (result, scan_time) = timed(|| scan(dataset, &selected, &options.scan));
    let result = result?;
    let permutation = match options.permutations {
        0 => None,
        r => Some(empirical_p_value(
            dataset,
            &selected,
            &options.scan,
            result.score,
            r,
        )?),
    };
    let report = build_report(dataset, &result, permutation);
    let record = |phase, duration: Duration| TimingRecord {
        phase,
        method: options.method.name().to_string(),
        k,
        duration,
    };
    Ok(PipelineOutput {
        timings: vec![
            record(Phase::Rank, rank_time),
            record(Phase::Scan, scan_time),
        ],
        ranking,
        selected,
        scan: result,
        report,
    })
}
