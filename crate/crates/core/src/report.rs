//! Post-discovery characterization of a detected subgroup.

use std::time::Duration;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::data::{ContingencyTable, DiscreteDataset};
use crate::descriptor::SubgroupDescriptor;
use crate::error::{Result, SafsError};
use crate::scan::{scan, ScanConfig, ScanResult};
use crate::seed::{stream_rng, PERMUTATION_STREAM};

/// Two-sided 95% normal quantile used for the Woolf interval.
pub const Z_95: f64 = 1.96;

pub const DEFAULT_PERMUTATIONS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OddsRatio {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl OddsRatio {
    /// Odds ratio with the table rows exchanged.
    pub fn reciprocal(&self) -> Self {
        Self {
            estimate: 1.0 / self.estimate,
            ci_low: 1.0 / self.ci_high,
            ci_high: 1.0 / self.ci_low,
        }
    }
}

/// Odds ratio `αγ / βδ` with a Woolf (log-normal) 95% interval. Tables with a
/// zero cell get 0.5 added to every cell.
pub fn odds_ratio_ci(table: &ContingencyTable) -> Result<OddsRatio> {
    if table.total() == 0 {
        return Err(SafsError::EmptyTable);
    }
    let [a, b, d, g] = table.corrected();
    let log_or = (a * g).ln() - (b * d).ln();
    let se = (1.0 / a + 1.0 / b + 1.0 / d + 1.0 / g).sqrt();
    Ok(OddsRatio {
        estimate: log_or.exp(),
        ci_low: (log_or - Z_95 * se).exp(),
        ci_high: (log_or + Z_95 * se).exp(),
    })
}

/// Outcome table of the matched records against the rest of the data.
pub fn subgroup_table(dataset: &DiscreteDataset, matched: &[usize]) -> ContingencyTable {
    let inside: u64 = matched.iter().map(|&i| dataset.outcome()[i] as u64).sum();
    ContingencyTable::from_stratum(
        matched.len() as u64,
        inside,
        dataset.n_records() as u64,
        dataset.positives(),
    )
}

/// Outcome of a label-permutation test.
#[derive(Clone, Debug, PartialEq)]
pub struct PermutationTest {
    /// `(1 + exceedances) / (permutations + 1)`.
    pub p_value: f64,
    pub permutations: usize,
    /// Number of permuted scans scoring at least the observed score.
    pub exceedances: usize,
    /// Best score of each permuted scan, in permutation order.
    pub null_scores: Vec<f64>,
}

impl PermutationTest {
    pub fn from_null_scores(observed: f64, null_scores: Vec<f64>) -> Self {
        let permutations = null_scores.len();
        let exceedances = null_scores.iter().filter(|&&s| s >= observed).count();
        Self {
            p_value: (1 + exceedances) as f64 / (permutations + 1) as f64,
            permutations,
            exceedances,
            null_scores,
        }
    }
}

/// Empirical p-value of an observed scan score.
///
/// Each replicate shuffles the outcome labels with its own seeded generator
/// and reruns [`scan`] with the unchanged configuration, so the observed scan
/// and its null replicates share the same search randomness.
pub fn empirical_p_value(
    dataset: &DiscreteDataset,
    features: &[usize],
    config: &ScanConfig,
    observed_score: f64,
    permutations: usize,
) -> Result<PermutationTest> {
    if permutations == 0 {
        return Err(SafsError::InvalidParameter(
            "permutation count must be at least 1".into(),
        ));
    }
    let null_scores = (0..permutations)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(config.seed, PERMUTATION_STREAM, r as u64);
            let mut labels = dataset.outcome().to_vec();
            labels.shuffle(&mut rng);
            let permuted = dataset.with_outcome(labels)?;
            scan(&permuted, features, config).map(|res| res.score)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PermutationTest::from_null_scores(
        observed_score,
        null_scores,
    ))
}

/// Table-style summary of a detected subgroup.
#[derive(Clone, Debug, PartialEq)]
pub struct SubgroupReport {
    pub descriptor: SubgroupDescriptor,
    /// Number of constrained features.
    pub n_features: usize,
    /// Number of included values over all constrained features.
    pub n_values: usize,
    pub subset_size: usize,
    /// `round(100 · N_S / N)`.
    pub subset_percent: u32,
    pub subset_fraction: f64,
    pub odds_ratio: OddsRatio,
    pub permutation: Option<PermutationTest>,
    pub score: f64,
    pub q_hat: f64,
    pub elapsed: Duration,
    /// The subgroup is the whole dataset or scores zero.
    pub no_divergence: bool,
}

impl SubgroupReport {
    pub fn p_value(&self) -> Option<f64> {
        self.permutation.as_ref().map(|p| p.p_value)
    }
}

/// Assembles the report for a scan result.
///
/// A subgroup covering every record has no complement to compare against; its
/// odds ratio is reported as exactly 1 with a degenerate interval.
pub fn build_report(
    dataset: &DiscreteDataset,
    result: &ScanResult,
    permutation: Option<PermutationTest>,
) -> SubgroupReport {
    let n = dataset.n_records();
    let whole = result.subset_size == n;
    let odds_ratio = if whole {
        OddsRatio {
            estimate: 1.0,
            ci_low: 1.0,
            ci_high: 1.0,
        }
    } else {
        odds_ratio_ci(&subgroup_table(dataset, &result.matched))
            .expect("table over a non-empty dataset has counts")
    };
    let fraction = result.subset_size as f64 / n as f64;
    SubgroupReport {
        descriptor: result.descriptor.clone(),
        n_features: result.descriptor.n_features(),
        n_values: result.descriptor.n_values(),
        subset_size: result.subset_size,
        subset_percent: (100.0 * fraction).round() as u32,
        subset_fraction: fraction,
        odds_ratio,
        permutation,
        score: result.score,
        q_hat: result.q_hat,
        elapsed: result.elapsed,
        no_divergence: whole || result.score == 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSchema;
    use crate::scan::brute_force_scan;
    use crate::synth;
    use proptest::prelude::*;

    /// Woolf interval evaluated directly from the textbook expression.
    fn woolf(a: f64, b: f64, d: f64, g: f64) -> (f64, f64, f64) {
        let or = (a * g) / (b * d);
        let half = 1.96 * (1.0 / a + 1.0 / b + 1.0 / d + 1.0 / g).sqrt();
        (or, or * (-half).exp(), or * half.exp())
    }

    #[test]
    fn reference_table() {
        let r = odds_ratio_ci(&ContingencyTable::new(30, 10, 20, 40)).unwrap();
        let (or, lo, hi) = woolf(30.0, 10.0, 20.0, 40.0);
        assert!((r.estimate - 6.0).abs() < 1e-12);
        assert!((r.ci_low - lo).abs() < 1e-12 && (r.ci_high - hi).abs() < 1e-12);
        assert!((or - 6.0).abs() < 1e-12);
        assert!((r.ci_low - 2.453).abs() < 5e-3);
        assert!((r.ci_high - 14.676).abs() < 5e-3);
    }

    #[test]
    fn balanced_table() {
        let r = odds_ratio_ci(&ContingencyTable::new(10, 10, 10, 10)).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-15);
        assert!((r.ci_low.ln() + r.ci_high.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_cell_and_empty_tables() {
        let r = odds_ratio_ci(&ContingencyTable::new(5, 0, 2, 7)).unwrap();
        let (or, lo, hi) = woolf(5.5, 0.5, 2.5, 7.5);
        assert!((r.estimate - or).abs() < 1e-12);
        assert!((r.ci_low - lo).abs() < 1e-12 && (r.ci_high - hi).abs() < 1e-12);
        assert!(odds_ratio_ci(&ContingencyTable::default()).is_err());
    }

    #[test]
    fn p_value_floor_and_ceiling() {
        let p = PermutationTest::from_null_scores(0.0, vec![0.0; 100]);
        assert_eq!(p.p_value, 1.0);
        let p = PermutationTest::from_null_scores(5.0, vec![1.0; 100]);
        assert!((p.p_value - 1.0 / 101.0).abs() < 1e-15);
        assert_eq!(p.exceedances, 0);
    }

    #[test]
    fn zero_observed_score_gives_p_one() {
        let data = synth::noise_dataset(200, &[3, 3], 0.3, 4);
        let config = ScanConfig {
            restarts: 3,
            ..Default::default()
        };
        let p = empirical_p_value(&data, &[0, 1], &config, 0.0, 20).unwrap();
        assert_eq!(p.p_value, 1.0);
        assert!(empirical_p_value(&data, &[0, 1], &config, 0.0, 0).is_err());
    }

    #[test]
    fn planted_subgroup_hits_the_floor() {
        let planted = synth::planted_subgroup(&synth::PlantedConfig {
            n_records: 2000,
            n_features: 5,
            seed: 3,
            ..Default::default()
        });
        let features: Vec<usize> = (0..5).collect();
        let config = ScanConfig {
            seed: 3,
            ..Default::default()
        };
        let result = scan(&planted.dataset, &features, &config).unwrap();
        let p = empirical_p_value(&planted.dataset, &features, &config, result.score, 100).unwrap();
        assert_eq!(p.exceedances, 0);
        assert!((p.p_value - 1.0 / 101.0).abs() < 1e-15);
        assert!(p.p_value > 0.0);

        let again =
            empirical_p_value(&planted.dataset, &features, &config, result.score, 100).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn whole_dataset_subgroup_reports_no_divergence() {
        let f = FeatureSchema::new("f", vec!["a".into(), "b".into()]).unwrap();
        let d =
            DiscreteDataset::new(vec![f], vec![vec![0, 0, 1, 1]], vec![1, 0, 1, 0], "y").unwrap();
        let r = brute_force_scan(&d, &[0], crate::scan::Direction::Over).unwrap();
        let report = build_report(&d, &r, None);
        assert!(report.no_divergence);
        assert_eq!(report.subset_percent, 100);
        assert_eq!(report.odds_ratio.estimate, 1.0);
        assert_eq!(report.p_value(), None);
    }

    #[test]
    fn report_counts_and_rounding() {
        let planted = synth::planted_subgroup(&synth::PlantedConfig {
            n_records: 3000,
            n_features: 4,
            seed: 8,
            ..Default::default()
        });
        let d = &planted.dataset;
        let r = scan(d, &[0, 1, 2, 3], &ScanConfig::default()).unwrap();
        let report = build_report(d, &r, None);
        assert_eq!(report.n_features, r.descriptor.n_features());
        assert_eq!(report.n_values, r.descriptor.n_values());
        let expected = (100.0 * r.subset_size as f64 / 3000.0).round() as u32;
        assert_eq!(report.subset_percent, expected);
        assert!(report.odds_ratio.ci_low <= report.odds_ratio.estimate);
        assert!(report.odds_ratio.estimate <= report.odds_ratio.ci_high);
        assert!(report.odds_ratio.estimate > 1.0);
        assert!(!report.no_divergence);
    }

    #[test]
    fn table_two_percentage_convention() {
        assert_eq!((100.0f64 * 3078.0 / 19658.0).round() as u32, 16);
    }

    proptest! {
        #[test]
        fn swap_gives_reciprocal(a in 0u64..300, b in 0u64..300, d in 0u64..300, g in 0u64..300) {
            prop_assume!(a + b + d + g > 0);
            let t = ContingencyTable::new(a, b, d, g);
            let r = odds_ratio_ci(&t).unwrap();
            let s = odds_ratio_ci(&t.swapped()).unwrap();
            let inv = r.reciprocal();
            prop_assert!(r.ci_low <= r.estimate && r.estimate <= r.ci_high);
            prop_assert!((s.estimate / inv.estimate - 1.0).abs() < 1e-12);
            prop_assert!((s.ci_low / inv.ci_low - 1.0).abs() < 1e-12);
            prop_assert!((s.ci_high / inv.ci_high - 1.0).abs() < 1e-12);
        }
    }
}
