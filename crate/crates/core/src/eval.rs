//! Comparison metrics between rankings and between detected subgroups.

use std::collections::HashSet;
use std::hash::Hash;
use std::time::{Duration, Instant};

use crate::data::DiscreteDataset;
use crate::error::{Result, SafsError};
use crate::objective::{top_k, FeatureRanking};
use crate::report::{build_report, empirical_p_value, SubgroupReport};
use crate::scan::{scan, ScanConfig, ScanResult};

pub const DEFAULT_PERSISTENCE: f64 = 0.9;

/// Extrapolated rank-biased overlap of two rankings of the same items.
///
/// With `A_d` the overlap fraction of the two depth-`d` prefixes and `D` the
/// list length, returns `A_D·p^D + (1−p)/p · Σ_{d=1..D} p^d·A_d`.
pub fn rank_biased_overlap<T: Eq + Hash>(a: &[T], b: &[T], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SafsError::InvalidParameter(format!(
            "persistence {p} outside (0, 1)"
        )));
    }
    let set_a: HashSet<&T> = a.iter().collect();
    let set_b: HashSet<&T> = b.iter().collect();
    if a.len() != b.len() || set_a.len() != a.len() || set_a != set_b {
        return Err(SafsError::RankingMismatch);
    }
    if a.is_empty() {
        return Ok(1.0);
    }

    let mut seen_a: HashSet<&T> = HashSet::with_capacity(a.len());
    let mut seen_b: HashSet<&T> = HashSet::with_capacity(b.len());
    let mut overlap = 0usize;
    let mut weight = 1.0;
    let mut sum = 0.0;
    let mut agreement = 0.0;
    for (d, (x, y)) in a.iter().zip(b).enumerate() {
        let depth = d + 1;
        if x == y {
            overlap += 1;
        } else {
            overlap += seen_b.contains(x) as usize + seen_a.contains(y) as usize;
        }
        seen_a.insert(x);
        seen_b.insert(y);
        weight *= p;
        agreement = overlap as f64 / depth as f64;
        sum += weight * agreement;
    }
    let value = agreement * weight + (1.0 - p) / p * sum;
    Ok(value.clamp(0.0, 1.0))
}

/// Pairwise RBO between named rankings.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOverlapMatrix {
    pub methods: Vec<String>,
    pub persistence: f64,
    pub values: Vec<Vec<f64>>,
}

impl RankOverlapMatrix {
    pub fn compute<T: Eq + Hash>(rankings: &[(String, Vec<T>)], persistence: f64) -> Result<Self> {
        let n = rankings.len();
        let mut values = vec![vec![1.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v = rank_biased_overlap(&rankings[i].1, &rankings[j].1, persistence)?;
                values[i][j] = v;
                values[j][i] = v;
            }
        }
        Ok(Self {
            methods: rankings.iter().map(|(name, _)| name.clone()).collect(),
            persistence,
            values,
        })
    }
}

/// `|a ∩ b| / |a ∪ b|`; 1 when both sets are empty.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let sa: HashSet<usize> = a.iter().copied().collect();
    let sb: HashSet<usize> = b.iter().copied().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

/// Fractional ranks (ties share their average rank), 1-based.
fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && x[idx[end]] == x[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation; NaN when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Rank,
    Scan,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Rank => "rank",
            Phase::Scan => "scan",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingRecord {
    pub phase: Phase,
    pub method: String,
    pub k: usize,
    pub duration: Duration,
}

/// Times `f` with a monotonic clock.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub k: usize,
    /// Features scanned at this K, in ranking order.
    pub features: Vec<usize>,
    pub scan: ScanResult,
    pub report: SubgroupReport,
    pub timing: TimingRecord,
    /// Jaccard similarity of the matched records with the all-feature scan.
    pub jaccard_vs_full: f64,
}

/// Scans the top-K prefix of `ranking` for every K in `k_values`.
///
/// `permutations` > 0 adds an empirical p-value to every report. The
/// all-feature scan used as the Jaccard reference is reused when K = M is part
/// of the sweep.
pub fn sweep_k(
    dataset: &DiscreteDataset,
    ranking: &FeatureRanking,
    k_values: &[usize],
    config: &ScanConfig,
    permutations: usize,
) -> Result<Vec<SweepEntry>> {
    let m = ranking.len();
    if k_values.is_empty() {
        return Err(SafsError::InvalidParameter("no K values to sweep".into()));
    }
    if k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SafsError::InvalidParameter(
            "K values must be strictly ascending".into(),
        ));
    }
    let mut entries = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let features = top_k(ranking, k)?;
        let (result, duration) = timed(|| scan(dataset, &features, config));
        let result = result?;
        let permutation = if permutations > 0 {
            Some(empirical_p_value(
                dataset,
                &features,
                config,
                result.score,
                permutations,
            )?)
        } else {
            None
        };
        let report = build_report(dataset, &result, permutation);
        entries.push(SweepEntry {
            k,
            features,
            report,
            timing: TimingRecord {
                phase: Phase::Scan,
                method: ranking.method.name().to_string(),
                k,
                duration,
            },
            scan: result,
            jaccard_vs_full: f64::NAN,
        });
    }

    let full_matched = match entries.iter().find(|e| e.k == m) {
        Some(e) => e.scan.matched.clone(),
        None => scan(dataset, &ranking.features(), config)?.matched,
    };
    for e in &mut entries {
        e.jaccard_vs_full = jaccard(&e.scan.matched, &full_matched);
    }
    Ok(entries)
}
