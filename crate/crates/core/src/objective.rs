//! Association and sparsity measures, and the feature rankings built on them.
//!
//! SAFS scores a feature by how unevenly the outcome association is spread
//! over its values: Yule's Y is computed for every value against the rest of
//! the data, and the Gini index of the absolute coefficients becomes the
//! feature score. A feature whose association is concentrated in a few values
//! ranks high; one whose values all carry the same association ranks low.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::{ContingencyTable, DiscreteDataset};
use crate::error::{Result, SafsError};

/// Yule's Y (normalized odds ratio) of a 2×2 table.
///
/// Tables with a zero cell get 0.5 added to every cell first, so the result is
/// always finite and lies in [-1, 1].
pub fn yules_y(table: &ContingencyTable) -> Result<f64> {
    if table.total() == 0 {
        return Err(SafsError::EmptyTable);
    }
    let [a, b, d, g] = table.corrected();
    let concordant = (a * g).sqrt();
    let discordant = (b * d).sqrt();
    Ok((concordant - discordant) / (concordant + discordant))
}

/// Gini sparsity index of a non-negative vector.
///
/// 0 for a uniform vector, `1 - 1/C` for a one-hot vector of length C. An
/// all-zero vector scores 0.
pub fn gini_index(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(SafsError::InvalidParameter(
            "Gini index of an empty vector".into(),
        ));
    }
    if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(SafsError::InvalidSparsityInput(bad));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let norm: f64 = sorted.iter().sum();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let c = sorted.len() as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, v)| (v / norm) * ((c - (i + 1) as f64 + 0.5) / c))
        .sum();
    Ok(1.0 - 2.0 * weighted)
}

/// Yule's Y of every value of one feature against the rest of the data.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveVector {
    pub feature: usize,
    pub values: Vec<f64>,
}

impl ObjectiveVector {
    /// Gini index of the coefficient magnitudes; 0 for single-valued features.
    pub fn sparsity(&self) -> f64 {
        if self.values.len() < 2 {
            return 0.0;
        }
        let magnitudes: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        gini_index(&magnitudes).expect("Yule's Y magnitudes are finite and non-negative")
    }
}

pub fn objective_vector(dataset: &DiscreteDataset, feature: usize) -> Result<ObjectiveVector> {
    dataset.check_feature(feature)?;
    let total = dataset.n_records() as u64;
    let positives = dataset.positives();
    let values = dataset
        .value_counts(feature)
        .into_iter()
        .map(|(n, s)| yules_y(&ContingencyTable::from_stratum(n, s, total, positives)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ObjectiveVector { feature, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RankMethod {
    Safs,
    MutualInformation,
}

impl RankMethod {
    pub fn name(self) -> &'static str {
        match self {
            RankMethod::Safs => "safs",
            RankMethod::MutualInformation => "mi",
        }
    }

    pub fn rank(self, dataset: &DiscreteDataset) -> Result<FeatureRanking> {
        match self {
            RankMethod::Safs => safs_rank(dataset),
            RankMethod::MutualInformation => mutual_information_rank(dataset),
        }
    }
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RankMethod {
    type Err = SafsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "safs" => Ok(RankMethod::Safs),
            "mi" | "mutual-information" => Ok(RankMethod::MutualInformation),
            other => Err(SafsError::InvalidParameter(format!(
                "unknown ranking method `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankEntry {
    pub feature: usize,
    pub score: f64,
}

/// Features ordered by descending score; equal scores keep ascending index.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRanking {
    pub method: RankMethod,
    pub entries: Vec<RankEntry>,
}

impl FeatureRanking {
    /// Sorts per-feature scores (indexed by feature) into a ranking.
    pub fn from_scores(method: RankMethod, scores: Vec<f64>) -> Self {
        let mut entries: Vec<RankEntry> = scores
            .into_iter()
            .enumerate()
            .map(|(feature, score)| RankEntry { feature, score })
            .collect();
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.feature.cmp(&b.feature)));
        Self { method, entries }
    }

    pub fn features(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.feature).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 1-based rank of `feature`.
    pub fn rank_of(&self, feature: usize) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.feature == feature)
            .map(|p| p + 1)
    }
}

/// Ranks features by the Gini sparsity of their per-value Yule's Y.
pub fn safs_rank(dataset: &DiscreteDataset) -> Result<FeatureRanking> {
    let scores = (0..dataset.n_features())
        .into_par_iter()
        .map(|m| objective_vector(dataset, m).map(|o| o.sparsity()))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureRanking::from_scores(RankMethod::Safs, scores))
}

/// Empirical mutual information (nats) between one feature and the outcome.
pub fn mutual_information(dataset: &DiscreteDataset, feature: usize) -> Result<f64> {
    dataset.check_feature(feature)?;
    let n = dataset.n_records() as f64;
    let pos = dataset.positives() as f64;
    let neg = n - pos;
    let mut mi = 0.0;
    for (count, s) in dataset.value_counts(feature) {
        let count = count as f64;
        let s = s as f64;
        for (joint, marginal_y) in [(s, pos), (count - s, neg)] {
            if joint > 0.0 {
                mi += (joint / n) * (joint * n / (count * marginal_y)).ln();
            }
        }
    }
    // Rounding can leave a tiny negative value for independent features.
    Ok(mi.max(0.0))
}

/// Filter baseline: features by descending mutual information with the outcome.
pub fn mutual_information_rank(dataset: &DiscreteDataset) -> Result<FeatureRanking> {
    let scores = (0..dataset.n_features())
        .into_par_iter()
        .map(|m| mutual_information(dataset, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureRanking::from_scores(
        RankMethod::MutualInformation,
        scores,
    ))
}

/// The first `k` features of a ranking.
pub fn top_k(ranking: &FeatureRanking, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > ranking.len() {
        return Err(SafsError::InvalidK {
            k,
            max: ranking.len(),
        });
    }
    Ok(ranking.entries[..k].iter().map(|e| e.feature).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSchema;
    use proptest::prelude::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    fn single(codes: Vec<u32>, card: usize, y: Vec<u8>) -> DiscreteDataset {
        DiscreteDataset::new(
            vec![FeatureSchema::new("f", labels(card)).unwrap()],
            vec![codes],
            y,
            "y",
        )
        .unwrap()
    }

    #[test]
    fn yule_no_association() {
        assert_eq!(yules_y(&ContingencyTable::new(1, 1, 1, 1)).unwrap(), 0.0);
    }

    #[test]
    fn yule_reference_table() {
        let y = yules_y(&ContingencyTable::new(30, 10, 20, 40)).unwrap();
        let expected = (1200f64.sqrt() - 200f64.sqrt()) / (1200f64.sqrt() + 200f64.sqrt());
        assert!((y - expected).abs() < 1e-15);
        assert!((y - 0.4202).abs() < 1e-4);
    }

    #[test]
    fn yule_zero_cell_correction() {
        let y = yules_y(&ContingencyTable::new(10, 0, 0, 10)).unwrap();
        assert!((y - 10.0 / 11.0).abs() < 1e-15);
        assert!(matches!(
            yules_y(&ContingencyTable::default()),
            Err(SafsError::EmptyTable)
        ));
    }

    #[test]
    fn gini_reference_values() {
        assert!(gini_index(&[3.0; 7]).unwrap().abs() < 1e-15);
        assert!((gini_index(&[0.0, 0.0, 1.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((gini_index(&[0.1, 0.2, 0.7]).unwrap() - 0.4).abs() < 1e-12);
        assert!((gini_index(&[0.7, 0.1, 0.2]).unwrap() - 0.4).abs() < 1e-12);
        for c in 1..10 {
            let mut v = vec![0.0; c];
            v[c / 2] = 2.5;
            let g = gini_index(&v).unwrap();
            assert!((g - (1.0 - 1.0 / c as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn gini_edge_cases() {
        assert_eq!(gini_index(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(gini_index(&[]).is_err());
        assert!(matches!(
            gini_index(&[0.5, -0.1]),
            Err(SafsError::InvalidSparsityInput(_))
        ));
        assert!(gini_index(&[f64::NAN]).is_err());
    }

    #[test]
    fn sparse_coefficients_rank_first() {
        let a = ObjectiveVector {
            feature: 0,
            values: vec![0.9, 0.0, 0.0],
        };
        let b = ObjectiveVector {
            feature: 1,
            values: vec![0.3, -0.3, 0.3],
        };
        assert!((a.sparsity() - 2.0 / 3.0).abs() < 1e-12);
        assert!(b.sparsity().abs() < 1e-12);
    }

    #[test]
    fn single_feature_ranking() {
        let d = single(vec![0, 1, 0, 1], 2, vec![1, 0, 0, 1]);
        let r = safs_rank(&d).unwrap();
        assert_eq!(r.features(), vec![0]);
        assert_eq!(top_k(&r, 1).unwrap(), vec![0]);
        assert!(top_k(&r, 0).is_err());
        assert!(top_k(&r, 2).is_err());
    }

    #[test]
    fn single_valued_feature_scores_zero() {
        let d = single(vec![0, 0, 0], 1, vec![1, 0, 0]);
        assert_eq!(safs_rank(&d).unwrap().entries[0].score, 0.0);
    }

    #[test]
    fn ties_break_by_index() {
        let r = FeatureRanking::from_scores(RankMethod::Safs, vec![0.1, 0.5, 0.1, 0.5]);
        assert_eq!(r.features(), vec![1, 3, 0, 2]);
        assert_eq!(r.rank_of(0), Some(3));
    }

    #[test]
    fn mi_reference_values() {
        let d = single(vec![0, 0, 1, 1], 2, vec![1, 1, 0, 0]);
        assert!((mutual_information(&d, 0).unwrap() - 2f64.ln()).abs() < 1e-15);
        // Product empirical joint: each value has rate 1/2.
        let d = single(vec![0, 0, 1, 1], 2, vec![1, 0, 1, 0]);
        assert_eq!(mutual_information(&d, 0).unwrap(), 0.0);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("safs".parse::<RankMethod>().unwrap(), RankMethod::Safs);
        assert_eq!(
            "MI".parse::<RankMethod>().unwrap(),
            RankMethod::MutualInformation
        );
        assert!("xgboost".parse::<RankMethod>().is_err());
    }

    fn table_strategy() -> impl Strategy<Value = (u64, u64, u64, u64)> {
        (1u64..500, 1u64..500, 1u64..500, 1u64..500)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2_000))]

        #[test]
        fn yule_range_and_sign((a, b, d, g) in table_strategy()) {
            let y = yules_y(&ContingencyTable::new(a, b, d, g)).unwrap();
            prop_assert!((-1.0..=1.0).contains(&y));
            let cross = (a * g) as i128 - (b * d) as i128;
            prop_assert_eq!(y.partial_cmp(&0.0).unwrap(), cross.cmp(&0));
        }

        #[test]
        fn yule_swap_negates((a, b, d, g) in table_strategy()) {
            let y = yules_y(&ContingencyTable::new(a, b, d, g)).unwrap();
            let swapped = yules_y(&ContingencyTable::new(b, a, g, d)).unwrap();
            prop_assert!((y + swapped).abs() < 1e-12);
        }

        #[test]
        fn gini_in_unit_interval(v in prop::collection::vec(0.0f64..1e3, 1..40)) {
            let g = gini_index(&v).unwrap();
            prop_assert!((0.0..1.0).contains(&g) || g.abs() < 1e-12, "gini {}", g);
        }

        #[test]
        fn gini_scale_invariant(v in prop::collection::vec(0.0f64..1e3, 1..40), c in 1e-3f64..1e3) {
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            prop_assert!((gini_index(&v).unwrap() - gini_index(&scaled).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn mi_non_negative(codes in prop::collection::vec(0u32..4, 2..60), seed in any::<u64>()) {
            let y: Vec<u8> = codes.iter().enumerate().map(|(i, _)| ((seed >> (i % 64)) & 1) as u8).collect();
            let d = single(codes, 4, y);
            for e in mutual_information_rank(&d).unwrap().entries {
                prop_assert!(e.score >= 0.0);
            }
        }

        #[test]
        fn safs_invariant_to_record_order_and_relabeling(
            rows in prop::collection::vec((0u32..3, 0u32..4, 0u8..2), 4..80),
            rotate in 0usize..80,
        ) {
            let schemas = vec![
                FeatureSchema::new("a", labels(3)).unwrap(),
                FeatureSchema::new("b", labels(4)).unwrap(),
            ];
            let build = |rows: &[(u32, u32, u8)], relabel: bool| {
                let records: Vec<Vec<u32>> = rows
                    .iter()
                    .map(|&(a, b, _)| if relabel { vec![2 - a, (b + 1) % 4] } else { vec![a, b] })
                    .collect();
                let y = rows.iter().map(|r| r.2).collect();
                DiscreteDataset::from_rows(schemas.clone(), &records, y, "y").unwrap()
            };
            let base = safs_rank(&build(&rows, false)).unwrap();
            let mut rotated = rows.clone();
            let k = rotate % rotated.len();
            rotated.rotate_left(k);
            prop_assert_eq!(&base, &safs_rank(&build(&rotated, false)).unwrap());
            prop_assert_eq!(&base, &safs_rank(&build(&rows, true)).unwrap());
        }
    }
}
