//! Seeded synthetic datasets for tests, benchmarks and CLI fixtures.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{subgroup_mask, DiscreteDataset, FeatureSchema};
use crate::descriptor::SubgroupDescriptor;
use crate::error::Result;

fn value_labels(cardinality: usize) -> Vec<String> {
    (0..cardinality).map(|v| format!("v{v}")).collect()
}

fn feature_name(index: usize) -> String {
    format!("f{index:02}")
}

/// Parameters of [`planted_subgroup`].
///
/// Records carry a hidden flag with probability `latent_rate`. For flagged
/// records each planted feature takes its "hot" value (code 0) with
/// probability `hot_given_latent`; otherwise planted features draw uniformly
/// from their remaining values. The subgroup is the conjunction of the hot
/// values. Its outcome rate is `inside_rate`; everywhere else it is
/// `background_rate`. Noise features are uniform and independent of
/// everything.
///
/// Hot values are rare by construction, so each planted feature's
/// association with the outcome is concentrated in one value.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedConfig {
    pub n_records: usize,
    pub n_features: usize,
    pub n_planted: usize,
    pub planted_cardinality: usize,
    pub noise_cardinality: usize,
    pub latent_rate: f64,
    pub hot_given_latent: f64,
    pub inside_rate: f64,
    pub background_rate: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            n_records: 5000,
            n_features: 12,
            n_planted: 3,
            planted_cardinality: 4,
            noise_cardinality: 4,
            latent_rate: 0.05,
            hot_given_latent: 0.9,
            inside_rate: 0.8,
            background_rate: 0.2,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlantedDataset {
    pub dataset: DiscreteDataset,
    /// Indices of the planted features, ascending.
    pub planted_features: Vec<usize>,
    /// Ground-truth subgroup.
    pub descriptor: SubgroupDescriptor,
    /// Records inside the ground-truth subgroup, ascending.
    pub members: Vec<usize>,
}

pub fn planted_subgroup(config: &PlantedConfig) -> PlantedDataset {
    assert!(config.n_planted <= config.n_features);
    assert!(config.planted_cardinality >= 2 && config.noise_cardinality >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..config.n_features).collect();
    order.shuffle(&mut rng);
    let mut planted: Vec<usize> = order[..config.n_planted].to_vec();
    planted.sort_unstable();

    let is_planted: Vec<bool> = (0..config.n_features)
        .map(|f| planted.contains(&f))
        .collect();
    let cards: Vec<usize> = is_planted
        .iter()
        .map(|&p| {
            if p {
                config.planted_cardinality
            } else {
                config.noise_cardinality
            }
        })
        .collect();
    let mut columns = vec![Vec::with_capacity(config.n_records); config.n_features];
    let mut outcome = Vec::with_capacity(config.n_records);
    for _ in 0..config.n_records {
        let latent = rng.gen_bool(config.latent_rate);
        let mut inside = config.n_planted > 0;
        for f in 0..config.n_features {
            let code = if is_planted[f] {
                if latent && rng.gen_bool(config.hot_given_latent) {
                    0
                } else {
                    inside = false;
                    rng.gen_range(1..cards[f] as u32)
                }
            } else {
                rng.gen_range(0..cards[f] as u32)
            };
            columns[f].push(code);
        }
        let rate = if inside {
            config.inside_rate
        } else {
            config.background_rate
        };
        outcome.push(rng.gen_bool(rate) as u8);
    }

    let schemas = cards
        .iter()
        .enumerate()
        .map(|(f, &c)| FeatureSchema::new(feature_name(f), value_labels(c)).expect("valid labels"))
        .collect();
    let dataset = DiscreteDataset::new(schemas, columns, outcome, "y").expect("consistent shapes");
    let mut descriptor = SubgroupDescriptor::new();
    for &f in &planted {
        descriptor.insert(f, [0]);
    }
    let members = subgroup_mask(&dataset, &descriptor).expect("valid descriptor");
    PlantedDataset {
        dataset,
        planted_features: planted,
        descriptor,
        members,
    }
}

/// Independent uniform features with a subgroup of elevated outcome rate.
pub fn independent_with_subgroup(
    n_records: usize,
    cardinalities: &[usize],
    descriptor: &SubgroupDescriptor,
    inside_rate: f64,
    background_rate: f64,
    seed: u64,
) -> Result<PlantedDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns: Vec<Vec<u32>> = cardinalities
        .iter()
        .map(|&c| (0..n_records).map(|_| rng.gen_range(0..c as u32)).collect())
        .collect();
    let schemas = cardinalities
        .iter()
        .enumerate()
        .map(|(f, &c)| FeatureSchema::new(feature_name(f), value_labels(c)))
        .collect::<Result<Vec<_>>>()?;
    let unlabeled = DiscreteDataset::new(schemas, columns, vec![0; n_records], "y")?;
    let members = subgroup_mask(&unlabeled, descriptor)?;
    let mut inside = vec![false; n_records];
    for &i in &members {
        inside[i] = true;
    }
    let outcome = inside
        .iter()
        .map(|&m| rng.gen_bool(if m { inside_rate } else { background_rate }) as u8)
        .collect();
    Ok(PlantedDataset {
        dataset: unlabeled.with_outcome(outcome)?,
        planted_features: descriptor.iter().map(|(f, _)| f).collect(),
        descriptor: descriptor.clone(),
        members,
    })
}

/// Uniform independent features with a Bernoulli(`rate`) outcome.
pub fn noise_dataset(
    n_records: usize,
    cardinalities: &[usize],
    rate: f64,
    seed: u64,
) -> DiscreteDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns: Vec<Vec<u32>> = cardinalities
        .iter()
        .map(|&c| (0..n_records).map(|_| rng.gen_range(0..c as u32)).collect())
        .collect();
    let mut outcome: Vec<u8> = (0..n_records).map(|_| rng.gen_bool(rate) as u8).collect();
    // Keep the global rate strictly inside (0, 1).
    if outcome.iter().all(|&y| y == outcome[0]) {
        outcome[0] ^= 1;
    }
    let schemas = cardinalities
        .iter()
        .enumerate()
        .map(|(f, &c)| FeatureSchema::new(feature_name(f), value_labels(c)).expect("valid labels"))
        .collect();
    DiscreteDataset::new(schemas, columns, outcome, "y").expect("consistent shapes")
}

/// Writes the dataset as CSV with category labels and the outcome last.
pub fn write_csv<W: Write>(dataset: &DiscreteDataset, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = dataset.schemas().iter().map(FeatureSchema::name).collect();
    header.push(dataset.outcome_name());
    csv.write_record(&header)?;
    for i in 0..dataset.n_records() {
        let mut row: Vec<String> = (0..dataset.n_features())
            .map(|f| {
                dataset
                    .schema(f)
                    .label(dataset.code(i, f))
                    .unwrap_or_default()
                    .to_string()
            })
            .collect();
        row.push(dataset.outcome()[i].to_string());
        csv.write_record(&row)?;
    }
    csv.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{read_csv, DiscretizationSpec};

    #[test]
    fn planted_is_deterministic() {
        let a = planted_subgroup(&PlantedConfig::default());
        let b = planted_subgroup(&PlantedConfig::default());
        assert_eq!(a.dataset.outcome(), b.dataset.outcome());
        assert_eq!(a.planted_features, b.planted_features);
        assert_eq!(a.planted_features.len(), 3);
    }

    #[test]
    fn planted_rates() {
        let p = planted_subgroup(&PlantedConfig {
            n_records: 40_000,
            ..Default::default()
        });
        let d = &p.dataset;
        let inside: f64 = p
            .members
            .iter()
            .map(|&i| d.outcome()[i] as f64)
            .sum::<f64>()
            / p.members.len() as f64;
        assert!((inside - 0.8).abs() < 0.05, "{inside}");
        let expected = 0.05 * 0.9f64.powi(3);
        let frac = p.members.len() as f64 / 40_000.0;
        assert!((frac - expected).abs() < 0.01, "{frac}");
    }

    #[test]
    fn csv_round_trip_preserves_labels() {
        let p = planted_subgroup(&PlantedConfig {
            n_records: 300,
            n_features: 4,
            ..Default::default()
        });
        let mut buf = Vec::new();
        write_csv(&p.dataset, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), "y", &DiscretizationSpec::default()).unwrap();
        assert_eq!(back.outcome(), p.dataset.outcome());
        for f in 0..4 {
            for i in 0..300 {
                assert_eq!(
                    back.schema(f).label(back.code(i, f)),
                    p.dataset.schema(f).label(p.dataset.code(i, f))
                );
            }
        }
    }

    #[test]
    fn noise_is_never_degenerate() {
        let d = noise_dataset(5, &[2], 0.0, 1);
        assert!(d.global_rate() > 0.0 && d.global_rate() < 1.0);
    }
}
