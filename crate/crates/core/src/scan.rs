//! Multi-dimensional subset scanning.
//!
//! A subgroup is scored with the Bernoulli likelihood-ratio statistic
//!
//! ```text
//! Γ = max_q  log(q)·Σ y_i − N_S·log(1 − μ + q·μ)
//! ```
//!
//! where μ is the global outcome rate and the subgroup's odds are modelled as
//! `q` times the global odds. The maximizing `q` has the closed form
//! `q̂ = Σy·(1 − μ) / (μ·(N_S − Σy))`, clamped to `q ≥ 1` when scanning for
//! over-observed subgroups and `q ≤ 1` for under-observed ones.
//!
//! The search runs coordinate ascent over features. For one feature with the
//! others held fixed, the score is maximized over all value subsets by sorting
//! the values by outcome rate and checking only the prefixes of that order:
//! for a fixed `q` the score is additive over values, so the optimal subset
//! collects every value whose rate clears a threshold. Ascent is repeated from
//! several random starting subgroups and the best local maximum is kept.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::data::{subgroup_mask, DiscreteDataset};
use crate::descriptor::SubgroupDescriptor;
use crate::error::{Result, SafsError};
use crate::seed::{stream_rng, RESTART_STREAM};

/// Upper bound on the number of descriptors [`brute_force_scan`] enumerates.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Subgroups with more positives than expected (`q > 1`).
    #[default]
    Over,
    /// Subgroups with fewer positives than expected (`q < 1`).
    Under,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Over => "over",
            Direction::Under => "under",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = SafsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "over" => Ok(Direction::Over),
            "under" => Ok(Direction::Under),
            other => Err(SafsError::InvalidParameter(format!(
                "unknown direction `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScanConfig {
    pub direction: Direction,
    /// Number of ascent runs; the first starts from the unconstrained subgroup.
    pub restarts: usize,
    /// Cap on full coordinate passes per restart.
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            direction: Direction::Over,
            restarts: 10,
            max_passes: 50,
            seed: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(SafsError::InvalidParameter(
                "restarts must be at least 1".into(),
            ));
        }
        if self.max_passes == 0 {
            return Err(SafsError::InvalidParameter(
                "max passes must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Score of a subgroup and the odds multiplier that attains it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    pub gamma: f64,
    /// `+∞` for an all-positive over-scan subgroup, `0` for an all-negative
    /// under-scan subgroup.
    pub q_hat: f64,
}

impl Score {
    const NULL: Score = Score {
        gamma: 0.0,
        q_hat: 1.0,
    };
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub descriptor: SubgroupDescriptor,
    pub score: f64,
    pub q_hat: f64,
    /// Matched record indices, ascending.
    pub matched: Vec<usize>,
    pub subset_size: usize,
    pub subset_outcome_sum: u64,
    pub elapsed: Duration,
}

impl ScanResult {
    fn assemble(
        dataset: &DiscreteDataset,
        descriptor: SubgroupDescriptor,
        direction: Direction,
        elapsed: Duration,
    ) -> Result<Self> {
        let matched = subgroup_mask(dataset, &descriptor)?;
        let sum: u64 = matched.iter().map(|&i| dataset.outcome()[i] as u64).sum();
        let score = score_counts(matched.len() as u64, sum, dataset.global_rate(), direction)?;
        Ok(Self {
            descriptor,
            score: score.gamma,
            q_hat: score.q_hat,
            subset_size: matched.len(),
            subset_outcome_sum: sum,
            matched,
            elapsed,
        })
    }

    /// Fraction of all records inside the subgroup.
    pub fn subset_fraction(&self, dataset: &DiscreteDataset) -> f64 {
        self.subset_size as f64 / dataset.n_records() as f64
    }
}

fn check_rate(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(SafsError::DegenerateOutcome(mu))
    }
}

/// Maximum-likelihood odds multiplier of a subgroup with `n_s` records and
/// `sum_y` positives. Returns `+∞` when every record is positive and `0`
/// when none is.
pub fn q_mle(n_s: u64, sum_y: u64, mu: f64) -> Result<f64> {
    check_rate(mu)?;
    if n_s == 0 {
        return Err(SafsError::EmptySubgroup);
    }
    if sum_y > n_s {
        return Err(SafsError::InvalidParameter(format!(
            "{sum_y} positives in a subgroup of {n_s}"
        )));
    }
    if sum_y == n_s {
        return Ok(f64::INFINITY);
    }
    Ok((sum_y as f64 * (1.0 - mu)) / (mu * (n_s - sum_y) as f64))
}

/// Directional score of a subgroup given its size and positive count.
pub fn score_counts(n_s: u64, sum_y: u64, mu: f64, direction: Direction) -> Result<Score> {
    let q = q_mle(n_s, sum_y, mu)?;
    let n = n_s as f64;
    let s = sum_y as f64;
    let score = match direction {
        Direction::Over if q <= 1.0 => Score::NULL,
        Direction::Under if q >= 1.0 => Score::NULL,
        // Limits of the statistic as q → ∞ and q → 0.
        Direction::Over if sum_y == n_s => Score {
            gamma: -n * mu.ln(),
            q_hat: f64::INFINITY,
        },
        Direction::Under if sum_y == 0 => Score {
            gamma: -n * (1.0 - mu).ln(),
            q_hat: 0.0,
        },
        _ => Score {
            gamma: (q.ln() * s - n * (1.0 - mu + q * mu).ln()).max(0.0),
            q_hat: q,
        },
    };
    Ok(score)
}

/// Score of the records matched by `descriptor`.
pub fn score_subgroup(
    dataset: &DiscreteDataset,
    descriptor: &SubgroupDescriptor,
    direction: Direction,
) -> Result<Score> {
    check_rate(dataset.global_rate())?;
    let matched = subgroup_mask(dataset, descriptor)?;
    let sum: u64 = matched.iter().map(|&i| dataset.outcome()[i] as u64).sum();
    score_counts(matched.len() as u64, sum, dataset.global_rate(), direction)
}

/// Per-value record and positive counts used by the prefix search.
#[derive(Clone, Copy, Debug)]
struct ValueStat {
    value: u32,
    count: u64,
    positives: u64,
}

/// Best value subset of one feature: `None` means every supported value, i.e.
/// no constraint.
fn best_prefix(
    stats: &mut Vec<ValueStat>,
    mu: f64,
    direction: Direction,
) -> Result<(Option<Vec<u32>>, Score)> {
    stats.retain_mut(|s| s.count > 0);
    if stats.is_empty() {
        return Err(SafsError::EmptySubgroup);
    }
    // Rate order compared exactly through cross products.
    stats.sort_by(|a, b| {
        let lhs = a.positives as u128 * b.count as u128;
        let rhs = b.positives as u128 * a.count as u128;
        let by_rate = match direction {
            Direction::Over => rhs.cmp(&lhs),
            Direction::Under => lhs.cmp(&rhs),
        };
        by_rate.then(a.value.cmp(&b.value))
    });

    let mut best_len = 0;
    let mut best = Score {
        gamma: f64::NEG_INFINITY,
        q_hat: 1.0,
    };
    let (mut n, mut s) = (0u64, 0u64);
    let mut full = best;
    for (i, stat) in stats.iter().enumerate() {
        n += stat.count;
        s += stat.positives;
        let score = score_counts(n, s, mu, direction)?;
        if score.gamma > best.gamma {
            best = score;
            best_len = i + 1;
        }
        full = score;
    }
    // Equal scores resolve to dropping the constraint.
    if full.gamma >= best.gamma {
        return Ok((None, full));
    }
    let mut set: Vec<u32> = stats[..best_len].iter().map(|s| s.value).collect();
    set.sort_unstable();
    Ok((Some(set), best))
}

/// Re-optimizes the included values of `feature` with every other constraint
/// of `descriptor` held fixed.
///
/// Returns `None` when the best choice is to leave the feature unconstrained.
pub fn optimize_feature(
    dataset: &DiscreteDataset,
    descriptor: &SubgroupDescriptor,
    feature: usize,
    direction: Direction,
) -> Result<Option<Vec<u32>>> {
    dataset.check_feature(feature)?;
    let mu = dataset.global_rate();
    check_rate(mu)?;
    let mut others = descriptor.clone();
    others.remove(feature);
    let matched = subgroup_mask(dataset, &others)?;
    let mut stats: Vec<ValueStat> = (0..dataset.schema(feature).cardinality() as u32)
        .map(|value| ValueStat {
            value,
            count: 0,
            positives: 0,
        })
        .collect();
    let column = dataset.column(feature);
    for &i in &matched {
        let cell = &mut stats[column[i] as usize];
        cell.count += 1;
        cell.positives += dataset.outcome()[i] as u64;
    }
    best_prefix(&mut stats, mu, direction).map(|(set, _)| set)
}

/// Incremental coordinate-ascent state for one restart.
///
/// `violations[i]` counts the constrained features whose included set does
/// not contain record `i`'s code, so a record is in the subgroup iff its
/// count is zero.
struct Ascent<'a> {
    dataset: &'a DiscreteDataset,
    features: &'a [usize],
    mu: f64,
    direction: Direction,
    included: Vec<Option<Vec<bool>>>,
    violations: Vec<u32>,
    stats: Vec<ValueStat>,
}

impl<'a> Ascent<'a> {
    fn new(dataset: &'a DiscreteDataset, features: &'a [usize], direction: Direction) -> Self {
        Self {
            dataset,
            features,
            mu: dataset.global_rate(),
            direction,
            included: vec![None; features.len()],
            violations: vec![0; dataset.n_records()],
            stats: Vec::new(),
        }
    }

    fn excluded(&self, slot: usize, record: usize) -> bool {
        match &self.included[slot] {
            Some(allowed) => !allowed[self.dataset.code(record, self.features[slot]) as usize],
            None => false,
        }
    }

    fn set(&mut self, slot: usize, allowed: Option<Vec<bool>>) {
        let column = self.dataset.column(self.features[slot]);
        let old = self.included[slot].take();
        for (i, v) in self.violations.iter_mut().enumerate() {
            let code = column[i] as usize;
            let was = old.as_ref().is_some_and(|a| !a[code]);
            let now = allowed.as_ref().is_some_and(|a| !a[code]);
            match (was, now) {
                (true, false) => *v -= 1,
                (false, true) => *v += 1,
                _ => {}
            }
        }
        self.included[slot] = allowed;
    }

    fn current(&self) -> Result<Score> {
        let (mut n, mut s) = (0u64, 0u64);
        for (i, &v) in self.violations.iter().enumerate() {
            if v == 0 {
                n += 1;
                s += self.dataset.outcome()[i] as u64;
            }
        }
        score_counts(n, s, self.mu, self.direction)
    }

    fn is_empty(&self) -> bool {
        self.violations.iter().all(|&v| v > 0)
    }

    /// One coordinate step; returns the score after the update.
    fn optimize(&mut self, slot: usize) -> Result<Score> {
        let feature = self.features[slot];
        let cardinality = self.dataset.schema(feature).cardinality();
        self.stats.clear();
        self.stats
            .extend((0..cardinality as u32).map(|value| ValueStat {
                value,
                count: 0,
                positives: 0,
            }));
        let column = self.dataset.column(feature);
        let outcome = self.dataset.outcome();
        for (i, &v) in self.violations.iter().enumerate() {
            let own = self.excluded(slot, i) as u32;
            if v == own {
                let cell = &mut self.stats[column[i] as usize];
                cell.count += 1;
                cell.positives += outcome[i] as u64;
            }
        }
        let mut stats = std::mem::take(&mut self.stats);
        let result = best_prefix(&mut stats, self.mu, self.direction);
        self.stats = stats;
        let (set, score) = result?;
        let allowed = set.map(|values| {
            let mut allowed = vec![false; cardinality];
            for v in values {
                allowed[v as usize] = true;
            }
            allowed
        });
        if allowed != self.included[slot] {
            self.set(slot, allowed);
        }
        Ok(score)
    }

    fn descriptor(&self) -> SubgroupDescriptor {
        let mut d = SubgroupDescriptor::new();
        for (slot, allowed) in self.included.iter().enumerate() {
            if let Some(allowed) = allowed {
                d.insert(
                    self.features[slot],
                    allowed
                        .iter()
                        .enumerate()
                        .filter(|(_, &a)| a)
                        .map(|(v, _)| v as u32),
                );
            }
        }
        d.normalize(self.dataset);
        d
    }
}

fn canonical_features(dataset: &DiscreteDataset, features: &[usize]) -> Result<Vec<usize>> {
    if features.is_empty() {
        return Err(SafsError::NoFeatures);
    }
    let mut sorted = features.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &f in &sorted {
        dataset.check_feature(f)?;
    }
    Ok(sorted)
}

fn run_restart(
    dataset: &DiscreteDataset,
    features: &[usize],
    config: &ScanConfig,
    restart: usize,
) -> Result<(SubgroupDescriptor, Score)> {
    let mut rng = stream_rng(config.seed, RESTART_STREAM, restart as u64);
    let mut ascent = Ascent::new(dataset, features, config.direction);
    if restart > 0 {
        for (slot, &feature) in features.iter().enumerate() {
            let cardinality = dataset.schema(feature).cardinality();
            // Uniform over non-empty subsets by rejection.
            let allowed = loop {
                let draw: Vec<bool> = (0..cardinality).map(|_| rng.gen_bool(0.5)).collect();
                if draw.iter().any(|&a| a) {
                    break draw;
                }
            };
            let allowed = if allowed.iter().all(|&a| a) {
                None
            } else {
                Some(allowed)
            };
            ascent.set(slot, allowed);
        }
        let mut slots: Vec<usize> = (0..features.len()).collect();
        slots.shuffle(&mut rng);
        for slot in slots {
            if !ascent.is_empty() {
                break;
            }
            ascent.set(slot, None);
        }
    }

    let mut score = ascent.current()?;
    let mut order: Vec<usize> = (0..features.len()).collect();
    for _ in 0..config.max_passes {
        let start = score.gamma;
        order.shuffle(&mut rng);
        for &slot in &order {
            score = ascent.optimize(slot)?;
        }
        if score.gamma <= start {
            break;
        }
    }
    Ok((ascent.descriptor(), score))
}

fn better(a: &(SubgroupDescriptor, Score), b: &(SubgroupDescriptor, Score)) -> bool {
    match a.1.gamma.total_cmp(&b.1.gamma) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => a.0.simplicity_cmp(&b.0) == Ordering::Less,
    }
}

/// Searches for the highest-scoring subgroup over `features`.
///
/// The feature list is treated as a set. Restarts run in parallel, each with
/// its own sub-seed, so the result depends only on the inputs and the seed.
pub fn scan(
    dataset: &DiscreteDataset,
    features: &[usize],
    config: &ScanConfig,
) -> Result<ScanResult> {
    let started = Instant::now();
    config.validate()?;
    let features = canonical_features(dataset, features)?;
    check_rate(dataset.global_rate())?;

    let runs = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_restart(dataset, &features, config, r))
        .collect::<Result<Vec<_>>>()?;
    let best = runs
        .into_iter()
        .reduce(|acc, run| if better(&run, &acc) { run } else { acc })
        .expect("at least one restart");
    ScanResult::assemble(dataset, best.0, config.direction, started.elapsed())
}

/// Exhaustive search over every descriptor on `features`; a test oracle for
/// small instances.
pub fn brute_force_scan(
    dataset: &DiscreteDataset,
    features: &[usize],
    direction: Direction,
) -> Result<ScanResult> {
    let started = Instant::now();
    let features = canonical_features(dataset, features)?;
    let mu = dataset.global_rate();
    check_rate(mu)?;
    let space: f64 = features
        .iter()
        .map(|&f| 2f64.powi(dataset.schema(f).cardinality() as i32) - 1.0)
        .product();
    if space > BRUTE_FORCE_LIMIT {
        return Err(SafsError::SearchSpaceTooLarge(space));
    }

    struct Search<'a> {
        dataset: &'a DiscreteDataset,
        features: &'a [usize],
        mu: f64,
        direction: Direction,
        masks: Vec<Option<u64>>,
        best: Option<(SubgroupDescriptor, Score)>,
    }

    impl Search<'_> {
        fn descriptor(&self) -> SubgroupDescriptor {
            let mut d = SubgroupDescriptor::new();
            for (slot, mask) in self.masks.iter().enumerate() {
                if let Some(mask) = mask {
                    d.insert(
                        self.features[slot],
                        (0..64u32).filter(|v| mask & (1 << v) != 0),
                    );
                }
            }
            d
        }

        fn visit(&mut self, depth: usize, records: &[usize]) -> Result<()> {
            if records.is_empty() {
                return Ok(());
            }
            if depth == self.features.len() {
                let s: u64 = records
                    .iter()
                    .map(|&i| self.dataset.outcome()[i] as u64)
                    .sum();
                let score = score_counts(records.len() as u64, s, self.mu, self.direction)?;
                let candidate_beats =
                    |best: &(SubgroupDescriptor, Score), d: &SubgroupDescriptor| match score
                        .gamma
                        .total_cmp(&best.1.gamma)
                    {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => d.simplicity_cmp(&best.0) == Ordering::Less,
                    };
                let take = match &self.best {
                    None => true,
                    Some(best) if score.gamma < best.1.gamma => false,
                    Some(best) => candidate_beats(best, &self.descriptor()),
                };
                if take {
                    self.best = Some((self.descriptor(), score));
                }
                return Ok(());
            }
            let feature = self.features[depth];
            let cardinality = self.dataset.schema(feature).cardinality();
            let full = (1u64 << cardinality) - 1;
            self.masks[depth] = None;
            self.visit(depth + 1, records)?;
            let column = self.dataset.column(feature);
            for mask in 1..full {
                let kept: Vec<usize> = records
                    .iter()
                    .copied()
                    .filter(|&i| mask & (1 << column[i]) != 0)
                    .collect();
                self.masks[depth] = Some(mask);
                self.visit(depth + 1, &kept)?;
            }
            self.masks[depth] = None;
            Ok(())
        }
    }

    let mut search = Search {
        dataset,
        features: &features,
        mu,
        direction,
        masks: vec![None; features.len()],
        best: None,
    };
    let all: Vec<usize> = (0..dataset.n_records()).collect();
    search.visit(0, &all)?;
    let (descriptor, _) = search
        .best
        .expect("unconstrained descriptor matches every record");
    ScanResult::assemble(dataset, descriptor, direction, started.elapsed())
}
