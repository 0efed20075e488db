//! Seeded generation of feature subsets and bootstrap row samples.
//!
//! Every random draw is a pure function of a 64-bit seed. Task seeds are
//! derived from a master seed with the SplitMix64 output function, and each
//! task seeds its own ChaCha8 stream, so a task stream can be regenerated
//! (or evaluated in any order) without shared generator state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Labels;
use crate::error::{Error, Result};

/// Generator identification echoed into traces.
pub const PRNG_ID: &str = "ChaCha8Rng (rand_chacha 0.3) seeded via SplitMix64 counter derivation v1";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed for `stream` from `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Sorted, duplicate-free list of feature indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSet(Vec<usize>);

impl FeatureSet {
    pub fn new(mut features: Vec<usize>) -> Self {
        features.sort_unstable();
        features.dedup();
        FeatureSet(features)
    }

    /// `{0, 1, ..., n - 1}`.
    pub fn full(n: usize) -> Self {
        FeatureSet((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.0.binary_search(&feature).is_ok()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn difference(&self, other: &FeatureSet) -> FeatureSet {
        FeatureSet(self.iter().filter(|&f| !other.contains(f)).collect())
    }

    pub fn union(&self, other: &FeatureSet) -> FeatureSet {
        FeatureSet::new(self.iter().chain(other.iter()).collect())
    }

    pub fn is_disjoint(&self, other: &FeatureSet) -> bool {
        self.iter().all(|f| !other.contains(f))
    }
}

impl FromIterator<usize> for FeatureSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        FeatureSet::new(iter.into_iter().collect())
    }
}

/// Counter-based seed schedule: task `i` always receives the same seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master_seed: u64,
}

impl SeedPlan {
    pub fn new(master_seed: u64) -> Self {
        SeedPlan { master_seed }
    }

    /// Independent plan for a sub-stream (e.g. one selector iteration).
    pub fn child(&self, stream: u64) -> SeedPlan {
        SeedPlan { master_seed: derive_seed(self.master_seed, stream) }
    }

    /// The `index`-th SplitMix64 output of the master seed.
    pub fn task_seed(&self, index: u64) -> u64 {
        mix64(self.master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// `floor(n/2)` features.
    Base,
    /// `floor(n/2) + 1` features.
    Plus,
}

impl TaskKind {
    pub fn subset_size(self, n_active: usize) -> usize {
        match self {
            TaskKind::Base => n_active / 2,
            TaskKind::Plus => n_active / 2 + 1,
        }
    }
}

/// One alignment evaluation: a feature subset and a bootstrap row sample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsampleTask {
    pub index: usize,
    pub kind: TaskKind,
    pub feature_subset: FeatureSet,
    pub row_indices: Vec<usize>,
    pub task_seed: u64,
}

const FEATURE_STREAM: u64 = 0;
const ROW_STREAM: u64 = 1;

/// Seed of the row sample for `attempt` (0 is the first draw, later
/// attempts replace samples whose labels were degenerate).
pub fn row_seed(task_seed: u64, attempt: u32) -> u64 {
    derive_seed(task_seed, ROW_STREAM + 2 * u64::from(attempt))
}

/// Uniform random `size`-subset of `active` by partial Fisher-Yates shuffle.
pub fn draw_feature_subset(active: &FeatureSet, size: usize, seed: u64) -> Result<FeatureSet> {
    if size == 0 || size > active.len() {
        return Err(Error::Parameter(format!("subset size {size} must be in 1..={}", active.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = active.as_slice().to_vec();
    for k in 0..size {
        let j = rng.gen_range(k..pool.len());
        pool.swap(k, j);
    }
    pool.truncate(size);
    Ok(FeatureSet::new(pool))
}

/// Row sampler for one dataset: bootstrap with replacement, optionally with
/// equal class representation.
#[derive(Clone, Debug)]
pub struct RowSampler {
    m: usize,
    s: usize,
    /// Per-class sample indices; only populated in balanced mode.
    by_class: Option<Vec<Vec<usize>>>,
}

impl RowSampler {
    pub fn new(m: usize, s: usize, labels: Option<&Labels>, balanced: bool) -> Result<Self> {
        if s < 2 {
            return Err(Error::Parameter(format!("subsample size must be >= 2, got {s}")));
        }
        if m == 0 {
            return Err(Error::Input("cannot sample rows from an empty dataset".into()));
        }
        let by_class = if balanced {
            let labels = labels.ok_or_else(|| Error::Parameter("balanced row sampling requires labels".into()))?;
            if labels.len() != m {
                return Err(Error::Input(format!("{} labels for {m} rows", labels.len())));
            }
            let mut groups = vec![Vec::new(); labels.n_classes()];
            for i in 0..m {
                groups[labels.class_of(i)].push(i);
            }
            if let Some(class) = groups.iter().position(Vec::is_empty) {
                return Err(Error::ClassCoverage { class });
            }
            Some(groups)
        } else {
            None
        };
        Ok(RowSampler { m, s, by_class })
    }

    pub fn subsample_size(&self) -> usize {
        self.s
    }

    pub fn draw(&self, seed: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match &self.by_class {
            None => (0..self.s).map(|_| rng.gen_range(0..self.m)).collect(),
            Some(groups) => {
                let counts = balanced_counts(groups, self.s);
                let mut rows = Vec::with_capacity(self.s);
                for (group, &count) in groups.iter().zip(&counts) {
                    rows.extend((0..count).map(|_| group[rng.gen_range(0..group.len())]));
                }
                rows
            }
        }
    }
}

/// `floor(s / C)` per class; the remaining slots go to the rarest classes
/// (ties broken by class id).
fn balanced_counts(groups: &[Vec<usize>], s: usize) -> Vec<usize> {
    let c = groups.len();
    let mut counts = vec![s / c; c];
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by_key(|&k| (groups[k].len(), k));
    for &k in order.iter().take(s % c) {
        counts[k] += 1;
    }
    counts
}

/// Draws `s` row indices out of `m`.
pub fn draw_rows(m: usize, s: usize, labels: Option<&Labels>, balanced: bool, seed: u64) -> Result<Vec<usize>> {
    Ok(RowSampler::new(m, s, labels, balanced)?.draw(seed))
}

/// Builds one task of the given kind; the feature subset and the rows use
/// independent streams of the task seed.
pub fn make_task(
    active: &FeatureSet,
    rows: &RowSampler,
    kind: TaskKind,
    index: usize,
    task_seed: u64,
) -> Result<SubsampleTask> {
    let subset = draw_feature_subset(active, kind.subset_size(active.len()), derive_seed(task_seed, FEATURE_STREAM))?;
    Ok(SubsampleTask { index, kind, feature_subset: subset, row_indices: rows.draw(row_seed(task_seed, 0)), task_seed })
}

/// The BASE and PLUS tasks of pair `i`. Returns `None` when fewer than three
/// features are active, which ends selection.
pub fn make_task_pair(
    active: &FeatureSet,
    rows: &RowSampler,
    plan: &SeedPlan,
    i: usize,
) -> Result<Option<(SubsampleTask, SubsampleTask)>> {
    if active.len() < 3 {
        return Ok(None);
    }
    let base = make_task(active, rows, TaskKind::Base, i, plan.task_seed(2 * i as u64))?;
    let plus = make_task(active, rows, TaskKind::Plus, i, plan.task_seed(2 * i as u64 + 1))?;
    Ok(Some((base, plus)))
}
