//! Randomised feature selection by culling on estimated alignment contributions.
//!
//! Each iteration evaluates `r` pairs of tasks. The BASE task of a pair uses
//! `floor(n/2)` randomly chosen active features and the PLUS task
//! `floor(n/2) + 1`, each on its own bootstrap sample of rows. The
//! contribution of feature `j` is the mean alignment of the PLUS tasks that
//! contain `j` minus the mean alignment of the BASE tasks that do not. The
//! lowest-contributing features are then culled, and features that rank at
//! the top for enough consecutive iterations may be fixed (exempt from
//! culling). The loop stops at two features.
//!
//! One iteration costs `2 r s^2` kernel entries, independent of the number of
//! samples in the dataset.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Labels};
use crate::error::{Error, Result};
use crate::kernel::{self, Bandwidth, LabelKernelKind};
use crate::sampling::{self, FeatureSet, RowSampler, SeedPlan, SubsampleTask, TaskKind, PRNG_ID};

pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Redraws allowed for a task whose bootstrap rows hold a single class.
pub const MAX_REDRAWS: u32 = 10;

/// How rows are chosen for each task.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RowMode {
    /// `subsample` rows drawn with replacement.
    #[default]
    Bootstrap,
    /// Every task uses all rows of the dataset in order.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandSelConfig {
    /// Task pairs per iteration.
    pub tasks: usize,
    /// Rows per task.
    pub subsample: usize,
    /// Proportion of non-fixed features culled per iteration.
    pub cull: f64,
    /// Proportion of active features counted as top contributors.
    pub top_fraction: f64,
    /// Consecutive top placements before a feature is fixed.
    pub fix_after: usize,
    pub fixing: bool,
    /// Base bandwidth; a task on `k` features uses `sigma0 / k`.
    pub sigma0: f64,
    /// Equal class counts in every row sample.
    pub balanced: bool,
    pub master_seed: u64,
    /// Minimum PLUS appearances and BASE absences per feature.
    pub min_coverage: usize,
    pub label_kernel: LabelKernelKind,
    pub row_mode: RowMode,
}

impl Default for RandSelConfig {
    fn default() -> Self {
        RandSelConfig {
            tasks: 500,
            subsample: 200,
            cull: 0.125,
            top_fraction: 0.1,
            fix_after: 3,
            fixing: false,
            sigma0: 0.5,
            balanced: false,
            master_seed: 0,
            min_coverage: 5,
            label_kernel: LabelKernelKind::Auto,
            row_mode: RowMode::Bootstrap,
        }
    }
}

impl RandSelConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.cull) {
            return Err(Error::Parameter(format!("cull must be in (0,1), got {}", self.cull)));
        }
        if !open_unit(self.top_fraction) {
            return Err(Error::Parameter(format!("top fraction must be in (0,1), got {}", self.top_fraction)));
        }
        if self.fix_after < 1 {
            return Err(Error::Parameter("fix-after must be >= 1".into()));
        }
        if self.tasks < 1 {
            return Err(Error::Parameter("tasks must be >= 1".into()));
        }
        if self.subsample < 2 {
            return Err(Error::Parameter(format!("subsample must be >= 2, got {}", self.subsample)));
        }
        if self.min_coverage < 1 {
            return Err(Error::Parameter("min coverage must be >= 1".into()));
        }
        Bandwidth::new(self.sigma0)?;
        Ok(())
    }

    fn rows_per_task(&self, m: usize) -> usize {
        match self.row_mode {
            RowMode::Bootstrap => self.subsample,
            RowMode::Full => m,
        }
    }
}

/// `floor(fraction * n)`, tolerant of representation error in `fraction`.
fn floor_fraction(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 1e-9).floor() as usize
}

fn ceil_fraction(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 - 1e-9).ceil().max(0.0) as usize
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureContribution {
    pub feature: usize,
    /// Mean alignment of PLUS tasks containing the feature.
    pub mean_plus: Option<f64>,
    /// Mean alignment of BASE tasks not containing the feature.
    pub mean_base_excl: Option<f64>,
    pub contribution: Option<f64>,
    pub count_plus: usize,
    pub count_base_excl: usize,
}

/// Per-feature contribution estimates of one iteration, ordered by feature.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContributionTable {
    pub entries: Vec<FeatureContribution>,
}

impl ContributionTable {
    /// Sample means over the evaluated tasks. Features never seen on a side
    /// get `None` for that side.
    pub fn tabulate<'a, I>(results: I, active: &FeatureSet) -> ContributionTable
    where
        I: IntoIterator<Item = (&'a SubsampleTask, f64)>,
    {
        let n = active.len();
        let slot = |f: usize| active.as_slice().binary_search(&f).ok();
        let mut plus_sum = vec![0.0; n];
        let mut plus_count = vec![0usize; n];
        let mut base_sum = vec![0.0; n];
        let mut base_count = vec![0usize; n];
        for (task, a) in results {
            match task.kind {
                TaskKind::Plus => {
                    for k in task.feature_subset.iter().filter_map(slot) {
                        plus_sum[k] += a;
                        plus_count[k] += 1;
                    }
                }
                TaskKind::Base => {
                    for (k, f) in active.iter().enumerate() {
                        if !task.feature_subset.contains(f) {
                            base_sum[k] += a;
                            base_count[k] += 1;
                        }
                    }
                }
            }
        }
        let mean = |sum: f64, count: usize| (count > 0).then(|| sum / count as f64);
        let entries = active
            .iter()
            .enumerate()
            .map(|(k, feature)| {
                let mean_plus = mean(plus_sum[k], plus_count[k]);
                let mean_base_excl = mean(base_sum[k], base_count[k]);
                FeatureContribution {
                    feature,
                    mean_plus,
                    mean_base_excl,
                    contribution: mean_plus.zip(mean_base_excl).map(|(p, b)| p - b),
                    count_plus: plus_count[k],
                    count_base_excl: base_count[k],
                }
            })
            .collect();
        ContributionTable { entries }
    }

    pub fn get(&self, feature: usize) -> Option<&FeatureContribution> {
        self.entries.binary_search_by_key(&feature, |e| e.feature).ok().map(|k| &self.entries[k])
    }

    pub fn contribution(&self, feature: usize) -> Option<f64> {
        self.get(feature).and_then(|e| e.contribution)
    }

    /// First feature seen fewer than `min_coverage` times on either side.
    pub fn coverage_gap(&self, min_coverage: usize) -> Option<&FeatureContribution> {
        self.entries.iter().find(|e| e.count_plus < min_coverage || e.count_base_excl < min_coverage)
    }

    /// Features ordered from highest to lowest contribution, ties by index.
    pub fn ranked_desc(&self) -> Vec<(usize, f64)> {
        let mut ranked: Vec<(usize, f64)> =
            self.entries.iter().map(|e| (e.feature, e.contribution.unwrap_or(f64::NEG_INFINITY))).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked
    }
}

/// Smallest task count whose expected coverage meets `min_coverage` for
/// `n_active` features.
pub fn min_tasks_for_coverage(n_active: usize, min_coverage: usize) -> usize {
    let b = n_active / 2;
    let p_plus = (b + 1) as f64 / n_active as f64;
    let p_excl = (n_active - b) as f64 / n_active as f64;
    (min_coverage as f64 / p_plus.min(p_excl)).ceil() as usize
}

/// Tabulates the results and checks that every feature meets `min_coverage`.
pub fn aggregate_contributions<'a, I>(results: I, active: &FeatureSet, min_coverage: usize) -> Result<ContributionTable>
where
    I: IntoIterator<Item = (&'a SubsampleTask, f64)>,
{
    let table = ContributionTable::tabulate(results, active);
    match table.coverage_gap(min_coverage) {
        None => Ok(table),
        Some(gap) => Err(Error::Coverage {
            feature: gap.feature,
            plus: gap.count_plus,
            base: gap.count_base_excl,
            min_coverage,
            min_tasks: min_tasks_for_coverage(active.len(), min_coverage),
        }),
    }
}

/// Alignment of one task together with bookkeeping for the cost report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub alignment: f64,
    pub redraws: u32,
    pub kernel_entries: u64,
}

/// Evaluates tasks against one dataset.
pub struct Evaluator<'a> {
    data: &'a Dataset,
    config: &'a RandSelConfig,
    rows: RowSampler,
}

impl<'a> Evaluator<'a> {
    pub fn new(data: &'a Dataset, config: &'a RandSelConfig) -> Result<Self> {
        let s = config.rows_per_task(data.n_samples());
        let rows = RowSampler::new(data.n_samples(), s, Some(&data.y), config.balanced)?;
        Ok(Evaluator { data, config, rows })
    }

    pub fn row_sampler(&self) -> &RowSampler {
        &self.rows
    }

    /// The task for `(kind, index)` under `plan`.
    pub fn task(&self, active: &FeatureSet, plan: &SeedPlan, kind: TaskKind, index: usize) -> Result<SubsampleTask> {
        let seed = plan.task_seed(2 * index as u64 + u64::from(kind == TaskKind::Plus));
        let mut task = sampling::make_task(active, &self.rows, kind, index, seed)?;
        if self.config.row_mode == RowMode::Full {
            task.row_indices = (0..self.data.n_samples()).collect();
        }
        Ok(task)
    }

    pub fn evaluate(&self, task: &SubsampleTask) -> Result<Evaluation> {
        let s = task.row_indices.len() as u64;
        let mut rows = std::borrow::Cow::Borrowed(&task.row_indices);
        let mut redraws = 0;
        loop {
            match self.alignment_on(&rows, &task.feature_subset) {
                Ok(alignment) => {
                    return Ok(Evaluation { alignment, redraws, kernel_entries: u64::from(redraws + 1) * s * s })
                }
                Err(Error::DegenerateLabels(_) | Error::DegenerateKernel { .. })
                    if redraws < MAX_REDRAWS && self.config.row_mode == RowMode::Bootstrap =>
                {
                    redraws += 1;
                    rows = std::borrow::Cow::Owned(self.rows.draw(sampling::row_seed(task.task_seed, redraws)));
                }
                Err(e) => {
                    return Err(Error::Numeric(format!(
                        "task {} ({:?}) failed after {redraws} redraws: {e}",
                        task.index, task.kind
                    )))
                }
            }
        }
    }

    fn alignment_on(&self, rows: &[usize], features: &FeatureSet) -> Result<f64> {
        let labels = self.data.y.select(rows);
        if labels.distinct_classes() < 2 {
            return Err(Error::DegenerateLabels("single-class row sample".into()));
        }
        let points = self.data.gather(rows, features.as_slice());
        let sigma = Bandwidth::new(self.config.sigma0 / features.len() as f64)?;
        if let (Labels::Binary { values }, LabelKernelKind::Auto) = (&labels, self.config.label_kernel) {
            if let Some(a) = streamed_binary_alignment(&points, features.len(), sigma, values)? {
                return Ok(a);
            }
        }
        let k = kernel::gaussian_kernel_packed(&points, rows.len(), features.len(), sigma)?;
        let cx = kernel::center(&k)?;
        match (&labels, self.config.label_kernel) {
            (Labels::Binary { values }, LabelKernelKind::Auto) => binary_alignment(&cx, values),
            _ => {
                let cy = kernel::center(&kernel::label_kernel_with(&labels, self.config.label_kernel)?)?;
                kernel::alignment(&cx, &cy)
            }
        }
    }
}

/// Alignment against the centered outer-product label kernel without
/// materialising it: `<Cx, vv^T> = v^T Cx v` and `|vv^T|_F = |v|^2` for
/// `v = y - mean(y)`.
fn binary_alignment(cx: &kernel::CenteredKernelMatrix, y: &[f64]) -> Result<f64> {
    let m = y.len();
    let mean = y.iter().sum::<f64>() / m as f64;
    let v: Vec<f64> = y.iter().map(|t| t - mean).collect();
    let vv: f64 = v.iter().map(|t| t * t).sum();
    let threshold = kernel::DEGENERATE_NORM_FACTOR * m as f64;
    for norm in [cx.frobenius_norm(), vv] {
        if norm.is_nan() || norm < threshold {
            return Err(Error::DegenerateKernel { norm, threshold });
        }
    }
    let c = cx.as_slice();
    let mut quad = 0.0;
    for i in 0..m {
        let row = &c[i * m..(i + 1) * m];
        let dot: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
        quad += v[i] * dot;
    }
    Ok((quad / (cx.frobenius_norm() * vv)).clamp(-1.0, 1.0))
}

/// Same value as [`binary_alignment`] on the centered Gaussian kernel, without
/// materialising any matrix. With `v = y - mean(y)` summing to zero,
/// `v^T C v = v^T K v`, and `|C|_F^2 = |K|_F^2 - 2m|r|^2 + m^2 g^2` for row
/// means `r` and grand mean `g`. Returns `None` when that difference loses
/// too many digits to be trusted; the caller then centers explicitly.
pub(crate) fn streamed_binary_alignment(points: &[f64], d: usize, sigma: Bandwidth, y: &[f64]) -> Result<Option<f64>> {
    let m = y.len();
    if points.len() != m * d || m < 2 {
        return Err(Error::Input(format!("{} values for {m} points of dimension {d}", points.len())));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite input to gaussian kernel".into()));
    }
    let mean = y.iter().sum::<f64>() / m as f64;
    let v: Vec<f64> = y.iter().map(|t| t - mean).collect();
    let vv: f64 = v.iter().map(|t| t * t).sum();
    let s = sigma.get();
    let mut row_sums = vec![1.0; m];
    let mut buf = vec![0.0; m];
    let (mut off_sq, mut off_quad) = (0.0, 0.0);
    for i in 0..m {
        let a = &points[i * d..(i + 1) * d];
        for j in (i + 1)..m {
            buf[j] = -s * kernel::squared_distance(a, &points[j * d..(j + 1) * d]);
        }
        let (mut sum, mut sq, mut dot) = (0.0, 0.0, 0.0);
        for j in (i + 1)..m {
            let k = buf[j].exp();
            sum += k;
            sq += k * k;
            dot += k * v[j];
            row_sums[j] += k;
        }
        row_sums[i] += sum;
        off_sq += sq;
        off_quad += v[i] * dot;
    }
    let k_sq = m as f64 + 2.0 * off_sq;
    let quad = v.iter().map(|t| t * t).sum::<f64>() + 2.0 * off_quad;
    let inv = 1.0 / m as f64;
    let r_sq: f64 = row_sums.iter().map(|r| (r * inv) * (r * inv)).sum();
    let grand = row_sums.iter().sum::<f64>() * inv * inv;
    let c_sq = k_sq - 2.0 * m as f64 * r_sq + (m as f64 * grand).powi(2);
    if c_sq.is_nan() || c_sq <= 1e-6 * k_sq {
        return Ok(None);
    }
    let norm = c_sq.sqrt();
    let threshold = kernel::DEGENERATE_NORM_FACTOR * m as f64;
    if vv.is_nan() || vv < threshold {
        return Err(Error::DegenerateKernel { norm: vv, threshold });
    }
    Ok(Some((quad / (norm * vv)).clamp(-1.0, 1.0)))
}

/// Evaluates one task in isolation.
pub fn evaluate_task(task: &SubsampleTask, data: &Dataset, config: &RandSelConfig) -> Result<f64> {
    Ok(Evaluator::new(data, config)?.evaluate(task)?.alignment)
}

/// Output of one estimation round.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub table: ContributionTable,
    /// Task pairs evaluated, including top-up pairs.
    pub pairs: usize,
    pub topup_pairs: usize,
    pub redraws: u64,
    pub kernel_entries: u64,
}

/// Evaluates `config.tasks` pairs (plus top-up pairs until every feature is
/// covered) and aggregates contributions.
pub fn estimate_contributions(
    data: &Dataset,
    active: &FeatureSet,
    config: &RandSelConfig,
    plan: &SeedPlan,
) -> Result<Estimate> {
    let evaluator = Evaluator::new(data, config)?;
    let min_tasks = min_tasks_for_coverage(active.len(), config.min_coverage);
    if config.tasks < min_tasks {
        return Err(Error::Coverage {
            feature: active.as_slice()[0],
            plus: 0,
            base: 0,
            min_coverage: config.min_coverage,
            min_tasks,
        });
    }

    let evaluate_range = |range: std::ops::Range<usize>| -> Result<Vec<(SubsampleTask, Evaluation)>> {
        let pairs: Vec<Vec<(SubsampleTask, Evaluation)>> = range
            .into_par_iter()
            .map(|i| {
                [TaskKind::Base, TaskKind::Plus]
                    .into_iter()
                    .map(|kind| {
                        let task = evaluator.task(active, plan, kind, i)?;
                        let eval = evaluator.evaluate(&task)?;
                        Ok((task, eval))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(pairs.into_iter().flatten().collect())
    };

    let mut results = evaluate_range(0..config.tasks)?;
    let mut pairs = config.tasks;
    let batch = config.tasks.div_ceil(10).max(1);
    let table = loop {
        let table = ContributionTable::tabulate(results.iter().map(|(t, e)| (t, e.alignment)), active);
        match table.coverage_gap(config.min_coverage) {
            None => break table,
            Some(gap) if pairs >= 2 * config.tasks => {
                return Err(Error::Coverage {
                    feature: gap.feature,
                    plus: gap.count_plus,
                    base: gap.count_base_excl,
                    min_coverage: config.min_coverage,
                    min_tasks,
                })
            }
            Some(_) => {
                results.extend(evaluate_range(pairs..pairs + batch)?);
                pairs += batch;
            }
        }
    };
    Ok(Estimate {
        table,
        pairs,
        topup_pairs: pairs - config.tasks,
        redraws: results.iter().map(|(_, e)| u64::from(e.redraws)).sum(),
        kernel_entries: results.iter().map(|(_, e)| e.kernel_entries).sum(),
    })
}

/// Every BASE and PLUS subset of `active` exactly once, on the given rows.
/// Used to compute exact (non-random) contribution tables on small problems.
pub fn exhaustive_tasks(active: &FeatureSet, rows: &[usize]) -> Vec<SubsampleTask> {
    fn subsets(items: &[usize], k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for (i, &f) in items.iter().enumerate() {
            prefix.push(f);
            subsets(&items[i + 1..], k, prefix, out);
            prefix.pop();
        }
    }
    let mut tasks = Vec::new();
    for kind in [TaskKind::Base, TaskKind::Plus] {
        let mut all = Vec::new();
        subsets(active.as_slice(), kind.subset_size(active.len()), &mut Vec::new(), &mut all);
        for (index, subset) in all.into_iter().enumerate() {
            tasks.push(SubsampleTask {
                index,
                kind,
                feature_subset: FeatureSet::new(subset),
                row_indices: rows.to_vec(),
                task_seed: 0,
            });
        }
    }
    tasks
}

/// Drops `max(1, floor(z * |active \ fixed|))` of the lowest-contributing
/// non-fixed features, larger index first on ties, never leaving fewer than
/// two features.
pub fn cull(table: &ContributionTable, active: &FeatureSet, z: f64, fixed: &FeatureSet) -> (FeatureSet, FeatureSet) {
    let mut candidates: Vec<(usize, f64)> = active
        .iter()
        .filter(|&f| !fixed.contains(f))
        .map(|f| (f, table.contribution(f).unwrap_or(f64::NEG_INFINITY)))
        .collect();
    let k = floor_fraction(z, candidates.len()).max(1).min(candidates.len()).min(active.len().saturating_sub(2));
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
    let dropped: FeatureSet = candidates.iter().take(k).map(|&(f, _)| f).collect();
    (active.difference(&dropped), dropped)
}

/// Consecutive top-placement counters for feature fixing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FixingState {
    streaks: std::collections::BTreeMap<usize, usize>,
    pub fixed: FeatureSet,
}

impl FixingState {
    pub fn streak(&self, feature: usize) -> usize {
        self.streaks.get(&feature).copied().unwrap_or(0)
    }
}

/// Number of features counted as top contributors among `n_active`.
pub fn top_set_size(a: f64, n_active: usize) -> usize {
    ceil_fraction(a, n_active).clamp(1, n_active)
}

/// Updates streaks from this iteration's ranking and returns the features
/// that became fixed.
pub fn update_fixing(state: &mut FixingState, table: &ContributionTable, a: f64, t: usize) -> FeatureSet {
    let ranked = table.ranked_desc();
    let top: FeatureSet = ranked.iter().take(top_set_size(a, ranked.len())).map(|&(f, _)| f).collect();
    let mut newly = Vec::new();
    for e in &table.entries {
        let streak = state.streaks.entry(e.feature).or_insert(0);
        if top.contains(e.feature) {
            *streak += 1;
            if *streak >= t && !state.fixed.contains(e.feature) {
                newly.push(e.feature);
            }
        } else {
            *streak = 0;
        }
    }
    let newly = FeatureSet::new(newly);
    state.fixed = state.fixed.union(&newly);
    newly
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub active_features: FeatureSet,
    pub contributions: ContributionTable,
    pub dropped: FeatureSet,
    pub newly_fixed: FeatureSet,
    pub fixed_so_far: FeatureSet,
    pub task_pairs: usize,
    pub topup_pairs: usize,
    pub label_redraws: u64,
    /// Kernel entries computed (`s^2` per evaluated task).
    pub kernel_evaluations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub schema_version: u32,
    pub prng: String,
    pub config: RandSelConfig,
    pub n_features: usize,
    pub n_samples: usize,
    pub feature_names: Option<Vec<String>>,
    pub iterations: Vec<IterationRecord>,
    pub final_active: FeatureSet,
    pub fixed: FeatureSet,
}

impl SelectionTrace {
    /// Nested feature sets of increasing granularity: the active set of each
    /// iteration followed by the final survivors.
    pub fn levels(&self) -> Vec<FeatureSet> {
        let mut levels: Vec<FeatureSet> = self.iterations.iter().map(|it| it.active_features.clone()).collect();
        if levels.last() != Some(&self.final_active) {
            levels.push(self.final_active.clone());
        }
        levels
    }

    pub fn check_version(&self) -> Result<()> {
        if self.schema_version != TRACE_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "trace schema version {} is not supported (expected {TRACE_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        Ok(())
    }
}

pub fn run(data: &Dataset, config: &RandSelConfig) -> Result<SelectionTrace> {
    run_timed(data, config).map(|(trace, _)| trace)
}

/// Like [`run`], also returning the wall-clock seconds of each iteration.
pub fn run_timed(data: &Dataset, config: &RandSelConfig) -> Result<(SelectionTrace, Vec<f64>)> {
    config.validate()?;
    let n = data.n_features();
    if n < 3 {
        return Err(Error::Input(format!("selection needs at least 3 features, got {n}")));
    }
    if config.row_mode == RowMode::Bootstrap && data.n_samples() < config.subsample {
        return Err(Error::Parameter(format!(
            "subsample {} exceeds the {} available samples",
            config.subsample,
            data.n_samples()
        )));
    }
    if data.y.distinct_classes() < 2 {
        return Err(Error::DegenerateLabels("dataset labels hold a single class".into()));
    }

    let root = SeedPlan::new(config.master_seed);
    let mut active = FeatureSet::full(n);
    let mut fixing = FixingState::default();
    let mut iterations = Vec::new();
    let mut timings = Vec::new();
    while active.len() > 2 {
        if config.fixing && active.iter().all(|f| fixing.fixed.contains(f)) {
            break;
        }
        let started = Instant::now();
        let iteration = iterations.len();
        let estimate = estimate_contributions(data, &active, config, &root.child(iteration as u64))?;
        let newly_fixed = if config.fixing {
            update_fixing(&mut fixing, &estimate.table, config.top_fraction, config.fix_after)
        } else {
            FeatureSet::default()
        };
        let (kept, dropped) = cull(&estimate.table, &active, config.cull, &fixing.fixed);
        iterations.push(IterationRecord {
            iteration,
            active_features: active.clone(),
            contributions: estimate.table,
            dropped: dropped.clone(),
            newly_fixed,
            fixed_so_far: fixing.fixed.clone(),
            task_pairs: estimate.pairs,
            topup_pairs: estimate.topup_pairs,
            label_redraws: estimate.redraws,
            kernel_evaluations: estimate.kernel_entries,
        });
        timings.push(started.elapsed().as_secs_f64());
        if dropped.is_empty() {
            break;
        }
        active = kept;
    }

    Ok((
        SelectionTrace {
            schema_version: TRACE_SCHEMA_VERSION,
            prng: PRNG_ID.to_string(),
            config: config.clone(),
            n_features: n,
            n_samples: data.n_samples(),
            feature_names: data.feature_names.clone(),
            iterations,
            final_active: active,
            fixed: fixing.fixed,
        },
        timings,
    ))
}
