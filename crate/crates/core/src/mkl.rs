//! Granular multiple-kernel boosting.
//!
//! Every pair of (feature set from the selection trace, bandwidth) defines a
//! Gaussian kernel; kernel ridge regression on that kernel gives one weak
//! learner `h(x) = sum_i alpha_i k(x_i, x)`. The learners are combined by the
//! LPBoost linear program
//!
//! ```text
//! minimize beta
//!   s.t.   sum_i u_i y_i H_ij <= beta   for every learner j
//!          sum_i u_i = 1,  0 <= u_i <= D
//! ```
//!
//! whose optimal multipliers on the learner rows are the (convex) learner
//! weights.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Labels};
use crate::error::{Error, Result};
use crate::kernel::{squared_distance, Bandwidth};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::sampling::{derive_seed, FeatureSet};
use crate::selector::SelectionTrace;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Training residual bound for every weak learner.
pub const KRR_RESIDUAL_TOLERANCE: f64 = 1e-8;

pub const DEFAULT_LAMBDAS: [f64; 3] = [1e-3, 1e-2, 1e-1];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// Index into the granularity levels.
    pub level: usize,
    pub sigma: Bandwidth,
}

/// Cartesian product of levels and bandwidths, ordered by (level, sigma).
pub fn build_kernel_grid(n_levels: usize, sigmas: &[Bandwidth]) -> Vec<KernelSpec> {
    (0..n_levels).flat_map(|level| sigmas.iter().map(move |&sigma| KernelSpec { level, sigma })).collect()
}

pub fn build_kernel_grid_for_trace(trace: &SelectionTrace, sigmas: &[Bandwidth]) -> Vec<KernelSpec> {
    build_kernel_grid(trace.levels().len(), sigmas)
}

/// Bandwidth grid log-spaced over `[s/16, 16 s]` where `s` is the inverse
/// median squared distance between rows of `x` (the first 500 rows are used).
pub fn default_sigma_grid(x: ArrayView2<'_, f64>, count: usize) -> Result<Vec<Bandwidth>> {
    if count == 0 {
        return Err(Error::Parameter("sigma grid needs at least one value".into()));
    }
    let m = x.nrows().min(500);
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            let (a, b) = (x.row(i), x.row(j));
            dists.push(a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>());
        }
    }
    dists.retain(|&d| d > 0.0);
    if dists.is_empty() {
        return Err(Error::Input("all rows are identical; cannot choose a bandwidth".into()));
    }
    dists.sort_by(f64::total_cmp);
    let median = dists[dists.len() / 2];
    let centre = 1.0 / median;
    if count == 1 {
        return Ok(vec![Bandwidth::new(centre)?]);
    }
    let (lo, hi) = ((centre / 16.0).ln(), (centre * 16.0).ln());
    (0..count).map(|k| Bandwidth::new((lo + (hi - lo) * k as f64 / (count - 1) as f64).exp())).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakLearner {
    pub spec: KernelSpec,
    pub lambda: f64,
    /// Rows of the model's support matrix the learner was fitted on.
    pub train_rows: Vec<usize>,
    pub dual_coefficients: Vec<f64>,
    /// `|(K + lambda I) alpha - y|_inf` at fit time.
    pub residual: f64,
}

impl WeakLearner {
    /// `sum_i alpha_i exp(-sigma |x_i - x|^2)` over the learner's feature set.
    pub fn predict(&self, support: ArrayView2<'_, f64>, features: &FeatureSet, x: &[f64]) -> f64 {
        let query: Vec<f64> = features.iter().map(|f| x[f]).collect();
        let sigma = self.spec.sigma.get();
        let mut point = vec![0.0; query.len()];
        self.train_rows
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(&r, a)| {
                let row = support.row(r);
                for (p, f) in point.iter_mut().zip(features.iter()) {
                    *p = row[f];
                }
                a * (-sigma * squared_distance(&point, &query)).exp()
            })
            .sum()
    }
}

/// Pairwise squared distances between `rows` of `x` restricted to `features`.
fn distance_matrix(x: ArrayView2<'_, f64>, rows: &[usize], features: &FeatureSet) -> Vec<f64> {
    let d = features.len();
    let points: Vec<f64> = rows.iter().flat_map(|&r| features.iter().map(move |f| x[[r, f]])).collect();
    let m = rows.len();
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in (i + 1)..m {
            let v = squared_distance(&points[i * d..(i + 1) * d], &points[j * d..(j + 1) * d]);
            out[i * m + j] = v;
            out[j * m + i] = v;
        }
    }
    out
}

/// Solves `(K + lambda I) alpha = y` by Cholesky with iterative refinement.
pub fn krr_solve(k: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<(Vec<f64>, f64)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("ridge lambda must be positive, got {lambda}")));
    }
    let n = k.nrows();
    let mut a = k.clone();
    for i in 0..n {
        a[(i, i)] += lambda;
    }
    let chol =
        a.clone().cholesky().ok_or_else(|| Error::Numeric("kernel ridge system is not positive definite".into()))?;
    let target = DVector::from_column_slice(y);
    let mut alpha = chol.solve(&target);
    let mut residual = f64::INFINITY;
    for _ in 0..4 {
        let r = &target - &a * &alpha;
        residual = r.amax();
        if residual < KRR_RESIDUAL_TOLERANCE * 1e-3 {
            break;
        }
        alpha += chol.solve(&r);
    }
    let r = &target - &a * &alpha;
    residual = residual.min(r.amax());
    if !alpha.iter().all(|v| v.is_finite()) || residual.is_nan() || residual >= KRR_RESIDUAL_TOLERANCE {
        return Err(Error::Numeric(format!(
            "kernel ridge solve residual {residual:e} exceeds {KRR_RESIDUAL_TOLERANCE:e}"
        )));
    }
    Ok((alpha.iter().copied().collect(), residual))
}

/// Fits one kernel ridge regression learner on `rows` of `x` against `targets`
/// (indexed like the rows of `x`).
pub fn fit_weak(
    x: ArrayView2<'_, f64>,
    targets: &[f64],
    features: &FeatureSet,
    spec: KernelSpec,
    rows: &[usize],
    lambda: f64,
) -> Result<WeakLearner> {
    if rows.len() < 2 {
        return Err(Error::Input(format!("weak learner needs >= 2 rows, got {}", rows.len())));
    }
    let dist = distance_matrix(x, rows, features);
    let sigma = spec.sigma.get();
    let n = rows.len();
    let k = DMatrix::from_fn(n, n, |i, j| (-sigma * dist[i * n + j]).exp());
    let y: Vec<f64> = rows.iter().map(|&r| targets[r]).collect();
    let (alpha, residual) = krr_solve(&k, &y, lambda)?;
    Ok(WeakLearner { spec, lambda, train_rows: rows.to_vec(), dual_coefficients: alpha, residual })
}

/// Result of the LPBoost linear program.
#[derive(Clone, Debug, PartialEq)]
pub struct Combination {
    /// Learner weights: nonnegative, summing to one.
    pub weights: Vec<f64>,
    pub beta: f64,
    /// Optimal sample distribution `u`.
    pub sample_weights: Vec<f64>,
}

/// The LPBoost program over `(u_1..u_m, beta)` for outputs `h` (`m x n_k`).
pub fn lpboost_program(h: ArrayView2<'_, f64>, y: &[f64], d: f64) -> LinearProgram {
    let (m, n_k) = h.dim();
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut lp = LinearProgram::new(objective);
    for i in 0..m {
        lp.set_bounds(i, 0.0, d);
    }
    lp.set_bounds(m, f64::NEG_INFINITY, f64::INFINITY);
    for j in 0..n_k {
        let mut row: Vec<f64> = (0..m).map(|i| y[i] * h[[i, j]]).collect();
        row.push(-1.0);
        lp.add_le(row, 0.0);
    }
    let mut eq = vec![1.0; m];
    eq.push(0.0);
    lp.add_eq(eq, 1.0);
    lp
}

pub fn lpboost_combine(h: ArrayView2<'_, f64>, y: &[f64], d: f64) -> Result<Combination> {
    let (m, n_k) = h.dim();
    if y.len() != m {
        return Err(Error::Input(format!("{} labels for {m} rows of H", y.len())));
    }
    if n_k == 0 {
        return Err(Error::Input("no weak learners to combine".into()));
    }
    if !d.is_finite() || d <= 0.0 {
        return Err(Error::Parameter(format!("D must be positive, got {d}")));
    }
    if (m as f64) * d < 1.0 {
        return Err(Error::Infeasible(format!("m * D = {} < 1: no distribution satisfies u_i <= D", m as f64 * d)));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("weak-learner outputs contain non-finite values".into()));
    }
    let program = lpboost_program(h, y, d);
    let solution = lp::solve(&program)?;
    match solution.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible("LPBoost program".into())),
        LpStatus::Unbounded => return Err(Error::Solver("LPBoost program is unbounded".into())),
    }
    let mut weights: Vec<f64> = solution.duals[..n_k].iter().map(|y| (-y).max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Solver("margin constraint multipliers are all zero".into()));
    }
    for w in &mut weights {
        *w /= total;
        if *w < 1e-12 {
            *w = 0.0;
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(Combination { weights, beta: solution.values[m], sample_weights: solution.values[..m].to_vec() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub learners: Vec<WeakLearner>,
    pub weights: Vec<f64>,
    pub beta: f64,
    pub d: f64,
}

impl EnsembleModel {
    pub fn score(&self, support: ArrayView2<'_, f64>, levels: &[FeatureSet], x: &[f64]) -> f64 {
        self.learners
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(l, w)| w * l.predict(support, &levels[l.spec.level], x))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelHeads {
    Binary { model: EnsembleModel },
    OneVsRest { models: Vec<EnsembleModel> },
}

/// A trained predictor with everything needed to score new points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MklModel {
    pub schema_version: u32,
    pub n_features: usize,
    pub levels: Vec<FeatureSet>,
    /// Training rows referenced by the learners.
    pub support: Array2<f64>,
    pub class_names: Vec<String>,
    pub heads: ModelHeads,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub score: f64,
    /// Class id; for binary models 0 is +1 and 1 is -1.
    pub class: usize,
}

impl Prediction {
    pub fn binary_label(&self) -> f64 {
        if self.class == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl MklModel {
    pub fn check_version(&self) -> Result<()> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "model schema version {} is not supported (expected {MODEL_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        Ok(())
    }

    pub fn n_learners(&self) -> usize {
        match &self.heads {
            ModelHeads::Binary { model } => model.learners.len(),
            ModelHeads::OneVsRest { models } => models.iter().map(|m| m.learners.len()).sum(),
        }
    }

    /// Binary: the sign of the score, with a zero score mapped to +1.
    /// Multiclass: the class with the largest one-vs-rest score.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.n_features {
            return Err(Error::Input(format!("point has {} features, model expects {}", x.len(), self.n_features)));
        }
        let support = self.support.view();
        Ok(match &self.heads {
            ModelHeads::Binary { model } => {
                let score = model.score(support, &self.levels, x);
                Prediction { score, class: usize::from(score < 0.0) }
            }
            ModelHeads::OneVsRest { models } => {
                let (class, score) = models
                    .iter()
                    .map(|m| m.score(support, &self.levels, x))
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (c, s)| if s > best.1 { (c, s) } else { best });
                Prediction { score, class }
            }
        })
    }

    pub fn predict_all(&self, x: ArrayView2<'_, f64>) -> Result<Vec<Prediction>> {
        x.rows().into_iter().collect::<Vec<_>>().par_iter().map(|row| self.predict(&row.to_vec())).collect()
    }
}

/// Per-learner class-balanced training rows: every positive and
/// `ceil(ratio * positives)` negatives drawn without replacement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeSubsample {
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub sigmas: Vec<Bandwidth>,
    pub lambdas: Vec<f64>,
    pub d: f64,
    pub negative_subsample: Option<NegativeSubsample>,
}

fn subsample_negatives(targets: &[f64], rows: &[usize], cfg: NegativeSubsample, stream: u64) -> Vec<usize> {
    let positives: Vec<usize> = (0..rows.len()).filter(|&k| targets[rows[k]] > 0.0).collect();
    let mut negatives: Vec<usize> = (0..rows.len()).filter(|&k| targets[rows[k]] <= 0.0).collect();
    let want = ((cfg.ratio * positives.len() as f64).ceil() as usize).min(negatives.len());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, stream));
    let (chosen, _) = negatives.partial_shuffle(&mut rng, want);
    let mut picked: Vec<usize> = positives.into_iter().chain(chosen.iter().copied()).collect();
    picked.sort_unstable();
    picked
}

/// Fits every (level, sigma, lambda) learner on `rows` of `x` and returns the
/// learners with their outputs on those rows (`rows.len() x n_learners`).
/// Learner row indices refer to positions within `rows`.
pub fn fit_learners(
    x: ArrayView2<'_, f64>,
    targets: &[f64],
    rows: &[usize],
    levels: &[FeatureSet],
    params: &EnsembleParams,
) -> Result<(Vec<WeakLearner>, Array2<f64>)> {
    if params.sigmas.is_empty() || params.lambdas.is_empty() || levels.is_empty() {
        return Err(Error::Parameter("empty level, sigma or lambda grid".into()));
    }
    let local_targets: Vec<f64> = rows.iter().map(|&r| targets[r]).collect();
    let m = rows.len();
    let specs = build_kernel_grid(levels.len(), &params.sigmas);
    let jobs: Vec<(usize, KernelSpec, f64)> = specs
        .iter()
        .flat_map(|&spec| params.lambdas.iter().map(move |&l| (spec, l)))
        .enumerate()
        .map(|(k, (spec, l))| (k, spec, l))
        .collect();
    let distances: Vec<Vec<f64>> = levels.par_iter().map(|level| distance_matrix(x, rows, level)).collect();

    let fitted: Vec<(WeakLearner, Vec<f64>)> = jobs
        .par_iter()
        .map(|&(k, spec, lambda)| {
            let dist = &distances[spec.level];
            let sigma = spec.sigma.get();
            let train: Vec<usize> = match params.negative_subsample {
                Some(cfg) => subsample_negatives(&local_targets, &(0..m).collect::<Vec<_>>(), cfg, k as u64),
                None => (0..m).collect(),
            };
            let n = train.len();
            let kmat = DMatrix::from_fn(n, n, |i, j| (-sigma * dist[train[i] * m + train[j]]).exp());
            let y: Vec<f64> = train.iter().map(|&r| local_targets[r]).collect();
            let (alpha, residual) = krr_solve(&kmat, &y, lambda)?;
            let outputs: Vec<f64> = (0..m)
                .map(|i| train.iter().zip(&alpha).map(|(&r, a)| a * (-sigma * dist[i * m + r]).exp()).sum())
                .collect();
            Ok((WeakLearner { spec, lambda, train_rows: train, dual_coefficients: alpha, residual }, outputs))
        })
        .collect::<Result<_>>()?;

    let mut h = Array2::zeros((m, fitted.len()));
    let mut learners = Vec::with_capacity(fitted.len());
    for (j, (learner, outputs)) in fitted.into_iter().enumerate() {
        for (i, v) in outputs.into_iter().enumerate() {
            h[[i, j]] = v;
        }
        learners.push(learner);
    }
    Ok((learners, h))
}

fn targets_per_head(y: &Labels) -> Vec<Vec<f64>> {
    match y {
        Labels::Binary { values } => vec![values.clone()],
        Labels::Multiclass { n_classes, .. } => (0..*n_classes).map(|c| y.one_vs_rest(c)).collect(),
    }
}

/// Fits learners on every row of `data` and combines them with LPBoost.
pub fn fit_ensemble(data: &Dataset, levels: &[FeatureSet], params: &EnsembleParams) -> Result<MklModel> {
    let rows: Vec<usize> = (0..data.n_samples()).collect();
    let x = data.x.view();
    let mut heads = Vec::new();
    for targets in targets_per_head(&data.y) {
        let (learners, h) = fit_learners(x, &targets, &rows, levels, params)?;
        let combo = lpboost_combine(h.view(), &targets, params.d)?;
        heads.push(EnsembleModel { learners, weights: combo.weights, beta: combo.beta, d: params.d });
    }
    let heads = match data.y {
        Labels::Binary { .. } => ModelHeads::Binary { model: heads.pop().unwrap() },
        Labels::Multiclass { .. } => ModelHeads::OneVsRest { models: heads },
    };
    Ok(MklModel {
        schema_version: MODEL_SCHEMA_VERSION,
        n_features: data.n_features(),
        levels: levels.to_vec(),
        support: data.x.clone(),
        class_names: data.class_names.clone(),
        heads,
    })
}

/// `D = 1 / (nu m)` for a spread of `nu`; `nu = 1` forces uniform `u`.
pub fn default_d_grid(m: usize) -> Vec<f64> {
    [0.05, 0.1, 0.2, 0.5, 1.0].iter().map(|nu| 1.0 / (nu * m as f64)).collect()
}

/// Stratified split of `data` rows into (train, validation).
pub fn split_rows(y: &Labels, validation_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut valid) = (Vec::new(), Vec::new());
    for class in 0..y.n_classes() {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y.class_of(i) == class).collect();
        members.shuffle(&mut rng);
        let n_valid = (validation_fraction * members.len() as f64).round() as usize;
        valid.extend_from_slice(&members[..n_valid]);
        train.extend_from_slice(&members[n_valid..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    (train, valid)
}

/// Chooses `D` by validation accuracy: learners are fitted once on the
/// training part and only the linear program is re-solved per candidate.
/// Returns the chosen `D` and the accuracy of every feasible candidate.
pub fn tune_d(
    data: &Dataset,
    levels: &[FeatureSet],
    params: &EnsembleParams,
    candidates: &[f64],
    validation_fraction: f64,
    seed: u64,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let (train, valid) = split_rows(&data.y, validation_fraction, seed);
    if train.len() < 2 || valid.is_empty() {
        return Err(Error::Input("validation split left too few rows".into()));
    }
    let train_data = data.select_rows(&train);
    let valid_data = data.select_rows(&valid);
    let heads = targets_per_head(&train_data.y);
    let fitted: Vec<(Vec<WeakLearner>, Array2<f64>)> = heads
        .iter()
        .map(|t| fit_learners(train_data.x.view(), t, &(0..train.len()).collect::<Vec<_>>(), levels, params))
        .collect::<Result<_>>()?;

    let mut scores = Vec::new();
    for &d in candidates {
        if (train.len() as f64) * d < 1.0 {
            continue;
        }
        let mut models = Vec::new();
        for ((learners, h), targets) in fitted.iter().zip(&heads) {
            let combo = lpboost_combine(h.view(), targets, d)?;
            models.push(EnsembleModel { learners: learners.clone(), weights: combo.weights, beta: combo.beta, d });
        }
        let heads = match data.y {
            Labels::Binary { .. } => ModelHeads::Binary { model: models.pop().unwrap() },
            Labels::Multiclass { .. } => ModelHeads::OneVsRest { models },
        };
        let model = MklModel {
            schema_version: MODEL_SCHEMA_VERSION,
            n_features: data.n_features(),
            levels: levels.to_vec(),
            support: train_data.x.clone(),
            class_names: data.class_names.clone(),
            heads,
        };
        scores.push((d, accuracy(&model, &valid_data)?));
    }
    let best = scores
        .iter()
        .fold(None::<(f64, f64)>, |best, &(d, acc)| match best {
            Some((_, b)) if b >= acc => best,
            _ => Some((d, acc)),
        })
        .ok_or_else(|| Error::Parameter("no feasible D candidate (need m * D >= 1)".into()))?;
    Ok((best.0, scores))
}

/// Options for [`train`]; unset fields fall back to the defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    /// Explicit bandwidths; when `None` a grid of `sigma_count` values around
    /// the inverse median squared distance is used.
    pub sigmas: Option<Vec<Bandwidth>>,
    pub sigma_count: usize,
    pub lambdas: Vec<f64>,
    /// Box parameter; tuned on a validation split when `None`.
    pub d: Option<f64>,
    pub validation_fraction: f64,
    pub negative_ratio: Option<f64>,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            sigmas: None,
            sigma_count: 15,
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            d: None,
            validation_fraction: 0.25,
            negative_ratio: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trained {
    pub model: MklModel,
    pub params: EnsembleParams,
    /// Validation accuracy per feasible `D` candidate, when `D` was tuned.
    pub d_scores: Vec<(f64, f64)>,
}

/// Resolves the options, tunes `D` if needed and fits the final model on all
/// of `data`.
pub fn train(data: &Dataset, levels: &[FeatureSet], options: &TrainOptions) -> Result<Trained> {
    if let Some(bad) = levels.iter().flat_map(|l| l.iter()).find(|&f| f >= data.n_features()) {
        return Err(Error::Input(format!(
            "feature {bad} in the levels is outside the data's {} features",
            data.n_features()
        )));
    }
    if !(options.validation_fraction > 0.0 && options.validation_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "validation fraction must be in (0,1), got {}",
            options.validation_fraction
        )));
    }
    if let Some(r) = options.negative_ratio {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Parameter(format!("negative ratio must be positive, got {r}")));
        }
    }
    let sigmas = match &options.sigmas {
        Some(s) if !s.is_empty() => s.clone(),
        _ => default_sigma_grid(data.x.view(), options.sigma_count)?,
    };
    let mut params = EnsembleParams {
        sigmas,
        lambdas: options.lambdas.clone(),
        d: options.d.unwrap_or(1.0),
        negative_subsample: options.negative_ratio.map(|ratio| NegativeSubsample { ratio, seed: options.seed }),
    };
    let mut d_scores = Vec::new();
    if options.d.is_none() {
        let (train_rows, _) = split_rows(&data.y, options.validation_fraction, options.seed);
        let grid = default_d_grid(train_rows.len());
        let (d, scores) = tune_d(data, levels, &params, &grid, options.validation_fraction, options.seed)?;
        params.d = d;
        d_scores = scores;
    }
    let model = fit_ensemble(data, levels, &params)?;
    Ok(Trained { model, params, d_scores })
}

pub fn accuracy(model: &MklModel, data: &Dataset) -> Result<f64> {
    let predictions = model.predict_all(data.x.view())?;
    let correct = predictions.iter().enumerate().filter(|(i, p)| p.class == data.y.class_of(*i)).count();
    Ok(correct as f64 / data.n_samples() as f64)
}
