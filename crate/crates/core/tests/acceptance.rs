//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Run with `cargo test -p randsel --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use randsel::kernel::{self, Bandwidth};
use randsel::lp::{self, LinearProgram, LpStatus};
use randsel::mkl::{self, TrainOptions};
use randsel::report;
use randsel::sampling::{FeatureSet, SeedPlan};
use randsel::selector::{self, ContributionTable, RandSelConfig, RowMode};
use randsel::{gen_xor, Dataset, Labels, NoiseKind};

type Outcome = (bool, String);
type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("xor separation, n=50 m=4000 s=500 r=2000", xor_separation),
        ("xor survival under culling, n=20 m=2000 s=200 r=500", xor_survival),
        ("contribution estimator vs subset enumeration", contribution_oracle_equivalence),
        ("linear-kernel mean embedding identity", mean_embedding_identity),
        ("irrelevant feature lowers the label statistic", irrelevant_feature_monotonicity),
        ("lp solver and boosting programs", lp_solver),
        ("kernel ridge residuals and gradients", krr),
        ("xor select, train, predict", end_to_end),
        ("trace bytes across 1 and 4 threads", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| (false, format!("panicked: {:?}", e.downcast_ref::<String>())));
        failed += usize::from(!pass);
        println!(
            "{} {} {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn relevant_mean(table: &ContributionTable) -> Option<f64> {
    Some((table.contribution(0)? + table.contribution(1)?) / 2.0)
}

fn xor_separation() -> Outcome {
    let config = RandSelConfig { tasks: 2000, subsample: 500, ..RandSelConfig::default() };
    let mut separated = 0;
    for seed in 0..20 {
        let data = gen_xor(50, 4000, NoiseKind::Uniform, seed).unwrap();
        let est =
            selector::estimate_contributions(&data, &FeatureSet::full(50), &config, &SeedPlan::new(seed)).unwrap();
        let c = |f| est.table.contribution(f).unwrap_or(f64::NAN);
        let relevant = c(0).min(c(1));
        let noise = (2..50).map(c).fold(f64::NEG_INFINITY, f64::max);
        separated += usize::from(relevant > noise);
    }
    (separated >= 18, format!("{separated}/20 seeds separated (need 18)"))
}

fn xor_survival() -> Outcome {
    let mut survived = 0;
    let mut rising = 0;
    for seed in 0..20 {
        let data = gen_xor(20, 2000, NoiseKind::Uniform, seed).unwrap();
        let config =
            RandSelConfig { tasks: 500, subsample: 200, cull: 0.125, master_seed: seed, ..RandSelConfig::default() };
        let trace = selector::run(&data, &config).unwrap();
        survived += usize::from(trace.final_active == FeatureSet::new(vec![0, 1]));
        let tail: Vec<Option<f64>> =
            trace.iterations.iter().rev().take(3).map(|it| relevant_mean(&it.contributions)).collect();
        if let [Some(c), Some(b), Some(a)] = tail[..] {
            rising += usize::from(a < b && b < c);
        }
    }
    (
        survived >= 19 && rising >= 15,
        format!("{survived}/20 kept both relevant features (need 19), {rising}/20 rising over the last 3 iterations (need 15)"),
    )
}

fn contribution_oracle_equivalence() -> Outcome {
    let data = common::twelve_sample_dataset();
    let oracle = common::contribution_oracle(&data, 0.5);
    let active = FeatureSet::full(4);

    let config = RandSelConfig { tasks: 100_000, subsample: 12, row_mode: RowMode::Full, ..RandSelConfig::default() };
    let est = selector::estimate_contributions(&data, &active, &config, &SeedPlan::new(1)).unwrap();
    let mc_err = (0..4).map(|j| (est.table.contribution(j).unwrap() - oracle[j]).abs()).fold(0.0, f64::max);

    let rows: Vec<usize> = (0..12).collect();
    let tasks = selector::exhaustive_tasks(&active, &rows);
    let alignments: Vec<f64> = tasks.iter().map(|t| selector::evaluate_task(t, &data, &config).unwrap()).collect();
    let table = ContributionTable::tabulate(tasks.iter().zip(alignments.iter().copied()), &active);
    let exact_err = (0..4).map(|j| (table.contribution(j).unwrap() - oracle[j]).abs()).fold(0.0, f64::max);

    (
        mc_err <= 0.01 && exact_err <= 1e-12,
        format!("Monte-Carlo max error {mc_err:.2e} (tol 1e-2), exhaustive max error {exact_err:.2e} (tol 1e-12)"),
    )
}

fn mean_embedding_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(2..60);
        let d = rng.gen_range(1..8);
        let x = Array2::from_shape_fn((m, d), |_| rng.gen_range(-3.0..3.0));
        let y: Vec<f64> = (0..m).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let k = kernel::linear_kernel(x.view()).unwrap();
        let lhs = kernel::label_statistic(&k, &y).unwrap().max(0.0).sqrt();
        let rhs =
            (0..d).map(|j| ((0..m).map(|i| y[i] * x[[i, j]]).sum::<f64>() / m as f64).powi(2)).sum::<f64>().sqrt();
        worst = worst.max((lhs - rhs).abs());
    }
    (worst <= 1e-10, format!("max deviation {worst:.2e} over 100 instances (tol 1e-10)"))
}

fn irrelevant_feature_monotonicity() -> Outcome {
    let m = 300;
    let base = gen_xor(2, m, NoiseKind::Uniform, 7).unwrap();
    let Labels::Binary { values: y } = &base.y else { unreachable!() };
    let gamma = Bandwidth::new(0.5).unwrap();
    let on_s = kernel::label_statistic(&kernel::gaussian_kernel(base.x.view(), gamma).unwrap(), y).unwrap();
    let diffs: Vec<f64> = (0..100)
        .map(|draw| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + draw);
            let mut x = Array2::zeros((m, 3));
            x.slice_mut(s![.., 0..2]).assign(&base.x);
            x.column_mut(2).mapv_inplace(|_: f64| rng.gen_range(-1.0..1.0));
            kernel::label_statistic(&kernel::gaussian_kernel(x.view(), gamma).unwrap(), y).unwrap() - on_s
        })
        .collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let se = sd / n.sqrt();
    (mean <= 3.0 * se, format!("mean difference {mean:.3e}, standard error {se:.3e}"))
}

fn random_box_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(1..=6);
    let mut program = LinearProgram::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    for j in 0..n {
        let lo = rng.gen_range(-1.5..0.5);
        program.set_bounds(j, lo, lo + rng.gen_range(0.1..2.0));
    }
    for _ in 0..rng.gen_range(0..=4) {
        program.add_le((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), rng.gen_range(-0.5..1.0));
    }
    if n > 1 && rng.gen_bool(0.4) {
        program.add_eq((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), rng.gen_range(-0.3..0.3));
    }
    program
}

fn lp_solver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut agree, mut infeasible) = (0, 0);
    for _ in 0..200 {
        let program = random_box_lp(&mut rng);
        let sol = lp::solve(&program).unwrap();
        let ok = match common::vertex_enumeration(&program) {
            Some((best, _)) => {
                sol.status == LpStatus::Optimal
                    && (sol.objective_value - best).abs() <= 1e-9
                    && program.max_violation(&sol.values) <= 1e-8
            }
            None => {
                infeasible += 1;
                sol.status == LpStatus::Infeasible
            }
        };
        agree += usize::from(ok);
    }

    let mut boost_ok = 0;
    for _ in 0..50 {
        let m = rng.gen_range(2..12);
        let k = rng.gen_range(1..8);
        let h = Array2::from_shape_fn((m, k), |_| rng.gen_range(-1.0..1.0));
        let y: Vec<f64> = (0..m).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let d = 1.0 / (rng.gen_range(0.05..1.0) * m as f64);
        let combo = mkl::lpboost_combine(h.view(), &y, d).unwrap();
        let mut point = combo.sample_weights.clone();
        point.push(combo.beta);
        let program = mkl::lpboost_program(h.view(), &y, d);
        boost_ok += usize::from(
            program.max_violation(&point) <= 1e-8 && (combo.sample_weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9,
        );
    }

    let mut rejected = 0;
    for m in 2..12 {
        let h = Array2::from_elem((m, 2), 0.3);
        let y: Vec<f64> = (0..m).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let d = 0.9 / m as f64;
        rejected += usize::from(matches!(mkl::lpboost_combine(h.view(), &y, d), Err(randsel::Error::Infeasible(_))));
    }
    (
        agree == 200 && boost_ok == 50 && rejected == 10,
        format!("{agree}/200 programs match enumeration ({infeasible} infeasible), {boost_ok}/50 boosting programs feasible, {rejected}/10 small boxes rejected"),
    )
}

fn krr() -> Outcome {
    let mut worst_residual: f64 = 0.0;
    let data = gen_xor(6, 200, NoiseKind::Gaussian, 3).unwrap();
    let levels = vec![FeatureSet::full(6), FeatureSet::new(vec![0, 1, 2]), FeatureSet::new(vec![0, 1])];
    let params = mkl::EnsembleParams {
        sigmas: mkl::default_sigma_grid(data.x.view(), 5).unwrap(),
        lambdas: mkl::DEFAULT_LAMBDAS.to_vec(),
        d: 1.0 / (0.2 * 200.0),
        negative_subsample: None,
    };
    let model = mkl::fit_ensemble(&data, &levels, &params).unwrap();
    let mkl::ModelHeads::Binary { model: head } = &model.heads else { unreachable!() };
    for learner in &head.learners {
        worst_residual = worst_residual.max(learner.residual);
    }

    let mut worst_gradient: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let pts: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let k = DMatrix::from_fn(5, 5, |i, j| common::gaussian_entry(&pts[i], &pts[j], 0.8));
        let y: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lambda = 10f64.powi(rng.gen_range(-3..0));
        let (alpha, residual) = mkl::krr_solve(&k, &y, lambda).unwrap();
        worst_residual = worst_residual.max(residual);
        // Objective |K a - y|^2 + lambda a^T K a; gradient 2 K (K a + lambda a - y).
        let objective = |a: &[f64]| {
            let ka: Vec<f64> = (0..5).map(|i| (0..5).map(|j| k[(i, j)] * a[j]).sum()).collect();
            ka.iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum::<f64>()
                + lambda * a.iter().zip(&ka).map(|(u, v)| u * v).sum::<f64>()
        };
        let probe: Vec<f64> = alpha.iter().map(|a| a + rng.gen_range(-1.0..1.0)).collect();
        let r: Vec<f64> =
            (0..5).map(|i| (0..5).map(|j| k[(i, j)] * probe[j]).sum::<f64>() + lambda * probe[i] - y[i]).collect();
        for i in 0..5 {
            let analytic = 2.0 * (0..5).map(|j| k[(i, j)] * r[j]).sum::<f64>();
            let h = 1e-5;
            let (mut up, mut down) = (probe.clone(), probe.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (objective(&up) - objective(&down)) / (2.0 * h);
            worst_gradient = worst_gradient.max((fd - analytic).abs() / analytic.abs().max(1.0));
        }
    }
    (
        worst_residual < 1e-8 && worst_gradient <= 1e-6,
        format!("max residual {worst_residual:.2e} (tol 1e-8), max gradient deviation {worst_gradient:.2e} (tol 1e-6)"),
    )
}

fn end_to_end() -> Outcome {
    let mut accuracies = Vec::new();
    for seed in 0..10 {
        let train = gen_xor(10, 400, NoiseKind::Uniform, 2 * seed).unwrap();
        let test = gen_xor(10, 1000, NoiseKind::Uniform, 2 * seed + 1).unwrap();
        let config = RandSelConfig { tasks: 200, subsample: 200, master_seed: seed, ..RandSelConfig::default() };
        let trace = selector::run(&train, &config).unwrap();
        let options = TrainOptions { sigma_count: 5, seed, ..TrainOptions::default() };
        let trained = mkl::train(&train, &trace.levels(), &options).unwrap();
        accuracies.push(mkl::accuracy(&trained.model, &test).unwrap());
    }
    let worst = accuracies.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
    (worst >= 0.95, format!("held-out accuracy min {worst:.4}, mean {mean:.4} over 10 seeds (need 0.95 each)"))
}

fn trace_bytes(data: &Dataset, config: &RandSelConfig, threads: usize) -> String {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| report::trace_to_json(&selector::run(data, config).unwrap()).unwrap())
}

fn determinism() -> Outcome {
    let data = gen_xor(20, 1000, NoiseKind::Uniform, 9).unwrap();
    let mut identical = 0;
    for seed in 0..3 {
        let config =
            RandSelConfig { tasks: 100, subsample: 100, master_seed: seed, fixing: true, ..RandSelConfig::default() };
        identical += usize::from(trace_bytes(&data, &config, 1) == trace_bytes(&data, &config, 4));
    }
    (identical == 3, format!("{identical}/3 configurations byte-identical"))
}
