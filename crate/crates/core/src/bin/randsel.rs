use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use randsel::data::{self, NoiseKind};
use randsel::kernel::{Bandwidth, LabelKernelKind};
use randsel::mkl::{self, DEFAULT_LAMBDAS};
use randsel::report::{self, RunReport};
use randsel::sampling::{FeatureSet, SeedPlan};
use randsel::selector::{self, RandSelConfig, RowMode};
use randsel::Error;

#[derive(Parser)]
#[command(
    name = "randsel",
    version,
    about = "Randomised kernel-alignment feature selection and multiple-kernel boosting"
)]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run iterative feature selection and write the trace and reports.
    Select(SelectArgs),
    /// Fit the multiple-kernel predictor on the feature sets of a trace.
    Train(TrainArgs),
    /// Score a CSV with a trained model.
    Predict(PredictArgs),
    /// Write a synthetic XOR dataset.
    GenXor(GenXorArgs),
    /// Time one estimation round on synthetic XOR data.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Input {
    /// CSV dataset.
    #[arg(long)]
    data: PathBuf,
    /// Label column name (or index with --no-header).
    #[arg(long, default_value = "y")]
    label: String,
    /// The CSV has no header row.
    #[arg(long)]
    no_header: bool,
}

impl Input {
    fn load(&self) -> randsel::Result<randsel::Dataset> {
        data::load_csv(&self.data, &self.label, !self.no_header)
    }
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    input: Input,
    /// Task pairs per iteration.
    #[arg(long, default_value_t = 500)]
    tasks: usize,
    /// Rows per bootstrap subsample.
    #[arg(long, default_value_t = 200)]
    subsample: usize,
    /// Fraction of non-fixed features culled per iteration.
    #[arg(long, default_value_t = 0.125)]
    cull: f64,
    /// Enable fixing of persistently top-ranked features.
    #[arg(long)]
    fixing: bool,
    /// Top fraction considered for fixing.
    #[arg(long, default_value_t = 0.1)]
    top_fraction: f64,
    /// Consecutive top placements before a feature is fixed.
    #[arg(long, default_value_t = 3)]
    fix_after: usize,
    /// Base bandwidth; subset kernels use sigma0 / |S|.
    #[arg(long, default_value_t = 0.5)]
    sigma0: f64,
    /// Class-balanced row subsamples.
    #[arg(long)]
    balanced: bool,
    /// Use every row in every task instead of bootstrap samples.
    #[arg(long)]
    full_rows: bool,
    #[arg(long, value_enum, default_value_t = LabelKernelKind::Auto)]
    label_kernel: LabelKernelKind,
    /// Minimum tasks per feature on each side of the contribution.
    #[arg(long, default_value_t = 5)]
    min_coverage: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: Input,
    /// trace.json written by `select`.
    #[arg(long)]
    trace: PathBuf,
    /// Explicit bandwidths (comma separated); default is a grid around the
    /// inverse median squared distance.
    #[arg(long, value_delimiter = ',')]
    sigmas: Vec<f64>,
    /// Size of the default bandwidth grid.
    #[arg(long, default_value_t = 15)]
    sigma_count: usize,
    /// Ridge parameters (comma separated).
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<f64>,
    /// LPBoost box parameter; tuned on a validation split when omitted.
    #[arg(long)]
    d: Option<f64>,
    /// Fraction of rows held out when tuning D.
    #[arg(long, default_value_t = 0.25)]
    validation_fraction: f64,
    /// Per-learner negative subsampling: negatives drawn per positive.
    #[arg(long)]
    negative_ratio: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model JSON to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model JSON written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// CSV with the training feature columns.
    #[arg(long)]
    data: PathBuf,
    /// Column to ignore as features; if given its values are compared with
    /// the predictions.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    no_header: bool,
    /// Output CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenXorArgs {
    #[arg(long, default_value_t = 20)]
    features: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = NoiseKind::Uniform)]
    noise: NoiseKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "y")]
    label: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 50)]
    features: usize,
    #[arg(long, default_value_t = 4000)]
    samples: usize,
    #[arg(long, default_value_t = 200)]
    tasks: usize,
    #[arg(long, default_value_t = 500)]
    subsample: usize,
    #[arg(long, default_value_t = 0.5)]
    sigma0: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Select(a) => select(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::GenXor(a) => gen_xor(a),
        Command::Bench(a) => bench(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for bad invocations, inputs and files; 1 for failures during computation.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parameter(_)
        | Error::Input(_)
        | Error::Io { .. }
        | Error::Parse { .. }
        | Error::Schema(_)
        | Error::Csv(_)
        | Error::Json(_) => 2,
        _ => 1,
    }
}

fn select(a: SelectArgs) -> randsel::Result<()> {
    let config = RandSelConfig {
        tasks: a.tasks,
        subsample: a.subsample,
        cull: a.cull,
        top_fraction: a.top_fraction,
        fix_after: a.fix_after,
        fixing: a.fixing,
        sigma0: a.sigma0,
        balanced: a.balanced,
        master_seed: a.seed,
        min_coverage: a.min_coverage,
        label_kernel: a.label_kernel,
        row_mode: if a.full_rows { RowMode::Full } else { RowMode::Bootstrap },
    };
    config.validate()?;
    let data = a.input.load()?;
    eprintln!(
        "randsel select: {} x {} from {}, seed {}",
        data.n_samples(),
        data.n_features(),
        a.input.data.display(),
        a.seed
    );
    let (trace, timings) = selector::run_timed(&data, &config)?;
    let run_report = RunReport::new(&trace, &timings);
    report::write_run(&a.out, &trace, &run_report)?;
    eprint!("{}", report::summary_text(&trace, &run_report));
    Ok(())
}

fn train(a: TrainArgs) -> randsel::Result<()> {
    let data = a.input.load()?;
    let trace = report::load_trace(&a.trace)?;
    if trace.n_features != data.n_features() {
        return Err(Error::Input(format!(
            "trace covers {} features but the data has {}",
            trace.n_features,
            data.n_features()
        )));
    }
    let levels = trace.levels();
    let options = mkl::TrainOptions {
        sigmas: if a.sigmas.is_empty() {
            None
        } else {
            Some(a.sigmas.iter().map(|&s| Bandwidth::new(s)).collect::<randsel::Result<_>>()?)
        },
        sigma_count: a.sigma_count,
        lambdas: if a.lambdas.is_empty() { DEFAULT_LAMBDAS.to_vec() } else { a.lambdas },
        d: a.d,
        validation_fraction: a.validation_fraction,
        negative_ratio: a.negative_ratio,
        seed: a.seed,
    };
    let trained = mkl::train(&data, &levels, &options)?;
    for (cand, acc) in &trained.d_scores {
        eprintln!("D {cand:.6}: validation accuracy {acc:.4}");
    }
    let params = &trained.params;
    eprintln!(
        "randsel train: {} levels x {} sigmas x {} lambdas, D {}",
        levels.len(),
        params.sigmas.len(),
        params.lambdas.len(),
        params.d
    );
    let model = trained.model;
    eprintln!("training accuracy {:.4}", mkl::accuracy(&model, &data)?);
    report::save_model(&model, &a.out)
}

fn predict(a: PredictArgs) -> randsel::Result<()> {
    let model = report::load_model(&a.model)?;
    let table = data::load_table(&a.data, a.label.as_deref(), !a.no_header)?;
    let predictions = model.predict_all(table.x.view())?;
    let mut w = csv::Writer::from_writer(match &a.out {
        Some(path) => Box::new(create(path)?) as Box<dyn Write>,
        None => Box::new(std::io::stdout().lock()),
    });
    w.write_record(["row", "score", "label"])?;
    let mut correct = 0;
    for (i, p) in predictions.iter().enumerate() {
        let name = &model.class_names[p.class];
        if let Some(labels) = &table.labels {
            correct += usize::from(labels[i] == *name || same_sign_label(&labels[i], p.binary_label(), &model));
        }
        w.write_record([i.to_string(), p.score.to_string(), name.clone()])?;
    }
    w.flush().map_err(|e| Error::io(a.out.clone().unwrap_or_default(), e))?;
    if table.labels.is_some() {
        eprintln!("accuracy {:.4}", correct as f64 / predictions.len() as f64);
    }
    Ok(())
}

/// Numeric +-1 labels compare by value, so "1" matches a "+1" class name.
fn same_sign_label(raw: &str, predicted: f64, model: &randsel::MklModel) -> bool {
    matches!(model.heads, mkl::ModelHeads::Binary { .. }) && raw.parse::<f64>().is_ok_and(|v| v == predicted)
}

fn create(path: &Path) -> randsel::Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn gen_xor(a: GenXorArgs) -> randsel::Result<()> {
    let data = data::gen_xor(a.features, a.samples, a.noise, a.seed)?;
    data::write_csv(&data, &a.out, &a.label)
}

fn bench(a: BenchArgs) -> randsel::Result<()> {
    let data = data::gen_xor(a.features, a.samples, NoiseKind::Uniform, a.seed)?;
    let config = RandSelConfig {
        tasks: a.tasks,
        subsample: a.subsample,
        sigma0: a.sigma0,
        master_seed: a.seed,
        ..RandSelConfig::default()
    };
    config.validate()?;
    let start = Instant::now();
    let est = selector::estimate_contributions(&data, &FeatureSet::full(a.features), &config, &SeedPlan::new(a.seed))?;
    let secs = start.elapsed().as_secs_f64();
    println!("threads            {}", rayon::current_num_threads());
    println!("task pairs         {}", est.pairs);
    println!("kernel entries     {}", est.kernel_entries);
    println!("expected 2*r*s^2   {}", 2 * a.tasks as u64 * (a.subsample as u64).pow(2));
    println!("wall clock         {secs:.3} s");
    println!("entries per second {:.3e}", est.kernel_entries as f64 / secs);
    Ok(())
}
