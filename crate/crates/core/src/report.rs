//! On-disk artifacts: trace and model JSON, per-iteration contribution CSVs,
//! the run report and a plain-text summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mkl::{MklModel, MODEL_SCHEMA_VERSION};
use crate::selector::{ContributionTable, FeatureContribution, SelectionTrace, TRACE_SCHEMA_VERSION};

pub const CONTRIB_SCHEMA_VERSION: u32 = 1;
pub const REPORT_SCHEMA_VERSION: u32 = 1;

const CONTRIB_MAGIC: &str = "# randsel contributions schema_version=";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub active: usize,
    pub task_pairs: usize,
    pub kernel_evaluations: u64,
    pub wall_clock_secs: f64,
}

/// Everything `select` produces besides the trace itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub iterations: Vec<IterationReport>,
    pub total_kernel_evaluations: u64,
    pub total_wall_clock_secs: f64,
}

impl RunReport {
    pub fn new(trace: &SelectionTrace, timings: &[f64]) -> RunReport {
        let iterations: Vec<IterationReport> = trace
            .iterations
            .iter()
            .enumerate()
            .map(|(k, rec)| IterationReport {
                iteration: rec.iteration,
                active: rec.active_features.len(),
                task_pairs: rec.task_pairs + rec.topup_pairs,
                kernel_evaluations: rec.kernel_evaluations,
                wall_clock_secs: timings.get(k).copied().unwrap_or(0.0),
            })
            .collect();
        RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            total_kernel_evaluations: iterations.iter().map(|r| r.kernel_evaluations).sum(),
            total_wall_clock_secs: iterations.iter().map(|r| r.wall_clock_secs).sum(),
            iterations,
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn trace_to_json(trace: &SelectionTrace) -> Result<String> {
    to_json(trace)
}

pub fn trace_from_json(text: &str) -> Result<SelectionTrace> {
    versioned(text, "trace", TRACE_SCHEMA_VERSION)
}

pub fn model_to_json(model: &MklModel) -> Result<String> {
    to_json(model)
}

pub fn model_from_json(text: &str) -> Result<MklModel> {
    versioned(text, "model", MODEL_SCHEMA_VERSION)
}

/// Checks `schema_version` before full deserialisation so that a file from
/// another format version reports a version error rather than a field error.
fn versioned<T: DeserializeOwned>(text: &str, what: &str, expected: u32) -> Result<T> {
    #[derive(Deserialize)]
    struct Probe {
        schema_version: Option<u32>,
    }
    let probe: Probe = serde_json::from_str(text)?;
    match probe.schema_version {
        None => Err(Error::Schema(format!("{what} file has no schema_version"))),
        Some(v) if v != expected => {
            Err(Error::Schema(format!("{what} schema version {v} is not supported (expected {expected})")))
        }
        Some(_) => Ok(serde_json::from_str(text)?),
    }
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<SelectionTrace> {
    trace_from_json(&read_file(path.as_ref())?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MklModel> {
    model_from_json(&read_file(path.as_ref())?)
}

pub fn save_model(model: &MklModel, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), model_to_json(model)?.as_bytes())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn contributions_csv(table: &ContributionTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["feature_id", "c_j", "count_plus", "count_base_excl"])?;
    for e in &table.entries {
        w.write_record([
            e.feature.to_string(),
            opt(e.contribution),
            e.count_plus.to_string(),
            e.count_base_excl.to_string(),
        ])?;
    }
    let body = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    Ok(format!("{CONTRIB_MAGIC}{CONTRIB_SCHEMA_VERSION}\n{}", String::from_utf8_lossy(&body)))
}

/// Parses a contribution CSV. Only the columns stored in the file are
/// recovered; the per-side means are left empty.
pub fn parse_contributions_csv(text: &str) -> Result<ContributionTable> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let version = first
        .strip_prefix(CONTRIB_MAGIC)
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or_else(|| Error::Schema("contribution file has no schema version line".into()))?;
    if version != CONTRIB_SCHEMA_VERSION {
        return Err(Error::Schema(format!("contribution schema version {version} is not supported")));
    }
    let mut reader = csv::Reader::from_reader(rest.as_bytes());
    let mut entries = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let bad = |col: usize, msg: &str| Error::Parse { row: k + 3, col: col + 1, msg: msg.to_string() };
        let feature = field(0).parse().map_err(|_| bad(0, "feature id"))?;
        let contribution = match field(1) {
            "" => None,
            v => Some(v.parse().map_err(|_| bad(1, "contribution"))?),
        };
        entries.push(FeatureContribution {
            feature,
            mean_plus: None,
            mean_base_excl: None,
            contribution,
            count_plus: field(2).parse().map_err(|_| bad(2, "count"))?,
            count_base_excl: field(3).parse().map_err(|_| bad(3, "count"))?,
        });
    }
    Ok(ContributionTable { entries })
}

pub fn summary_text(trace: &SelectionTrace, report: &RunReport) -> String {
    let name = |j: usize| match &trace.feature_names {
        Some(names) => names.get(j).cloned().unwrap_or_else(|| j.to_string()),
        None => j.to_string(),
    };
    let mut s = String::new();
    let c = &trace.config;
    let _ = writeln!(s, "randsel: {} samples, {} features, seed {}", trace.n_samples, trace.n_features, c.master_seed);
    let _ = writeln!(
        s,
        "tasks {} subsample {} cull {} sigma0 {} row mode {:?}",
        c.tasks, c.subsample, c.cull, c.sigma0, c.row_mode
    );
    for (rec, rep) in trace.iterations.iter().zip(&report.iterations) {
        let best =
            rec.contributions.ranked_desc().first().map(|(f, v)| format!("{} ({v:.4})", name(*f))).unwrap_or_default();
        let dropped: Vec<String> = rec.dropped.iter().map(name).collect();
        let _ = writeln!(
            s,
            "iter {:>3}: active {:>5}  top {}  dropped [{}]  kernel evals {}  {:.2}s",
            rec.iteration,
            rec.active_features.len(),
            best,
            dropped.join(", "),
            rep.kernel_evaluations,
            rep.wall_clock_secs
        );
    }
    let final_names: Vec<String> = trace.final_active.iter().map(name).collect();
    let _ = writeln!(s, "final: [{}]", final_names.join(", "));
    if !trace.fixed.is_empty() {
        let fixed: Vec<String> = trace.fixed.iter().map(name).collect();
        let _ = writeln!(s, "fixed: [{}]", fixed.join(", "));
    }
    let _ = writeln!(
        s,
        "total kernel evaluations {}  wall clock {:.2}s",
        report.total_kernel_evaluations, report.total_wall_clock_secs
    );
    s
}

pub fn contrib_file_name(iteration: usize) -> String {
    format!("contrib_iter_{iteration:03}.csv")
}

/// Writes trace.json, report.json, summary.txt and one contribution CSV per
/// iteration into `dir`. Returns the written paths.
pub fn write_run(dir: impl AsRef<Path>, trace: &SelectionTrace, report: &RunReport) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, contents: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, contents.as_bytes())?;
        written.push(path);
        Ok(())
    };
    put("trace.json".into(), trace_to_json(trace)?)?;
    put("report.json".into(), to_json(report)?)?;
    put("summary.txt".into(), summary_text(trace, report))?;
    for rec in &trace.iterations {
        put(contrib_file_name(rec.iteration), contributions_csv(&rec.contributions)?)?;
    }
    Ok(written)
}
