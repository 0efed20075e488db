//! Datasets: labelled numeric matrices, CSV ingestion and the synthetic XOR benchmark.

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target values of a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Labels {
    /// Values in {+1, -1}.
    Binary { values: Vec<f64> },
    /// Class ids in `0..n_classes`.
    Multiclass { ids: Vec<usize>, n_classes: usize },
}

impl Labels {
    pub fn binary(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::Input(format!("binary label at position {i} is {}, expected +1 or -1", values[i])));
        }
        Ok(Labels::Binary { values })
    }

    pub fn multiclass(ids: Vec<usize>, n_classes: usize) -> Result<Self> {
        if let Some(i) = ids.iter().position(|&c| c >= n_classes) {
            return Err(Error::Input(format!(
                "class id {} at position {i} is out of range for {n_classes} classes",
                ids[i]
            )));
        }
        Ok(Labels::Multiclass { ids, n_classes })
    }

    pub fn len(&self) -> usize {
        match self {
            Labels::Binary { values } => values.len(),
            Labels::Multiclass { ids, .. } => ids.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_classes(&self) -> usize {
        match self {
            Labels::Binary { .. } => 2,
            Labels::Multiclass { n_classes, .. } => *n_classes,
        }
    }

    /// Class index of sample `i`; binary +1 maps to class 0 and -1 to class 1.
    pub fn class_of(&self, i: usize) -> usize {
        match self {
            Labels::Binary { values } => usize::from(values[i] < 0.0),
            Labels::Multiclass { ids, .. } => ids[i],
        }
    }

    pub fn class_ids(&self) -> Vec<usize> {
        (0..self.len()).map(|i| self.class_of(i)).collect()
    }

    /// Labels of the given rows, in order.
    pub fn select(&self, rows: &[usize]) -> Labels {
        match self {
            Labels::Binary { values } => Labels::Binary { values: rows.iter().map(|&r| values[r]).collect() },
            Labels::Multiclass { ids, n_classes } => {
                Labels::Multiclass { ids: rows.iter().map(|&r| ids[r]).collect(), n_classes: *n_classes }
            }
        }
    }

    pub fn distinct_classes(&self) -> usize {
        (0..self.len()).map(|i| self.class_of(i)).collect::<BTreeSet<_>>().len()
    }

    /// One-vs-rest ±1 targets for `class`.
    pub fn one_vs_rest(&self, class: usize) -> Vec<f64> {
        (0..self.len()).map(|i| if self.class_of(i) == class { 1.0 } else { -1.0 }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Labels,
    pub feature_names: Option<Vec<String>>,
    /// Label strings indexed by class id (binary: `[+1 label, -1 label]`).
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Labels) -> Result<Self> {
        let (m, n) = x.dim();
        if m < 2 || n < 1 {
            return Err(Error::Input(format!("dataset needs at least 2 samples and 1 feature, got {m}x{n}")));
        }
        if y.len() != m {
            return Err(Error::Input(format!("{} labels for {m} samples", y.len())));
        }
        if let Some(((r, c), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite value {v} at ({r}, {c})")));
        }
        let class_names = match &y {
            Labels::Binary { .. } => vec!["+1".to_string(), "-1".to_string()],
            Labels::Multiclass { n_classes, .. } => (0..*n_classes).map(|c| c.to_string()).collect(),
        };
        Ok(Dataset { x, y, feature_names: None, class_names })
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn feature_name(&self, j: usize) -> String {
        match &self.feature_names {
            Some(names) => names[j].clone(),
            None => format!("x{j}"),
        }
    }

    /// Rows `rows` of the dataset (used for train/validation splits).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(ndarray::Axis(0), rows),
            y: self.y.select(rows),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Packed row-major copy of the sub-matrix at (`rows`, `features`).
    pub fn gather(&self, rows: &[usize], features: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(rows.len() * features.len());
        for &r in rows {
            let row = self.x.row(r);
            out.extend(features.iter().map(|&f| row[f]));
        }
        out
    }
}

/// Reads a CSV dataset. `label_column` is a header name, or a zero-based
/// column index when the file has no header.
///
/// Label strings are mapped to classes as follows: if exactly the numbers
/// +1 and -1 occur they keep their sign; otherwise two distinct strings are
/// mapped by lexicographic order (first to +1), and more than two to class
/// ids `0..C` in lexicographic order.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let table = load_table(path, Some(label_column), has_header)?;
    let raw_labels = table.labels.expect("label column requested");
    let (m, n) = table.x.dim();
    if m < 2 {
        return Err(Error::Input(format!(
            "{}: dataset needs at least 2 rows and 1 feature column, got {m}x{n}",
            path.display()
        )));
    }
    let (y, class_names) = map_labels(&raw_labels)?;
    Ok(Dataset { x: table.x, y, feature_names: table.feature_names, class_names })
}

/// Numeric columns of a CSV file, with an optional column of raw label
/// strings split off.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub x: Array2<f64>,
    pub feature_names: Option<Vec<String>>,
    pub labels: Option<Vec<String>>,
}

/// Reads a CSV of numeric features. `label_column` names (or, without a
/// header, indexes) a column kept as strings; it must exist when given.
pub fn load_table(path: impl AsRef<Path>, label_column: Option<&str>, has_header: bool) -> Result<Table> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(has_header).trim(csv::Trim::All).from_reader(file);

    let headers: Option<Vec<String>> =
        if has_header { Some(reader.headers()?.iter().map(str::to_string).collect()) } else { None };
    let label_idx = match (label_column, &headers) {
        (None, _) => None,
        (Some(label), Some(h)) => Some(
            h.iter()
                .position(|name| name == label)
                .ok_or_else(|| Error::Schema(format!("label column '{label}' not found in header")))?,
        ),
        (Some(label), None) => Some(label.parse::<usize>().map_err(|_| {
            Error::Schema(format!("without a header the label column must be an index, got '{label}'"))
        })?),
    };

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    let mut width = None;
    let mut m = 0;
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = k + 1 + usize::from(has_header);
        if let Some(idx) = label_idx {
            if idx >= record.len() {
                return Err(Error::Schema(format!(
                    "row {line} has {} columns, label column index is {idx}",
                    record.len()
                )));
            }
        }
        let n = record.len() - usize::from(label_idx.is_some());
        match width {
            None => width = Some(n),
            Some(w) if w != n => {
                return Err(Error::Parse {
                    row: line,
                    col: record.len(),
                    msg: format!("expected {} columns", w + usize::from(label_idx.is_some())),
                })
            }
            _ => {}
        }
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == label_idx {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                col: c + 1,
                msg: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { row: line, col: c + 1, msg: format!("non-finite value '{cell}'") });
            }
            values.push(v);
        }
        m += 1;
    }
    let n = width.unwrap_or(0);
    if m < 1 || n < 1 {
        return Err(Error::Input(format!("{}: no numeric data ({m} rows, {n} feature columns)", path.display())));
    }
    let x = Array2::from_shape_vec((m, n), values).map_err(|e| Error::Input(format!("shape error: {e}")))?;
    let feature_names = headers
        .map(|h| h.into_iter().enumerate().filter(|(i, _)| Some(*i) != label_idx).map(|(_, name)| name).collect());
    Ok(Table { x, feature_names, labels: label_idx.map(|_| raw_labels) })
}

fn map_labels(raw: &[String]) -> Result<(Labels, Vec<String>)> {
    let distinct: BTreeSet<&str> = raw.iter().map(String::as_str).collect();
    let numeric: Option<Vec<f64>> = raw.iter().map(|s| s.parse::<f64>().ok()).collect();
    if let Some(nums) = numeric {
        if nums.iter().all(|&v| v == 1.0 || v == -1.0) {
            let pos = raw.iter().zip(&nums).find(|(_, &v)| v > 0.0).map(|(s, _)| s.clone());
            let neg = raw.iter().zip(&nums).find(|(_, &v)| v < 0.0).map(|(s, _)| s.clone());
            let names = vec![pos.unwrap_or_else(|| "+1".into()), neg.unwrap_or_else(|| "-1".into())];
            return Ok((Labels::binary(nums)?, names));
        }
    }
    let names: Vec<String> = distinct.iter().map(|s| s.to_string()).collect();
    let id_of = |s: &str| names.iter().position(|n| n == s).unwrap();
    if names.len() <= 2 {
        let values = raw.iter().map(|s| if id_of(s) == 0 { 1.0 } else { -1.0 }).collect();
        let mut names = names;
        if names.len() == 1 {
            names.push(String::new());
        }
        Ok((Labels::Binary { values }, names))
    } else {
        let ids = raw.iter().map(|s| id_of(s)).collect();
        let n_classes = names.len();
        Ok((Labels::Multiclass { ids, n_classes }, names))
    }
}

/// Writes a dataset as CSV with a header; the label column is `label_column`
/// and holds the class names.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header: Vec<String> = (0..data.n_features()).map(|j| data.feature_name(j)).collect();
    header.push(label_column.to_string());
    writer.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for (i, row) in data.x.rows().into_iter().enumerate() {
        record.clear();
        record.extend(row.iter().map(|v| v.to_string()));
        record.push(data.class_names[data.y.class_of(i)].clone());
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Uniform on [-1, 1].
    #[default]
    Uniform,
    /// Standard normal.
    Gaussian,
}

/// XOR benchmark: features 0 and 1 are uniform on {-1, +1}, the label is
/// their product, and the remaining features are independent noise.
pub fn gen_xor(n_features: usize, m: usize, noise: NoiseKind, seed: u64) -> Result<Dataset> {
    if n_features < 2 {
        return Err(Error::Parameter(format!("XOR needs at least 2 features, got {n_features}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((m, n_features));
    let mut y = Vec::with_capacity(m);
    for mut row in x.rows_mut() {
        let a = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let b = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        row[0] = a;
        row[1] = b;
        for v in row.iter_mut().skip(2) {
            *v = match noise {
                NoiseKind::Uniform => rng.gen_range(-1.0..=1.0),
                NoiseKind::Gaussian => rng.sample(StandardNormal),
            };
        }
        y.push(a * b);
    }
    Dataset::new(x, Labels::Binary { values: y })
}
