//! Dataset ingestion, deterministic splitting, and input quantization.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{fisher_yates, round_half_away, SplitMix64};

/// How to read a delimiter-separated text file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSchema {
    /// Column holding the label; by name (requires a header) or by 0-based index.
    pub label: ColumnRef,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_true")]
    pub has_header: bool,
}

fn default_delimiter() -> char {
    ','
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl Default for DataSchema {
    fn default() -> Self {
        DataSchema {
            label: ColumnRef::Name("target".to_string()),
            delimiter: ',',
            has_header: true,
        }
    }
}

/// In-memory dataset: row-major features plus one label per row. Labels are
/// class indices for classifiers and (integer-valued) targets for regressors.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    /// rows x features
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Number of classes when labels are 0-based class indices.
    pub fn n_classes(&self) -> u32 {
        self.labels.iter().fold(0.0f64, |m, &l| m.max(l)) as u32 + 1
    }
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &DataSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, &path.display().to_string(), schema)
}

pub fn parse_dataset(text: &str, path: &str, schema: &DataSchema) -> Result<Dataset> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_string(),
        line,
        msg,
    };
    // Cells may carry surrounding double quotes (UCI-style exports quote
    // their headers); strip one matching pair after whitespace trimming.
    fn unquote(s: &str) -> &str {
        let s = s.trim();
        s.strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .unwrap_or(s)
    }
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut column_names: Option<Vec<String>> = None;
    if schema.has_header {
        let (lineno, header) = lines
            .next()
            .ok_or_else(|| perr(1, "file is empty".to_string()))?;
        let names: Vec<String> = header
            .split(schema.delimiter)
            .map(|s| unquote(s).to_string())
            .collect();
        if names.iter().any(|n| n.is_empty()) {
            return Err(perr(lineno, "header has an empty column name".to_string()));
        }
        column_names = Some(names);
    }

    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut width: Option<usize> = None;
    for (lineno, line) in lines {
        let mut row = Vec::new();
        for field in line.split(schema.delimiter) {
            let field = unquote(field);
            let v: f64 = field.parse().map_err(|_| {
                perr(lineno, format!("field `{field}` is not numeric"))
            })?;
            if !v.is_finite() {
                return Err(perr(lineno, format!("field `{field}` is not finite")));
            }
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(perr(
                    lineno,
                    format!("row has {} columns, expected {}", row.len(), w),
                ))
            }
            _ => {}
        }
        rows.push((lineno, row));
    }
    let width = width.ok_or_else(|| perr(1, "file has no data rows".to_string()))?;
    if let Some(names) = &column_names {
        if names.len() != width {
            return Err(perr(
                1,
                format!("header has {} columns, rows have {}", names.len(), width),
            ));
        }
    }
    if width < 2 {
        return Err(perr(1, "need at least one feature column and a label column".to_string()));
    }

    let label_idx = match &schema.label {
        ColumnRef::Index(i) => {
            if *i >= width {
                return Err(perr(1, format!("label column index {i} out of range (width {width})")));
            }
            *i
        }
        ColumnRef::Name(name) => {
            let names = column_names.as_ref().ok_or_else(|| {
                perr(1, format!("label column `{name}` given by name but file has no header"))
            })?;
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| perr(1, format!("label column `{name}` not found in header")))?
        }
    };

    let feature_names: Vec<String> = match column_names {
        Some(names) => names
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, n)| n.clone())
            .collect(),
        None => (0..width)
            .filter(|&i| i != label_idx)
            .map(|i| format!("f{i}"))
            .collect(),
    };

    let mut features = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (_, row) in rows {
        labels.push(row[label_idx]);
        features.push(
            row.iter()
                .enumerate()
                .filter(|(i, _)| *i != label_idx)
                .map(|(_, &v)| v)
                .collect(),
        );
    }
    Ok(Dataset {
        feature_names,
        features,
        labels,
    })
}

/// Per-feature train-split normalization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    /// Features that were constant on the training split (normalized to 0).
    pub constant_features: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub normalization: Normalization,
}

/// Deterministically shuffle, split, and min/max-normalize a dataset.
///
/// The shuffle is a seeded Fisher–Yates over row indices; the train size is
/// `round(n * ratio)` clamped so both splits are non-empty. Normalization
/// bounds come from the training split only; both splits are clipped into
/// [0,1], and features constant on the training split normalize to 0.
pub fn split_normalize(d: &Dataset, ratio: f64, seed: u64) -> Result<Split> {
    if d.n_samples() < 2 {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} samples",
            d.n_samples()
        )));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio {ratio} not in (0,1)")));
    }
    let n = d.n_samples();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(seed);
    fisher_yates(&mut order, &mut rng);
    let n_train = (round_half_away(n as f64 * ratio).max(1) as usize).min(n - 1);

    let take = |idx: &[usize]| Dataset {
        feature_names: d.feature_names.clone(),
        features: idx.iter().map(|&i| d.features[i].clone()).collect(),
        labels: idx.iter().map(|&i| d.labels[i]).collect(),
    };
    let mut train = take(&order[..n_train]);
    let mut test = take(&order[n_train..]);

    let nf = d.n_features();
    let mut mins = vec![f64::INFINITY; nf];
    let mut maxs = vec![f64::NEG_INFINITY; nf];
    for row in &train.features {
        for (j, &v) in row.iter().enumerate() {
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    let constant_features: Vec<usize> = (0..nf).filter(|&j| mins[j] == maxs[j]).collect();
    let normalize = |ds: &mut Dataset| {
        for row in ds.features.iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if mins[j] == maxs[j] {
                    0.0
                } else {
                    ((*v - mins[j]) / (maxs[j] - mins[j])).clamp(0.0, 1.0)
                };
            }
        }
    };
    normalize(&mut train);
    normalize(&mut test);
    Ok(Split {
        train,
        test,
        normalization: Normalization {
            mins,
            maxs,
            constant_features,
        },
    })
}

/// Quantize one normalized value to `u` unsigned bits: round(v * (2^u - 1)),
/// ties away from zero, clamped into range.
pub fn quantize_value(v: f64, u: u32) -> u32 {
    let max = (1u64 << u) - 1;
    round_half_away(v * max as f64).clamp(0, max as i64) as u32
}

/// Quantize every feature of every row (rows must already be in [0,1]).
pub fn quantize_inputs(d: &Dataset, u: u32) -> Vec<Vec<u32>> {
    d.features
        .iter()
        .map(|row| row.iter().map(|&v| quantize_value(v, u)).collect())
        .collect()
}
