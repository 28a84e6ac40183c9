//! Labelling functions over a real-valued target series, and CSV ingestion.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelKind {
    F1,
    F2,
    F3,
    F4,
    F5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelFunction {
    pub kind: LabelKind,
    /// `false` for the reversed variant.
    pub plus: bool,
    pub k: usize,
}

impl LabelFunction {
    /// All ten functions `F1+, F1-, ..., F5+, F5-` with lookback `k`.
    pub fn all(k: usize) -> Vec<LabelFunction> {
        use LabelKind::*;
        [F1, F2, F3, F4, F5]
            .into_iter()
            .flat_map(|kind| [true, false].map(|plus| LabelFunction { kind, plus, k }))
            .collect()
    }

    /// Points of history the function needs before its first label.
    pub fn lookback(&self) -> usize {
        match self.kind {
            LabelKind::F1 => 1,
            LabelKind::F2 | LabelKind::F3 => self.k,
            LabelKind::F4 => 2,
            LabelKind::F5 => self.k + 1,
        }
    }
}

impl fmt::Display for LabelFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.plus { '+' } else { '-' };
        write!(f, "{:?}{sign}(k={})", self.kind, self.k)
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Label of every position of `v`; `None` where the lookback reaches past
/// the start of the series.
pub fn label_real(v: &[f64], f: LabelFunction) -> Vec<Option<u8>> {
    let delta = |t: usize| v[t] - v[t - 1];
    (0..v.len())
        .map(|t| {
            if t < f.lookback() {
                return None;
            }
            let k = f.k;
            let up = match f.kind {
                LabelKind::F1 => v[t] > v[t - 1],
                LabelKind::F2 => v[t] > median(&v[t - k..t]),
                LabelKind::F3 => {
                    v[t] > v[t - k..t].iter().copied().fold(f64::INFINITY, f64::min)
                }
                LabelKind::F4 => delta(t) > delta(t - 1),
                LabelKind::F5 => {
                    let past: Vec<f64> = (t - k..t).map(delta).collect();
                    delta(t) > median(&past)
                }
            };
            Some(u8::from(up == f.plus))
        })
        .collect()
}

/// Column selection for [`ingest_csv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub features: Vec<String>,
    pub target: String,
    /// Extra token meaning "missing" besides the empty cell.
    #[serde(default)]
    pub missing: Option<String>,
    /// Tumbling-window width for averaging; 1 keeps every row.
    #[serde(default = "one")]
    pub tumbling: usize,
}

fn one() -> usize {
    1
}

/// Raw (unstandardized) features and target, one entry per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub features: Vec<Vec<f64>>,
    pub target: Vec<f64>,
}

impl Series {
    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn slice(&self, start: usize, end: usize) -> Series {
        Series {
            features: self.features[start..end].to_vec(),
            target: self.target[start..end].to_vec(),
        }
    }

    pub fn concat(parts: &[Series]) -> Series {
        Series {
            features: parts.iter().flat_map(|s| s.features.clone()).collect(),
            target: parts.iter().flat_map(|s| s.target.clone()).collect(),
        }
    }
}

/// Fills `None` entries by linear interpolation between the nearest known
/// neighbours; leading and trailing gaps take the nearest known value.
pub fn interpolate(values: &[Option<f64>]) -> Vec<f64> {
    let known: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    if known.is_empty() {
        return vec![0.0; values.len()];
    }
    let mut out = vec![0.0; values.len()];
    let mut next = 0;
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v {
            out[i] = *v;
            continue;
        }
        while next < known.len() && known[next] < i {
            next += 1;
        }
        out[i] = match (next.checked_sub(1).map(|p| known[p]), known.get(next)) {
            (Some(a), Some(&b)) => {
                let (va, vb) = (values[a].unwrap(), values[b].unwrap());
                va + (vb - va) * (i - a) as f64 / (b - a) as f64
            }
            (Some(a), None) => values[a].unwrap(),
            (None, Some(&b)) => values[b].unwrap(),
            (None, None) => unreachable!(),
        };
    }
    out
}

/// Means over consecutive non-overlapping blocks of `width`; a partial last
/// block is dropped.
pub fn tumbling_mean(values: &[f64], width: usize) -> Vec<f64> {
    values
        .chunks_exact(width.max(1))
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

/// Online standardization with Welford statistics. Each value is scaled with
/// the statistics including itself, so no future value leaks backwards.
#[derive(Debug, Clone)]
pub struct OnlineStandardizer {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

pub const STD_EPSILON: f64 = 1e-8;

impl OnlineStandardizer {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn transform(&mut self, x: &[f64]) -> Vec<f64> {
        self.count += 1.0;
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let d = v - self.mean[i];
                self.mean[i] += d / self.count;
                self.m2[i] += d * (v - self.mean[i]);
                let var = self.m2[i] / self.count;
                (v - self.mean[i]) / (var + STD_EPSILON).sqrt()
            })
            .collect()
    }
}

/// Reads the schema's columns from a headed CSV file, interpolating missing
/// cells and applying the tumbling mean.
pub fn ingest_csv(path: &Path, schema: &CsvSchema) -> Result<Series> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::UnknownColumn {
                column: name.to_string(),
                available: headers.iter().collect::<Vec<_>>().join(", "),
            })
    };
    let mut names: Vec<&str> = schema.features.iter().map(String::as_str).collect();
    names.push(&schema.target);
    let idx = names.iter().map(|n| find(n)).collect::<Result<Vec<_>>>()?;

    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); idx.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        for (c, &i) in idx.iter().enumerate() {
            let cell = record.get(i).unwrap_or("").trim();
            let missing = cell.is_empty() || schema.missing.as_deref() == Some(cell);
            let value = if missing {
                None
            } else {
                Some(cell.parse::<f64>().map_err(|_| Error::Parse {
                    row: row + 1,
                    column: names[c].to_string(),
                    value: cell.to_string(),
                })?)
            };
            columns[c].push(value);
        }
    }
    let filled: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| tumbling_mean(&interpolate(c), schema.tumbling))
        .collect();
    let n = filled[0].len();
    let target = filled.last().unwrap().clone();
    let features = (0..n)
        .map(|r| filled[..filled.len() - 1].iter().map(|c| c[r]).collect())
        .collect();
    Ok(Series { features, target })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}
