//! CSV datasets and plain boundary-list files.
//!
//! Rows in error messages are 1-based file lines (the header is line 1) and
//! columns are 1-based.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use espresso::MultiSeries;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
}

/// Where a dataset lives and which columns to read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
    /// Column of per-sample segment labels; boundaries are label changes.
    #[serde(default)]
    pub label_column: Option<String>,
    /// Channels to read, in order. Empty means every column except the label.
    #[serde(default)]
    pub channel_columns: Vec<String>,
    #[serde(default)]
    pub sample_rate_hz: Option<f64>,
}

impl DatasetManifest {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            format: Format::Csv,
            label_column: None,
            channel_columns: Vec::new(),
            sample_rate_hz: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(label) = &self.label_column {
            if self.channel_columns.contains(label) {
                return Err(CliError::Validation(format!(
                    "label column {label:?} is also listed as a channel"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub series: MultiSeries,
    /// Label-change indices, when the manifest names a label column.
    pub truth: Option<Vec<usize>>,
}

fn column(header: &csv::StringRecord, name: &str) -> Result<usize, CliError> {
    header
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| CliError::MissingColumn(name.to_string()))
}

fn parse_error(err: csv::Error) -> CliError {
    let row = err.position().map_or(0, |p| p.line() as usize);
    let col = match err.kind() {
        csv::ErrorKind::UnequalLengths { len, .. } => *len as usize + 1,
        _ => 0,
    };
    CliError::Parse {
        row,
        col,
        message: err.to_string(),
    }
}

/// Reads a CSV dataset with a header row.
pub fn ingest_csv(manifest: &DatasetManifest) -> Result<Dataset, CliError> {
    manifest.validate()?;
    let file = File::open(&manifest.path).map_err(|e| CliError::io(&manifest.path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let header = reader.headers().map_err(parse_error)?.clone();

    let label_idx = manifest
        .label_column
        .as_deref()
        .map(|name| column(&header, name))
        .transpose()?;
    let names: Vec<String> = if manifest.channel_columns.is_empty() {
        header
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_idx)
            .map(|(_, h)| h.trim().to_string())
            .collect()
    } else {
        manifest.channel_columns.clone()
    };
    if names.is_empty() {
        return Err(CliError::Validation("no channel columns".into()));
    }
    let idx: Vec<usize> = names
        .iter()
        .map(|n| column(&header, n))
        .collect::<Result<_, _>>()?;

    let mut channels = vec![Vec::new(); names.len()];
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(parse_error)?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        for (values, &c) in channels.iter_mut().zip(&idx) {
            let field = record.get(c).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| CliError::NonNumeric {
                row,
                col: c + 1,
                value: field.to_string(),
            })?;
            values.push(v);
        }
        if let Some(l) = label_idx {
            labels.push(record.get(l).unwrap_or("").to_string());
        }
    }

    let mut series = MultiSeries::with_names(channels, names)?;
    if let Some(hz) = manifest.sample_rate_hz {
        series = series.with_sample_rate(hz)?;
    }
    let truth = label_idx.map(|_| label_changes(&labels));
    Ok(Dataset { series, truth })
}

/// Indices `i` where `labels[i] != labels[i - 1]`.
pub fn label_changes<T: PartialEq>(labels: &[T]) -> Vec<usize> {
    (1..labels.len()).filter(|&i| labels[i] != labels[i - 1]).collect()
}

/// Segment labels `seg0, seg1, ...` for a series of length `n` cut at
/// `boundaries`.
pub fn labels_from_boundaries(n: usize, boundaries: &[usize]) -> Vec<String> {
    (0..n)
        .map(|i| format!("seg{}", boundaries.partition_point(|&b| b <= i)))
        .collect()
}

/// Writes `series` as CSV, with an optional trailing `label` column.
pub fn write_csv(path: &Path, series: &MultiSeries, labels: Option<&[String]>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(path, e),
        other => CliError::Validation(format!("{other:?}")),
    };
    let mut header: Vec<String> = series.names().to_vec();
    if labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header).map_err(io)?;
    for i in 0..series.len() {
        let mut row: Vec<String> = series.channels().iter().map(|c| c[i].to_string()).collect();
        if let Some(l) = labels {
            row.push(l[i].clone());
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads one integer per line. Blank lines and `#` comments are skipped.
pub fn read_boundaries(path: &Path) -> Result<Vec<usize>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        out.push(text.parse().map_err(|_| CliError::NonNumeric {
            row: i + 1,
            col: 1,
            value: text.to_string(),
        })?);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn write_boundaries(path: &Path, boundaries: &[usize]) -> Result<(), CliError> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    for b in boundaries {
        writeln!(f, "{b}").map_err(|e| CliError::io(path, e))?;
    }
    f.flush().map_err(|e| CliError::io(path, e))
}
