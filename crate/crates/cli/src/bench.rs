//! Sweep runs over subjects and subsequence lengths, scoring and report files.
//!
//! Output layout under the output directory:
//!
//! ```text
//! runs/<run_id>.json     one document per run
//! summary.json           per-run metrics, means overall and per length
//! timing.json            wall-clock stage timings (kept apart so that the
//!                        documents above are reproducible byte for byte)
//! curves/<run_id>_<channel>.csv   optional, columns tick,value
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use espresso::{
    evaluate, run_espresso, CandidateSource, ChannelOutcome, EvalReport, MultiSeries, PipelineConfig, ShapeCurve,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Settings;
use crate::error::CliError;
use crate::ingest::{ingest_csv, DatasetManifest};
use crate::synth;

pub const RUN_SCHEMA: &str = "espresso-run/1";
pub const SUMMARY_SCHEMA: &str = "espresso-summary/1";

/// One input series with optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub name: String,
    /// File path or synthetic fixture description.
    pub origin: String,
    pub seed: Option<u64>,
    pub series: MultiSeries,
    pub truth: Option<Vec<usize>>,
}

impl Subject {
    pub fn from_manifest(manifest: &DatasetManifest) -> Result<Self, CliError> {
        let data = ingest_csv(manifest)?;
        let name = manifest
            .path
            .file_stem()
            .map_or_else(|| "input".to_string(), |s| s.to_string_lossy().into_owned());
        Ok(Self {
            name,
            origin: manifest.path.display().to_string(),
            seed: None,
            series: data.series,
            truth: data.truth,
        })
    }

    /// A regime such as `NC-R`, or one of the named fixtures.
    pub fn synthetic(fixture: &str, k: usize, seed: u64) -> Result<Self, CliError> {
        let data = synth::fixture(fixture, k, seed)?;
        let tag: String = fixture
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
            .collect();
        Ok(Self {
            name: format!("{tag}_k{k}_s{seed}"),
            origin: format!("synthetic:{fixture}:k={k}"),
            seed: Some(seed),
            series: data.series,
            truth: Some(data.truth),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    #[default]
    Mean,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub subseq_lengths: Vec<usize>,
    /// Run every length on every subject. When false, lengths are dealt to
    /// subjects in turn (length `i` on subject `i mod S`).
    pub repeat_per_subject: bool,
    pub aggregate: Aggregate,
}

impl SweepSpec {
    /// Sorted, deduplicated full sweep.
    pub fn new(mut lengths: Vec<usize>) -> Self {
        lengths.sort_unstable();
        lengths.dedup();
        Self {
            subseq_lengths: lengths,
            repeat_per_subject: true,
            aggregate: Aggregate::Mean,
        }
    }

    pub fn validate(&self, series_len: usize) -> Result<(), CliError> {
        if self.subseq_lengths.is_empty() {
            return Err(CliError::Validation("empty length sweep".into()));
        }
        if self.subseq_lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Validation("sweep lengths must be sorted and unique".into()));
        }
        if let Some(&l) = self.subseq_lengths.iter().find(|&&l| l < 2 || 2 * l > series_len) {
            return Err(CliError::Validation(format!(
                "subsequence length {l} outside 2..={} for a series of {series_len} samples",
                series_len / 2
            )));
        }
        Ok(())
    }

    fn jobs(&self, subjects: usize) -> Vec<(usize, usize)> {
        if self.repeat_per_subject {
            (0..subjects)
                .flat_map(|s| self.subseq_lengths.iter().map(move |&l| (s, l)))
                .collect()
        } else {
            self.subseq_lengths
                .iter()
                .enumerate()
                .map(|(i, &l)| (i % subjects, l))
                .collect()
        }
    }
}

/// Result document of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    pub schema: String,
    pub run_id: String,
    pub subject: String,
    pub origin: String,
    pub seed: Option<u64>,
    pub subseq_length: usize,
    pub config: PipelineConfig,
    pub n_samples: usize,
    pub n_channels: usize,
    pub channel_names: Vec<String>,
    pub sample_rate_hz: Option<f64>,
    pub boundaries: Vec<usize>,
    pub boundaries_seconds: Option<Vec<f64>>,
    pub order: Vec<usize>,
    pub ig_trace: Vec<f64>,
    pub k: usize,
    pub source: CandidateSource,
    /// Name of the channel whose candidates won, if any.
    pub source_channel: Option<String>,
    pub per_channel: Vec<ChannelOutcome>,
    pub truth: Option<Vec<usize>>,
    pub metrics: Option<EvalReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub run_id: String,
    pub profile_ms: f64,
    pub curve_ms: f64,
    pub search_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub document: RunDocument,
    pub timing: RunTiming,
    pub curves: Option<Vec<ShapeCurve>>,
}

/// Means of the scored runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub runs: usize,
    pub f_score: f64,
    pub precision: f64,
    pub recall: f64,
    pub rmse_norm: f64,
    pub mae_samples: f64,
}

impl MeanMetrics {
    pub fn of<'a>(reports: impl IntoIterator<Item = &'a EvalReport>) -> Option<Self> {
        let reports: Vec<&EvalReport> = reports.into_iter().collect();
        if reports.is_empty() {
            return None;
        }
        let mean = |f: fn(&EvalReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / reports.len() as f64;
        Some(Self {
            runs: reports.len(),
            f_score: mean(|r| r.f_score),
            precision: mean(|r| r.precision),
            recall: mean(|r| r.recall),
            rmse_norm: mean(|r| r.rmse_norm),
            mae_samples: mean(|r| r.mae_samples),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run_id: String,
    pub subject: String,
    pub subseq_length: usize,
    pub k: usize,
    pub source_channel: Option<String>,
    pub metrics: Option<EvalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthMean {
    pub subseq_length: usize,
    pub metrics: Option<MeanMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub run_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub settings: Settings,
    pub sweep: SweepSpec,
    pub runs: Vec<RunRow>,
    pub aggregate: Option<MeanMetrics>,
    pub per_length: Vec<LengthMean>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub runs: Vec<RunOutcome>,
    pub summary: Summary,
}

impl BenchReport {
    pub fn all_succeeded(&self) -> bool {
        self.summary.failures.is_empty()
    }
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Runs the pipeline once and scores it.
pub fn run_once(subject: &Subject, length: usize, settings: &Settings) -> Result<RunOutcome, CliError> {
    let series = &subject.series;
    let truth_segments = subject.truth.as_ref().map(|t| t.len() + 1);
    let cfg = settings.pipeline(length, truth_segments)?;
    let started = Instant::now();
    let result = run_espresso(series, &cfg)?;
    let total = started.elapsed();

    let run_id = format!("{}_L{length}", subject.name);
    let seg = &result.segmentation;
    let rate = series.sample_rate_hz();
    let metrics = subject.truth.as_ref().map(|truth| {
        let window = settings.window.samples(series.len(), rate);
        evaluate(truth, &seg.boundaries, series.len(), window)
    });
    let source_channel = match seg.source {
        CandidateSource::Channel(j) => series.names().get(j).cloned(),
        _ => None,
    };
    let document = RunDocument {
        schema: RUN_SCHEMA.to_string(),
        run_id: run_id.clone(),
        subject: subject.name.clone(),
        origin: subject.origin.clone(),
        seed: subject.seed,
        subseq_length: length,
        config: cfg,
        n_samples: series.len(),
        n_channels: series.n_channels(),
        channel_names: series.names().to_vec(),
        sample_rate_hz: rate,
        boundaries: seg.boundaries.clone(),
        boundaries_seconds: rate.map(|hz| seg.boundaries.iter().map(|&b| b as f64 / hz).collect()),
        order: seg.order.clone(),
        ig_trace: seg.ig_trace.clone(),
        k: seg.k,
        source: seg.source,
        source_channel,
        per_channel: result.per_channel.clone(),
        truth: subject.truth.clone(),
        metrics,
        warnings: result.warnings.clone(),
    };
    let timing = RunTiming {
        run_id,
        profile_ms: ms(result.timing.profile),
        curve_ms: ms(result.timing.curve),
        search_ms: ms(result.timing.search),
        total_ms: ms(total),
    };
    Ok(RunOutcome {
        document,
        timing,
        curves: result.curves,
    })
}

/// Runs every (subject, length) pair of the sweep. Failed runs are listed in
/// the summary rather than aborting the sweep.
pub fn run_benchmark(subjects: &[Subject], settings: &Settings, sweep: &SweepSpec) -> Result<BenchReport, CliError> {
    if subjects.is_empty() {
        return Err(CliError::Validation("no input series".into()));
    }
    if settings.mode != espresso::Mode::EntropyOnly {
        for s in subjects {
            sweep.validate(s.series.len())?;
        }
    }
    let mut names: Vec<&str> = subjects.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Validation("subject names must be unique".into()));
    }

    let jobs = sweep.jobs(subjects.len());
    let work = || -> Vec<Result<RunOutcome, Failure>> {
        jobs.par_iter()
            .map(|&(s, l)| {
                run_once(&subjects[s], l, settings).map_err(|e| Failure {
                    run_id: format!("{}_L{l}", subjects[s].name),
                    error: e.to_string(),
                })
            })
            .collect()
    };
    let results = match settings.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(o) => runs.push(o),
            Err(f) => failures.push(f),
        }
    }
    let summary = summarize(&runs, settings, sweep, failures);
    Ok(BenchReport { runs, summary })
}

fn summarize(runs: &[RunOutcome], settings: &Settings, sweep: &SweepSpec, failures: Vec<Failure>) -> Summary {
    let docs: Vec<&RunDocument> = runs.iter().map(|r| &r.document).collect();
    let per_length = sweep
        .subseq_lengths
        .iter()
        .map(|&l| LengthMean {
            subseq_length: l,
            metrics: MeanMetrics::of(
                docs.iter()
                    .filter(|d| d.subseq_length == l)
                    .filter_map(|d| d.metrics.as_ref()),
            ),
        })
        .collect();
    Summary {
        schema: SUMMARY_SCHEMA.to_string(),
        settings: settings.clone(),
        sweep: sweep.clone(),
        runs: docs
            .iter()
            .map(|d| RunRow {
                run_id: d.run_id.clone(),
                subject: d.subject.clone(),
                subseq_length: d.subseq_length,
                k: d.k,
                source_channel: d.source_channel.clone(),
                metrics: d.metrics.clone(),
            })
            .collect(),
        aggregate: MeanMetrics::of(docs.iter().filter_map(|d| d.metrics.as_ref())),
        per_length,
        failures,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_curve(path: &Path, curve: &ShapeCurve) -> Result<(), CliError> {
    let mut text = String::from("tick,value\n");
    for (t, v) in curve.values.iter().enumerate() {
        let _ = writeln!(text, "{t},{v}");
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes run documents, summary, timings and curves under `dir`.
pub fn write_report(report: &BenchReport, dir: &Path) -> Result<(), CliError> {
    let runs_dir = dir.join("runs");
    fs::create_dir_all(&runs_dir).map_err(|e| CliError::io(&runs_dir, e))?;
    for run in &report.runs {
        let doc = &run.document;
        write_json(&runs_dir.join(format!("{}.json", doc.run_id)), doc)?;
        if let Some(curves) = &run.curves {
            let curve_dir = dir.join("curves");
            fs::create_dir_all(&curve_dir).map_err(|e| CliError::io(&curve_dir, e))?;
            for (curve, name) in curves.iter().zip(&doc.channel_names) {
                write_curve(&curve_dir.join(format!("{}_{name}.csv", doc.run_id)), curve)?;
            }
        }
    }
    write_json(&dir.join("summary.json"), &report.summary)?;
    let timings: Vec<&RunTiming> = report.runs.iter().map(|r| &r.timing).collect();
    write_json(&dir.join("timing.json"), &timings)
}

fn cell(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

/// Fixed-width table of per-run metrics followed by the mean row.
pub fn summary_table(summary: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<32} {:>5} {:>3} {:>8} {:>6} {:>6} {:>6} {:>8} {:>8}",
        "run", "L", "k", "source", "F", "P", "R", "RMSE", "MAE"
    );
    for row in &summary.runs {
        let m = row.metrics.as_ref();
        let _ = writeln!(
            out,
            "{:<32} {:>5} {:>3} {:>8} {:>6} {:>6} {:>6} {:>8} {:>8}",
            row.run_id,
            row.subseq_length,
            row.k,
            row.source_channel.as_deref().unwrap_or("-"),
            cell(m.map(|m| m.f_score), 3),
            cell(m.map(|m| m.precision), 3),
            cell(m.map(|m| m.recall), 3),
            cell(m.map(|m| m.rmse_norm), 4),
            cell(m.map(|m| m.mae_samples), 1),
        );
    }
    if let Some(a) = &summary.aggregate {
        let _ = writeln!(
            out,
            "{:<32} {:>5} {:>3} {:>8} {:>6.3} {:>6.3} {:>6.3} {:>8.4} {:>8.1}",
            format!("mean over {} run(s)", a.runs),
            "",
            "",
            "",
            a.f_score,
            a.precision,
            a.recall,
            a.rmse_norm,
            a.mae_samples
        );
    }
    for f in &summary.failures {
        let _ = writeln!(out, "FAILED {}: {}", f.run_id, f.error);
    }
    out
}
