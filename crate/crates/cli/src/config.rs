//! Run settings from built-in defaults, an optional TOML file and
//! command-line flags, in increasing order of precedence.

use std::path::{Path, PathBuf};

use clap::Args;
use espresso::{
    ChainThreshold, CurveKind, DistanceKind, Mode, PipelineConfig, Pooling, StopRule,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Parses a snake_case enum name; hyphens are accepted for underscores.
pub fn parse_name<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    let name = s.trim().to_ascii_lowercase().replace('-', "_");
    serde_json::from_value(serde_json::Value::String(name)).map_err(|_| format!("unknown value {s:?}"))
}

/// Every tunable, all optional. Used both as the TOML file schema and as the
/// flag set shared by `run` and `bench`.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    /// Subsequence length L.
    #[arg(short = 'L', long)]
    pub length: Option<usize>,
    /// Sweep of subsequence lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    /// hybrid, shape-only or entropy-only.
    #[arg(long, value_parser = parse_name::<Mode>)]
    pub mode: Option<Mode>,
    /// wcac or ac.
    #[arg(long, value_parser = parse_name::<CurveKind>)]
    pub curve: Option<CurveKind>,
    /// per-channel, pooled or dense-grid.
    #[arg(long, value_parser = parse_name::<Pooling>)]
    pub pooling: Option<Pooling>,
    /// znorm or plain.
    #[arg(long, value_parser = parse_name::<DistanceKind>)]
    pub distance: Option<DistanceKind>,
    /// Chain threshold as a multiple of the median profile distance.
    #[arg(long)]
    pub chain_beta: Option<f64>,
    /// Moving-average width before minima extraction (1 = off). Default L.
    #[arg(long)]
    pub smoothing: Option<usize>,
    /// Candidates closer than this to either curve end are dropped. Default L.
    #[arg(long)]
    pub margin: Option<usize>,
    /// Minimum spacing between candidates. Default L.
    #[arg(long)]
    pub min_gap: Option<usize>,
    /// Spacing of the entropy-only candidate grid.
    #[arg(long)]
    pub grid_step: Option<usize>,
    /// Scoring window in seconds (samples when the rate is unknown).
    #[arg(long)]
    pub window_seconds: Option<f64>,
    /// Scoring window as a fraction of the series length (default 0.02).
    #[arg(long)]
    pub window_fraction: Option<f64>,
    /// Fixed number of segments.
    #[arg(short, long)]
    pub k: Option<usize>,
    /// Pick the number of segments at the knee of the gain trace.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub auto_k: Option<bool>,
    /// Boundaries explored before the knee cut.
    #[arg(long)]
    pub max_boundaries: Option<usize>,
    /// Seed for synthetic inputs.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(short, long = "out")]
    pub output_dir: Option<PathBuf>,
    /// Also write per-channel curves as CSV.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub write_curves: Option<bool>,
    /// Worker threads for sweep runs.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(toml::from_str(&text)?)
    }

    /// Fields of `self` win; unset ones fall back to `lower`.
    pub fn or(self, lower: Self) -> Self {
        Self {
            length: self.length.or(lower.length),
            lengths: self.lengths.or(lower.lengths),
            mode: self.mode.or(lower.mode),
            curve: self.curve.or(lower.curve),
            pooling: self.pooling.or(lower.pooling),
            distance: self.distance.or(lower.distance),
            chain_beta: self.chain_beta.or(lower.chain_beta),
            smoothing: self.smoothing.or(lower.smoothing),
            margin: self.margin.or(lower.margin),
            min_gap: self.min_gap.or(lower.min_gap),
            grid_step: self.grid_step.or(lower.grid_step),
            window_seconds: self.window_seconds.or(lower.window_seconds),
            window_fraction: self.window_fraction.or(lower.window_fraction),
            k: self.k.or(lower.k),
            auto_k: self.auto_k.or(lower.auto_k),
            max_boundaries: self.max_boundaries.or(lower.max_boundaries),
            seed: self.seed.or(lower.seed),
            output_dir: self.output_dir.or(lower.output_dir),
            write_curves: self.write_curves.or(lower.write_curves),
            jobs: self.jobs.or(lower.jobs),
        }
    }
}

/// Scoring window rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Seconds(f64),
    Fraction(f64),
}

impl Window {
    pub fn samples(self, n: usize, sample_rate_hz: Option<f64>) -> usize {
        match self {
            Self::Seconds(s) => espresso::window_samples(s, sample_rate_hz),
            Self::Fraction(f) => (f * n as f64).round() as usize,
        }
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub lengths: Vec<usize>,
    pub mode: Mode,
    pub curve: CurveKind,
    pub pooling: Pooling,
    pub distance: DistanceKind,
    pub chain_beta: f64,
    pub smoothing: Option<usize>,
    pub margin: Option<usize>,
    pub min_gap: Option<usize>,
    pub grid_step: usize,
    pub window: Window,
    pub k: Option<usize>,
    pub auto_k: bool,
    pub max_boundaries: Option<usize>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub write_curves: bool,
    pub jobs: Option<usize>,
}

impl Settings {
    /// Applies defaults. A subsequence length is required, either `length`
    /// or a `lengths` sweep.
    pub fn resolve(o: Overrides) -> Result<Self, CliError> {
        let mut lengths = match (o.lengths, o.length) {
            (Some(v), _) if !v.is_empty() => v,
            (_, Some(l)) => vec![l],
            _ => {
                return Err(CliError::Validation(
                    "a subsequence length is required (--length or --lengths)".into(),
                ))
            }
        };
        lengths.sort_unstable();
        lengths.dedup();
        let window = match (o.window_seconds, o.window_fraction) {
            (Some(s), _) => Window::Seconds(s),
            (None, f) => Window::Fraction(f.unwrap_or(0.02)),
        };
        Ok(Self {
            lengths,
            mode: o.mode.unwrap_or_default(),
            curve: o.curve.unwrap_or_default(),
            pooling: o.pooling.unwrap_or_default(),
            distance: o.distance.unwrap_or_default(),
            chain_beta: o.chain_beta.unwrap_or(2.0),
            smoothing: o.smoothing,
            margin: o.margin,
            min_gap: o.min_gap,
            grid_step: o.grid_step.unwrap_or(1),
            window,
            k: o.k,
            auto_k: o.auto_k.unwrap_or(false),
            max_boundaries: o.max_boundaries,
            seed: o.seed.unwrap_or(0),
            output_dir: o.output_dir.unwrap_or_else(|| PathBuf::from("espresso-out")),
            write_curves: o.write_curves.unwrap_or(false),
            jobs: o.jobs,
        })
    }

    /// Stop rule: a fixed `k` wins, then the knee rule when asked for, then
    /// the true segment count when known, else the knee rule.
    pub fn stop_rule(&self, truth_segments: Option<usize>) -> StopRule {
        if let Some(k) = self.k {
            return StopRule::Segments(k);
        }
        if self.auto_k || truth_segments.is_none() {
            let max_boundaries = self
                .max_boundaries
                .or(truth_segments.map(|k| 2 * k));
            return StopRule::Knee { max_boundaries };
        }
        StopRule::Segments(truth_segments.expect("checked above"))
    }

    pub fn pipeline(&self, length: usize, truth_segments: Option<usize>) -> Result<PipelineConfig, CliError> {
        let mut cfg = PipelineConfig::new(length)?
            .with_mode(self.mode)
            .with_curve(self.curve)
            .with_stop(self.stop_rule(truth_segments));
        cfg.pooling = self.pooling;
        cfg.distance = self.distance;
        cfg.chain = ChainThreshold::MedianMultiple(self.chain_beta);
        cfg.dense_grid_step = self.grid_step;
        if let Some(w) = self.smoothing {
            cfg.candidates.smoothing_width = w;
        }
        if let Some(m) = self.margin {
            cfg.candidates.margin = m;
        }
        if let Some(g) = self.min_gap {
            cfg.candidates.min_gap = g;
        }
        cfg.keep_curves = self.write_curves;
        Ok(cfg)
    }
}
