use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use espresso_cli::bench::{run_benchmark, summary_table, write_report, BenchReport, Subject, SweepSpec};
use espresso_cli::config::{Overrides, Settings};
use espresso_cli::ingest::{labels_from_boundaries, read_boundaries, write_boundaries, write_csv, DatasetManifest};
use espresso_cli::synth;
use espresso_cli::CliError;

/// Hybrid shape and entropy segmentation of multichannel time series.
#[derive(Debug, Parser)]
#[command(name = "espresso", version)]
struct Cli {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment one CSV file.
    Run {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        settings: Overrides,
    },
    /// Sweep subsequence lengths over CSV files or synthetic subjects.
    Bench {
        #[command(flatten)]
        input: InputArgs,
        /// Synthetic regime (C-R, C-NR, NC-R, NC-NR) or fixture (aba, signal-noise).
        #[arg(long)]
        synthetic: Option<String>,
        /// Segments per synthetic subject.
        #[arg(long, default_value_t = 3)]
        segments: usize,
        /// Number of synthetic subjects, seeded from --seed upwards.
        #[arg(long, default_value_t = 1)]
        subjects: u64,
        /// Run each length on one subject only, in turn.
        #[arg(long)]
        no_repeat: bool,
        #[command(flatten)]
        settings: Overrides,
    },
    /// Write a synthetic dataset as CSV with a label column.
    Synth {
        /// Regime (C-R, C-NR, NC-R, NC-NR) or fixture (aba, signal-noise).
        #[arg(long, default_value = "NC-R")]
        regime: String,
        #[arg(long, default_value_t = 3)]
        segments: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the true boundaries, one per line.
        #[arg(long)]
        boundaries: Option<PathBuf>,
    },
    /// Score estimated boundaries against the truth.
    Eval {
        /// Boundary-list file with the truth.
        #[arg(long)]
        truth: PathBuf,
        /// Boundary-list file with the estimate.
        #[arg(long)]
        estimate: PathBuf,
        /// Series length.
        #[arg(short, long)]
        n: usize,
        /// Window in seconds (samples without --rate).
        #[arg(long)]
        window_seconds: Option<f64>,
        /// Window as a fraction of the series length.
        #[arg(long, default_value_t = 0.02)]
        window_fraction: f64,
        #[arg(long)]
        rate: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// CSV input files with a header row.
    #[arg(short, long)]
    input: Vec<PathBuf>,
    /// Column holding per-sample segment labels.
    #[arg(long)]
    label_column: Option<String>,
    /// Channel columns to read, comma separated (default: all but the label).
    #[arg(long, value_delimiter = ',')]
    channels: Vec<String>,
    /// Sampling rate in Hz.
    #[arg(long)]
    rate: Option<f64>,
    /// Boundary-list file with the truth (overrides labels; single input only).
    #[arg(long)]
    truth: Option<PathBuf>,
}

impl InputArgs {
    fn subjects(&self) -> Result<Vec<Subject>, CliError> {
        if self.truth.is_some() && self.input.len() > 1 {
            return Err(CliError::Validation("--truth needs exactly one --input".into()));
        }
        let mut out = Vec::with_capacity(self.input.len());
        for path in &self.input {
            let manifest = DatasetManifest {
                label_column: self.label_column.clone(),
                channel_columns: self.channels.clone(),
                sample_rate_hz: self.rate,
                ..DatasetManifest::new(path)
            };
            let mut subject = Subject::from_manifest(&manifest)?;
            if let Some(t) = &self.truth {
                subject.truth = Some(read_boundaries(t)?);
            }
            out.push(subject);
        }
        Ok(out)
    }
}

fn settings(config: Option<&Path>, flags: Overrides) -> Result<Settings, CliError> {
    let file = config.map(Overrides::from_file).transpose()?.unwrap_or_default();
    Settings::resolve(flags.or(file))
}

fn finish(report: &BenchReport, settings: &Settings) -> Result<(), CliError> {
    write_report(report, &settings.output_dir)?;
    print!("{}", summary_table(&report.summary));
    println!("results written to {}", settings.output_dir.display());
    if report.all_succeeded() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{} run(s) failed",
            report.summary.failures.len()
        )))
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Run { input, settings: flags } => {
            if input.input.len() != 1 {
                return Err(CliError::Validation("run takes exactly one --input".into()));
            }
            let st = settings(config, flags)?;
            let subjects = input.subjects()?;
            let report = run_benchmark(&subjects, &st, &SweepSpec::new(st.lengths.clone()))?;
            for run in &report.runs {
                log::info!("{}: boundaries {:?}", run.document.run_id, run.document.boundaries);
            }
            finish(&report, &st)
        }
        Command::Bench {
            input,
            synthetic,
            segments,
            subjects,
            no_repeat,
            settings: flags,
        } => {
            let st = settings(config, flags)?;
            let mut all = input.subjects()?;
            if let Some(fixture) = &synthetic {
                for seed in st.seed..st.seed + subjects {
                    all.push(Subject::synthetic(fixture, segments, seed)?);
                }
            }
            if all.is_empty() {
                return Err(CliError::Validation("bench needs --input or --synthetic".into()));
            }
            let mut sweep = SweepSpec::new(st.lengths.clone());
            sweep.repeat_per_subject = !no_repeat;
            let report = run_benchmark(&all, &st, &sweep)?;
            finish(&report, &st)
        }
        Command::Synth {
            regime,
            segments,
            seed,
            out,
            boundaries,
        } => {
            let data = synth::fixture(&regime, segments, seed)?;
            let labels = labels_from_boundaries(data.series.len(), &data.truth);
            write_csv(&out, &data.series, Some(&labels))?;
            if let Some(path) = boundaries {
                write_boundaries(&path, &data.truth)?;
            }
            println!(
                "wrote {} samples x {} channels to {} (seed {seed}, boundaries {:?})",
                data.series.len(),
                data.series.n_channels(),
                out.display(),
                data.truth
            );
            Ok(())
        }
        Command::Eval {
            truth,
            estimate,
            n,
            window_seconds,
            window_fraction,
            rate,
        } => {
            let truth = read_boundaries(&truth)?;
            let estimate = read_boundaries(&estimate)?;
            let window = match window_seconds {
                Some(s) => espresso::window_samples(s, rate),
                None => (window_fraction * n as f64).round() as usize,
            };
            let report = espresso::evaluate(&truth, &estimate, n, window);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
