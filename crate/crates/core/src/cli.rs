//! The `df1` command-line front end.
//!
//! Exit codes: 0 success, 1 validation or evaluation failure, 2 usage error.
//! Data goes to `--output` or stdout, diagnostics to stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::corpus::{self, Corpus, CorpusError, CorpusFormat};
use crate::demo::{self, DemoConfig, DemoError};
use crate::depth::{self, DepthError};
use crate::metric::{self, LambdaGrid, MetricError};
use crate::report::{self, OutputFormat, WeightsEntry};

#[derive(Debug, Parser)]
#[command(name = "df1", version, about = "Depth-weighted F1 for cross-domain text classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a corpus (and optionally a prediction file) for problems.
    Validate {
        #[command(flatten)]
        input: CorpusArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// TTE depth of every source and target sample w.r.t. the source set.
    Depth {
        #[command(flatten)]
        input: CorpusArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// The source median (deepest source sample).
    Median {
        #[command(flatten)]
        input: CorpusArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Q statistic between the source and target domains.
    Qstat {
        #[command(flatten)]
        input: CorpusArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Per-sample depth weights for each λ subset.
    Weights {
        #[command(flatten)]
        input: CorpusArgs,
        #[arg(long, default_value = "0,25,50,75,90", value_parser = parse_grid)]
        lambdas: LambdaGrid,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Micro-F1 and DF1 across a λ grid.
    Evaluate {
        #[command(flatten)]
        input: CorpusArgs,
        #[arg(long, default_value = "0,25,50,75,90", value_parser = parse_grid)]
        lambdas: LambdaGrid,
        #[command(flatten)]
        out: OutputArgs,
        /// Record the current time in the report metadata.
        #[arg(long)]
        timestamp: bool,
    },
    /// Synthetic model A / model B demonstration.
    Demo {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
        seeds: u64,
        #[arg(long, default_value = "0,25,50,75,90", value_parser = parse_grid)]
        lambdas: LambdaGrid,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
        /// Directory for `model_a.csv` and `model_b.csv` (or `demo.json`).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<LambdaGrid, String> {
    s.parse().map_err(|e: MetricError| e.to_string())
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Depth(#[from] DepthError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Demo(#[from] DemoError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus failed validation with {0} issue(s)")]
    Invalid(usize),
}

fn write_output(path: Option<&Path>, data: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, data).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(data.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn load(input: &CorpusArgs) -> Result<Corpus, CliError> {
    let corpus = corpus::load_corpus(&input.corpus, CorpusFormat::Jsonl)?;
    match &input.predictions {
        Some(p) => Ok(corpus::attach_predictions(&corpus, p)?),
        None => Ok(corpus),
    }
}

/// Loads, validates, and fails on anything worse than a warning.
fn load_checked(input: &CorpusArgs) -> Result<Corpus, CliError> {
    let corpus = load(input)?;
    let report = corpus::validate_corpus(&corpus);
    for issue in &report.issues {
        if issue.code.is_warning() {
            log::warn!("{} {:?}: {}", issue.id, issue.code, issue.message);
        } else {
            log::error!("{} {:?}: {}", issue.id, issue.code, issue.message);
        }
    }
    if report.has_errors() {
        return Err(CliError::Invalid(report.issues.len()));
    }
    Ok(corpus)
}

fn source_depths(corpus: &Corpus) -> Result<depth::DepthTable, CliError> {
    let source = corpus.source_vectors();
    Ok(depth::depth_scores(&source, &source)?)
}

/// Executes one parsed invocation; `Ok(false)` means "ran, but the input is
/// not valid" (exit 1 without an error message).
pub fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Validate { input, out } => {
            let corpus = load(&input)?;
            let report = corpus::validate_corpus(&corpus);
            write_output(out.output.as_deref(), &report::render_validation(&report, out.format))?;
            Ok(report.ok)
        }
        Command::Depth { input, out } => {
            let corpus = load_checked(&input)?;
            let src = source_depths(&corpus)?;
            let tgt = depth::depth_scores(&corpus.target_vectors(), &corpus.source_vectors())?;
            write_output(out.output.as_deref(), &report::render_depths(&corpus, &src, &tgt, out.format))?;
            Ok(true)
        }
        Command::Median { input, out } => {
            let corpus = load_checked(&input)?;
            let ids: Vec<&str> = corpus.source.iter().map(|s| s.id.as_str()).collect();
            let median = depth::source_median(&source_depths(&corpus)?, &ids)?;
            write_output(out.output.as_deref(), &report::render_median(&median, out.format))?;
            Ok(true)
        }
        Command::Qstat { input, out } => {
            let corpus = load_checked(&input)?;
            let analysis = metric::analyze(&corpus)?;
            write_output(out.output.as_deref(), &report::render_q(&analysis.q, out.format))?;
            Ok(true)
        }
        Command::Weights { input, lambdas, out } => {
            let corpus = load_checked(&input)?;
            let analysis = metric::analyze(&corpus)?;
            let mut entries = Vec::with_capacity(lambdas.len());
            for lambda in lambdas.iter() {
                let subset = metric::lambda_subset(&analysis.target_depths, lambda);
                let table = match metric::depth_weights(analysis.median.depth, &analysis.target_depths, &subset) {
                    Ok(t) => Some(t),
                    Err(MetricError::DegenerateWeights) => {
                        log::warn!("lambda {lambda}: DEGENERATE_WEIGHTS");
                        None
                    }
                    Err(e) => return Err(e.into()),
                };
                entries.push(WeightsEntry { lambda, kept_indices: subset.kept_indices, table });
            }
            let data = report::render_weights(&corpus, &analysis.target_depths, &entries, out.format);
            write_output(out.output.as_deref(), &data)?;
            Ok(true)
        }
        Command::Evaluate { input, lambdas, out, timestamp } => {
            let corpus = load_checked(&input)?;
            let mut report = metric::evaluate_sweep(&corpus, &lambdas)?;
            for row in report.rows.iter().filter(|r| r.degenerate) {
                log::warn!("lambda {}: DEGENERATE_WEIGHTS, df1 left empty", row.lambda);
            }
            report.metadata.corpus = Some(input.corpus.display().to_string());
            if timestamp {
                report.metadata.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
            }
            write_output(out.output.as_deref(), &report::render_report(&report, out.format))?;
            Ok(true)
        }
        Command::Demo { seed, seeds, lambdas, format, output } => {
            let cfg = DemoConfig { seed, ..DemoConfig::default() };
            let summary = demo::run_demo_seeds(&cfg, &lambdas, seeds)?;
            match output {
                None => write_output(None, &report::render_demo(&summary, format))?,
                Some(dir) => {
                    fs::create_dir_all(&dir)
                        .map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
                    match format {
                        OutputFormat::Csv => {
                            write_output(Some(&dir.join("model_a.csv")), &report::render_curve(&summary.model_a))?;
                            write_output(Some(&dir.join("model_b.csv")), &report::render_curve(&summary.model_b))?;
                        }
                        OutputFormat::Json => {
                            write_output(Some(&dir.join("demo.json")), &report::render_demo(&summary, format))?
                        }
                    }
                }
            }
            Ok(true)
        }
    }
}

/// Parses `args` and runs the command, mapping outcomes to exit codes.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
