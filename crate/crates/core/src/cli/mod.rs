//! The `genderscope` command line.
//!
//! Stages: `sample` draws a subset, `polarity` and `analyze` count gendered
//! words on its English and Spanish sides, `validate` scores predictions
//! against gold annotations, `epicene` breaks down epicene nouns and
//! `report` tabulates several analyses side by side.
//!
//! Exit codes: 0 success, 2 usage error, 3 I/O or alignment error,
//! 4 backend or configuration error.

mod commands;
pub mod config;
pub mod manifest;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::llm_backend::BackendError;
use crate::metrics::{GoldError, ScoreMode};
use crate::polarity::{LexiconError, Side};
use crate::report::{Format, ReportError};

pub use config::{BackendArgs, EnvSource, ProcessEnv};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Backend(_) => 4,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::InvalidParams(_) | CorpusError::EmptySample => CliError::Usage(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        CliError::Backend(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<GoldError> for CliError {
    fn from(e: GoldError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "genderscope", version, about = "Measure gender representation bias in parallel Spanish/English corpora")]
pub struct Cli {
    /// TOML config file with [sample], [backend], [analyze] and [output] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run manifest (JSONL, appended on every run).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a seeded random subset of sentence pairs.
    Sample(SampleArgs),
    /// Count English gendered tokens in one or more subsets.
    Polarity(PolarityArgs),
    /// Annotate the Spanish side of a subset with an LLM.
    Analyze(AnalyzeArgs),
    /// Score predictions against gold annotations.
    Validate(ValidateArgs),
    /// Tabulate epicene nouns found in analyses.
    Epicene(EpiceneArgs),
    /// Person/gender count table for one or more analyses.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Spanish side, one sentence per line.
    #[arg(long)]
    pub source: PathBuf,
    /// English side, line-aligned with --source.
    #[arg(long)]
    pub target: PathBuf,
    /// Number of pairs to draw (default 1000).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// z-score for the sample-size bound (2.576 for 99% confidence).
    #[arg(long)]
    pub z: Option<f64>,
    /// Margin of error for the sample-size bound.
    #[arg(long)]
    pub margin: Option<f64>,
    /// Population proportion for the sample-size bound.
    #[arg(long)]
    pub proportion: Option<f64>,
    /// Subset JSON file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PolarityArgs {
    /// Subset files, optionally as LABEL=PATH.
    #[arg(required = true)]
    pub subsets: Vec<String>,
    #[arg(long, value_enum, default_value = "target")]
    pub side: Side,
    /// JSON lexicon {male: [...], female: [...]}.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Subset JSON file produced by `sample`.
    pub subset: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// JSONL file for per-sentence results.
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset label in the summary table.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Gold annotations (JSON or "Frase:" text form).
    #[arg(long)]
    pub gold: PathBuf,
    /// Prediction JSONL files, optionally as MODEL=PATH; each file is one run.
    #[arg(long)]
    pub predictions: Vec<String>,
    /// Model label for predictions given without one.
    #[arg(long)]
    pub model_label: Option<String>,
    /// Without --predictions, run the backend this many times over the gold sentences.
    #[arg(long, default_value_t = 1)]
    pub repetitions: u32,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long, value_enum, default_value = "pooled")]
    pub mode: ScoreMode,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EpiceneArgs {
    /// Analysis JSONL files; their annotations are pooled.
    #[arg(required = true)]
    pub analyses: Vec<PathBuf>,
    /// Plain-text lexicon, one surface per line.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Analysis JSONL files, optionally as LABEL=PATH.
    #[arg(required = true)]
    pub analyses: Vec<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command line, writing human-facing output to `stdout`.
pub fn run(cli: Cli, env: &dyn EnvSource, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => config::ConfigFile::load(path)?,
        None => config::ConfigFile::default(),
    };
    let manifest_path = config::resolve_manifest(cli.manifest.clone(), &file, env)?;
    let ctx = commands::Context {
        file: &file,
        env,
        manifest_path: &manifest_path,
        config_path: cli.config.as_deref(),
    };
    match cli.command {
        Command::Sample(args) => commands::sample(&ctx, args, stdout),
        Command::Polarity(args) => commands::polarity(&ctx, args, stdout),
        Command::Analyze(args) => commands::analyze(&ctx, args, stdout),
        Command::Validate(args) => commands::validate_cmd(&ctx, args, stdout),
        Command::Epicene(args) => commands::epicene(&ctx, args, stdout),
        Command::Report(args) => commands::report(&ctx, args, stdout),
    }
}
