//! Settings resolution: command-line flags override the config file, which
//! overrides `GENDERSCOPE_*` environment variables, which override the
//! built-in defaults.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::llm_backend::{BackendConfig, PriceTable, DEFAULT_API_KEY_ENV};
use crate::report::Format;

pub const ENV_PREFIX: &str = "GENDERSCOPE_";

/// Source of environment variables; a map in tests, the process
/// environment otherwise.
pub trait EnvSource {
    fn get(&self, name: &str) -> Option<String>;
}

pub struct ProcessEnv;

impl EnvSource for ProcessEnv {
    fn get(&self, name: &str) -> Option<String> {
        std::env::var(name).ok().filter(|v| !v.is_empty())
    }
}

impl EnvSource for HashMap<String, String> {
    fn get(&self, name: &str) -> Option<String> {
        HashMap::get(self, name).cloned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Replay,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "http" => Ok(BackendKind::Http),
            "replay" => Ok(BackendKind::Replay),
            other => Err(format!("unknown backend {other:?}")),
        }
    }
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s.to_ascii_lowercase().as_str() {
        "text" => Ok(Format::Text),
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        other => Err(format!("unknown format {other:?}")),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub z: Option<f64>,
    pub margin: Option<f64>,
    pub proportion: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    pub kind: Option<BackendKind>,
    pub endpoint_url: Option<String>,
    pub model_id: Option<String>,
    pub api_key_env: Option<String>,
    pub timeout_secs: Option<f64>,
    pub max_retries: Option<u32>,
    pub replay_fixture: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub prices: Option<PriceTable>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSection {
    pub max_in_flight: Option<usize>,
    pub parse_retries: Option<u32>,
    pub template: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<String>,
    pub manifest: Option<PathBuf>,
}

/// The TOML config file: one section per concern, all keys optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub sample: SampleSection,
    #[serde(default)]
    pub backend: BackendSection,
    #[serde(default)]
    pub analyze: AnalyzeSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Picks the first available layer. Environment values are parsed with
/// `parse` and a bad value is a usage error.
pub fn layered<T>(
    flag: Option<T>,
    file: Option<T>,
    env: &dyn EnvSource,
    var: &str,
    parse: impl Fn(&str) -> Result<T, String>,
    default: T,
) -> Result<T, CliError> {
    if let Some(v) = flag {
        return Ok(v);
    }
    if let Some(v) = file {
        return Ok(v);
    }
    let name = format!("{ENV_PREFIX}{var}");
    if let Some(raw) = env.get(&name) {
        return parse(&raw).map_err(|e| CliError::Usage(format!("{name}={raw:?}: {e}")));
    }
    Ok(default)
}

fn from_str_parser<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse::<T>().map_err(|e| e.to_string())
}

fn optional<T>(
    flag: Option<T>,
    file: Option<T>,
    env: &dyn EnvSource,
    var: &str,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<T>, CliError> {
    layered(flag.map(Some), file.map(Some), env, var, |s| parse(s).map(Some), None)
}

/// Backend-related flags as given on the command line.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct BackendArgs {
    /// Completion backend.
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Chat-completions URL for the HTTP backend.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    /// Request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// JSONL fixture for the replay backend.
    #[arg(long)]
    pub replay_fixture: Option<PathBuf>,
    /// JSONL response cache.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Price per 1K input tokens.
    #[arg(long, requires = "price_out")]
    pub price_in: Option<f64>,
    /// Price per 1K output tokens.
    #[arg(long, requires = "price_in")]
    pub price_out: Option<f64>,
    /// Prompt template JSON ({template_text, examples}).
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// Concurrent requests.
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// Re-asks when a response has no parsable line.
    #[arg(long)]
    pub parse_retries: Option<u32>,
}

/// Everything a backend-using command needs, after resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedBackend {
    pub kind: BackendKind,
    pub http: BackendConfig,
    pub replay_fixture: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub template: Option<PathBuf>,
    pub max_in_flight: usize,
    pub parse_retries: u32,
}

pub fn resolve_backend(
    args: &BackendArgs,
    file: &ConfigFile,
    env: &dyn EnvSource,
) -> Result<ResolvedBackend, CliError> {
    let b = &file.backend;
    let defaults = BackendConfig::default();
    let kind = layered(args.backend, b.kind, env, "BACKEND", |s| s.parse(), BackendKind::Http)?;
    let default_model = match kind {
        BackendKind::Http => defaults.model_id.clone(),
        BackendKind::Replay => "replay".to_string(),
    };
    let prices = match (args.price_in, args.price_out) {
        (Some(i), Some(o)) => Some(PriceTable {
            input_per_1k: i,
            output_per_1k: o,
        }),
        _ => b.prices,
    };
    let http = BackendConfig {
        endpoint_url: layered(
            args.endpoint.clone(),
            b.endpoint_url.clone(),
            env,
            "ENDPOINT",
            |s| Ok(s.to_string()),
            defaults.endpoint_url,
        )?,
        model_id: layered(
            args.model.clone(),
            b.model_id.clone(),
            env,
            "MODEL",
            |s| Ok(s.to_string()),
            default_model,
        )?,
        api_key_env: layered(
            args.api_key_env.clone(),
            b.api_key_env.clone(),
            env,
            "API_KEY_ENV",
            |s| Ok(s.to_string()),
            DEFAULT_API_KEY_ENV.to_string(),
        )?,
        timeout_secs: layered(args.timeout, b.timeout_secs, env, "TIMEOUT", from_str_parser, defaults.timeout_secs)?,
        max_retries: layered(args.max_retries, b.max_retries, env, "MAX_RETRIES", from_str_parser, defaults.max_retries)?,
        prices,
    };
    let max_in_flight = layered(
        args.max_in_flight,
        file.analyze.max_in_flight,
        env,
        "MAX_IN_FLIGHT",
        from_str_parser,
        1,
    )?;
    if max_in_flight == 0 {
        return Err(CliError::Usage("max_in_flight must be at least 1".into()));
    }
    Ok(ResolvedBackend {
        kind,
        http,
        replay_fixture: optional(
            args.replay_fixture.clone(),
            b.replay_fixture.clone(),
            env,
            "REPLAY_FIXTURE",
            |s| Ok(PathBuf::from(s)),
        )?,
        cache: optional(args.cache.clone(), b.cache.clone(), env, "CACHE", |s| Ok(PathBuf::from(s)))?,
        template: optional(
            args.template.clone(),
            file.analyze.template.clone(),
            env,
            "TEMPLATE",
            |s| Ok(PathBuf::from(s)),
        )?,
        max_in_flight,
        parse_retries: layered(
            args.parse_retries,
            file.analyze.parse_retries,
            env,
            "PARSE_RETRIES",
            from_str_parser,
            0,
        )?,
    })
}

pub fn resolve_format(flag: Option<Format>, file: &ConfigFile, env: &dyn EnvSource) -> Result<Format, CliError> {
    let from_file = file
        .output
        .format
        .as_deref()
        .map(parse_format)
        .transpose()
        .map_err(|e| CliError::Usage(format!("config file output.format: {e}")))?;
    layered(flag, from_file, env, "FORMAT", parse_format, Format::Text)
}

pub fn resolve_manifest(flag: Option<PathBuf>, file: &ConfigFile, env: &dyn EnvSource) -> Result<PathBuf, CliError> {
    layered(
        flag,
        file.output.manifest.clone(),
        env,
        "MANIFEST",
        |s| Ok(PathBuf::from(s)),
        PathBuf::from("genderscope-manifest.jsonl"),
    )
}

/// Sampling settings after resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedSample {
    pub n: usize,
    pub seed: u64,
    pub z: f64,
    pub margin: f64,
    pub proportion: f64,
}

pub fn resolve_sample(
    n: Option<usize>,
    seed: Option<u64>,
    z: Option<f64>,
    margin: Option<f64>,
    proportion: Option<f64>,
    file: &ConfigFile,
    env: &dyn EnvSource,
) -> Result<ResolvedSample, CliError> {
    let s = &file.sample;
    Ok(ResolvedSample {
        n: layered(n, s.n, env, "N", from_str_parser, 1000)?,
        seed: layered(seed, s.seed, env, "SEED", from_str_parser, 0)?,
        z: layered(z, s.z, env, "Z", from_str_parser, 2.576)?,
        margin: layered(margin, s.margin, env, "MARGIN", from_str_parser, 0.05)?,
        proportion: layered(proportion, s.proportion, env, "PROPORTION", from_str_parser, 0.5)?,
    })
}
