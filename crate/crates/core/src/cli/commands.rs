use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::{self, BackendKind, ConfigFile, EnvSource, ResolvedBackend};
use super::manifest::RunManifest;
use super::{AnalyzeArgs, CliError, EpiceneArgs, PolarityArgs, ReportArgs, SampleArgs, ValidateArgs};
use crate::annotation::{analyze_subset, AnalyzeOptions, CorpusAnalysis, PromptTemplate};
use crate::corpus::{
    load_parallel_corpus, required_sample_size, sample_subset, SampleSubset, SamplingParams,
    SentencePair,
};
use crate::llm_backend::{
    CachedBackend, CompletionBackend, CostLedger, HttpBackend, ReplayBackend,
};
use crate::metrics::{
    aggregate, default_epicene_lexicon, epicene_breakdown, load_epicene_lexicon, validate,
    GoldSet,
};
use crate::polarity::{default_lexicon, polarity_over_subset, Side, TokenLexicon};
use crate::report::{
    emit_epicene_table, emit_llm_table, emit_polarity_table, emit_validation_table, LlmRow,
    PolarityRow,
};

pub(super) struct Context<'a> {
    pub file: &'a ConfigFile,
    pub env: &'a dyn EnvSource,
    pub manifest_path: &'a Path,
    pub config_path: Option<&'a Path>,
}

impl Context<'_> {
    fn manifest(&self, command: &str, config: serde_json::Value) -> Result<RunManifest, CliError> {
        let mut m = RunManifest::new(command, config);
        if let Some(p) = self.config_path {
            m.input(p)?;
        }
        Ok(m)
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(CliError::from),
    }
}

/// `LABEL=PATH`, or a bare path labelled by its file stem.
fn labeled(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((label, path)) if !label.is_empty() && !path.is_empty() => {
            (label.to_string(), PathBuf::from(path))
        }
        _ => {
            let path = PathBuf::from(arg);
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            (label, path)
        }
    }
}

fn read_analysis(path: &Path) -> Result<CorpusAnalysis, CliError> {
    CorpusAnalysis::read_file(path)
        .map_err(|e| CliError::Io(format!("cannot read analysis {}: {e}", path.display())))
}

pub(super) fn sample(ctx: &Context<'_>, args: SampleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let s = config::resolve_sample(args.n, args.seed, args.z, args.margin, args.proportion, ctx.file, ctx.env)?;
    let params = SamplingParams::new(s.z, s.margin, s.proportion)?;
    let minimum = required_sample_size(&params);
    writeln!(
        stdout,
        "minimum n = {minimum} (z = {}, e = {}, p = {})",
        s.z, s.margin, s.proportion
    )?;
    let corpus = load_parallel_corpus(&args.source, &args.target)?;
    let subset = sample_subset(&corpus, s.n, s.seed)?;
    if (subset.len() as u64) < minimum {
        log::warn!("subset of {} pairs is below the minimum n = {minimum}", subset.len());
    }
    subset.write(&args.out)?;
    writeln!(
        stdout,
        "chosen n = {}; sampled {} of {} pairs ({} blank skipped), seed {} -> {}",
        s.n,
        subset.len(),
        corpus.len(),
        corpus.skipped().len(),
        s.seed,
        args.out.display()
    )?;

    let mut m = ctx.manifest(
        "sample",
        json!({ "source": args.source, "target": args.target, "sample": s }),
    )?;
    m.input(&args.source)?;
    m.input(&args.target)?;
    m.outputs.push(args.out.clone());
    m.append_to(ctx.manifest_path)
}

pub(super) fn polarity(ctx: &Context<'_>, args: PolarityArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let format = config::resolve_format(args.format, ctx.file, ctx.env)?;
    if args.side == Side::Source {
        log::warn!("the polarity lexicon is English; --side source counts tokens in the Spanish text");
    }
    let lexicon = match &args.lexicon {
        Some(p) => TokenLexicon::from_file(p)?,
        None => default_lexicon(),
    };
    let mut m = ctx.manifest(
        "polarity",
        json!({ "subsets": args.subsets, "side": args.side, "lexicon": lexicon, "format": format }),
    )?;
    let mut rows = Vec::new();
    for arg in &args.subsets {
        let (label, path) = labeled(arg);
        let subset = SampleSubset::read(&path)?;
        m.input(&path)?;
        rows.push(PolarityRow {
            dataset: label,
            counts: polarity_over_subset(&subset, args.side, &lexicon),
        });
    }
    emit(&emit_polarity_table(&rows, format)?, args.out.as_deref(), stdout)?;
    if let Some(out) = &args.out {
        m.outputs.push(out.clone());
    }
    m.append_to(ctx.manifest_path)
}

fn load_template(resolved: &ResolvedBackend) -> Result<PromptTemplate, CliError> {
    match &resolved.template {
        Some(p) => PromptTemplate::from_file(p)
            .map_err(|e| CliError::Io(format!("cannot load template {}: {e}", p.display()))),
        None => Ok(PromptTemplate::default()),
    }
}

/// Builds the configured backend, wrapped in the cache when one is set.
/// Fails before any request when the credential or fixture is missing.
fn build_backend(resolved: &ResolvedBackend) -> Result<Box<dyn CompletionBackend>, CliError> {
    let inner: Box<dyn CompletionBackend> = match resolved.kind {
        BackendKind::Http => Box::new(HttpBackend::new(resolved.http.clone())?),
        BackendKind::Replay => {
            let path = resolved.replay_fixture.as_ref().ok_or_else(|| {
                CliError::Backend("the replay backend needs --replay-fixture".into())
            })?;
            Box::new(ReplayBackend::from_file(path)?.with_model_id(resolved.http.model_id.clone()))
        }
    };
    match &resolved.cache {
        Some(path) => {
            let cached = CachedBackend::open(inner, path)?;
            for w in cached.load_warnings() {
                log::warn!("{w}");
            }
            Ok(Box::new(cached))
        }
        None => Ok(inner),
    }
}

fn ledger_line(ledger: &CostLedger) -> String {
    let cost = match ledger.estimated_cost {
        Some(c) => format!("{c:.4}"),
        None => "n/a".to_string(),
    };
    format!(
        "requests: {}, cache hits: {}, billed tokens: {} in / {} out, estimated cost: {}",
        ledger.request_count,
        ledger.cache_hits,
        ledger.total_input_tokens,
        ledger.total_output_tokens,
        cost
    )
}

fn progress_logger(p: crate::annotation::Progress) {
    if p.completed == p.total || p.completed.is_multiple_of(50) {
        log::info!(
            "{}/{} sentences ({} failed); {}",
            p.completed,
            p.total,
            p.failures,
            ledger_line(&p.ledger)
        );
    }
}

pub(super) fn analyze(ctx: &Context<'_>, args: AnalyzeArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let resolved = config::resolve_backend(&args.backend, ctx.file, ctx.env)?;
    let format = config::resolve_format(args.format, ctx.file, ctx.env)?;
    let template = load_template(&resolved)?;
    let subset = SampleSubset::read(&args.subset)?;
    let backend = build_backend(&resolved)?;
    let options = AnalyzeOptions {
        max_in_flight: resolved.max_in_flight,
        parse_retries: resolved.parse_retries,
        repetition: 0,
    };
    let analysis = analyze_subset(&subset, Side::Source, &template, &backend, &options, Some(&progress_logger))?;

    let file = std::fs::File::create(&args.out)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", args.out.display())))?;
    let mut writer = std::io::BufWriter::new(file);
    analysis.write_jsonl(&mut writer)?;
    writer.flush()?;

    let label = args.label.clone().unwrap_or_else(|| labeled(&args.subset.to_string_lossy()).0);
    let row = LlmRow {
        dataset: label,
        counts: aggregate(&analysis),
    };
    let ledger = backend.ledger().snapshot();
    write!(stdout, "{}", emit_llm_table(&[row], format)?)?;
    writeln!(
        stdout,
        "sentences: {}, analyzed: {}, failed: {}",
        analysis.len(),
        analysis.analyses.len(),
        analysis.failures.len()
    )?;
    writeln!(stdout, "{}", ledger_line(&ledger))?;

    let mut m = ctx.manifest(
        "analyze",
        json!({ "subset": args.subset, "backend": resolved, "template": template, "format": format }),
    )?;
    m.input(&args.subset)?;
    if let Some(f) = &resolved.replay_fixture {
        m.input(f)?;
    }
    m.outputs.push(args.out.clone());
    m.ledger = Some(ledger);
    m.append_to(ctx.manifest_path)
}

pub(super) fn validate_cmd(ctx: &Context<'_>, args: ValidateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let format = config::resolve_format(args.format, ctx.file, ctx.env)?;
    let gold = GoldSet::from_file(&args.gold)?;
    let mut m = ctx.manifest(
        "validate",
        json!({ "gold": args.gold, "predictions": args.predictions, "mode": args.mode, "repetitions": args.repetitions }),
    )?;
    m.input(&args.gold)?;

    let mut per_model: Vec<(String, Vec<crate::metrics::ValidationScores>)> = Vec::new();
    let mut push = |model: String, scores| match per_model.iter_mut().find(|(m, _)| *m == model) {
        Some((_, runs)) => runs.push(scores),
        None => per_model.push((model, vec![scores])),
    };

    if !args.predictions.is_empty() {
        for arg in &args.predictions {
            let (label, path) = match arg.split_once('=') {
                Some((l, p)) if !l.is_empty() => (l.to_string(), PathBuf::from(p)),
                _ => (
                    args.model_label.clone().unwrap_or_else(|| "predictions".into()),
                    PathBuf::from(arg),
                ),
            };
            let predictions = read_analysis(&path)?;
            m.input(&path)?;
            push(label, validate(&predictions, &gold, args.mode).scores);
        }
    } else {
        if args.repetitions == 0 {
            return Err(CliError::Usage("--repetitions must be at least 1".into()));
        }
        let resolved = config::resolve_backend(&args.backend, ctx.file, ctx.env)?;
        let template = load_template(&resolved)?;
        let backend = build_backend(&resolved)?;
        let subset = SampleSubset {
            seed: 0,
            requested_n: gold.len(),
            source_fingerprint: m.inputs.last().map(|i| i.sha256.clone()).unwrap_or_default(),
            pairs: gold
                .sentences
                .iter()
                .enumerate()
                .map(|(i, g)| SentencePair {
                    index: i,
                    source_text: g.sentence.clone(),
                    target_text: String::new(),
                })
                .collect(),
            clamped: false,
        };
        let label = args.model_label.clone().unwrap_or_else(|| backend.model_id().to_string());
        for repetition in 0..args.repetitions {
            let options = AnalyzeOptions {
                max_in_flight: resolved.max_in_flight,
                parse_retries: resolved.parse_retries,
                repetition,
            };
            let analysis = analyze_subset(&subset, Side::Source, &template, &backend, &options, Some(&progress_logger))?;
            if !analysis.failures.is_empty() {
                log::warn!(
                    "repetition {}: {} sentence(s) failed and count as fully missed",
                    repetition + 1,
                    analysis.failures.len()
                );
            }
            push(label.clone(), validate(&analysis, &gold, args.mode).scores);
        }
        m.ledger = Some(backend.ledger().snapshot());
    }

    emit(&emit_validation_table(&per_model, format)?, args.out.as_deref(), stdout)?;
    if let Some(out) = &args.out {
        m.outputs.push(out.clone());
    }
    m.append_to(ctx.manifest_path)
}

pub(super) fn epicene(ctx: &Context<'_>, args: EpiceneArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let format = config::resolve_format(args.format, ctx.file, ctx.env)?;
    let lexicon = match &args.lexicon {
        Some(p) => load_epicene_lexicon(p)
            .map_err(|e| CliError::Io(format!("cannot read lexicon {}: {e}", p.display())))?,
        None => default_epicene_lexicon(),
    };
    if lexicon.is_empty() {
        return Err(CliError::Usage("epicene lexicon is empty".into()));
    }
    let mut m = ctx.manifest("epicene", json!({ "analyses": args.analyses, "lexicon": lexicon, "format": format }))?;
    let mut pooled = CorpusAnalysis::default();
    for path in &args.analyses {
        let a = read_analysis(path)?;
        m.input(path)?;
        pooled.analyses.extend(a.analyses);
        pooled.failures.extend(a.failures);
    }
    let breakdown = epicene_breakdown(&pooled, &lexicon);
    emit(&emit_epicene_table(&breakdown, format)?, args.out.as_deref(), stdout)?;
    if let Some(out) = &args.out {
        m.outputs.push(out.clone());
    }
    m.append_to(ctx.manifest_path)
}

pub(super) fn report(ctx: &Context<'_>, args: ReportArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let format = config::resolve_format(args.format, ctx.file, ctx.env)?;
    let mut m = ctx.manifest("report", json!({ "analyses": args.analyses, "format": format }))?;
    let mut rows = Vec::new();
    for arg in &args.analyses {
        let (label, path) = labeled(arg);
        let analysis = read_analysis(&path)?;
        m.input(&path)?;
        rows.push(LlmRow {
            dataset: label,
            counts: aggregate(&analysis),
        });
    }
    emit(&emit_llm_table(&rows, format)?, args.out.as_deref(), stdout)?;
    if let Some(out) = &args.out {
        m.outputs.push(out.clone());
    }
    m.append_to(ctx.manifest_path)
}
