mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{epicene_analysis, fixture, sentence};
use genderscope::annotation::{CorpusAnalysis, Gender, WordAnnotation};
use genderscope::corpus::SampleSubset;

fn genderscope(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_genderscope"));
    cmd.current_dir(dir).args(args);
    for (key, _) in std::env::vars() {
        if key.starts_with("GENDERSCOPE_") {
            cmd.env_remove(key);
        }
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn f(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

fn replay_args<'a>(fixture: &'a str, out: &'a str) -> Vec<&'a str> {
    vec!["--backend", "replay", "--replay-fixture", fixture, "--out", out]
}

#[test]
fn sample_reports_minimum_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (es, en) = (f("mini.es"), f("mini.en"));
    let a = genderscope(dir.path(), &["sample", "--source", &es, "--target", &en, "--n", "4", "--seed", "7", "--out", "a.json"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(stdout(&a).contains("minimum n = 664"), "{}", stdout(&a));
    assert!(stdout(&a).contains("chosen n = 4"));
    let b = genderscope(dir.path(), &["sample", "--source", &es, "--target", &en, "--n", "4", "--seed", "7", "--out", "b.json"]);
    assert!(b.status.success());
    let sa = SampleSubset::read(dir.path().join("a.json")).unwrap();
    let sb = SampleSubset::read(dir.path().join("b.json")).unwrap();
    assert_eq!(sa, sb);
    assert_eq!(sa.len(), 4);
    assert!(sa.pairs.windows(2).all(|w| w[0].index < w[1].index));
}

#[test]
fn sample_respects_custom_bound_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let o = genderscope(
        dir.path(),
        &["sample", "--source", &f("mini.es"), "--target", &f("mini.en"), "--z", "1.96", "--margin", "0.05", "--out", "s.json"],
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("minimum n = 385"), "{}", stdout(&o));
    assert!(stdout(&o).contains("chosen n = 1000"));
    assert!(stderr(&o).contains("only 10 are sampleable"), "{}", stderr(&o));
}

#[test]
fn sample_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = genderscope(dir.path(), &["sample", "--source", &f("mini.es"), "--target", "nope.en", "--out", "s.json"]);
    assert_eq!(missing.status.code(), Some(3));

    std::fs::write(dir.path().join("short.en"), "one\ntwo\n").unwrap();
    let misaligned = genderscope(dir.path(), &["sample", "--source", &f("mini.es"), "--target", "short.en", "--out", "s.json"]);
    assert_eq!(misaligned.status.code(), Some(3));
    assert!(stderr(&misaligned).contains("10"), "{}", stderr(&misaligned));

    let bad_margin = genderscope(dir.path(), &["sample", "--source", &f("mini.es"), "--target", &f("mini.en"), "--margin", "0", "--out", "s.json"]);
    assert_eq!(bad_margin.status.code(), Some(2));

    let unknown = genderscope(dir.path(), &["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn config_file_and_environment_layer_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.toml"), "[sample]\nn = 3\nseed = 11\n").unwrap();
    let (es, en) = (f("mini.es"), f("mini.en"));
    let from_file = genderscope(dir.path(), &["--config", "g.toml", "sample", "--source", &es, "--target", &en, "--out", "a.json"]);
    assert!(from_file.status.success(), "{}", stderr(&from_file));
    assert!(stdout(&from_file).contains("chosen n = 3"));
    let from_flag = genderscope(dir.path(), &["--config", "g.toml", "sample", "--source", &es, "--target", &en, "--n", "5", "--out", "b.json"]);
    assert!(stdout(&from_flag).contains("chosen n = 5"));

    let mut cmd = Command::new(env!("CARGO_BIN_EXE_genderscope"));
    let from_env = cmd
        .current_dir(dir.path())
        .env("GENDERSCOPE_N", "2")
        .args(["sample", "--source", &es, "--target", &en, "--out", "c.json"])
        .output()
        .unwrap();
    assert!(stdout(&from_env).contains("chosen n = 2"), "{}", stdout(&from_env));

    std::fs::write(dir.path().join("bad.toml"), "[sample]\nsize = 3\n").unwrap();
    let bad = genderscope(dir.path(), &["--config", "bad.toml", "sample", "--source", &es, "--target", &en, "--out", "d.json"]);
    assert_eq!(bad.status.code(), Some(2), "{}", stderr(&bad));
}

#[test]
fn polarity_table_formats() {
    let dir = tempfile::tempdir().unwrap();
    let subset = format!("Mini={}", f("mini_subset.json"));
    let text = genderscope(dir.path(), &["polarity", &subset]);
    assert!(text.status.success(), "{}", stderr(&text));
    let out = stdout(&text);
    assert!(out.lines().next().unwrap().starts_with("Dataset"));
    assert!(out.contains("Mini") && out.contains("1.20 : 1"), "{out}");

    let csv = genderscope(dir.path(), &["polarity", &subset, "--format", "csv"]);
    assert_eq!(stdout(&csv), "Dataset,G_M,G_F,G_M:G_F\nMini,6,5,1.20 : 1\n");

    let json = genderscope(dir.path(), &["polarity", &subset, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v[0]["g_m"], 6);
    assert_eq!(v[0]["g_f"], 5);

    let source = genderscope(dir.path(), &["polarity", &subset, "--side", "source"]);
    assert!(source.status.success());
    assert!(stderr(&source).contains("English"), "{}", stderr(&source));
}

#[test]
fn polarity_with_custom_lexicon() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("lex.json"), r#"{"male": ["president"], "female": ["sister", "victim"]}"#).unwrap();
    let o = genderscope(dir.path(), &["polarity", &f("mini_subset.json"), "--lexicon", "lex.json", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).ends_with("mini_subset,1,2,0.50 : 1\n"), "{}", stdout(&o));
}

#[test]
fn analyze_with_replay_and_warm_cache() {
    let dir = tempfile::tempdir().unwrap();
    let (replay, subset) = (f("mini_replay.jsonl"), f("mini_subset.json"));
    let mut args = vec!["analyze", &subset, "--label", "Mini", "--cache", "cache.jsonl"];
    args.extend(replay_args(&replay, "a.jsonl"));

    let cold = genderscope(dir.path(), &args);
    assert!(cold.status.success(), "{}", stderr(&cold));
    let out = stdout(&cold);
    assert!(out.contains("Mini") && out.contains("0.71 : 1"), "{out}");
    assert!(out.contains("sentences: 10, analyzed: 10, failed: 0"), "{out}");
    assert!(out.contains("requests: 10, cache hits: 0"), "{out}");
    let analysis = CorpusAnalysis::read_file(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(analysis.analyses.len(), 10);
    assert_eq!(std::fs::read_to_string(dir.path().join("a.jsonl")).unwrap().lines().count(), 10);

    let warm = genderscope(dir.path(), &args);
    assert!(stdout(&warm).contains("cache hits: 10, billed tokens: 0 in / 0 out"), "{}", stdout(&warm));

    let manifest = std::fs::read_to_string(dir.path().join("genderscope-manifest.jsonl")).unwrap();
    let last: serde_json::Value = serde_json::from_str(manifest.lines().last().unwrap()).unwrap();
    assert_eq!(last["command"], "analyze");
    assert_eq!(last["ledger"]["cache_hits"], 10);
    assert!(last["inputs"].as_array().unwrap().len() >= 2);
}

#[test]
fn analyze_without_credential_fails_before_any_request() {
    let dir = tempfile::tempdir().unwrap();
    let o = genderscope(
        dir.path(),
        &["analyze", &f("mini_subset.json"), "--endpoint", "http://127.0.0.1:9/unreachable", "--out", "a.jsonl"],
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("GENDERSCOPE_API_KEY"), "{}", stderr(&o));
    assert!(!dir.path().join("a.jsonl").exists());
}

fn write_analysis(path: &Path, analysis: &CorpusAnalysis) {
    std::fs::write(path, analysis.to_jsonl()).unwrap();
}

fn words(specs: &[(&str, bool, Gender)]) -> Vec<WordAnnotation> {
    specs.iter().map(|&(s, p, g)| WordAnnotation::new(s, p, g).unwrap()).collect()
}

#[test]
fn validate_scores_one_gender_error() {
    use Gender::{Feminine as F, Masculine as M};
    let dir = tempfile::tempdir().unwrap();
    let gold_words = words(&[
        ("señor", true, M), ("presidente", true, M), ("secretario", true, M), ("estado", false, M),
        ("mañana", false, F), ("temas", false, M), ("ciudad", false, F), ("reunión", false, F),
        ("ministra", true, F), ("acuerdo", false, M),
    ]);
    let mut predicted = gold_words.clone();
    predicted[8] = WordAnnotation::new("ministra", true, M).unwrap();
    let gold = genderscope::metrics::GoldSet {
        sentences: vec![genderscope::metrics::GoldSentence { sentence: "Frase de prueba.".into(), annotations: gold_words }],
    };
    std::fs::write(dir.path().join("gold.json"), serde_json::to_string(&gold).unwrap()).unwrap();
    let mut analysis = CorpusAnalysis::default();
    analysis.analyses.push(sentence(0, predicted));
    write_analysis(&dir.path().join("pred.jsonl"), &analysis);

    let o = genderscope(dir.path(), &["validate", "--gold", "gold.json", "--predictions", "GPT=pred.jsonl", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let row = &v[0];
    assert_eq!(row["model"], "GPT");
    assert_eq!(row["accuracy"]["mean"], 90.0);
    assert_eq!(row["precision"]["mean"], 90.0);
    assert_eq!(row["recall"]["mean"], 100.0);
    assert_eq!(row["f_score"]["mean"], 94.74);

    let text = genderscope(dir.path(), &["validate", "--gold", "gold.json", "--predictions", "GPT=pred.jsonl"]);
    let out = stdout(&text);
    assert!(out.contains("GPT*") && out.contains("94.74 ± 0.00"), "{out}");
    assert!(out.contains("single run"), "{out}");
}

#[test]
fn validate_runs_backend_repetitions() {
    let dir = tempfile::tempdir().unwrap();
    let o = genderscope(
        dir.path(),
        &[
            "validate", "--gold", &f("mini_gold.txt"), "--repetitions", "3", "--backend", "replay",
            "--replay-fixture", &f("mini_replay.jsonl"), "--model-label", "Replay", "--format", "csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("Replay,3,100.00 ± 0.00"), "{out}");
}

#[test]
fn epicene_share_over_published_table() {
    let dir = tempfile::tempdir().unwrap();
    write_analysis(&dir.path().join("e.jsonl"), &epicene_analysis());
    let o = genderscope(dir.path(), &["epicene", "e.jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("feminine 258, masculine 92, feminine share 73.71%"), "{out}");
    let first_row = out.lines().nth(2).unwrap();
    assert!(first_row.starts_with("personas") && first_row.ends_with("149"), "{first_row}");

    let json = genderscope(dir.path(), &["epicene", "e.jsonl", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["totals"]["feminine_share_percent"], 73.71);
}

#[test]
fn epicene_without_matches_and_with_custom_lexicon() {
    let dir = tempfile::tempdir().unwrap();
    let mut analysis = CorpusAnalysis::default();
    analysis.analyses.push(sentence(0, words(&[("ciudadano", true, Gender::Masculine)])));
    write_analysis(&dir.path().join("a.jsonl"), &analysis);
    let none = genderscope(dir.path(), &["epicene", "a.jsonl"]);
    assert!(none.status.success());
    assert!(stdout(&none).contains("n/a"), "{}", stdout(&none));

    std::fs::write(dir.path().join("lex.txt"), "# custom\nciudadano\n").unwrap();
    let custom = genderscope(dir.path(), &["epicene", "a.jsonl", "--lexicon", "lex.txt"]);
    assert!(stdout(&custom).contains("feminine 0, masculine 1, feminine share 0.00%"), "{}", stdout(&custom));
}

#[test]
fn report_tabulates_several_analyses() {
    let dir = tempfile::tempdir().unwrap();
    let replay = f("mini_replay.jsonl");
    let mut args = vec!["analyze"];
    let subset = f("mini_subset.json");
    args.push(&subset);
    args.extend(replay_args(&replay, "a.jsonl"));
    assert!(genderscope(dir.path(), &args).status.success());
    let o = genderscope(dir.path(), &["report", "One=a.jsonl", "Two=a.jsonl", "--format", "csv", "--out", "t.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.contains("One,14,11,13,12,5,7,0.71 : 1"), "{table}");
}
