//! Regenerates the small Spanish/English corpus under `tests/fixtures/`:
//! the parallel text files, a 10-pair subset, a replay fixture answering
//! the default prompt for each sentence, and the matching gold file.
//!
//!     cargo run --example make_fixtures

use std::fmt::Write as _;
use std::path::Path;

use genderscope::annotation::{default_template, format_as_response, render_prompt, parse_analysis};
use genderscope::corpus::{load_parallel_corpus, sample_subset};
use genderscope::llm_backend::{prompt_key, ReplayRecord};

const PAIRS: [(&str, &str, &str); 10] = [
    (
        "El presidente agradeció a la comisaria su informe.",
        "The president thanked the commissioner for her report.",
        "presidente -- S, M\ncomisaria -- S, F\ninforme -- N, M",
    ),
    (
        "Las diputadas votaron a favor de la propuesta.",
        "The women deputies voted in favour of the proposal.",
        "diputadas -- S, F\nfavor -- N, M\npropuesta -- N, F",
    ),
    (
        "Los ciudadanos esperan una respuesta clara.",
        "Citizens expect a clear answer from him.",
        "ciudadanos -- S, M\nrespuesta -- N, F",
    ),
    (
        "La víctima denunció el abuso ante el tribunal.",
        "The victim reported the abuse to the court herself.",
        "víctima -- S, F\nabuso -- N, M\ntribunal -- N, M",
    ),
    (
        "El ponente y la ponente coinciden en el análisis.",
        "The rapporteur and his colleague agree with her analysis.",
        "ponente -- S, M\nponente -- S, F\nanálisis -- N, M",
    ),
    (
        "Mi hermana trabaja en el hospital.",
        "My sister works at the hospital.",
        "hermana -- S, F\nhospital -- N, M",
    ),
    (
        "El consejo aprobó la directiva.",
        "The Council approved the directive.",
        "consejo -- N, M\ndirectiva -- N, F",
    ),
    (
        "Los trabajadores y las trabajadoras merecen respeto.",
        "Working men and women deserve respect.",
        "trabajadores -- S, M\ntrabajadoras -- S, F\nrespeto -- N, M",
    ),
    (
        "La persona responsable firmó el acuerdo.",
        "The person responsible signed the agreement; he's satisfied.",
        "persona -- S, F\nacuerdo -- N, M",
    ),
    (
        "El señor Pérez presentó una enmienda.",
        "Mr Pérez tabled an amendment, as he promised his voters.",
        "señor -- S, M\nenmienda -- N, F",
    ),
];

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    std::fs::create_dir_all(&dir).unwrap();

    let es: String = PAIRS.iter().map(|(s, _, _)| format!("{s}\n")).collect();
    let en: String = PAIRS.iter().map(|(_, t, _)| format!("{t}\n")).collect();
    std::fs::write(dir.join("mini.es"), es).unwrap();
    std::fs::write(dir.join("mini.en"), en).unwrap();

    let corpus = load_parallel_corpus(dir.join("mini.es"), dir.join("mini.en")).unwrap();
    let subset = sample_subset(&corpus, PAIRS.len(), 0).unwrap();
    subset.write(dir.join("mini_subset.json")).unwrap();

    let template = default_template();
    let mut replay = String::new();
    let mut gold = String::new();
    for (sentence, _, response) in PAIRS {
        let prompt = render_prompt(&template, sentence).unwrap();
        let record = ReplayRecord {
            key: prompt_key(&prompt),
            response_text: response.to_string(),
        };
        writeln!(replay, "{}", serde_json::to_string(&record).unwrap()).unwrap();
        let parsed = parse_analysis(response);
        assert!(parsed.warnings.is_empty(), "{sentence}");
        write!(gold, "Frase: {sentence}\n{}\n\n", format_as_response(&parsed.annotations)).unwrap();
    }
    std::fs::write(dir.join("mini_replay.jsonl"), replay).unwrap();
    std::fs::write(dir.join("mini_gold.txt"), gold).unwrap();
    println!("wrote fixtures to {}", dir.display());
}
