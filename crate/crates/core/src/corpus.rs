//! Line-aligned parallel corpora (Moses/OPUS layout), sample-size
//! estimation and seeded subset selection.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("files are not aligned: {source_path} has {source_lines} lines, {target_path} has {target_lines}")]
    Alignment {
        source_path: PathBuf,
        source_lines: usize,
        target_path: PathBuf,
        target_lines: usize,
    },
    #[error("{path}: invalid UTF-8 on line {line}")]
    Encoding { path: PathBuf, line: usize },
    #[error("invalid sampling parameters: {0}")]
    InvalidParams(String),
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("malformed subset file {path}: {source}")]
    SubsetFormat {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// One aligned sentence pair. `index` is the zero-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub index: usize,
    pub source_text: String,
    pub target_text: String,
}

/// An in-memory parallel corpus.
///
/// Lines where either side is blank keep their place in the index space but
/// are never sampled; their indices are listed in [`Corpus::skipped`].
#[derive(Debug, Clone)]
pub struct Corpus {
    pairs: Vec<SentencePair>,
    skipped: Vec<usize>,
    line_count: usize,
    fingerprint: String,
}

impl Corpus {
    /// Builds a corpus from already-split lines. The fingerprint is computed
    /// over the lines joined with `\n`, each side terminated by a newline.
    pub fn from_lines<S: AsRef<str>, T: AsRef<str>>(
        source: &[S],
        target: &[T],
    ) -> Result<Self, CorpusError> {
        if source.len() != target.len() {
            return Err(CorpusError::Alignment {
                source_path: PathBuf::from("<source>"),
                source_lines: source.len(),
                target_path: PathBuf::from("<target>"),
                target_lines: target.len(),
            });
        }
        let mut hasher = Sha256::new();
        for line in source {
            hasher.update(line.as_ref().as_bytes());
            hasher.update(b"\n");
        }
        for line in target {
            hasher.update(line.as_ref().as_bytes());
            hasher.update(b"\n");
        }
        let fingerprint = hex::encode(hasher.finalize());
        let src: Vec<&str> = source.iter().map(|s| s.as_ref()).collect();
        let tgt: Vec<&str> = target.iter().map(|s| s.as_ref()).collect();
        Ok(Self::assemble(&src, &tgt, fingerprint))
    }

    fn assemble(source: &[&str], target: &[&str], fingerprint: String) -> Self {
        let mut pairs = Vec::with_capacity(source.len());
        let mut skipped = Vec::new();
        for (index, (s, t)) in source.iter().zip(target).enumerate() {
            if s.trim().is_empty() || t.trim().is_empty() {
                skipped.push(index);
                continue;
            }
            pairs.push(SentencePair {
                index,
                source_text: (*s).to_string(),
                target_text: (*t).to_string(),
            });
        }
        Corpus {
            pairs,
            skipped,
            line_count: source.len(),
            fingerprint,
        }
    }

    /// Number of aligned lines, including blank ones.
    pub fn len(&self) -> usize {
        self.line_count
    }

    pub fn is_empty(&self) -> bool {
        self.line_count == 0
    }

    /// Number of pairs eligible for sampling.
    pub fn sampleable_len(&self) -> usize {
        self.pairs.len()
    }

    /// Indices of lines with a blank side.
    pub fn skipped(&self) -> &[usize] {
        &self.skipped
    }

    /// Hex SHA-256 of the source file bytes followed by the target file bytes.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn iter(&self) -> impl Iterator<Item = &SentencePair> + '_ {
        self.pairs.iter()
    }
}

fn read_lines(path: &Path, bytes: &[u8]) -> Result<Vec<String>, CorpusError> {
    let mut body = bytes;
    if body.last() == Some(&b'\n') {
        body = &body[..body.len() - 1];
    }
    if bytes.is_empty() {
        return Ok(Vec::new());
    }
    body.split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, raw)| {
            let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
            std::str::from_utf8(raw)
                .map(str::to_owned)
                .map_err(|_| CorpusError::Encoding {
                    path: path.to_path_buf(),
                    line: i + 1,
                })
        })
        .collect()
}

/// Loads two line-aligned files. Accepts `\n` and `\r\n` line endings.
pub fn load_parallel_corpus(
    source_path: impl AsRef<Path>,
    target_path: impl AsRef<Path>,
) -> Result<Corpus, CorpusError> {
    let source_path = source_path.as_ref();
    let target_path = target_path.as_ref();
    let read = |p: &Path| {
        fs::read(p).map_err(|source| CorpusError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    let source_bytes = read(source_path)?;
    let target_bytes = read(target_path)?;
    let source = read_lines(source_path, &source_bytes)?;
    let target = read_lines(target_path, &target_bytes)?;
    if source.len() != target.len() {
        return Err(CorpusError::Alignment {
            source_path: source_path.to_path_buf(),
            source_lines: source.len(),
            target_path: target_path.to_path_buf(),
            target_lines: target.len(),
        });
    }

    let mut hasher = Sha256::new();
    hasher.update(&source_bytes);
    hasher.update(&target_bytes);
    let fingerprint = hex::encode(hasher.finalize());

    let src: Vec<&str> = source.iter().map(String::as_str).collect();
    let tgt: Vec<&str> = target.iter().map(String::as_str).collect();
    Ok(Corpus::assemble(&src, &tgt, fingerprint))
}

/// Inputs to the worst-case sample-size bound.
///
/// `confidence_z` is supplied by the caller; for a 99% confidence level use
/// 2.576, for 95% use 1.96.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub confidence_z: f64,
    pub margin_e: f64,
    pub proportion_p: f64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            confidence_z: 2.576,
            margin_e: 0.05,
            proportion_p: 0.5,
        }
    }
}

impl SamplingParams {
    pub fn new(confidence_z: f64, margin_e: f64, proportion_p: f64) -> Result<Self, CorpusError> {
        let params = SamplingParams {
            confidence_z,
            margin_e,
            proportion_p,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if !(self.confidence_z > 0.0 && self.confidence_z.is_finite()) {
            return Err(CorpusError::InvalidParams(format!(
                "z must be positive, got {}",
                self.confidence_z
            )));
        }
        if !(self.margin_e > 0.0 && self.margin_e <= 1.0) {
            return Err(CorpusError::InvalidParams(format!(
                "margin of error must lie in (0, 1], got {}",
                self.margin_e
            )));
        }
        if !(0.0..=1.0).contains(&self.proportion_p) {
            return Err(CorpusError::InvalidParams(format!(
                "proportion must lie in [0, 1], got {}",
                self.proportion_p
            )));
        }
        Ok(())
    }
}

/// `ceil(z² p (1 − p) / e²)`.
pub fn required_sample_size(params: &SamplingParams) -> u64 {
    let z = params.confidence_z;
    let p = params.proportion_p;
    let e = params.margin_e;
    let n = z * z * p * (1.0 - p) / (e * e);
    // Guard against 664.0000000001-style float noise pushing ceil up by one.
    let rounded = n.round();
    if (n - rounded).abs() < 1e-9 {
        rounded as u64
    } else {
        n.ceil() as u64
    }
}

/// A seeded random sample of sentence pairs, sorted by index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSubset {
    pub seed: u64,
    pub requested_n: usize,
    pub source_fingerprint: String,
    pub pairs: Vec<SentencePair>,
    /// Set when `requested_n` exceeded the number of sampleable pairs.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub clamped: bool,
}

impl SampleSubset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("subset serializes")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let path = path.as_ref();
        let mut file = fs::File::create(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        file.write_all(self.to_json().as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .map_err(|source| CorpusError::Io {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CorpusError::SubsetFormat {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Draws `n` pairs without replacement using a ChaCha8 stream seeded from
/// `seed`. If `n` exceeds the sampleable pairs, the whole corpus is returned
/// and `clamped` is set.
pub fn sample_subset(corpus: &Corpus, n: usize, seed: u64) -> Result<SampleSubset, CorpusError> {
    if n == 0 {
        return Err(CorpusError::EmptySample);
    }
    let available = corpus.sampleable_len();
    let clamped = n > available;
    let pairs = if n >= available {
        corpus.pairs.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, available, n).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| corpus.pairs[i].clone()).collect()
    };
    if clamped {
        log::warn!(
            "requested {n} pairs but only {available} are sampleable; returning all of them"
        );
    }
    Ok(SampleSubset {
        seed,
        requested_n: n,
        source_fingerprint: corpus.fingerprint.clone(),
        pairs,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn write(dir: &Path, name: &str, body: &[u8]) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn corpus_of(n: usize) -> Corpus {
        let src: Vec<String> = (0..n).map(|i| format!("frase {i}")).collect();
        let tgt: Vec<String> = (0..n).map(|i| format!("sentence {i}")).collect();
        Corpus::from_lines(&src, &tgt).unwrap()
    }

    #[test]
    fn three_line_files_align() {
        let dir = tempfile::tempdir().unwrap();
        let s = write(dir.path(), "es", b"uno\ndos\ntres\n");
        let t = write(dir.path(), "en", b"one\r\ntwo\r\nthree");
        let c = load_parallel_corpus(&s, &t).unwrap();
        assert_eq!(c.len(), 3);
        let idx: Vec<usize> = c.iter().map(|p| p.index).collect();
        assert_eq!(idx, vec![0, 1, 2]);
        assert_eq!(c.iter().nth(1).unwrap().target_text, "two");
    }

    #[test]
    fn mismatched_line_counts_report_both() {
        let dir = tempfile::tempdir().unwrap();
        let s = write(dir.path(), "es", b"a\nb\nc\nd\ne\n");
        let t = write(dir.path(), "en", b"a\nb\nc\nd\n");
        let err = load_parallel_corpus(&s, &t).unwrap_err();
        match err {
            CorpusError::Alignment {
                source_lines,
                target_lines,
                ..
            } => assert_eq!((source_lines, target_lines), (5, 4)),
            other => panic!("unexpected {other}"),
        }
        assert!(load_parallel_corpus(&s, &t)
            .unwrap_err()
            .to_string()
            .contains("5 lines"));
    }

    #[test]
    fn bad_utf8_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let s = write(dir.path(), "es", b"ok\n\xff\xfe\n");
        let t = write(dir.path(), "en", b"ok\nok\n");
        match load_parallel_corpus(&s, &t).unwrap_err() {
            CorpusError::Encoding { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn blank_lines_are_skipped_not_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let s = write(dir.path(), "es", b"uno\n  \ntres\n");
        let t = write(dir.path(), "en", b"one\ntwo\nthree\n");
        let c = load_parallel_corpus(&s, &t).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.sampleable_len(), 2);
        assert_eq!(c.skipped(), &[1]);
        let sub = sample_subset(&c, 5, 0).unwrap();
        assert!(sub.clamped);
        assert_eq!(
            sub.pairs.iter().map(|p| p.index).collect::<Vec<_>>(),
            vec![0, 2]
        );
    }

    #[test]
    fn fingerprint_is_sha256_of_concatenated_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let s = write(dir.path(), "es", b"hola\n");
        let t = write(dir.path(), "en", b"hello\n");
        let c = load_parallel_corpus(&s, &t).unwrap();
        let expected = hex::encode(Sha256::digest(b"hola\nhello\n"));
        assert_eq!(c.fingerprint(), expected);
    }

    #[test]
    fn sample_size_examples() {
        assert_eq!(required_sample_size(&SamplingParams::default()), 664);
        assert_eq!(
            required_sample_size(&SamplingParams::new(1.0, 1.0, 0.0).unwrap()),
            0
        );
        // 1.96² · 0.25 / 0.0025 = 384.16
        assert_eq!(
            required_sample_size(&SamplingParams::new(1.96, 0.05, 0.5).unwrap()),
            385
        );
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(SamplingParams::new(0.0, 0.05, 0.5).is_err());
        assert!(SamplingParams::new(1.0, 0.0, 0.5).is_err());
        assert!(SamplingParams::new(1.0, 0.05, 1.5).is_err());
    }

    #[test]
    fn exhaustive_sample_returns_everything() {
        let c = corpus_of(10);
        let s = sample_subset(&c, 10, 987).unwrap();
        assert_eq!(s.len(), 10);
        assert!(!s.clamped);
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = corpus_of(10);
        let a = sample_subset(&c, 3, 42).unwrap();
        let b = sample_subset(&c, 3, 42).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn zero_n_is_an_error() {
        assert!(matches!(
            sample_subset(&corpus_of(3), 0, 1),
            Err(CorpusError::EmptySample)
        ));
    }

    #[test]
    fn large_corpus_sample_is_unique_and_sorted() {
        let n = 1_965_734;
        let src: Vec<&str> = vec!["x"; n];
        let c = Corpus::from_lines(&src, &src).unwrap();
        let s = sample_subset(&c, 1000, 1).unwrap();
        let idx: Vec<usize> = s.pairs.iter().map(|p| p.index).collect();
        assert_eq!(idx.len(), 1000);
        assert_eq!(idx.iter().collect::<HashSet<_>>().len(), 1000);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert!(idx.iter().all(|&i| i < n));
    }

    #[test]
    fn single_draws_are_roughly_uniform() {
        let c = corpus_of(10);
        let mut freq = [0usize; 10];
        for seed in 0..10_000u64 {
            let s = sample_subset(&c, 1, seed).unwrap();
            freq[s.pairs[0].index] += 1;
        }
        for f in freq {
            let share = f as f64 / 10_000.0;
            assert!((share - 0.1).abs() <= 0.05, "share {share}");
        }
    }

    #[test]
    fn subset_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample_subset(&corpus_of(20), 5, 3).unwrap();
        let p = dir.path().join("subset.json");
        s.write(&p).unwrap();
        assert_eq!(SampleSubset::read(&p).unwrap(), s);
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        for key in ["seed", "requested_n", "source_fingerprint", "pairs"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    proptest::proptest! {
        #[test]
        fn sample_size_monotone(z1 in 0.1f64..4.0, dz in 0.0f64..2.0,
                                e1 in 0.01f64..0.5, de in 0.0f64..0.4,
                                p in 0.0f64..=1.0) {
            let base = required_sample_size(&SamplingParams::new(z1, e1, p).unwrap());
            let wider_e = required_sample_size(&SamplingParams::new(z1, e1 + de, p).unwrap());
            let bigger_z = required_sample_size(&SamplingParams::new(z1 + dz, e1, p).unwrap());
            proptest::prop_assert!(wider_e <= base);
            proptest::prop_assert!(bigger_z >= base);
        }
    }
}
