//! Word-lexicon translator trained with expectation-maximization.
//!
//! Each target sentence gets one [`NULL_TOKEN`] appended, and every target
//! token (null included) is generated by one source token of the pair:
//!
//! ```text
//! P(e_1..e_m, null | f_1..f_n) = Π_i (1/n) Σ_j t(e_i|f_j)
//! ```
//!
//! The E-step splits each target token's unit count over the source tokens
//! of its sentence in proportion to `t(e|f)`; the M-step renormalizes per
//! `f`. Source words that rarely have a consistent partner end up favouring
//! null and are dropped when decoding.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use crate::corpus::{tokens, ParallelCorpus};
use crate::fsutil::write_atomic;
use crate::metrics::Translator;

pub const NULL_TOKEN: &str = "<null>";

const HEADER: &str = "lexicon-v1";

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconModel {
    /// Nonzero entries only, once trained.
    table: BTreeMap<String, BTreeMap<String, f64>>,
    source_vocab: BTreeSet<String>,
    target_vocab: BTreeSet<String>,
    /// Uniform probability of every pair before the first iteration.
    uniform: Option<f64>,
    iterations_run: usize,
    log_likelihood: Vec<f64>,
}

/// Candidate order for argmax: higher probability, then real words before
/// null, then lexicographically smaller.
fn better(candidate: (&str, f64), best: (&str, f64)) -> bool {
    if candidate.1 != best.1 {
        return candidate.1 > best.1;
    }
    let (c_null, b_null) = (candidate.0 == NULL_TOKEN, best.0 == NULL_TOKEN);
    if c_null != b_null {
        return b_null;
    }
    candidate.0 < best.0
}

struct Interned {
    source_words: Vec<String>,
    target_words: Vec<String>,
    /// Per pair: source token ids, target token ids followed by null.
    pairs: Vec<(Vec<usize>, Vec<usize>)>,
}

fn intern(corpus: &ParallelCorpus) -> Interned {
    let mut src_ids: HashMap<String, usize> = HashMap::new();
    let mut tgt_ids: HashMap<String, usize> = HashMap::new();
    let mut source_words = Vec::new();
    let mut target_words = vec![NULL_TOKEN.to_string()];
    tgt_ids.insert(NULL_TOKEN.to_string(), 0);
    let mut pairs = Vec::with_capacity(corpus.len());
    for pair in corpus.pairs() {
        let f: Vec<usize> = tokens(pair.source())
            .into_iter()
            .map(|w| {
                *src_ids.entry(w.clone()).or_insert_with(|| {
                    source_words.push(w);
                    source_words.len() - 1
                })
            })
            .collect();
        let mut e: Vec<usize> = tokens(pair.target())
            .into_iter()
            .map(|w| {
                *tgt_ids.entry(w.clone()).or_insert_with(|| {
                    target_words.push(w);
                    target_words.len() - 1
                })
            })
            .collect();
        e.push(0);
        pairs.push((f, e));
    }
    Interned {
        source_words,
        target_words,
        pairs,
    }
}

type Table = Vec<BTreeMap<usize, f64>>;

/// One E-step: expected counts and the log-likelihood of `t`.
fn expected_counts(data: &Interned, t: &dyn Fn(usize, usize) -> f64) -> (Table, f64) {
    let mut counts: Table = vec![BTreeMap::new(); data.source_words.len()];
    let mut ll = 0.0;
    for (fs, es) in &data.pairs {
        for &e in es {
            let z: f64 = fs.iter().map(|&f| t(f, e)).sum();
            ll += (z / fs.len() as f64).ln();
            for &f in fs {
                *counts[f].entry(e).or_insert(0.0) += t(f, e) / z;
            }
        }
    }
    (counts, ll)
}

fn normalize(mut counts: Table) -> Table {
    for row in &mut counts {
        let total: f64 = row.values().sum();
        for p in row.values_mut() {
            *p /= total;
        }
    }
    counts
}

/// Trains `iterations` rounds of EM from a uniform start. Zero iterations
/// returns the uniform model.
pub fn train_em(corpus: &ParallelCorpus, iterations: usize) -> Result<LexiconModel, LexiconError> {
    let data = intern(corpus);
    if data.pairs.is_empty() {
        return Err(LexiconError::EmptyCorpus);
    }
    let uniform = 1.0 / data.target_words.len() as f64;
    let mut t: Table = Vec::new();
    let mut history = Vec::with_capacity(iterations);
    for i in 0..iterations {
        let (counts, _) = if i == 0 {
            expected_counts(&data, &|_, _| uniform)
        } else {
            expected_counts(&data, &|f, e| t[f][&e])
        };
        t = normalize(counts);
        let (_, ll) = expected_counts(&data, &|f, e| t[f][&e]);
        log::debug!("em iteration {}: log-likelihood {ll}", i + 1);
        history.push(ll);
    }

    let source_vocab: BTreeSet<String> = data.source_words.iter().cloned().collect();
    let target_vocab: BTreeSet<String> = data.target_words[1..].iter().cloned().collect();
    let table = t
        .iter()
        .enumerate()
        .map(|(f, row)| {
            let row = row
                .iter()
                .filter(|(_, &p)| p > 0.0)
                .map(|(&e, &p)| (data.target_words[e].clone(), p))
                .collect();
            (data.source_words[f].clone(), row)
        })
        .collect();
    Ok(LexiconModel {
        table,
        source_vocab,
        target_vocab,
        uniform: (iterations == 0).then_some(uniform),
        iterations_run: iterations,
        log_likelihood: history,
    })
}

impl LexiconModel {
    pub fn source_vocab(&self) -> &BTreeSet<String> {
        &self.source_vocab
    }

    pub fn target_vocab(&self) -> &BTreeSet<String> {
        &self.target_vocab
    }

    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    /// Log-likelihood of the training corpus after each iteration.
    pub fn log_likelihood_history(&self) -> &[f64] {
        &self.log_likelihood
    }

    pub fn final_log_likelihood(&self) -> Option<f64> {
        self.log_likelihood.last().copied()
    }

    /// t(e|f); zero for an unknown source word.
    pub fn prob(&self, f: &str, e: &str) -> f64 {
        if !self.source_vocab.contains(f) {
            return 0.0;
        }
        match self.uniform {
            Some(u) if e == NULL_TOKEN || self.target_vocab.contains(e) => u,
            Some(_) => 0.0,
            None => self
                .table
                .get(f)
                .and_then(|row| row.get(e))
                .copied()
                .unwrap_or(0.0),
        }
    }

    /// Σ_e t(e|f) for every known f.
    pub fn row_sums(&self) -> BTreeMap<&str, f64> {
        self.source_vocab
            .iter()
            .map(|f| {
                let sum = match self.uniform {
                    Some(u) => u * (self.target_vocab.len() + 1) as f64,
                    None => self.table.get(f).map_or(0.0, |row| row.values().sum()),
                };
                (f.as_str(), sum)
            })
            .collect()
    }

    /// Most probable target symbol for `f`, or `None` for an unknown word.
    pub fn best(&self, f: &str) -> Option<&str> {
        if !self.source_vocab.contains(f) {
            return None;
        }
        if self.uniform.is_some() {
            return Some(self.target_vocab.first().map_or(NULL_TOKEN, String::as_str));
        }
        let row = self.table.get(f)?;
        let mut best: Option<(&str, f64)> = None;
        for (e, &p) in row {
            if best.is_none_or(|b| better((e, p), b)) {
                best = Some((e, p));
            }
        }
        best.map(|b| b.0)
    }

    /// Word-by-word translation: known words become their best target
    /// word, null drops them, unknown words are copied.
    pub fn translate_line(&self, line: &str) -> String {
        let mut out: Vec<&str> = Vec::new();
        let words = tokens(line);
        for w in &words {
            match self.best(w) {
                Some(NULL_TOKEN) => {}
                Some(e) => out.push(e),
                None => out.push(w),
            }
        }
        out.join(" ")
    }

    pub fn translate<S: AsRef<str>>(&self, lines: &[S]) -> Vec<String> {
        lines
            .iter()
            .map(|l| self.translate_line(l.as_ref()))
            .collect()
    }

    /// Header line, then `f<TAB>e<TAB>prob` sorted by f and e with 12
    /// significant digits. Untrained models record the uniform value in the
    /// header and list no entries.
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\titerations={}", self.iterations_run);
        if let Some(ll) = self.final_log_likelihood() {
            out.push_str(&format!("\tlog_likelihood={ll:.11e}"));
        }
        if let Some(u) = self.uniform {
            out.push_str(&format!("\tuniform={u:.11e}"));
            out.push_str(&format!("\tsource={}", self.source_vocab.len()));
        }
        out.push('\n');
        for (f, row) in &self.table {
            for (e, p) in row {
                out.push_str(&format!("{f}\t{e}\t{p:.11e}\n"));
            }
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output of a trained model. The
    /// per-iteration history is not stored, only the final value.
    pub fn from_text(text: &str) -> Result<Self, LexiconError> {
        let bad = |line: usize, reason: &str| LexiconError::Malformed {
            line,
            reason: reason.into(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let mut fields = header.split('\t');
        if fields.next() != Some(HEADER) {
            return Err(bad(1, "not a lexicon file"));
        }
        let mut iterations = None;
        let mut ll = None;
        for field in fields {
            match field.split_once('=') {
                Some(("iterations", v)) => iterations = v.parse().ok(),
                Some(("log_likelihood", v)) => ll = v.parse().ok(),
                Some(("uniform", _)) | Some(("source", _)) => {
                    return Err(bad(1, "untrained models cannot be loaded"))
                }
                _ => return Err(bad(1, "unknown header field")),
            }
        }
        let iterations = iterations.ok_or_else(|| bad(1, "missing iteration count"))?;
        let mut table: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            let mut parts = line.split('\t');
            let (Some(f), Some(e), Some(p), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad(n, "expected three tab-separated fields"));
            };
            let p: f64 = p.parse().map_err(|_| bad(n, "bad probability"))?;
            if !(0.0..=1.0 + 1e-9).contains(&p) {
                return Err(bad(n, "probability out of range"));
            }
            table
                .entry(f.to_string())
                .or_default()
                .insert(e.to_string(), p);
        }
        let source_vocab = table.keys().cloned().collect();
        let target_vocab = table
            .values()
            .flat_map(|row| row.keys())
            .filter(|e| *e != NULL_TOKEN)
            .cloned()
            .collect();
        Ok(LexiconModel {
            table,
            source_vocab,
            target_vocab,
            uniform: None,
            iterations_run: iterations,
            log_likelihood: ll.into_iter().collect(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), LexiconError> {
        write_atomic(path, self.to_text().as_bytes()).map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }
}

impl Translator for LexiconModel {
    fn translate(&self, sources: &[&str]) -> Result<Vec<String>, String> {
        Ok(LexiconModel::translate(self, sources))
    }
}
