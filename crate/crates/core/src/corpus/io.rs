use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CorpusError, Origin, ParallelCorpus, SentencePair};
use crate::fsutil::write_atomic;

/// On-disk corpus layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    /// `<stem>.<src>` and `<stem>.<tgt>`, line i aligned to line i.
    PlainPair,
    /// One JSON object per line.
    Jsonl,
}

#[derive(Serialize, Deserialize)]
struct JsonPair {
    id: String,
    src: String,
    tgt: String,
    origin: Origin,
    #[serde(default)]
    seed_word: Option<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn pair_path(stem: &Path, lang: &str) -> PathBuf {
    let mut name = stem.as_os_str().to_owned();
    name.push(".");
    name.push(lang);
    PathBuf::from(name)
}

fn read_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Reads a line-aligned plain-text pair. Pairs are natural, with ids
/// `<stem name>-<line number>`.
pub fn read_plain_pair(
    stem: &Path,
    source_lang: &str,
    target_lang: &str,
) -> Result<ParallelCorpus, CorpusError> {
    let src_path = pair_path(stem, source_lang);
    let tgt_path = pair_path(stem, target_lang);
    let sources = read_lines(&src_path)?;
    let targets = read_lines(&tgt_path)?;
    if sources.len() != targets.len() {
        return Err(CorpusError::LineCountMismatch {
            path: stem.display().to_string(),
            source_lines: sources.len(),
            target_lines: targets.len(),
        });
    }
    let prefix = stem
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "line".into());
    let pairs = sources
        .into_iter()
        .zip(targets)
        .enumerate()
        .map(|(i, (src, tgt))| {
            SentencePair::natural(format!("{prefix}-{}", i + 1), src, tgt).map_err(|e| {
                CorpusError::Malformed {
                    path: stem.display().to_string(),
                    line: i + 1,
                    reason: e.to_string(),
                }
            })
        })
        .collect::<Result<_, _>>()?;
    ParallelCorpus::new(source_lang, target_lang, pairs)
}

/// Writes `<stem>.<src>` and `<stem>.<tgt>`.
pub fn write_plain_pair(corpus: &ParallelCorpus, stem: &Path) -> Result<(), CorpusError> {
    let mut src = String::new();
    let mut tgt = String::new();
    for pair in corpus.pairs() {
        src.push_str(pair.source());
        src.push('\n');
        tgt.push_str(pair.target());
        tgt.push('\n');
    }
    let src_path = pair_path(stem, corpus.source_lang());
    let tgt_path = pair_path(stem, corpus.target_lang());
    write_atomic(&src_path, src.as_bytes()).map_err(io_err(&src_path))?;
    write_atomic(&tgt_path, tgt.as_bytes()).map_err(io_err(&tgt_path))
}

pub fn read_jsonl(
    path: &Path,
    source_lang: &str,
    target_lang: &str,
) -> Result<ParallelCorpus, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let malformed = |line: usize, reason: String| CorpusError::Malformed {
        path: path.display().to_string(),
        line,
        reason,
    };
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonPair =
            serde_json::from_str(line).map_err(|e| malformed(i + 1, e.to_string()))?;
        let pair = SentencePair::new(rec.id, rec.src, rec.tgt, rec.origin, rec.seed_word)
            .map_err(|e| malformed(i + 1, e.to_string()))?;
        pairs.push(pair);
    }
    ParallelCorpus::new(source_lang, target_lang, pairs)
}

pub(crate) fn to_jsonl(corpus: &ParallelCorpus) -> String {
    let mut out = String::new();
    for pair in corpus.pairs() {
        let rec = JsonPair {
            id: pair.id().to_owned(),
            src: pair.source().to_owned(),
            tgt: pair.target().to_owned(),
            origin: pair.origin(),
            seed_word: pair.seed_word().map(str::to_owned),
        };
        out.push_str(&serde_json::to_string(&rec).expect("pair serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl(corpus: &ParallelCorpus, path: &Path) -> Result<(), CorpusError> {
    write_atomic(path, to_jsonl(corpus).as_bytes()).map_err(io_err(path))
}
