//! Parallel corpora: sentence pairs, token counting, deduplication and
//! threshold-based sampling into train/valid/test splits.

mod io;

pub use io::{read_jsonl, read_plain_pair, write_jsonl, write_plain_pair, CorpusFormat};

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("pair {id}: {reason}")]
    InvalidPair { id: String, reason: String },
    #[error("duplicate pair id {0}")]
    DuplicateId(String),
    #[error("insufficient data: need {needed} source tokens, only {available} available")]
    InsufficientData { needed: usize, available: usize },
    #[error("threshold must be positive")]
    ZeroThreshold,
    #[error("{path}: line count mismatch ({source_lines} source vs {target_lines} target)")]
    LineCountMismatch {
        path: String,
        source_lines: usize,
        target_lines: usize,
    },
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Natural,
    Synthetic,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Natural => f.write_str("natural"),
            Origin::Synthetic => f.write_str("synthetic"),
        }
    }
}

/// One aligned source/target sentence with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    id: String,
    source: String,
    target: String,
    origin: Origin,
    seed_word: Option<String>,
}

fn check_line(id: &str, side: &str, text: &str) -> Result<(), CorpusError> {
    if text.trim().is_empty() {
        return Err(CorpusError::InvalidPair {
            id: id.to_string(),
            reason: format!("{side} side is empty"),
        });
    }
    if text.contains(['\n', '\r', '\u{2028}', '\u{2029}', '\u{85}']) {
        return Err(CorpusError::InvalidPair {
            id: id.to_string(),
            reason: format!("{side} side contains a line break"),
        });
    }
    Ok(())
}

impl SentencePair {
    pub fn new(
        id: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
        origin: Origin,
        seed_word: Option<String>,
    ) -> Result<Self, CorpusError> {
        let (id, source, target) = (id.into(), source.into(), target.into());
        if id.is_empty() {
            return Err(CorpusError::InvalidPair {
                id,
                reason: "empty id".into(),
            });
        }
        check_line(&id, "source", &source)?;
        check_line(&id, "target", &target)?;
        match (origin, &seed_word) {
            (Origin::Synthetic, None) => {
                return Err(CorpusError::InvalidPair {
                    id,
                    reason: "synthetic pair without seed word".into(),
                })
            }
            (Origin::Natural, Some(_)) => {
                return Err(CorpusError::InvalidPair {
                    id,
                    reason: "natural pair with seed word".into(),
                })
            }
            _ => {}
        }
        Ok(Self {
            id,
            source,
            target,
            origin,
            seed_word,
        })
    }

    pub fn natural(
        id: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        Self::new(id, source, target, Origin::Natural, None)
    }

    pub fn synthetic(
        id: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
        seed_word: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        Self::new(
            id,
            source,
            target,
            Origin::Synthetic,
            Some(seed_word.into()),
        )
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn seed_word(&self) -> Option<&str> {
        self.seed_word.as_deref()
    }

    pub fn source_tokens(&self) -> usize {
        count_tokens(&self.source)
    }
}

/// An ordered collection of sentence pairs for one language direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    pairs: Vec<SentencePair>,
    source_lang: String,
    target_lang: String,
}

impl ParallelCorpus {
    pub fn new(
        source_lang: impl Into<String>,
        target_lang: impl Into<String>,
        pairs: Vec<SentencePair>,
    ) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(pairs.len());
        for pair in &pairs {
            if !seen.insert(pair.id.as_str()) {
                return Err(CorpusError::DuplicateId(pair.id.clone()));
            }
        }
        Ok(Self {
            pairs,
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
        })
    }

    pub fn empty(source_lang: impl Into<String>, target_lang: impl Into<String>) -> Self {
        Self {
            pairs: Vec::new(),
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
        }
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn into_pairs(self) -> Vec<SentencePair> {
        self.pairs
    }

    pub fn source_lang(&self) -> &str {
        &self.source_lang
    }

    pub fn target_lang(&self) -> &str {
        &self.target_lang
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn source_token_count(&self) -> usize {
        self.pairs.iter().map(SentencePair::source_tokens).sum()
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.source.as_str())
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.target.as_str())
    }

    pub fn ids(&self) -> HashSet<&str> {
        self.pairs.iter().map(|p| p.id.as_str()).collect()
    }

    /// Appends `other`, failing if any id collides.
    pub fn concat(&self, other: &ParallelCorpus) -> Result<ParallelCorpus, CorpusError> {
        let pairs = self.pairs.iter().chain(&other.pairs).cloned().collect();
        ParallelCorpus::new(self.source_lang.clone(), self.target_lang.clone(), pairs)
    }

    fn with_pairs(&self, pairs: Vec<SentencePair>) -> ParallelCorpus {
        ParallelCorpus {
            pairs,
            source_lang: self.source_lang.clone(),
            target_lang: self.target_lang.clone(),
        }
    }
}

/// Whitespace token count after NFC normalization.
pub fn count_tokens(text: &str) -> usize {
    tokens(text).len()
}

/// Whitespace tokens after NFC normalization.
pub fn tokens(text: &str) -> Vec<String> {
    let normalized: String = text.nfc().collect();
    normalized.split_whitespace().map(str::to_owned).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DedupMode {
    /// Case-insensitive after NFC + trim.
    SeedWord,
    /// Exact after NFC + trim.
    Sentence,
}

fn dedup_key(item: &str, mode: DedupMode) -> String {
    let normalized: String = item.trim().nfc().collect();
    match mode {
        DedupMode::SeedWord => normalized.to_lowercase(),
        DedupMode::Sentence => normalized,
    }
}

/// Keeps the first occurrence of each item, preserving order.
pub fn dedup<S: AsRef<str> + Clone>(items: &[S], mode: DedupMode) -> Vec<S> {
    dedup_by(items.to_vec(), mode, |s| s.as_ref())
}

/// [`dedup`] over arbitrary items, comparing the text returned by `key`.
pub fn dedup_by<T>(items: Vec<T>, mode: DedupMode, key: impl Fn(&T) -> &str) -> Vec<T> {
    let mut seen = HashSet::new();
    items
        .into_iter()
        .filter(|item| seen.insert(dedup_key(key(item), mode)))
        .collect()
}

/// Number of leading pairs whose cumulative source-token count first
/// reaches `threshold`, or `None` if the slice runs out first.
fn prefix_reaching(pairs: &[SentencePair], threshold: usize) -> Option<usize> {
    let mut total = 0;
    for (i, pair) in pairs.iter().enumerate() {
        total += pair.source_tokens();
        if total >= threshold {
            return Some(i + 1);
        }
    }
    None
}

fn shuffled(corpus: &ParallelCorpus, rng_seed: u64) -> Vec<SentencePair> {
    let mut pairs = corpus.pairs.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    pairs.shuffle(&mut rng);
    pairs
}

/// Shuffles the corpus with a seeded RNG and takes pairs until the selected
/// source-token count reaches `threshold`. The overshooting pair is kept.
pub fn sample_to_threshold(
    corpus: &ParallelCorpus,
    threshold: usize,
    rng_seed: u64,
) -> Result<(ParallelCorpus, ParallelCorpus), CorpusError> {
    if threshold == 0 {
        return Err(CorpusError::ZeroThreshold);
    }
    let mut pairs = shuffled(corpus, rng_seed);
    let cut = prefix_reaching(&pairs, threshold).ok_or(CorpusError::InsufficientData {
        needed: threshold,
        available: corpus.source_token_count(),
    })?;
    let remainder = pairs.split_off(cut);
    Ok((corpus.with_pairs(pairs), corpus.with_pairs(remainder)))
}

/// Token thresholds for split construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_token_threshold: usize,
    pub valid_token_threshold: usize,
    /// Only requested for natural corpora.
    pub test_token_threshold: Option<usize>,
    pub rng_seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_token_threshold: 900_000,
            valid_token_threshold: 100_000,
            test_token_threshold: Some(100_000),
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: ParallelCorpus,
    pub valid: ParallelCorpus,
    pub test: Option<ParallelCorpus>,
}

/// Draws train, then valid, then (optionally) test as consecutive prefixes
/// of a single seeded shuffle, so the splits are disjoint.
pub fn make_splits(corpus: &ParallelCorpus, spec: &SplitSpec) -> Result<Splits, CorpusError> {
    let mut thresholds = vec![spec.train_token_threshold, spec.valid_token_threshold];
    thresholds.extend(spec.test_token_threshold);
    if thresholds.contains(&0) {
        return Err(CorpusError::ZeroThreshold);
    }
    let needed: usize = thresholds.iter().sum();
    let available = corpus.source_token_count();
    let insufficient = || CorpusError::InsufficientData { needed, available };

    let pairs = shuffled(corpus, spec.rng_seed);
    let mut rest = pairs.as_slice();
    let mut parts = Vec::with_capacity(thresholds.len());
    for threshold in thresholds {
        let cut = prefix_reaching(rest, threshold).ok_or_else(insufficient)?;
        parts.push(corpus.with_pairs(rest[..cut].to_vec()));
        rest = &rest[cut..];
    }
    let mut parts = parts.into_iter();
    Ok(Splits {
        train: parts.next().expect("train split"),
        valid: parts.next().expect("valid split"),
        test: parts.next(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus_of(lengths: &[usize]) -> ParallelCorpus {
        let pairs = lengths
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let src = vec!["w"; n].join(" ");
                SentencePair::natural(format!("p{i}"), src, "t").unwrap()
            })
            .collect();
        ParallelCorpus::new("de", "en", pairs).unwrap()
    }

    #[test]
    fn counts_whitespace_tokens() {
        assert_eq!(count_tokens("Der Hund bellt ."), 4);
        assert_eq!(count_tokens(""), 0);
        assert_eq!(count_tokens("  a\t b  "), 2);
        assert_eq!(count_tokens("   "), 0);
    }

    #[test]
    fn nfc_applies_before_counting() {
        // decomposed "ü" stays one token either way, but the text is normalized
        assert_eq!(tokens("Gru\u{0308}n"), vec!["Grün".to_string()]);
    }

    #[test]
    fn dedup_modes() {
        assert_eq!(
            dedup(&["Eule", "eule", "Katze"], DedupMode::SeedWord),
            vec!["Eule", "Katze"]
        );
        assert_eq!(
            dedup(&["Eule", "eule"], DedupMode::Sentence),
            vec!["Eule", "eule"]
        );
        assert_eq!(dedup(&["a", "a", "a"], DedupMode::Sentence), vec!["a"]);
        assert_eq!(dedup(&[" a", "a "], DedupMode::Sentence), vec![" a"]);
    }

    #[test]
    fn pair_invariants() {
        assert!(SentencePair::natural("a", " ", "x").is_err());
        assert!(SentencePair::natural("a", "x\ny", "x").is_err());
        assert!(SentencePair::new("a", "x", "y", Origin::Synthetic, None).is_err());
        assert!(SentencePair::new("a", "x", "y", Origin::Natural, Some("s".into())).is_err());
        let p = SentencePair::synthetic("a", "x", "y", "Eule").unwrap();
        assert_eq!(p.seed_word(), Some("Eule"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let p = SentencePair::natural("a", "x", "y").unwrap();
        let err = ParallelCorpus::new("de", "en", vec![p.clone(), p]).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId(id) if id == "a"));
    }

    #[test]
    fn sampling_overshoots_with_last_sentence() {
        let corpus = corpus_of(&[4, 4, 4]);
        let (selected, remainder) = sample_to_threshold(&corpus, 10, 1).unwrap();
        assert_eq!(selected.len(), 3);
        assert_eq!(selected.source_token_count(), 12);
        assert!(remainder.is_empty());
    }

    #[test]
    fn small_threshold_takes_one_pair() {
        let corpus = corpus_of(&[5, 6, 7, 8]);
        for seed in 0..20 {
            let (selected, remainder) = sample_to_threshold(&corpus, 5, seed).unwrap();
            assert_eq!(selected.len(), 1);
            assert_eq!(remainder.len(), 3);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let corpus = corpus_of(&[1, 2, 3, 4, 5, 6, 7, 8, 9]);
        let a = sample_to_threshold(&corpus, 12, 7).unwrap();
        let b = sample_to_threshold(&corpus, 12, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_errors() {
        let corpus = corpus_of(&[2, 2]);
        assert!(matches!(
            sample_to_threshold(&corpus, 5, 0),
            Err(CorpusError::InsufficientData {
                needed: 5,
                available: 4
            })
        ));
        assert!(matches!(
            sample_to_threshold(&corpus, 0, 0),
            Err(CorpusError::ZeroThreshold)
        ));
    }

    #[test]
    fn splits_of_uniform_corpus() {
        // 30 pairs of 4 tokens: 40 tokens = 10 pairs, 20 tokens = 5 pairs
        let corpus = corpus_of(&[4; 30]);
        let spec = SplitSpec {
            train_token_threshold: 40,
            valid_token_threshold: 20,
            test_token_threshold: None,
            rng_seed: 3,
        };
        let splits = make_splits(&corpus, &spec).unwrap();
        assert_eq!(splits.train.len(), 10);
        assert_eq!(splits.valid.len(), 5);
        assert!(splits.test.is_none());
        assert!(splits.train.ids().is_disjoint(&splits.valid.ids()));
        assert_eq!(make_splits(&corpus, &spec).unwrap(), splits);
    }

    #[test]
    fn splits_with_test_are_disjoint() {
        let corpus = corpus_of(&[4; 30]);
        let spec = SplitSpec {
            train_token_threshold: 40,
            valid_token_threshold: 20,
            test_token_threshold: Some(20),
            rng_seed: 11,
        };
        let s = make_splits(&corpus, &spec).unwrap();
        let test = s.test.unwrap();
        assert!(s.train.ids().is_disjoint(&s.valid.ids()));
        assert!(s.train.ids().is_disjoint(&test.ids()));
        assert!(s.valid.ids().is_disjoint(&test.ids()));
        assert!(s.train.len() + s.valid.len() + test.len() <= corpus.len());
    }

    #[test]
    fn splits_report_insufficient_data() {
        let corpus = corpus_of(&[4; 5]);
        let spec = SplitSpec {
            train_token_threshold: 16,
            valid_token_threshold: 8,
            test_token_threshold: None,
            rng_seed: 0,
        };
        assert!(matches!(
            make_splits(&corpus, &spec),
            Err(CorpusError::InsufficientData {
                needed: 24,
                available: 20
            })
        ));
    }

    proptest! {
        #[test]
        fn sampling_bounds_and_permutation(
            lengths in prop::collection::vec(1usize..12, 1..60),
            frac in 0.01f64..1.0,
            seed in any::<u64>(),
        ) {
            let corpus = corpus_of(&lengths);
            let total = corpus.source_token_count();
            let threshold = ((total as f64 * frac) as usize).max(1);
            let longest = *lengths.iter().max().unwrap();
            let (selected, remainder) = sample_to_threshold(&corpus, threshold, seed).unwrap();
            let t = selected.source_token_count();
            prop_assert!(threshold <= t && t < threshold + longest);
            let mut ids: Vec<_> = selected.pairs().iter().chain(remainder.pairs()).map(|p| p.id().to_string()).collect();
            ids.sort();
            let mut expected: Vec<_> = corpus.pairs().iter().map(|p| p.id().to_string()).collect();
            expected.sort();
            prop_assert_eq!(ids, expected);
        }

        #[test]
        fn dedup_idempotent(items in prop::collection::vec("[aAbB ]{0,3}", 0..20)) {
            for mode in [DedupMode::SeedWord, DedupMode::Sentence] {
                let once = dedup(&items, mode);
                prop_assert!(once.len() <= items.len());
                prop_assert_eq!(dedup(&once, mode), once.clone());
            }
        }

        #[test]
        fn token_count_additive(a in "[a-zä ]{0,20}[a-z]", b in "[a-z][a-z\t ]{0,20}") {
            let joined = format!("{a} {b}");
            prop_assert_eq!(count_tokens(&joined), count_tokens(&a) + count_tokens(&b));
        }
    }
}
