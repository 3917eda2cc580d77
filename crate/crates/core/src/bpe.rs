//! Joint byte-pair-encoding subword model.
//!
//! Training starts from characters, with the last character of every word
//! carrying an end-of-word marker, and repeatedly merges the most frequent
//! adjacent pair (ties go to the lexicographically smallest pair). Encoded
//! output marks every non-final piece of a word with `@@`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::path::Path;

use crate::corpus::{tokens, ParallelCorpus};

pub const CONTINUATION_MARKER: &str = "@@";
pub const END_OF_WORD: &str = "</w>";
const HEADER: &str = "bpe-v1";

#[derive(Debug, thiserror::Error)]
pub enum BpeError {
    #[error("no training text")]
    EmptyCorpus,
    #[error(
        "character alphabet ({alphabet} symbols) already exceeds the vocabulary size {target}"
    )]
    AlphabetExceedsTarget { alphabet: usize, target: usize },
    #[error("unrecognised model header {0:?}")]
    BadHeader(String),
    #[error("model line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    vocab: BTreeMap<String, u64>,
    target_vocab_size: usize,
    ranks: HashMap<(String, String), usize>,
}

fn initial_symbols(word: &str) -> Vec<String> {
    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = symbols.last_mut() {
        last.push_str(END_OF_WORD);
    }
    symbols
}

/// Counts whitespace tokens across lines.
pub fn word_counts<'a>(lines: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for line in lines {
        for word in tokens(line) {
            *counts.entry(word).or_insert(0) += 1;
        }
    }
    counts
}

/// Source and target sides of every corpus, for joint training. Callers
/// pass training splits only.
pub fn joint_word_counts(corpora: &[&ParallelCorpus]) -> BTreeMap<String, u64> {
    word_counts(corpora.iter().flat_map(|c| c.sources().chain(c.targets())))
}

pub fn train_bpe(
    corpora: &[&ParallelCorpus],
    target_vocab_size: usize,
) -> Result<BpeModel, BpeError> {
    train_from_counts(&joint_word_counts(corpora), target_vocab_size)
}

type Pair = (u32, u32);

#[derive(PartialEq, Eq)]
struct Candidate {
    count: u64,
    key: Reverse<(String, String)>,
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| self.key.cmp(&other.key))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Trainer {
    names: Vec<String>,
    ids: HashMap<String, u32>,
    words: Vec<(Vec<u32>, u64)>,
    pair_counts: HashMap<Pair, u64>,
    pair_words: HashMap<Pair, HashSet<usize>>,
    heap: BinaryHeap<Candidate>,
}

impl Trainer {
    fn intern(&mut self, symbol: &str) -> u32 {
        if let Some(&id) = self.ids.get(symbol) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(symbol.to_owned());
        self.ids.insert(symbol.to_owned(), id);
        id
    }

    fn push(&mut self, pair: Pair) {
        let count = self.pair_counts.get(&pair).copied().unwrap_or(0);
        if count > 0 {
            let key = Reverse((
                self.names[pair.0 as usize].clone(),
                self.names[pair.1 as usize].clone(),
            ));
            self.heap.push(Candidate { count, key, pair });
        }
    }

    fn add_word_pairs(&mut self, index: usize, sign: i8, touched: &mut HashSet<Pair>) {
        let (symbols, freq) = &self.words[index];
        let freq = *freq;
        for w in symbols.windows(2) {
            let pair = (w[0], w[1]);
            let count = self.pair_counts.entry(pair).or_insert(0);
            if sign > 0 {
                *count += freq;
                self.pair_words.entry(pair).or_default().insert(index);
            } else {
                *count -= freq;
            }
            touched.insert(pair);
        }
    }

    /// Highest-count live pair, ties to the smallest (left, right).
    fn best(&mut self) -> Option<(Pair, u64)> {
        while let Some(top) = self.heap.pop() {
            let live = self.pair_counts.get(&top.pair).copied().unwrap_or(0);
            if live == top.count && live > 0 {
                return Some((top.pair, live));
            }
        }
        None
    }

    fn apply(&mut self, pair: Pair, merged: u32) {
        let affected: Vec<usize> = self
            .pair_words
            .remove(&pair)
            .map(|s| {
                let mut v: Vec<_> = s.into_iter().collect();
                v.sort_unstable();
                v
            })
            .unwrap_or_default();
        let mut touched = HashSet::new();
        for index in affected {
            self.add_word_pairs(index, -1, &mut touched);
            let symbols = &mut self.words[index].0;
            *symbols = merge_pair(symbols, pair, merged);
            self.add_word_pairs(index, 1, &mut touched);
        }
        let mut touched: Vec<_> = touched.into_iter().collect();
        touched.sort_unstable();
        for p in touched {
            if self.pair_counts.get(&p) == Some(&0) {
                self.pair_counts.remove(&p);
                self.pair_words.remove(&p);
            } else {
                self.push(p);
            }
        }
    }
}

fn merge_pair<T: Clone + PartialEq>(symbols: &[T], pair: (T, T), merged: T) -> Vec<T> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == pair.0 && symbols[i + 1] == pair.1 {
            out.push(merged.clone());
            i += 2;
        } else {
            out.push(symbols[i].clone());
            i += 1;
        }
    }
    out
}

/// Trains on a word-frequency table. Stops when the symbol vocabulary
/// (initial alphabet plus merged symbols) reaches `target_vocab_size` or no
/// pair occurs at least twice.
pub fn train_from_counts(
    counts: &BTreeMap<String, u64>,
    target_vocab_size: usize,
) -> Result<BpeModel, BpeError> {
    if counts.is_empty() {
        return Err(BpeError::EmptyCorpus);
    }
    let mut trainer = Trainer {
        names: Vec::new(),
        ids: HashMap::new(),
        words: Vec::with_capacity(counts.len()),
        pair_counts: HashMap::new(),
        pair_words: HashMap::new(),
        heap: BinaryHeap::new(),
    };
    for (word, &freq) in counts {
        let symbols = initial_symbols(word)
            .iter()
            .map(|s| trainer.intern(s))
            .collect();
        trainer.words.push((symbols, freq));
    }
    let mut vocab: HashSet<u32> = (0..trainer.names.len() as u32).collect();
    if vocab.len() > target_vocab_size {
        return Err(BpeError::AlphabetExceedsTarget {
            alphabet: vocab.len(),
            target: target_vocab_size,
        });
    }
    let mut touched = HashSet::new();
    for index in 0..trainer.words.len() {
        trainer.add_word_pairs(index, 1, &mut touched);
    }
    let mut touched: Vec<_> = touched.into_iter().collect();
    touched.sort_unstable();
    for pair in touched {
        trainer.push(pair);
    }

    let mut merges = Vec::new();
    while vocab.len() < target_vocab_size {
        let Some((pair, count)) = trainer.best() else {
            break;
        };
        if count < 2 {
            break;
        }
        let (left, right) = (
            trainer.names[pair.0 as usize].clone(),
            trainer.names[pair.1 as usize].clone(),
        );
        let merged = trainer.intern(&format!("{left}{right}"));
        vocab.insert(merged);
        trainer.apply(pair, merged);
        merges.push((left, right));
    }

    let mut frequencies: BTreeMap<String, u64> = vocab
        .iter()
        .map(|&id| (trainer.names[id as usize].clone(), 0))
        .collect();
    for (symbols, freq) in &trainer.words {
        for &s in symbols {
            *frequencies
                .get_mut(&trainer.names[s as usize])
                .expect("symbol in vocab") += freq;
        }
    }
    Ok(BpeModel::from_parts(merges, frequencies, target_vocab_size))
}

impl BpeModel {
    fn from_parts(
        merges: Vec<(String, String)>,
        vocab: BTreeMap<String, u64>,
        target_vocab_size: usize,
    ) -> Self {
        let ranks = merges
            .iter()
            .enumerate()
            .map(|(rank, pair)| (pair.clone(), rank))
            .collect();
        Self {
            merges,
            vocab,
            target_vocab_size,
            ranks,
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// Symbol frequencies over the training words. Models loaded from disk
    /// know only the symbols named by their merges, all with frequency 0.
    pub fn vocab(&self) -> &BTreeMap<String, u64> {
        &self.vocab
    }

    pub fn target_vocab_size(&self) -> usize {
        self.target_vocab_size
    }

    /// Segments one word into symbols (end-of-word marker still attached).
    pub fn segment_word(&self, word: &str) -> Vec<String> {
        let mut symbols = initial_symbols(word);
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| {
                    self.ranks
                        .get(&(w[0].clone(), w[1].clone()))
                        .map(|&rank| (rank, (w[0].clone(), w[1].clone())))
                })
                .min_by_key(|(rank, _)| *rank);
            let Some((_, pair)) = best else {
                return symbols;
            };
            let merged = format!("{}{}", pair.0, pair.1);
            symbols = merge_pair(&symbols, pair, merged);
        }
    }

    /// Subword tokens for a line, `@@` on every non-final piece of a word.
    pub fn encode(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for word in tokens(text) {
            let mut pieces = self.segment_word(&word);
            let last = pieces.len() - 1;
            for (i, piece) in pieces.iter_mut().enumerate() {
                if i == last {
                    let stem_len = piece.len() - END_OF_WORD.len();
                    piece.truncate(stem_len);
                } else {
                    piece.push_str(CONTINUATION_MARKER);
                }
            }
            out.extend(pieces);
        }
        out
    }

    pub fn encode_line(&self, text: &str) -> String {
        self.encode(text).join(" ")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER} {}\n", self.target_vocab_size);
        for (left, right) in &self.merges {
            out.push_str(left);
            out.push(' ');
            out.push_str(right);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, BpeError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let target_vocab_size = match header.split_once(' ') {
            Some((HEADER, size)) => size
                .trim()
                .parse()
                .map_err(|_| BpeError::BadHeader(header.to_owned()))?,
            _ => return Err(BpeError::BadHeader(header.to_owned())),
        };
        let mut merges = Vec::new();
        let mut vocab = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let malformed = |reason: &str| BpeError::Malformed {
                line: i + 2,
                reason: reason.to_owned(),
            };
            let (left, right) = line
                .split_once(' ')
                .ok_or_else(|| malformed("expected two symbols"))?;
            if left.is_empty() || right.is_empty() || right.contains(' ') {
                return Err(malformed("expected two symbols"));
            }
            for symbol in [left.to_owned(), right.to_owned(), format!("{left}{right}")] {
                vocab.entry(symbol).or_insert(0);
            }
            merges.push((left.to_owned(), right.to_owned()));
        }
        let unique: HashSet<_> = merges.iter().collect();
        if unique.len() != merges.len() {
            return Err(BpeError::Malformed {
                line: 0,
                reason: "duplicate merge".into(),
            });
        }
        Ok(Self::from_parts(merges, vocab, target_vocab_size))
    }

    pub fn save(&self, path: &Path) -> Result<(), BpeError> {
        crate::fsutil::write_atomic(path, self.to_text().as_bytes()).map_err(|source| {
            BpeError::Io {
                path: path.display().to_string(),
                source,
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, BpeError> {
        let text = std::fs::read_to_string(path).map_err(|source| BpeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(&text)
    }
}

/// Joins tokens with spaces and removes every `@@ ` junction.
pub fn decode<S: AsRef<str>>(tokens: &[S]) -> String {
    let joined = tokens
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(" ");
    joined.replace("@@ ", "")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
        pairs.iter().map(|(w, c)| (w.to_string(), *c)).collect()
    }

    fn classic() -> BTreeMap<String, u64> {
        counts(&[("low", 5), ("lower", 2), ("newest", 6), ("widest", 3)])
    }

    /// Brute-force reference: recount every pair over the full corpus at
    /// each step and merge the best one everywhere.
    fn reference_merges(counts: &BTreeMap<String, u64>, target: usize) -> Vec<(String, String)> {
        let mut words: Vec<(Vec<String>, u64)> = counts
            .iter()
            .map(|(w, &c)| (initial_symbols(w), c))
            .collect();
        let mut vocab: HashSet<String> = words.iter().flat_map(|(s, _)| s.clone()).collect();
        let mut merges = Vec::new();
        while vocab.len() < target {
            let mut pc: BTreeMap<(String, String), u64> = BTreeMap::new();
            for (s, c) in &words {
                for w in s.windows(2) {
                    *pc.entry((w[0].clone(), w[1].clone())).or_default() += c;
                }
            }
            let Some((pair, &count)) = pc.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            else {
                break;
            };
            if count < 2 {
                break;
            }
            let merged = format!("{}{}", pair.0, pair.1);
            for (s, _) in &mut words {
                *s = merge_pair(s, pair.clone(), merged.clone());
            }
            vocab.insert(merged);
            merges.push(pair.clone());
        }
        merges
    }

    #[test]
    fn first_merge_on_classic_corpus() {
        // (e,s) and (s,t</w>) both occur 6+3 = 9 times; (e,s) wins the tie
        let model = train_from_counts(&classic(), 100).unwrap();
        assert_eq!(model.merges()[0], ("e".to_string(), "s".to_string()));
        assert_eq!(model.merges()[1], ("es".to_string(), "t</w>".to_string()));
    }

    #[test]
    fn matches_brute_force_reference() {
        for target in [12, 15, 20, 100] {
            let model = train_from_counts(&classic(), target).unwrap();
            assert_eq!(
                model.merges(),
                reference_merges(&classic(), target).as_slice()
            );
            assert!(model.vocab().len() <= target);
        }
    }

    #[test]
    fn single_word_stops_when_pairs_are_rare() {
        // a a a a</w>: (a,a) occurs twice and is merged -> aa a a</w>;
        // every remaining pair occurs once, so training stops
        let model = train_from_counts(&counts(&[("aaaa", 1)]), 100).unwrap();
        assert_eq!(model.merges(), &[("a".to_string(), "a".to_string())]);
        assert_eq!(model.segment_word("aaaa"), vec!["aa", "a", "a</w>"]);
    }

    #[test]
    fn respects_vocabulary_cap() {
        // alphabet: l o w e n s i d + w</w> r</w> t</w> = 11 symbols
        let model = train_from_counts(&classic(), 11).unwrap();
        assert!(model.merges().is_empty());
        let model = train_from_counts(&classic(), 13).unwrap();
        assert_eq!(model.merges().len(), 2);
        assert_eq!(model.vocab().len(), 13);
    }

    #[test]
    fn alphabet_over_cap_is_an_error() {
        assert!(matches!(
            train_from_counts(&classic(), 5),
            Err(BpeError::AlphabetExceedsTarget {
                alphabet: 11,
                target: 5
            })
        ));
        assert!(matches!(
            train_from_counts(&BTreeMap::new(), 5),
            Err(BpeError::EmptyCorpus)
        ));
    }

    #[test]
    fn vocab_frequencies_replay_from_merges() {
        let corpus = classic();
        let model = train_from_counts(&corpus, 18).unwrap();
        let mut replayed: BTreeMap<String, u64> = BTreeMap::new();
        for (word, c) in &corpus {
            for s in model.segment_word(word) {
                *replayed.entry(s).or_default() += c;
            }
        }
        let nonzero: BTreeMap<_, _> = model
            .vocab()
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        assert_eq!(replayed, nonzero);
    }

    #[test]
    fn encode_examples() {
        let empty = BpeModel::from_parts(vec![], BTreeMap::new(), 10);
        assert_eq!(empty.encode("ab"), vec!["a@@", "b"]);
        let model = train_from_counts(&classic(), 100).unwrap();
        assert_eq!(model.encode("low"), vec!["low"]);
        assert_eq!(model.encode("lowest"), vec!["low@@", "est"]);
        assert_eq!(model.encode("x"), vec!["x"]);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode(&["lo@@", "w", "new@@", "est"]), "low newest");
        assert_eq!(decode::<&str>(&[]), "");
    }

    #[test]
    fn model_text_round_trip() {
        let model = train_from_counts(&classic(), 100).unwrap();
        let text = model.to_text();
        assert!(text.starts_with("bpe-v1 100\ne s\nes t</w>\n"));
        let loaded = BpeModel::from_text(&text).unwrap();
        assert_eq!(loaded.merges(), model.merges());
        assert_eq!(loaded.encode("lowest newer"), model.encode("lowest newer"));
        assert!(matches!(
            BpeModel::from_text("bpe-v2 10\n"),
            Err(BpeError::BadHeader(_))
        ));
        assert!(matches!(
            BpeModel::from_text("bpe-v1 10\nab\n"),
            Err(BpeError::Malformed { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(words in prop::collection::vec("[a-eäß]{1,8}", 1..8)) {
            let model = train_from_counts(&classic(), 40).unwrap();
            let line = words.join(" ");
            prop_assert_eq!(decode(&model.encode(&line)), line);
        }

        #[test]
        fn incremental_trainer_matches_reference(
            words in prop::collection::btree_map("[abc]{1,6}", 1u64..5, 1..12),
            extra in 0usize..15,
        ) {
            let alphabet: HashSet<String> = words.keys().flat_map(|w| initial_symbols(w)).collect();
            let target = alphabet.len() + extra;
            let model = train_from_counts(&words, target).unwrap();
            let expected = reference_merges(&words, target);
            prop_assert_eq!(model.merges(), expected.as_slice());
        }
    }
}
