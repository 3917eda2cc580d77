//! Bundled data: the mock backend's toy lexicon, a small natural
//! German-English sample, and a controlled-vocabulary experiment fixture.

use crate::corpus::{ParallelCorpus, SentencePair};

const MOCK_LEXICON: &str = include_str!("../data/mock_lexicon.tsv");
const NATURAL_SAMPLE: &str = include_str!("../data/natural_sample.de-en.tsv");
const CONTROLLED_FIXTURE: &str = include_str!("../data/controlled_fixture.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordClass {
    Noun,
    Verb,
    Word,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LexiconEntry {
    pub source: &'static str,
    pub target: &'static str,
    pub class: WordClass,
}

fn data_lines(text: &'static str) -> impl Iterator<Item = &'static str> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
}

pub fn mock_lexicon() -> Vec<LexiconEntry> {
    data_lines(MOCK_LEXICON)
        .map(|line| {
            let mut cols = line.split('\t');
            let (source, target, class) = (
                cols.next().expect("source column"),
                cols.next().expect("target column"),
                cols.next().expect("class column"),
            );
            let class = match class {
                "noun" => WordClass::Noun,
                "verb" => WordClass::Verb,
                _ => WordClass::Word,
            };
            LexiconEntry {
                source,
                target,
                class,
            }
        })
        .collect()
}

/// The bundled natural German-English sample, ids `nat-0001` onwards.
pub fn natural_sample() -> ParallelCorpus {
    let pairs = data_lines(NATURAL_SAMPLE)
        .enumerate()
        .map(|(i, line)| {
            let (src, tgt) = line.split_once('\t').expect("tab-separated sample line");
            SentencePair::natural(format!("nat-{:04}", i + 1), src, tgt)
                .expect("bundled sample is well formed")
        })
        .collect();
    ParallelCorpus::new("de", "en", pairs).expect("bundled sample ids are unique")
}

/// Small de-en splits with known vocabulary overlap. Natural sentences vary
/// adverbs, verb and adjective around one set of nouns; synthetic sentences use
/// four repetitive templates around a second noun set (plus two natural
/// nouns); the test set puts synthetic-only nouns into natural frames.
#[derive(Debug, Clone)]
pub struct ControlledFixture {
    pub nat_train: ParallelCorpus,
    pub nat_valid: ParallelCorpus,
    pub syn_train: ParallelCorpus,
    pub syn_valid: ParallelCorpus,
    pub test: ParallelCorpus,
}

pub fn controlled_fixture() -> ControlledFixture {
    let mut splits: Vec<(&str, Vec<SentencePair>)> =
        ["nat-train", "nat-valid", "syn-train", "syn-valid", "test"]
            .into_iter()
            .map(|name| (name, Vec::new()))
            .collect();
    for line in data_lines(CONTROLLED_FIXTURE) {
        let mut cols = line.split('\t');
        let (split, src, tgt) = (
            cols.next().expect("split column"),
            cols.next().expect("source column"),
            cols.next().expect("target column"),
        );
        let (_, pairs) = splits
            .iter_mut()
            .find(|(name, _)| *name == split)
            .expect("known split name");
        let id = format!("{split}-{:03}", pairs.len() + 1);
        let pair = if split.starts_with("syn") {
            let seed = src
                .split_whitespace()
                .find(|w| w.starts_with(char::is_uppercase))
                .expect("templated sentence has a noun");
            SentencePair::synthetic(id, src, tgt, seed)
        } else {
            SentencePair::natural(id, src, tgt)
        };
        pairs.push(pair.expect("fixture line is well formed"));
    }
    let mut corpora = splits
        .into_iter()
        .map(|(_, pairs)| ParallelCorpus::new("de", "en", pairs).expect("unique fixture ids"));
    let mut next = || corpora.next().expect("five splits");
    ControlledFixture {
        nat_train: next(),
        nat_valid: next(),
        syn_train: next(),
        syn_valid: next(),
        test: next(),
    }
}
