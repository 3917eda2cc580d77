use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::tokens;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    #[default]
    None,
    /// For each order with zero matches, double a divisor `k` (starting
    /// at one) and use precision `1 / (k * total)`. Orders with matches are
    /// left unsmoothed.
    AddKExp,
}

/// Tokenization applied before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalizer {
    /// Whitespace tokens only.
    Whitespace,
    /// Whitespace tokens with leading and trailing punctuation split off,
    /// one token per punctuation character. Inner punctuation stays.
    #[default]
    SplitPunct,
}

impl Normalizer {
    pub fn name(self) -> &'static str {
        match self {
            Normalizer::Whitespace => "whitespace",
            Normalizer::SplitPunct => "split-punct-v1",
        }
    }

    pub fn tokenize(self, text: &str) -> Vec<String> {
        let words = tokens(text);
        match self {
            Normalizer::Whitespace => words,
            Normalizer::SplitPunct => words.iter().flat_map(|w| split_punct(w)).collect(),
        }
    }
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '„' | '“'
                | '”'
                | '‘'
                | '’'
                | '‚'
                | '«'
                | '»'
                | '–'
                | '—'
                | '…'
                | '¿'
                | '¡'
                | '·'
        )
}

fn split_punct(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let start = chars
        .iter()
        .position(|&c| !is_punct(c))
        .unwrap_or(chars.len());
    let end = chars
        .iter()
        .rposition(|&c| !is_punct(c))
        .map_or(start, |i| i + 1);
    let mut out: Vec<String> = chars[..start].iter().map(|c| c.to_string()).collect();
    if start < end {
        out.push(chars[start..end].iter().collect());
    }
    out.extend(chars[end.max(start)..].iter().map(|c| c.to_string()));
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BleuError {
    #[error("{hypotheses} hypotheses but {references} references")]
    LengthMismatch {
        hypotheses: usize,
        references: usize,
    },
    #[error("hypothesis corpus has no tokens")]
    EmptyHypothesisCorpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    /// 0..=100.
    pub bleu: f64,
    /// Precision per order after smoothing; 0 for orders with no
    /// hypothesis n-grams at all.
    pub precisions: [f64; MAX_ORDER],
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
    pub smoothing: Smoothing,
    pub tokenizer: String,
}

impl BleuReport {
    /// Orders that had at least one hypothesis n-gram.
    pub fn effective_order(&self) -> usize {
        self.totals.iter().filter(|&&t| t > 0).count()
    }
}

fn ngram_counts<S: AsRef<str>>(words: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    if words.len() >= n {
        for window in words.windows(n) {
            let key: Vec<&str> = window.iter().map(AsRef::as_ref).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

/// Exp(1 - r/h) when the hypothesis is not longer than the reference.
pub fn brevity_penalty(hyp_len: u64, ref_len: u64) -> f64 {
    if hyp_len > ref_len {
        1.0
    } else if hyp_len == 0 {
        0.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

/// Corpus BLEU over pre-tokenized segments: clipped n-gram matches for
/// n = 1..=4 are summed over the corpus before taking precisions.
///
/// Orders for which the hypotheses contain no n-grams at all (every
/// segment shorter than n) are left out of the geometric mean, so a corpus
/// scored against itself is 100 even when its segments are short.
pub fn corpus_bleu<S: AsRef<str>, T: AsRef<str>>(
    hypotheses: &[Vec<S>],
    references: &[Vec<T>],
    smoothing: Smoothing,
) -> Result<BleuReport, BleuError> {
    if hypotheses.len() != references.len() {
        return Err(BleuError::LengthMismatch {
            hypotheses: hypotheses.len(),
            references: references.len(),
        });
    }
    let mut matches = [0u64; MAX_ORDER];
    let mut totals = [0u64; MAX_ORDER];
    let (mut hyp_len, mut ref_len) = (0u64, 0u64);
    for (hyp, reference) in hypotheses.iter().zip(references) {
        hyp_len += hyp.len() as u64;
        ref_len += reference.len() as u64;
        for n in 1..=MAX_ORDER {
            let hyp_counts = ngram_counts(hyp, n);
            let ref_counts = ngram_counts(reference, n);
            for (gram, count) in &hyp_counts {
                totals[n - 1] += count;
                matches[n - 1] += (*count).min(ref_counts.get(gram).copied().unwrap_or(0));
            }
        }
    }
    if hyp_len == 0 {
        return Err(BleuError::EmptyHypothesisCorpus);
    }

    let mut precisions = [0.0; MAX_ORDER];
    let mut k = 1.0;
    for n in 0..MAX_ORDER {
        if totals[n] == 0 {
            continue;
        }
        precisions[n] = if matches[n] > 0 || smoothing == Smoothing::None {
            matches[n] as f64 / totals[n] as f64
        } else {
            k *= 2.0;
            1.0 / (k * totals[n] as f64)
        };
    }
    let effective: Vec<f64> = (0..MAX_ORDER)
        .filter(|&n| totals[n] > 0)
        .map(|n| precisions[n])
        .collect();
    let bp = brevity_penalty(hyp_len, ref_len);
    let bleu = if effective.contains(&0.0) {
        0.0
    } else {
        let mean_log = effective.iter().map(|p| p.ln()).sum::<f64>() / effective.len() as f64;
        (100.0 * bp * mean_log.exp()).clamp(0.0, 100.0)
    };
    Ok(BleuReport {
        bleu,
        precisions,
        matches,
        totals,
        brevity_penalty: bp,
        hyp_len,
        ref_len,
        smoothing,
        tokenizer: "pretokenized".into(),
    })
}

/// Tokenizes raw lines with `normalizer`, then scores them.
pub fn corpus_bleu_text<S: AsRef<str>, T: AsRef<str>>(
    hypotheses: &[S],
    references: &[T],
    normalizer: Normalizer,
    smoothing: Smoothing,
) -> Result<BleuReport, BleuError> {
    let hyp: Vec<Vec<String>> = hypotheses
        .iter()
        .map(|h| normalizer.tokenize(h.as_ref()))
        .collect();
    let refs: Vec<Vec<String>> = references
        .iter()
        .map(|r| normalizer.tokenize(r.as_ref()))
        .collect();
    let mut report = corpus_bleu(&hyp, &refs, smoothing)?;
    report.tokenizer = normalizer.name().into();
    Ok(report)
}
