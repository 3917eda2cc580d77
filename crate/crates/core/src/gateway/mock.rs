//! Deterministic offline backend.
//!
//! Requests are classified by matching their system message against the
//! configured prompt templates. Seed requests draw from the bundled word
//! list, sentence requests fill a handful of fixed templates around the seed
//! word (deliberately repetitive), and translation requests are mapped word
//! by word through the bundled toy lexicon.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use super::{ChatBackend, ChatRequest, GatewayError, Role};
use crate::resources::{mock_lexicon, WordClass};

const NOUN_TEMPLATES: &[&str] = &[
    "Ich sehe {w}.",
    "Hier ist {w}.",
    "Wo ist {w}?",
    "Wir lieben {w}.",
    "{w} ist sehr schön.",
    "Heute kommt {w}.",
];

const VERB_TEMPLATES: &[&str] = &[
    "Wir {w} heute.",
    "Ich will {w}.",
    "Sie {w} gern.",
    "Kinder {w} oft.",
    "Wir {w} sehr gern zusammen.",
];

const DEFAULT_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MockStage {
    SeedNouns,
    SeedVerbs,
    Sentences,
    Translation,
}

/// System-message templates used to recognise each stage. Placeholders
/// `{n}`, `{seed}`, `{src}`, `{tgt}` and `{sentence}` match any text; `{n}`
/// additionally captures the requested item count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockPatterns {
    pub seed_nouns: String,
    pub seed_verbs: String,
    pub sentences: String,
    pub translation: String,
}

fn template_regex(template: &str) -> Regex {
    let placeholder = Regex::new(r"\{(n|seed|src|tgt|sentence)\}").expect("static regex");
    let mut pattern = String::from(r"(?s)^\s*");
    let mut last = 0;
    let mut have_n = false;
    for m in placeholder.find_iter(template) {
        pattern.push_str(&regex::escape(&template[last..m.start()]));
        if m.as_str() == "{n}" && !have_n {
            pattern.push_str(r"(?P<n>\d+)");
            have_n = true;
        } else {
            pattern.push_str(".*?");
        }
        last = m.end();
    }
    pattern.push_str(&regex::escape(&template[last..]));
    pattern.push_str(r"\s*$");
    Regex::new(&pattern).expect("escaped template is a valid regex")
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |hash, b| {
        (hash ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3)
    })
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub struct MockBackend {
    seed: u64,
    matchers: Vec<(MockStage, Regex)>,
    nouns: Vec<String>,
    verbs: Vec<String>,
    verb_set: HashSet<String>,
    lexicon: HashMap<String, &'static str>,
}

impl MockBackend {
    pub fn new(seed: u64, patterns: &MockPatterns) -> Self {
        let matchers = vec![
            (
                MockStage::Translation,
                template_regex(&patterns.translation),
            ),
            (MockStage::Sentences, template_regex(&patterns.sentences)),
            (MockStage::SeedNouns, template_regex(&patterns.seed_nouns)),
            (MockStage::SeedVerbs, template_regex(&patterns.seed_verbs)),
        ];
        let entries = mock_lexicon();
        let nouns = entries
            .iter()
            .filter(|e| e.class == WordClass::Noun)
            .map(|e| capitalize(e.source))
            .collect();
        let verbs: Vec<String> = entries
            .iter()
            .filter(|e| e.class == WordClass::Verb)
            .map(|e| e.source.to_owned())
            .collect();
        Self {
            seed,
            matchers,
            verb_set: verbs.iter().cloned().collect(),
            nouns,
            verbs,
            lexicon: entries
                .iter()
                .map(|e| (e.source.to_owned(), e.target))
                .collect(),
        }
    }

    pub fn classify(&self, request: &ChatRequest) -> Result<(MockStage, usize), GatewayError> {
        let system = request
            .first(Role::System)
            .ok_or_else(|| GatewayError::UnclassifiableRequest("no system message".into()))?;
        self.matchers
            .iter()
            .find_map(|(stage, re)| {
                re.captures(system).map(|caps| {
                    let n = caps
                        .name("n")
                        .and_then(|m| m.as_str().parse().ok())
                        .unwrap_or(DEFAULT_COUNT);
                    (*stage, n)
                })
            })
            .ok_or_else(|| GatewayError::UnclassifiableRequest(system.chars().take(80).collect()))
    }

    fn rng_for(&self, stage: MockStage, request: &ChatRequest) -> ChaCha8Rng {
        let mut key = format!("{stage:?}");
        for message in &request.messages {
            key.push('\u{1f}');
            key.push_str(&message.content);
        }
        ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(key.as_bytes()))
    }

    /// Builds the mock reply for a request.
    pub fn mock_complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        request.validate()?;
        let (stage, n) = self.classify(request)?;
        let mut rng = self.rng_for(stage, request);
        let reply = match stage {
            MockStage::SeedNouns | MockStage::SeedVerbs => {
                let pool = if stage == MockStage::SeedNouns {
                    &self.nouns
                } else {
                    &self.verbs
                };
                pool.choose_multiple(&mut rng, n.min(pool.len()))
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(", ")
            }
            MockStage::Sentences => {
                let seed = request.last(Role::User).unwrap_or_default().trim();
                let templates = if self.verb_set.contains(&seed.to_lowercase()) {
                    VERB_TEMPLATES
                } else {
                    NOUN_TEMPLATES
                };
                let offset = rng.gen_range(0..templates.len());
                let mut reply = String::new();
                for k in 0..n {
                    reply.push_str(&templates[(offset + k) % templates.len()].replace("{w}", seed));
                    reply.push(';');
                }
                reply
            }
            MockStage::Translation => {
                let sentence = request.last(Role::User).unwrap_or_default();
                self.translate(sentence)
            }
        };
        Ok(reply)
    }

    /// Word-by-word lexicon translation; unknown words pass through.
    pub fn translate(&self, sentence: &str) -> String {
        let mut words: Vec<String> = sentence
            .split_whitespace()
            .map(|token| {
                let start = token.find(char::is_alphanumeric).unwrap_or(token.len());
                let end = token
                    .rfind(char::is_alphanumeric)
                    .map(|i| i + token[i..].chars().next().map_or(1, char::len_utf8))
                    .unwrap_or(start)
                    .max(start);
                let core = &token[start..end];
                let translated = self
                    .lexicon
                    .get(&core.to_lowercase())
                    .map(|t| (*t).to_owned())
                    .unwrap_or_else(|| core.to_owned());
                format!("{}{}{}", &token[..start], translated, &token[end..])
            })
            .collect();
        for i in 0..words.len().saturating_sub(1) {
            let next_vowel = words[i + 1]
                .chars()
                .next()
                .is_some_and(|c| "aeiouAEIOU".contains(c));
            if next_vowel && words[i].eq_ignore_ascii_case("a") {
                words[i].push('n');
            }
        }
        if let Some(first) = words.first_mut() {
            *first = capitalize(first);
        }
        words.join(" ")
    }
}

impl ChatBackend for MockBackend {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        self.mock_complete(request)
    }
}
