use serde::{Deserialize, Serialize};

use crate::gateway::MockPatterns;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    SeedWords,
    Sentences,
    Translation,
}

/// One stage's messages. `system` and `user` may use the placeholders
/// `{n}`, `{seed}`, `{src}`, `{tgt}` and `{sentence}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplate {
    pub system: String,
    #[serde(default)]
    pub user: Option<String>,
    #[serde(default)]
    pub assistant_fewshot: Option<String>,
}

impl PromptTemplate {
    pub fn new(system: impl Into<String>) -> Self {
        Self {
            system: system.into(),
            user: None,
            assistant_fewshot: None,
        }
    }

    pub fn with_user(mut self, user: impl Into<String>) -> Self {
        self.user = Some(user.into());
        self
    }

    pub fn with_fewshot(mut self, fewshot: impl Into<String>) -> Self {
        self.assistant_fewshot = Some(fewshot.into());
        self
    }

    pub fn user_or<'a>(&'a self, default: &'a str) -> &'a str {
        self.user.as_deref().unwrap_or(default)
    }
}

#[derive(Debug, Clone, Default)]
pub struct PromptVars<'a> {
    pub n: Option<usize>,
    pub seed: Option<&'a str>,
    pub src: Option<&'a str>,
    pub tgt: Option<&'a str>,
    pub sentence: Option<&'a str>,
}

/// Substitutes known placeholders. Unset placeholders are left verbatim.
pub fn render(template: &str, vars: &PromptVars<'_>) -> String {
    let n = vars.n.map(|n| n.to_string());
    let slots = [
        ("{n}", n.as_deref()),
        ("{seed}", vars.seed),
        ("{src}", vars.src),
        ("{tgt}", vars.tgt),
        ("{sentence}", vars.sentence),
    ];
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (name, value) in slots {
            if let (true, Some(value)) = (tail.starts_with(name), value) {
                out.push_str(value);
                rest = &tail[name.len()..];
                continue 'scan;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

/// Display name for a language code, as used in `{src}` / `{tgt}`.
pub fn language_name(code: &str) -> &str {
    match code {
        "de" => "German",
        "en" => "English",
        "gl" => "Galician",
        "es" => "Spanish",
        "fr" => "French",
        "pt" => "Portuguese",
        "it" => "Italian",
        "nl" => "Dutch",
        _ => code,
    }
}

/// Templates for all generation requests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSet {
    pub seed_nouns: PromptTemplate,
    pub seed_verbs: PromptTemplate,
    pub sentences: PromptTemplate,
    pub translation: PromptTemplate,
}

impl Default for PromptSet {
    /// German source-side prompts with an English translation prompt.
    fn default() -> Self {
        Self {
            seed_nouns: PromptTemplate::new(
                "Generieren Sie {n} einzigartige zufällige Substantive, die jeweils durch ein Komma getrennt sind",
            ),
            seed_verbs: PromptTemplate::new(
                "Generieren Sie {n} einzigartige zufällige Verben, die jeweils durch ein Komma getrennt sind",
            ),
            sentences: PromptTemplate::new(
                "Generieren Sie an der Eingabeaufforderung {n} separate Sätze, die durch ein Semikolon getrennt sind",
            )
            .with_user("{seed}")
            .with_fewshot("Gärten und Terrassen;Tacos sind gut.;"),
            translation: PromptTemplate::new("Translate from {src} to {tgt}").with_user("{sentence}"),
        }
    }
}

pub const DEFAULT_SENTENCE_USER: &str = "{seed}";
pub const DEFAULT_TRANSLATION_USER: &str = "{sentence}";

impl PromptSet {
    pub fn validate(&self) -> Result<(), String> {
        for (name, t) in [
            ("seed_nouns", &self.seed_nouns),
            ("seed_verbs", &self.seed_verbs),
        ] {
            if !t.system.contains("{n}") {
                return Err(format!("{name}.system must contain {{n}}"));
            }
        }
        if !self.sentences.system.contains("{n}") {
            return Err("sentences.system must contain {n}".into());
        }
        if !self
            .sentences
            .user_or(DEFAULT_SENTENCE_USER)
            .contains("{seed}")
        {
            return Err("sentences.user must contain {seed}".into());
        }
        if !self
            .translation
            .user_or(DEFAULT_TRANSLATION_USER)
            .contains("{sentence}")
        {
            return Err("translation.user must contain {sentence}".into());
        }
        let all = [
            &self.seed_nouns,
            &self.seed_verbs,
            &self.sentences,
            &self.translation,
        ];
        if all.iter().any(|t| t.system.trim().is_empty()) {
            return Err("system prompts must be non-empty".into());
        }
        if all.iter().any(|t| {
            t.assistant_fewshot
                .as_deref()
                .is_some_and(|s| s.trim().is_empty())
        }) {
            return Err("assistant_fewshot must be non-empty when set".into());
        }
        Ok(())
    }

    /// Patterns for classifying requests in the mock backend.
    pub fn mock_patterns(&self) -> MockPatterns {
        MockPatterns {
            seed_nouns: self.seed_nouns.system.clone(),
            seed_verbs: self.seed_verbs.system.clone(),
            sentences: self.sentences.system.clone(),
            translation: self.translation.system.clone(),
        }
    }
}
