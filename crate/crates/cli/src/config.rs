//! Run configuration: one TOML file plus `--set key=value` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use corpus_forge::corpus::SplitSpec;
use corpus_forge::experiment::ExperimentConfig;
use corpus_forge::gateway::BackendConfig;
use corpus_forge::hallucinator::{GenerationPlan, PromptSet, RequestSettings};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Mock,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Http => "http",
            BackendKind::Mock => "mock",
        }
    }
}

/// Source-token budgets per split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_tokens: usize,
    pub valid_tokens: usize,
    pub test_tokens: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_tokens: 900_000,
            valid_tokens: 100_000,
            test_tokens: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpeConfig {
    pub target_vocab_size: usize,
}

impl Default for BpeConfig {
    fn default() -> Self {
        Self {
            target_vocab_size: 16_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendKind,
    /// Seeds sampling and split shuffles.
    pub rng_seed: u64,
    /// Seeds the mock backend.
    pub mock_seed: u64,
    pub runs_dir: PathBuf,
    pub http: BackendConfig,
    pub plan: GenerationPlan,
    pub prompts: PromptSet,
    pub requests: RequestSettings,
    pub split: SplitConfig,
    pub bpe: BpeConfig,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Http,
            rng_seed: 0,
            mock_seed: 0,
            runs_dir: PathBuf::from("runs"),
            http: BackendConfig::default(),
            plan: GenerationPlan::default(),
            prompts: PromptSet::default(),
            requests: RequestSettings::default(),
            split: SplitConfig::default(),
            bpe: BpeConfig::default(),
            experiment: ExperimentConfig::default(),
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Applies `a.b.c=value`; the value is read as TOML and falls back to a
/// bare string.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {assignment:?}")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad key {key:?}")));
    }
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cursor = table;
    for part in parents {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("{key}: {part} is not a table")))?;
    }
    cursor.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.plan.validate().map_err(CliError::Config)?;
        self.prompts.validate().map_err(CliError::Config)?;
        let s = &self.split;
        if s.train_tokens == 0 || s.valid_tokens == 0 || s.test_tokens == 0 {
            return Err(CliError::Config(
                "split token budgets must be at least 1".into(),
            ));
        }
        if self.bpe.target_vocab_size == 0 {
            return Err(CliError::Config(
                "bpe.target_vocab_size must be at least 1".into(),
            ));
        }
        if self.experiment.em_iterations == 0 {
            return Err(CliError::Config(
                "experiment.em_iterations must be at least 1".into(),
            ));
        }
        if self.http.max_in_flight == 0 {
            return Err(CliError::Config(
                "http.max_in_flight must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Splits for generated corpora (no test set).
    pub fn synthetic_split(&self) -> SplitSpec {
        SplitSpec {
            test_token_threshold: None,
            ..self.natural_split()
        }
    }

    pub fn natural_split(&self) -> SplitSpec {
        SplitSpec {
            train_token_threshold: self.split.train_tokens,
            valid_token_threshold: self.split.valid_tokens,
            test_token_threshold: Some(self.split.test_tokens),
            rng_seed: self.rng_seed,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_the_reference_setup() {
        let c = RunConfig::load(None, &[]).unwrap();
        assert_eq!(
            (c.plan.n_nouns, c.plan.n_verbs, c.plan.sentences_per_seed),
            (600, 600, 100)
        );
        assert_eq!(c.split, SplitConfig::default());
        assert_eq!(c.bpe.target_vocab_size, 16_000);
        assert_eq!(c.backend, BackendKind::Http);
    }

    #[test]
    fn overrides_are_typed() {
        let c = RunConfig::load(
            None,
            &[
                "plan.n_nouns=5".into(),
                "backend=mock".into(),
                "plan.source_lang=gl".into(),
                "experiment.smoothing=add_k_exp".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.plan.n_nouns, 5);
        assert_eq!(c.backend, BackendKind::Mock);
        assert_eq!(c.plan.source_lang, "gl");
    }

    #[test]
    fn file_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "mock_seed = 9\n[plan]\nn_verbs = 3\n").unwrap();
        let c = RunConfig::load(Some(&path), &["mock_seed=10".into()]).unwrap();
        assert_eq!((c.mock_seed, c.plan.n_verbs), (10, 3));
        let round: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn bad_configs_are_rejected() {
        for bad in [
            "plan.n_nouns=0",
            "plan.unknown=1",
            "split.train_tokens=-4",
            "noequals",
        ] {
            assert!(
                matches!(
                    RunConfig::load(None, &[bad.into()]),
                    Err(CliError::Config(_))
                ),
                "{bad}"
            );
        }
    }
}
