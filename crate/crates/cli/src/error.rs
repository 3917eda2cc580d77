use std::process::ExitCode;

use corpus_forge::bpe::BpeError;
use corpus_forge::corpus::CorpusError;
use corpus_forge::experiment::ExperimentError;
use corpus_forge::gateway::GatewayError;
use corpus_forge::hallucinator::HallucinateError;
use corpus_forge::lexicon::LexiconError;
use corpus_forge::metrics::ProfileError;

/// Exit codes: 0 success, 1 internal, 2 usage, 3 config, 4 transport,
/// 5 insufficient data, 6 bad input files.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("backend error: {0}")]
    Transport(String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Internal(_) => 1,
            CliError::Config(_) => 3,
            CliError::Transport(_) => 4,
            CliError::Insufficient(_) => 5,
            CliError::Input(_) => 6,
        })
    }

    pub fn io(context: impl std::fmt::Display, e: std::io::Error) -> Self {
        CliError::Input(format!("{context}: {e}"))
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::MissingApiKey(_)
            | GatewayError::Auth(_)
            | GatewayError::InvalidRequest(_) => CliError::Config(e.to_string()),
            GatewayError::UnclassifiableRequest(_) => CliError::Internal(e.to_string()),
            _ => CliError::Transport(e.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::InsufficientData { .. } => CliError::Insufficient(e.to_string()),
            CorpusError::ZeroThreshold => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<HallucinateError> for CliError {
    fn from(e: HallucinateError) -> Self {
        match e {
            HallucinateError::Config(msg) => CliError::Config(msg),
            HallucinateError::Gateway(g) => g.into(),
            HallucinateError::InsufficientData { .. } => CliError::Insufficient(e.to_string()),
            HallucinateError::EmptyResponse
            | HallucinateError::AllSeedsFailed { .. }
            | HallucinateError::AllTranslationsFailed { .. } => CliError::Transport(e.to_string()),
            HallucinateError::NoInput(_) => CliError::Insufficient(e.to_string()),
            HallucinateError::Corpus(c) => c.into(),
            HallucinateError::Checkpoint { .. } => CliError::Input(e.to_string()),
        }
    }
}

impl From<BpeError> for CliError {
    fn from(e: BpeError) -> Self {
        match e {
            BpeError::EmptyCorpus => CliError::Insufficient(e.to_string()),
            BpeError::AlphabetExceedsTarget { .. } => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> Self {
        match e {
            LexiconError::EmptyCorpus => CliError::Insufficient(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Training { source, .. } => source.into(),
            ExperimentError::Corpus(c) => c.into(),
            ExperimentError::Leak { .. } | ExperimentError::NoEvalSets => {
                CliError::Input(e.to_string())
            }
        }
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        match e {
            ProfileError::EmptyInput => CliError::Insufficient(e.to_string()),
            ProfileError::Io { .. } => CliError::Input(e.to_string()),
        }
    }
}
