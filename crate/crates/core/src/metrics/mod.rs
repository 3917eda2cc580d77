//! Corpus BLEU, cross-evaluation matrices and lexical diversity profiles.

mod bleu;
mod diversity;
mod matrix;
mod table;

pub use bleu::{
    brevity_penalty, corpus_bleu, corpus_bleu_text, BleuError, BleuReport, Normalizer, Smoothing,
    MAX_ORDER,
};
pub use diversity::{
    frequency_profile, frequency_profile_capped, FrequencyProfile, ProfileError, RankedWord,
    TtrSummary,
};
pub use matrix::{cross_evaluate, CellFailure, EvalMatrix, EvalSet, Translator};
pub use table::{format_score, markdown_table, ScoreTable};
