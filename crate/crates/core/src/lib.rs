//! Synthetic parallel corpus generation and analysis.
//!
//! The crate covers the full loop: a chat-completions gateway (real HTTP or a
//! deterministic mock), a three-stage generation pipeline (seed words, seed
//! sentences, translations), corpus sampling into token-budgeted splits,
//! joint BPE, corpus BLEU, lexical diversity profiling, and a word-lexicon
//! translator trained with EM for offline natural/synthetic/augmented
//! comparisons.

pub mod bpe;
pub mod corpus;
pub mod experiment;
pub mod fsutil;
pub mod gateway;
pub mod hallucinator;
pub mod lexicon;
pub mod metrics;
pub mod resources;
