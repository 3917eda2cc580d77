//! Natural / synthetic / augmented comparison with the lexicon baseline.

use std::collections::HashSet;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusError, ParallelCorpus};
use crate::lexicon::{train_em, LexiconError, LexiconModel};
use crate::metrics::{cross_evaluate, EvalMatrix, EvalSet, Normalizer, Smoothing, Translator};

pub const SYNTH_VALID: &str = "Synth-val";
pub const NAT_VALID: &str = "Nat-val";
pub const TEST: &str = "Test";

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("pair {id} of evaluation set {set} also appears in training data")]
    Leak { set: String, id: String },
    #[error("no evaluation sets")]
    NoEvalSets,
    #[error("training {model}: {source}")]
    Training {
        model: String,
        #[source]
        source: LexiconError,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub em_iterations: usize,
    pub normalizer: Normalizer,
    pub smoothing: Smoothing,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            em_iterations: 10,
            normalizer: Normalizer::default(),
            smoothing: Smoothing::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub model: String,
    pub pairs: usize,
    pub source_vocab: usize,
    pub target_vocab: usize,
    pub iterations: usize,
    pub final_log_likelihood: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub matrix: EvalMatrix,
    pub models: Vec<(String, LexiconModel)>,
    pub training: Vec<TrainingSummary>,
}

/// `Synth-<lang>`, `Nat-<lang>`, `Aug-<lang>`.
pub fn model_labels(source_lang: &str) -> [String; 3] {
    ["Synth", "Nat", "Aug"].map(|m| format!("{m}-{source_lang}"))
}

/// Fails if any evaluation pair id also occurs in a training corpus.
pub fn check_disjoint(
    training: &[&ParallelCorpus],
    eval_sets: &[(&str, &ParallelCorpus)],
) -> Result<(), ExperimentError> {
    let train_ids: HashSet<&str> = training.iter().flat_map(|c| c.ids()).collect();
    for (label, set) in eval_sets {
        if let Some(p) = set.pairs().iter().find(|p| train_ids.contains(p.id())) {
            return Err(ExperimentError::Leak {
                set: label.to_string(),
                id: p.id().to_string(),
            });
        }
    }
    Ok(())
}

/// Trains Synth, Nat and Aug (natural followed by synthetic) lexicon models
/// and scores each on every evaluation set.
pub fn run_experiment(
    nat_train: &ParallelCorpus,
    syn_train: &ParallelCorpus,
    eval_sets: &[(&str, &ParallelCorpus)],
    config: &ExperimentConfig,
) -> Result<Experiment, ExperimentError> {
    if eval_sets.is_empty() {
        return Err(ExperimentError::NoEvalSets);
    }
    check_disjoint(&[nat_train, syn_train], eval_sets)?;
    let aug_train = nat_train.concat(syn_train)?;
    let labels = model_labels(nat_train.source_lang());
    let corpora = [syn_train, nat_train, &aug_train];

    let trained: Vec<Result<LexiconModel, LexiconError>> = thread::scope(|scope| {
        let handles: Vec<_> = corpora
            .iter()
            .map(|c| scope.spawn(move || train_em(c, config.em_iterations)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });
    let mut models = Vec::new();
    let mut training = Vec::new();
    for ((label, corpus), model) in labels.iter().zip(corpora).zip(trained) {
        let model = model.map_err(|source| ExperimentError::Training {
            model: label.clone(),
            source,
        })?;
        log::info!(
            "trained {label} on {} pairs, log-likelihood {:?}",
            corpus.len(),
            model.final_log_likelihood()
        );
        training.push(TrainingSummary {
            model: label.clone(),
            pairs: corpus.len(),
            source_vocab: model.source_vocab().len(),
            target_vocab: model.target_vocab().len(),
            iterations: model.iterations_run(),
            final_log_likelihood: model.final_log_likelihood(),
        });
        models.push((label.clone(), model));
    }

    let sets: Vec<EvalSet> = eval_sets
        .iter()
        .map(|(label, corpus)| EvalSet::from_corpus(*label, corpus))
        .collect();
    let translators: Vec<(&str, &dyn Translator)> = models
        .iter()
        .map(|(l, m)| (l.as_str(), m as &dyn Translator))
        .collect();
    let matrix = cross_evaluate(&translators, &sets, config.normalizer, config.smoothing);
    Ok(Experiment {
        matrix,
        models,
        training,
    })
}

/// Stacks matrices that share their columns, taking row `i` of every
/// matrix before row `i + 1` (Synth-de, Synth-gl, Nat-de, ...).
pub fn interleave(matrices: &[&EvalMatrix]) -> EvalMatrix {
    let mut columns: Vec<String> = Vec::new();
    for m in matrices {
        for c in &m.columns {
            if !columns.contains(c) {
                columns.push(c.clone());
            }
        }
    }
    let depth = matrices.iter().map(|m| m.rows.len()).max().unwrap_or(0);
    let mut rows = Vec::new();
    let mut placed = Vec::new();
    for i in 0..depth {
        for m in matrices {
            if let Some(row) = m.rows.get(i) {
                rows.push(row.clone());
                placed.push((*m, row.clone()));
            }
        }
    }
    let mut out = EvalMatrix::new(rows, columns.clone());
    if let Some(first) = matrices.first() {
        out.tokenizer = first.tokenizer.clone();
        out.smoothing = first.smoothing;
    }
    for (m, row) in placed {
        for c in &columns {
            out.set(&row, c, m.get(&row, c));
        }
        out.failures
            .extend(m.failures.iter().filter(|f| f.row == row).cloned());
    }
    out
}

/// One score table per matrix from its `column`, separated by blank lines.
pub fn render_score_tables(matrices: &[&EvalMatrix], column: &str) -> String {
    matrices
        .iter()
        .map(|m| m.score_table(column).to_markdown())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Markdown report: per-language test scores, then the combined matrix.
pub fn render_results(matrices: &[&EvalMatrix]) -> String {
    format!(
        "## BLEU on {TEST}\n\n{}\n## Cross-method BLEU\n\n{}",
        render_score_tables(matrices, TEST),
        interleave(matrices).to_markdown()
    )
}
