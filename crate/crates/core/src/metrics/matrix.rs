use std::thread;

use serde::{Deserialize, Serialize};

use super::bleu::{corpus_bleu_text, Normalizer, Smoothing};
use super::table::{format_score, markdown_table, ScoreTable};
use crate::corpus::ParallelCorpus;

/// Anything that maps source lines to target lines, one for one.
pub trait Translator: Sync {
    fn translate(&self, sources: &[&str]) -> Result<Vec<String>, String>;
}

impl<F> Translator for F
where
    F: Fn(&[&str]) -> Result<Vec<String>, String> + Sync,
{
    fn translate(&self, sources: &[&str]) -> Result<Vec<String>, String> {
        self(sources)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSet {
    pub label: String,
    pub sources: Vec<String>,
    pub references: Vec<String>,
}

impl EvalSet {
    pub fn from_corpus(label: impl Into<String>, corpus: &ParallelCorpus) -> Self {
        EvalSet {
            label: label.into(),
            sources: corpus.sources().map(String::from).collect(),
            references: corpus.targets().map(String::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub row: String,
    pub column: String,
    pub reason: String,
}

/// BLEU per (model, evaluation set). A cell is `None` when the pairing was
/// not evaluated or its evaluation failed; failures carry a reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
    #[serde(default)]
    pub failures: Vec<CellFailure>,
    pub tokenizer: String,
    pub smoothing: Smoothing,
}

impl EvalMatrix {
    pub fn new(rows: Vec<String>, columns: Vec<String>) -> Self {
        let cells = vec![vec![None; columns.len()]; rows.len()];
        EvalMatrix {
            rows,
            columns,
            cells,
            failures: Vec::new(),
            tokenizer: Normalizer::default().name().into(),
            smoothing: Smoothing::default(),
        }
    }

    fn index(&self, row: &str, column: &str) -> Option<(usize, usize)> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.columns.iter().position(|x| x == column)?;
        Some((r, c))
    }

    pub fn get(&self, row: &str, column: &str) -> Option<f64> {
        self.index(row, column).and_then(|(r, c)| self.cells[r][c])
    }

    /// Panics if either label is unknown.
    pub fn set(&mut self, row: &str, column: &str, score: Option<f64>) {
        let (r, c) = self
            .index(row, column)
            .unwrap_or_else(|| panic!("no cell {row}/{column}"));
        self.cells[r][c] = score;
    }

    pub fn column(&self, column: &str) -> Vec<Option<f64>> {
        match self.columns.iter().position(|x| x == column) {
            Some(c) => self.cells.iter().map(|row| row[c]).collect(),
            None => vec![None; self.rows.len()],
        }
    }

    /// One column as a row of per-model scores.
    pub fn score_table(&self, column: &str) -> ScoreTable {
        ScoreTable::new(self.rows.clone(), self.column(column))
    }

    /// Models down, evaluation sets across, with an unlabeled corner cell.
    pub fn to_markdown(&self) -> String {
        let mut header = vec![String::new()];
        header.extend(self.columns.iter().cloned());
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .zip(&self.cells)
            .map(|(label, cells)| {
                let mut row = vec![label.clone()];
                row.extend(cells.iter().map(|&c| format_score(c)));
                row
            })
            .collect();
        markdown_table(&header, &rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes")
    }
}

fn evaluate_cell(
    model: &dyn Translator,
    set: &EvalSet,
    normalizer: Normalizer,
    smoothing: Smoothing,
) -> Result<f64, String> {
    let sources: Vec<&str> = set.sources.iter().map(String::as_str).collect();
    let hypotheses = model.translate(&sources)?;
    corpus_bleu_text(&hypotheses, &set.references, normalizer, smoothing)
        .map(|r| r.bleu)
        .map_err(|e| e.to_string())
}

/// Scores every model on every set. Cells run in parallel and are placed
/// by (row, column).
pub fn cross_evaluate(
    models: &[(&str, &dyn Translator)],
    sets: &[EvalSet],
    normalizer: Normalizer,
    smoothing: Smoothing,
) -> EvalMatrix {
    let mut matrix = EvalMatrix::new(
        models.iter().map(|(l, _)| l.to_string()).collect(),
        sets.iter().map(|s| s.label.clone()).collect(),
    );
    matrix.tokenizer = normalizer.name().into();
    matrix.smoothing = smoothing;
    let results: Vec<((usize, usize), Result<f64, String>)> = thread::scope(|scope| {
        let handles: Vec<_> = models
            .iter()
            .enumerate()
            .flat_map(|(r, (_, model))| {
                sets.iter().enumerate().map(move |(c, set)| {
                    let handle =
                        scope.spawn(move || evaluate_cell(*model, set, normalizer, smoothing));
                    ((r, c), handle)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|(at, h)| {
                let result = h
                    .join()
                    .unwrap_or_else(|_| Err("evaluation panicked".into()));
                (at, result)
            })
            .collect()
    });
    for ((r, c), result) in results {
        match result {
            Ok(score) => matrix.cells[r][c] = Some(score),
            Err(reason) => {
                log::warn!("{} on {}: {reason}", matrix.rows[r], matrix.columns[c]);
                matrix.failures.push(CellFailure {
                    row: matrix.rows[r].clone(),
                    column: matrix.columns[c].clone(),
                    reason,
                });
            }
        }
    }
    matrix
}
