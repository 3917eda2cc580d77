use serde::{Deserialize, Serialize};

/// Column alignment in a Markdown table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Align {
    Left,
    Right,
}

/// One decimal, or `-` for an absent score.
pub fn format_score(score: Option<f64>) -> String {
    match score {
        Some(s) => format!("{s:.1}"),
        None => "-".into(),
    }
}

/// Renders a Markdown table with every column padded to its widest cell.
/// The first column is left-aligned, the rest right-aligned.
pub fn markdown_table(header: &[String], rows: &[Vec<String>]) -> String {
    let width = |i: usize| {
        rows.iter()
            .map(|r| r[i].chars().count())
            .chain([header[i].chars().count(), 3])
            .max()
            .unwrap()
    };
    let widths: Vec<usize> = (0..header.len()).map(width).collect();
    let align = |i: usize| if i == 0 { Align::Left } else { Align::Right };
    let line = |cells: &[String]| {
        let mut out = String::from("|");
        for (i, cell) in cells.iter().enumerate() {
            let w = widths[i];
            match align(i) {
                Align::Left => out.push_str(&format!(" {cell:<w$} |")),
                Align::Right => out.push_str(&format!(" {cell:>w$} |")),
            }
        }
        out.push('\n');
        out
    };
    let mut out = line(header);
    out.push('|');
    for (i, w) in widths.iter().enumerate() {
        let dashes = "-".repeat(w + 1);
        match align(i) {
            Align::Left => out.push_str(&format!(":{dashes}|")),
            Align::Right => out.push_str(&format!("{dashes}:|")),
        }
    }
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

/// A single row of model scores on one evaluation set, one column per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub models: Vec<String>,
    pub scores: Vec<Option<f64>>,
}

impl ScoreTable {
    pub fn new(models: Vec<String>, scores: Vec<Option<f64>>) -> Self {
        assert_eq!(models.len(), scores.len());
        ScoreTable { models, scores }
    }

    pub fn to_markdown(&self) -> String {
        let row: Vec<String> = self.scores.iter().map(|&s| format_score(s)).collect();
        markdown_table(&self.models, &[row])
    }
}
