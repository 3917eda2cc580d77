use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::tokens;
use crate::fsutil::write_atomic;

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("no tokens to profile")]
    EmptyInput,
    #[error("writing {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedWord {
    pub rank: usize,
    pub word: String,
    pub frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtrSummary {
    pub type_count: usize,
    pub token_count: u64,
    pub ttr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyProfile {
    pub type_count: usize,
    pub token_count: u64,
    pub ttr: f64,
    pub rank_frequency: Vec<RankedWord>,
}

/// Case-folded rank-frequency profile of a corpus side.
pub fn frequency_profile<S: AsRef<str>>(lines: &[S]) -> Result<FrequencyProfile, ProfileError> {
    profile_tokens(lines.iter().flat_map(|l| tokens(l.as_ref())))
}

/// Like [`frequency_profile`] but only the first `max_tokens` tokens count.
/// TTR shrinks as a corpus grows, so corpora are compared at equal size.
pub fn frequency_profile_capped<S: AsRef<str>>(
    lines: &[S],
    max_tokens: usize,
) -> Result<FrequencyProfile, ProfileError> {
    profile_tokens(
        lines
            .iter()
            .flat_map(|l| tokens(l.as_ref()))
            .take(max_tokens),
    )
}

fn profile_tokens(words: impl Iterator<Item = String>) -> Result<FrequencyProfile, ProfileError> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut token_count = 0u64;
    for word in words {
        *counts.entry(word.to_lowercase()).or_insert(0) += 1;
        token_count += 1;
    }
    if token_count == 0 {
        return Err(ProfileError::EmptyInput);
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let type_count = ranked.len();
    Ok(FrequencyProfile {
        type_count,
        token_count,
        ttr: type_count as f64 / token_count as f64,
        rank_frequency: ranked
            .into_iter()
            .enumerate()
            .map(|(i, (word, frequency))| RankedWord {
                rank: i + 1,
                word,
                frequency,
            })
            .collect(),
    })
}

impl FrequencyProfile {
    pub fn summary(&self) -> TtrSummary {
        TtrSummary {
            type_count: self.type_count,
            token_count: self.token_count,
            ttr: self.ttr,
        }
    }

    /// (log10 rank, log10 frequency) per ranked word.
    pub fn zipf_points(&self) -> Vec<(f64, f64)> {
        self.rank_frequency
            .iter()
            .map(|r| ((r.rank as f64).log10(), (r.frequency as f64).log10()))
            .collect()
    }

    /// `rank,word,frequency` rows.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank", "word", "frequency"]).unwrap();
        for r in &self.rank_frequency {
            w.serialize((r.rank, &r.word, r.frequency)).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    /// Writes the CSV to `path` and the summary JSON next to it
    /// (`<path>` with extension `.json`).
    pub fn write(&self, path: &Path) -> Result<(), ProfileError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ProfileError::Io { path, source }
        };
        write_atomic(path, self.to_csv().as_bytes()).map_err(io(path))?;
        let sidecar = path.with_extension("json");
        let mut json = serde_json::to_string_pretty(&self.summary()).unwrap();
        json.push('\n');
        write_atomic(&sidecar, json.as_bytes()).map_err(io(&sidecar))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_examples() {
        let p = frequency_profile(&["a a b"]).unwrap();
        assert_eq!((p.type_count, p.token_count), (2, 3));
        assert!((p.ttr - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(frequency_profile(&["A a"]).unwrap().type_count, 1);
        assert!(matches!(
            frequency_profile(&["", "  "]),
            Err(ProfileError::EmptyInput)
        ));
    }

    #[test]
    fn ranking_breaks_ties_lexicographically() {
        let p = frequency_profile(&["b c a c", "b d"]).unwrap();
        let words: Vec<_> = p.rank_frequency.iter().map(|r| r.word.as_str()).collect();
        assert_eq!(words, ["b", "c", "a", "d"]);
        assert_eq!(p.rank_frequency[3].rank, 4);
        assert_eq!(
            p.to_csv(),
            "rank,word,frequency\n1,b,2\n2,c,2\n3,a,1\n4,d,1\n"
        );
        let z = p.zipf_points();
        assert_eq!(z[0], (0.0, 2f64.log10()));
    }

    #[test]
    fn capped_profile_counts_a_prefix() {
        let p = frequency_profile_capped(&["a b c", "d e"], 4).unwrap();
        assert_eq!(p.token_count, 4);
        assert_eq!(p.type_count, 4);
    }

    #[test]
    fn writes_csv_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ttr.csv");
        frequency_profile(&["x y x"]).unwrap().write(&path).unwrap();
        let summary: TtrSummary =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("ttr.json")).unwrap())
                .unwrap();
        assert_eq!(summary.type_count, 2);
        assert!(std::fs::read_to_string(&path)
            .unwrap()
            .starts_with("rank,word,frequency\n"));
    }

    fn lines() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec("[a-dA-D]{1,3}( [a-dA-D]{1,3}){0,5}", 1..10)
    }

    proptest! {
        #[test]
        fn profile_invariants(lines in lines()) {
            let p = frequency_profile(&lines).unwrap();
            let total: u64 = p.rank_frequency.iter().map(|r| r.frequency).sum();
            prop_assert_eq!(total, p.token_count);
            prop_assert!(p.ttr > 0.0 && p.ttr <= 1.0);
            prop_assert_eq!(p.ttr == 1.0, p.type_count as u64 == p.token_count);
            prop_assert!(p.rank_frequency.windows(2).all(|w| w[0].frequency >= w[1].frequency));
        }

        #[test]
        fn duplication_halves_ttr(lines in lines()) {
            let p = frequency_profile(&lines).unwrap();
            let doubled: Vec<_> = lines.iter().chain(&lines).collect();
            let q = frequency_profile(&doubled).unwrap();
            prop_assert_eq!(q.type_count, p.type_count);
            prop_assert_eq!(q.token_count, 2 * p.token_count);
            prop_assert!((q.ttr - p.ttr / 2.0).abs() < 1e-15);
        }
    }
}
