//! Stage checkpoints: one JSON-lines file per stage, a summary header line
//! followed by one line per item. Written atomically.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    GenerationPlan, HallucinateError, SeedHarvest, SeedSentence, SentenceHarvest,
    TranslationHarvest,
};
use crate::corpus::{ParallelCorpus, SentencePair};
use crate::fsutil::write_atomic;

fn bad(path: &Path, reason: impl ToString) -> HallucinateError {
    HallucinateError::Checkpoint {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn write_lines<H: Serialize, I: Serialize>(
    path: &Path,
    header: &H,
    items: &[I],
) -> Result<(), HallucinateError> {
    let mut out = serde_json::to_string(header).map_err(|e| bad(path, e))?;
    out.push('\n');
    for item in items {
        out.push_str(&serde_json::to_string(item).map_err(|e| bad(path, e))?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes()).map_err(|e| bad(path, e))
}

fn read_lines<H: DeserializeOwned, I: DeserializeOwned>(
    path: &Path,
) -> Result<Option<(H, Vec<I>)>, HallucinateError> {
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(bad(path, e)),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(path, "empty checkpoint"))?;
    let header = serde_json::from_str(header).map_err(|e| bad(path, e))?;
    let items = lines
        .map(|l| serde_json::from_str(l).map_err(|e| bad(path, e)))
        .collect::<Result<_, _>>()?;
    Ok(Some((header, items)))
}

/// Stage results that round-trip through a checkpoint file.
pub(super) trait Checkpointed: Sized {
    type Header: Serialize + DeserializeOwned;
    type Item: Serialize + DeserializeOwned;
    fn parts(&self) -> (Self::Header, Vec<Self::Item>);
    fn from_parts(header: Self::Header, items: Vec<Self::Item>) -> Option<Self>;
}

#[derive(Serialize, Deserialize)]
pub(super) struct SeedHeader {
    stage: String,
    requested: usize,
    parsed: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
pub(super) struct SeedItem {
    seed: String,
}

impl Checkpointed for SeedHarvest {
    type Header = SeedHeader;
    type Item = SeedItem;

    fn parts(&self) -> (SeedHeader, Vec<SeedItem>) {
        let header = SeedHeader {
            stage: "seeds".into(),
            requested: self.requested,
            parsed: self.parsed,
            count: self.seeds.len(),
        };
        let items = self
            .seeds
            .iter()
            .map(|s| SeedItem { seed: s.clone() })
            .collect();
        (header, items)
    }

    fn from_parts(h: SeedHeader, items: Vec<SeedItem>) -> Option<Self> {
        (h.stage == "seeds" && h.count == items.len()).then(|| SeedHarvest {
            seeds: items.into_iter().map(|i| i.seed).collect(),
            requested: h.requested,
            parsed: h.parsed,
        })
    }
}

#[derive(Serialize, Deserialize)]
pub(super) struct SentenceHeader {
    stage: String,
    raw_parsed: usize,
    failed_seeds: usize,
    count: usize,
}

impl Checkpointed for SentenceHarvest {
    type Header = SentenceHeader;
    type Item = SeedSentence;

    fn parts(&self) -> (SentenceHeader, Vec<SeedSentence>) {
        let header = SentenceHeader {
            stage: "sentences".into(),
            raw_parsed: self.raw_parsed,
            failed_seeds: self.failed_seeds,
            count: self.items.len(),
        };
        (header, self.items.clone())
    }

    fn from_parts(h: SentenceHeader, items: Vec<SeedSentence>) -> Option<Self> {
        (h.stage == "sentences" && h.count == items.len()).then_some(SentenceHarvest {
            items,
            raw_parsed: h.raw_parsed,
            failed_seeds: h.failed_seeds,
        })
    }
}

pub(super) fn load_stage<T: Checkpointed>(path: &Path) -> Result<Option<T>, HallucinateError> {
    match read_lines::<T::Header, T::Item>(path)? {
        None => Ok(None),
        Some((header, items)) => T::from_parts(header, items)
            .map(Some)
            .ok_or_else(|| bad(path, "header does not match contents")),
    }
}

pub(super) fn save_stage<T: Checkpointed>(path: &Path, value: &T) -> Result<(), HallucinateError> {
    let (header, items) = value.parts();
    write_lines(path, &header, &items)
}

#[derive(Serialize, Deserialize)]
struct TranslationHeader {
    stage: String,
    source_lang: String,
    target_lang: String,
    failed: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct TranslationItem {
    id: String,
    seed: String,
    src: String,
    tgt: String,
}

pub(super) fn save_translations(
    path: &Path,
    harvest: &TranslationHarvest,
) -> Result<(), HallucinateError> {
    let corpus = &harvest.corpus;
    let header = TranslationHeader {
        stage: "translations".into(),
        source_lang: corpus.source_lang().into(),
        target_lang: corpus.target_lang().into(),
        failed: harvest.failed,
        count: corpus.len(),
    };
    let items: Vec<_> = corpus
        .pairs()
        .iter()
        .map(|p| TranslationItem {
            id: p.id().into(),
            seed: p.seed_word().unwrap_or_default().into(),
            src: p.source().into(),
            tgt: p.target().into(),
        })
        .collect();
    write_lines(path, &header, &items)
}

pub(super) fn load_translations(
    path: &Path,
    plan: &GenerationPlan,
) -> Result<Option<TranslationHarvest>, HallucinateError> {
    let Some((header, items)) = read_lines::<TranslationHeader, TranslationItem>(path)? else {
        return Ok(None);
    };
    if header.stage != "translations" || header.count != items.len() {
        return Err(bad(path, "header does not match contents"));
    }
    if header.source_lang != plan.source_lang || header.target_lang != plan.target_lang {
        return Err(bad(path, "language pair differs from the plan"));
    }
    let pairs = items
        .into_iter()
        .map(|i| SentencePair::synthetic(i.id, i.src, i.tgt, i.seed))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| bad(path, e))?;
    let corpus = ParallelCorpus::new(header.source_lang, header.target_lang, pairs)
        .map_err(|e| bad(path, e))?;
    Ok(Some(TranslationHarvest {
        corpus,
        failed: header.failed,
    }))
}
