//! Three-stage synthetic corpus generation: seed words, sentences around
//! each seed, and per-sentence translations, followed by token-budgeted
//! train/valid sampling.

mod checkpoint;
pub mod parse;
mod prompt;

pub use prompt::{
    language_name, render, PromptSet, PromptTemplate, PromptVars, Stage, DEFAULT_SENTENCE_USER,
    DEFAULT_TRANSLATION_USER,
};

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::{
    self, dedup, dedup_by, make_splits, CorpusError, DedupMode, ParallelCorpus, SentencePair,
    SplitSpec,
};
use crate::gateway::{ChatMessage, ChatRequest, Gateway, GatewayError};
use checkpoint::{load_stage, save_stage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationPlan {
    pub n_nouns: usize,
    pub n_verbs: usize,
    pub sentences_per_seed: usize,
    pub source_lang: String,
    pub target_lang: String,
}

impl Default for GenerationPlan {
    fn default() -> Self {
        Self {
            n_nouns: 600,
            n_verbs: 600,
            sentences_per_seed: 100,
            source_lang: "de".into(),
            target_lang: "en".into(),
        }
    }
}

impl GenerationPlan {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_nouns == 0 || self.n_verbs == 0 || self.sentences_per_seed == 0 {
            return Err("plan counts must be at least 1".into());
        }
        if self.source_lang.trim().is_empty() || self.target_lang.trim().is_empty() {
            return Err("plan languages must be set".into());
        }
        Ok(())
    }
}

/// Model name and sampling parameters for outgoing requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RequestSettings {
    pub model_name: String,
    pub generation_temperature: f64,
    pub translation_temperature: f64,
    pub max_output_tokens: u32,
}

impl Default for RequestSettings {
    fn default() -> Self {
        Self {
            model_name: "gpt-3.5-turbo".into(),
            generation_temperature: 1.0,
            translation_temperature: 0.0,
            max_output_tokens: 4096,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HallucinateError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("seed word responses contained no usable words")]
    EmptyResponse,
    #[error("no seed produced any sentence ({failed} requests failed)")]
    AllSeedsFailed { failed: usize },
    #[error("all {failed} translation requests failed")]
    AllTranslationsFailed { failed: usize },
    #[error("nothing to {0}")]
    NoInput(&'static str),
    #[error("generated corpus too small for the requested splits: {source}")]
    InsufficientData {
        report: Box<PipelineReport>,
        #[source]
        source: CorpusError,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
}

/// Everything a stage needs to build requests.
pub struct StageContext<'a> {
    pub plan: &'a GenerationPlan,
    pub prompts: &'a PromptSet,
    pub settings: &'a RequestSettings,
    pub gateway: &'a Gateway,
}

impl StageContext<'_> {
    fn request(&self, messages: Vec<ChatMessage>, temperature: f64) -> ChatRequest {
        ChatRequest::new(self.settings.model_name.clone(), messages)
            .with_temperature(temperature)
            .with_max_output_tokens(self.settings.max_output_tokens)
    }

    fn vars(&self) -> PromptVars<'_> {
        PromptVars {
            src: Some(language_name(&self.plan.source_lang)),
            tgt: Some(language_name(&self.plan.target_lang)),
            ..PromptVars::default()
        }
    }

    fn seed_request(&self, template: &PromptTemplate, n: usize) -> ChatRequest {
        let vars = PromptVars {
            n: Some(n),
            ..self.vars()
        };
        let mut messages = vec![ChatMessage::system(render(&template.system, &vars))];
        if let Some(user) = &template.user {
            messages.push(ChatMessage::user(render(user, &vars)));
        }
        if let Some(fewshot) = &template.assistant_fewshot {
            messages.push(ChatMessage::assistant(fewshot.clone()));
        }
        self.request(messages, self.settings.generation_temperature)
    }

    /// System = sentence prompt, user = seed word, assistant = few-shot
    /// delimiter example.
    pub fn sentence_request(&self, seed: &str) -> ChatRequest {
        let t = &self.prompts.sentences;
        let vars = PromptVars {
            n: Some(self.plan.sentences_per_seed),
            seed: Some(seed),
            ..self.vars()
        };
        let mut messages = vec![
            ChatMessage::system(render(&t.system, &vars)),
            ChatMessage::user(render(t.user_or(DEFAULT_SENTENCE_USER), &vars)),
        ];
        if let Some(fewshot) = &t.assistant_fewshot {
            messages.push(ChatMessage::assistant(fewshot.clone()));
        }
        self.request(messages, self.settings.generation_temperature)
    }

    pub fn translation_request(&self, sentence: &str) -> ChatRequest {
        let t = &self.prompts.translation;
        let vars = PromptVars {
            sentence: Some(sentence),
            ..self.vars()
        };
        let mut messages = vec![ChatMessage::system(render(&t.system, &vars))];
        if let Some(fewshot) = &t.assistant_fewshot {
            messages.push(ChatMessage::assistant(fewshot.clone()));
        }
        messages.push(ChatMessage::user(render(
            t.user_or(DEFAULT_TRANSLATION_USER),
            &vars,
        )));
        self.request(messages, self.settings.translation_temperature)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedHarvest {
    pub seeds: Vec<String>,
    pub requested: usize,
    pub parsed: usize,
}

/// Requests nouns then verbs, parses both comma lists and deduplicates the
/// combined list case-insensitively, nouns first.
pub fn generate_seed_words(ctx: &StageContext<'_>) -> Result<SeedHarvest, HallucinateError> {
    let nouns = ctx
        .gateway
        .complete(&ctx.seed_request(&ctx.prompts.seed_nouns, ctx.plan.n_nouns))?;
    let verbs = ctx
        .gateway
        .complete(&ctx.seed_request(&ctx.prompts.seed_verbs, ctx.plan.n_verbs))?;
    let mut parsed = parse::parse_seed_words(&nouns);
    parsed.extend(parse::parse_seed_words(&verbs));
    let seeds = dedup(&parsed, DedupMode::SeedWord);
    if seeds.is_empty() {
        return Err(HallucinateError::EmptyResponse);
    }
    let requested = ctx.plan.n_nouns + ctx.plan.n_verbs;
    if seeds.len() < requested {
        log::info!(
            "seed stage: {} of {requested} requested seeds usable",
            seeds.len()
        );
    }
    Ok(SeedHarvest {
        seeds,
        requested,
        parsed: parsed.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSentence {
    pub seed: String,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceHarvest {
    pub items: Vec<SeedSentence>,
    pub raw_parsed: usize,
    pub failed_seeds: usize,
}

/// One request per seed; sentences are deduplicated globally, so a sentence
/// produced by several seeds is attributed to the first one.
pub fn generate_sentences(
    seeds: &[String],
    ctx: &StageContext<'_>,
) -> Result<SentenceHarvest, HallucinateError> {
    if seeds.is_empty() {
        return Err(HallucinateError::NoInput("generate sentences from"));
    }
    let requests: Vec<_> = seeds.iter().map(|s| ctx.sentence_request(s)).collect();
    let mut tagged = Vec::new();
    let mut failed_seeds = 0;
    for (index, result) in ctx.gateway.complete_batch(&requests) {
        match result {
            Ok(text) => tagged.extend(
                parse::parse_sentences(&text)
                    .into_iter()
                    .map(|sentence| (seeds[index].clone(), sentence)),
            ),
            Err(err) => {
                log::warn!("sentence request for seed {:?} failed: {err}", seeds[index]);
                failed_seeds += 1;
            }
        }
    }
    let raw_parsed = tagged.len();
    let items = dedup_by(tagged, DedupMode::Sentence, |(_, s)| s.as_str())
        .into_iter()
        .map(|(seed, sentence)| SeedSentence { seed, sentence })
        .collect::<Vec<_>>();
    if items.is_empty() {
        return Err(HallucinateError::AllSeedsFailed {
            failed: failed_seeds,
        });
    }
    Ok(SentenceHarvest {
        items,
        raw_parsed,
        failed_seeds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationHarvest {
    pub corpus: ParallelCorpus,
    pub failed: usize,
}

/// Synthetic pair id for the sentence at `index` of the sentence stage.
pub fn synthetic_id(plan: &GenerationPlan, index: usize) -> String {
    format!("syn-{}-{:06}", plan.source_lang, index + 1)
}

/// One translation request per sentence, fanned out through the gateway.
/// Failed or empty translations are dropped; order follows the input.
pub fn translate_sentences(
    items: &[SeedSentence],
    ctx: &StageContext<'_>,
) -> Result<TranslationHarvest, HallucinateError> {
    if items.is_empty() {
        return Err(HallucinateError::NoInput("translate"));
    }
    let requests: Vec<_> = items
        .iter()
        .map(|item| ctx.translation_request(&item.sentence))
        .collect();
    let mut pairs = Vec::with_capacity(items.len());
    let mut failed = 0;
    for (index, result) in ctx.gateway.complete_batch(&requests) {
        let item = &items[index];
        let text = match result {
            Ok(text) => parse::clean_line(&text),
            Err(err) => {
                log::debug!("translation {index} failed: {err}");
                failed += 1;
                continue;
            }
        };
        match SentencePair::synthetic(
            synthetic_id(ctx.plan, index),
            &item.sentence,
            text,
            &item.seed,
        ) {
            Ok(pair) => pairs.push(pair),
            Err(err) => {
                log::debug!("translation {index} unusable: {err}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        log::warn!("{failed} of {} translations dropped", items.len());
    }
    if pairs.is_empty() {
        return Err(HallucinateError::AllTranslationsFailed { failed });
    }
    let corpus = ParallelCorpus::new(&ctx.plan.source_lang, &ctx.plan.target_lang, pairs)?;
    Ok(TranslationHarvest { corpus, failed })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedCounts {
    pub requested: usize,
    pub parsed: usize,
    pub deduplicated: usize,
    pub shortfall: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceCounts {
    pub requested: usize,
    pub parsed: usize,
    pub deduplicated: usize,
    pub failed_seeds: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationCounts {
    pub requested: usize,
    pub translated: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train_pairs: usize,
    pub train_tokens: usize,
    pub valid_pairs: usize,
    pub valid_tokens: usize,
    pub sampled: usize,
}

/// Per-stage funnel counts for one pipeline run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub run_id: String,
    pub backend: String,
    pub rng_seed: u64,
    pub mock_seed: Option<u64>,
    pub plan: GenerationPlan,
    pub split: Option<SplitSpec>,
    pub seeds: SeedCounts,
    pub sentences: SentenceCounts,
    pub translations: TranslationCounts,
    pub splits: Option<SplitCounts>,
    pub error: Option<String>,
    /// Logged but kept out of `report.json` so reruns stay byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip)]
    pub resumed_stages: Vec<&'static str>,
}

impl PipelineReport {
    /// sampled ≤ translated ≤ deduplicated ≤ parsed.
    pub fn funnel_is_monotone(&self) -> bool {
        let sampled = self.splits.as_ref().map_or(0, |s| s.sampled);
        sampled <= self.translations.translated
            && self.translations.translated <= self.sentences.deduplicated
            && self.sentences.deduplicated <= self.sentences.parsed
            && self.seeds.deduplicated <= self.seeds.parsed
    }
}

/// Layout of a run directory.
#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn checkpoints(&self) -> PathBuf {
        self.root.join("checkpoints")
    }

    pub fn corpora(&self) -> PathBuf {
        self.root.join("corpora")
    }

    pub fn models(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn report_path(&self) -> PathBuf {
        self.reports().join("report.json")
    }

    pub fn create(&self) -> std::io::Result<()> {
        for dir in [
            self.checkpoints(),
            self.corpora(),
            self.models(),
            self.reports(),
        ] {
            std::fs::create_dir_all(dir)?;
        }
        Ok(())
    }
}

/// Identifies a run in its report.
#[derive(Debug, Clone, Default)]
pub struct RunInfo {
    pub run_id: String,
    pub backend: String,
    pub mock_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub train: ParallelCorpus,
    pub valid: ParallelCorpus,
    pub report: PipelineReport,
}

fn io_checkpoint(path: &Path) -> impl FnOnce(std::io::Error) -> HallucinateError + '_ {
    move |e| HallucinateError::Checkpoint {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

fn write_report(layout: &RunLayout, report: &PipelineReport) -> Result<(), HallucinateError> {
    let path = layout.report_path();
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    crate::fsutil::write_atomic(&path, json.as_bytes()).map_err(io_checkpoint(&path))
}

/// Runs seeds → sentences → translations → splits, checkpointing after each
/// generation stage so an interrupted run resumes without repeating calls.
/// `report.json` is written on success and on insufficient data.
pub fn run_pipeline(
    ctx: &StageContext<'_>,
    split: &SplitSpec,
    layout: &RunLayout,
    info: &RunInfo,
) -> Result<PipelineOutput, HallucinateError> {
    ctx.plan.validate().map_err(HallucinateError::Config)?;
    ctx.prompts.validate().map_err(HallucinateError::Config)?;
    let started = Instant::now();
    let ckpt = layout.checkpoints();
    layout.create().map_err(io_checkpoint(&layout.root))?;
    let mut report = PipelineReport {
        run_id: info.run_id.clone(),
        backend: info.backend.clone(),
        rng_seed: split.rng_seed,
        mock_seed: info.mock_seed,
        plan: ctx.plan.clone(),
        split: Some(*split),
        ..PipelineReport::default()
    };

    let seeds_path = ckpt.join("seeds.jsonl");
    let seeds: SeedHarvest = match load_stage(&seeds_path)? {
        Some(h) => {
            report.resumed_stages.push("seeds");
            h
        }
        None => {
            let h = generate_seed_words(ctx)?;
            save_stage(&seeds_path, &h)?;
            h
        }
    };
    report.seeds = SeedCounts {
        requested: seeds.requested,
        parsed: seeds.parsed,
        deduplicated: seeds.seeds.len(),
        shortfall: seeds.requested.saturating_sub(seeds.seeds.len()),
    };

    let sentences_path = ckpt.join("sentences.jsonl");
    let sentences: SentenceHarvest = match load_stage(&sentences_path)? {
        Some(h) => {
            report.resumed_stages.push("sentences");
            h
        }
        None => {
            let h = generate_sentences(&seeds.seeds, ctx)?;
            save_stage(&sentences_path, &h)?;
            h
        }
    };
    report.sentences = SentenceCounts {
        requested: seeds.seeds.len() * ctx.plan.sentences_per_seed,
        parsed: sentences.raw_parsed,
        deduplicated: sentences.items.len(),
        failed_seeds: sentences.failed_seeds,
    };

    let translations_path = ckpt.join("translations.jsonl");
    let translated = match checkpoint::load_translations(&translations_path, ctx.plan)? {
        Some(h) => {
            report.resumed_stages.push("translations");
            h
        }
        None => {
            let h = translate_sentences(&sentences.items, ctx)?;
            checkpoint::save_translations(&translations_path, &h)?;
            h
        }
    };
    report.translations = TranslationCounts {
        requested: sentences.items.len(),
        translated: translated.corpus.len(),
        failed: translated.failed,
    };

    let no_test = SplitSpec {
        test_token_threshold: None,
        ..*split
    };
    let result = make_splits(&translated.corpus, &no_test);
    report.wall_time = started.elapsed();
    if !report.resumed_stages.is_empty() {
        log::info!(
            "resumed from checkpoints: {}",
            report.resumed_stages.join(", ")
        );
    }
    log::info!("pipeline finished in {:.2?}", report.wall_time);
    match result {
        Ok(splits) => {
            report.splits = Some(SplitCounts {
                train_pairs: splits.train.len(),
                train_tokens: splits.train.source_token_count(),
                valid_pairs: splits.valid.len(),
                valid_tokens: splits.valid.source_token_count(),
                sampled: splits.train.len() + splits.valid.len(),
            });
            let corpora = layout.corpora();
            corpus::write_jsonl(&splits.train, &corpora.join("train.jsonl"))?;
            corpus::write_jsonl(&splits.valid, &corpora.join("valid.jsonl"))?;
            write_report(layout, &report)?;
            Ok(PipelineOutput {
                train: splits.train,
                valid: splits.valid,
                report,
            })
        }
        Err(err @ CorpusError::InsufficientData { .. }) => {
            report.error = Some(err.to_string());
            write_report(layout, &report)?;
            Err(HallucinateError::InsufficientData {
                report: Box::new(report),
                source: err,
            })
        }
        Err(err) => Err(err.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{FnBackend, MockBackend, RetryPolicy, Role};
    use std::sync::Arc;

    fn gateway(backend: impl crate::gateway::ChatBackend + 'static) -> Gateway {
        Gateway::new(Arc::new(backend), RetryPolicy::default(), 3)
    }

    fn small_plan() -> GenerationPlan {
        GenerationPlan {
            n_nouns: 5,
            n_verbs: 5,
            sentences_per_seed: 4,
            ..GenerationPlan::default()
        }
    }

    fn ctx<'a>(
        plan: &'a GenerationPlan,
        prompts: &'a PromptSet,
        settings: &'a RequestSettings,
        gateway: &'a Gateway,
    ) -> StageContext<'a> {
        StageContext {
            plan,
            prompts,
            settings,
            gateway,
        }
    }

    fn is_nouns(req: &ChatRequest) -> bool {
        req.first(Role::System).unwrap().contains("Substantive")
    }

    #[test]
    fn seed_responses_are_parsed_and_merged() {
        let gw = gateway(FnBackend(|req: &ChatRequest| {
            Ok(if is_nouns(req) {
                "Hund, Katze,Maus, laufen".to_string()
            } else {
                "Laufen, singen".to_string()
            })
        }));
        let (plan, prompts, settings) = (
            small_plan(),
            PromptSet::default(),
            RequestSettings::default(),
        );
        let h = generate_seed_words(&ctx(&plan, &prompts, &settings, &gw)).unwrap();
        assert_eq!(h.seeds, vec!["Hund", "Katze", "Maus", "laufen", "singen"]);
        assert_eq!(h.parsed, 6);
        assert_eq!(h.requested, 10);
    }

    #[test]
    fn seed_request_shape() {
        let seen = Arc::new(std::sync::Mutex::new(Vec::new()));
        let sink = seen.clone();
        let gw = gateway(FnBackend(move |req: &ChatRequest| {
            sink.lock().unwrap().push(req.clone());
            Ok("Hund".to_string())
        }));
        let plan = GenerationPlan::default();
        let (prompts, settings) = (PromptSet::default(), RequestSettings::default());
        generate_seed_words(&ctx(&plan, &prompts, &settings, &gw)).unwrap();
        let seen = seen.lock().unwrap();
        assert_eq!(seen.len(), 2);
        assert_eq!(seen[0].messages.len(), 1);
        assert_eq!(
            seen[0].messages[0].content,
            "Generieren Sie 600 einzigartige zufällige Substantive, die jeweils durch ein Komma getrennt sind"
        );
        assert_eq!(seen[0].temperature, 1.0);
    }

    #[test]
    fn empty_seed_responses_fail() {
        let gw = gateway(FnBackend(|_: &ChatRequest| Ok(" , ,".to_string())));
        let (plan, prompts, settings) = (
            small_plan(),
            PromptSet::default(),
            RequestSettings::default(),
        );
        assert!(matches!(
            generate_seed_words(&ctx(&plan, &prompts, &settings, &gw)),
            Err(HallucinateError::EmptyResponse)
        ));
    }

    #[test]
    fn sentence_requests_carry_fewshot_and_dedup_globally() {
        let gw = gateway(FnBackend(|req: &ChatRequest| {
            assert_eq!(req.messages.len(), 3);
            assert_eq!(req.messages[2].role, Role::Assistant);
            assert_eq!(
                req.messages[2].content,
                "Gärten und Terrassen;Tacos sind gut.;"
            );
            let seed = req.last(Role::User).unwrap();
            match seed {
                "Bad" => Err(GatewayError::Auth("no".into())),
                _ => Ok(format!("Das ist gut.;{seed} ist da.;")),
            }
        }));
        let (plan, prompts, settings) = (
            small_plan(),
            PromptSet::default(),
            RequestSettings::default(),
        );
        let seeds: Vec<String> = ["Hund", "Bad", "Katze"].map(String::from).to_vec();
        let h = generate_sentences(&seeds, &ctx(&plan, &prompts, &settings, &gw)).unwrap();
        assert_eq!(h.raw_parsed, 4);
        assert_eq!(h.failed_seeds, 1);
        let got: Vec<_> = h
            .items
            .iter()
            .map(|i| (i.seed.as_str(), i.sentence.as_str()))
            .collect();
        assert_eq!(
            got,
            vec![
                ("Hund", "Das ist gut."),
                ("Hund", "Hund ist da."),
                ("Katze", "Katze ist da.")
            ]
        );
    }

    #[test]
    fn all_seeds_failing_is_an_error() {
        let gw = gateway(FnBackend(|_: &ChatRequest| {
            Err(GatewayError::Auth("x".into()))
        }));
        let (plan, prompts, settings) = (
            small_plan(),
            PromptSet::default(),
            RequestSettings::default(),
        );
        assert!(matches!(
            generate_sentences(&["a".into()], &ctx(&plan, &prompts, &settings, &gw)),
            Err(HallucinateError::AllSeedsFailed { failed: 1 })
        ));
    }

    #[test]
    fn translations_keep_order_and_provenance() {
        let gw = gateway(FnBackend(|req: &ChatRequest| {
            assert_eq!(
                req.first(Role::System),
                Some("Translate from German to English")
            );
            assert_eq!(req.temperature, 0.0);
            let s = req.last(Role::User).unwrap();
            if s == "s3" {
                Err(GatewayError::Protocol("bad".into()))
            } else {
                Ok(format!("{}\n", s.to_uppercase()))
            }
        }));
        let (plan, prompts, settings) = (
            small_plan(),
            PromptSet::default(),
            RequestSettings::default(),
        );
        let items: Vec<_> = (0..10)
            .map(|i| SeedSentence {
                seed: "Eule".into(),
                sentence: format!("s{i}"),
            })
            .collect();
        let h = translate_sentences(&items, &ctx(&plan, &prompts, &settings, &gw)).unwrap();
        assert_eq!(h.failed, 1);
        assert_eq!(h.corpus.len(), 9);
        assert_eq!(h.corpus.pairs()[3].source(), "s4");
        assert_eq!(h.corpus.pairs()[3].target(), "S4");
        assert_eq!(h.corpus.pairs()[3].id(), "syn-de-000005");
        assert!(h
            .corpus
            .pairs()
            .iter()
            .all(|p| p.origin() == corpus::Origin::Synthetic && p.seed_word() == Some("Eule")));
    }

    #[test]
    fn mock_translation_of_example_sentence() {
        let prompts = PromptSet::default();
        let gw = gateway(MockBackend::new(0, &prompts.mock_patterns()));
        let (plan, settings) = (small_plan(), RequestSettings::default());
        let items = vec![SeedSentence {
            seed: "Eule".into(),
            sentence: "Eine Eule ruft".into(),
        }];
        let h = translate_sentences(&items, &ctx(&plan, &prompts, &settings, &gw)).unwrap();
        assert_eq!(h.corpus.pairs()[0].target(), "An owl calls");
    }

    #[test]
    fn mock_stages_chain() {
        let prompts = PromptSet::default();
        let gw = gateway(MockBackend::new(11, &prompts.mock_patterns()));
        let (plan, settings) = (small_plan(), RequestSettings::default());
        let c = ctx(&plan, &prompts, &settings, &gw);
        let seeds = generate_seed_words(&c).unwrap();
        assert!(seeds.seeds.len() <= 10 && seeds.seeds.iter().all(|s| !s.is_empty()));
        let three = &seeds.seeds[..3];
        let sentences = generate_sentences(three, &c).unwrap();
        assert!(sentences.items.len() <= 12);
        assert!(sentences.items.iter().all(|i| !i.sentence.contains('\n')));
    }
}
