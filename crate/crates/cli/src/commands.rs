use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use corpus_forge::bpe::{self, BpeModel};
use corpus_forge::corpus::{self, ParallelCorpus};
use corpus_forge::experiment::{self, NAT_VALID, SYNTH_VALID, TEST};
use corpus_forge::fsutil::write_atomic;
use corpus_forge::gateway::{ChatBackend, Gateway, HttpBackend, MockBackend};
use corpus_forge::hallucinator::{run_pipeline, RunInfo, RunLayout, StageContext};
use corpus_forge::metrics::{
    frequency_profile, frequency_profile_capped, markdown_table, FrequencyProfile,
};
use corpus_forge::resources;
use serde::Serialize;
use serde_json::json;

use crate::config::{BackendKind, RunConfig};
use crate::error::CliError;

pub struct Context {
    pub config: RunConfig,
    pub run_id: String,
    pub run_dir: PathBuf,
}

impl Context {
    fn layout(&self) -> RunLayout {
        RunLayout::new(&self.run_dir)
    }

    fn source_lang(&self) -> &str {
        &self.config.plan.source_lang
    }

    fn target_lang(&self) -> &str {
        &self.config.plan.target_lang
    }

    /// `.jsonl` files are read as JSON lines, anything else as a plain-pair
    /// stem.
    fn read_corpus(&self, path: &Path) -> Result<ParallelCorpus, CliError> {
        let corpus = if path.extension().is_some_and(|e| e == "jsonl") {
            corpus::read_jsonl(path, self.source_lang(), self.target_lang())?
        } else {
            corpus::read_plain_pair(path, self.source_lang(), self.target_lang())?
        };
        log::info!("read {} pairs from {}", corpus.len(), path.display());
        Ok(corpus)
    }
}

fn corpus_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    write_atomic(path, contents.as_bytes()).map_err(|e| CliError::io(path.display(), e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_file(path, &text)
}

pub fn hallucinate(ctx: &Context, backend: Option<BackendKind>) -> Result<(), CliError> {
    let config = &ctx.config;
    let kind = backend.unwrap_or(config.backend);
    let chat: Arc<dyn ChatBackend> = match kind {
        BackendKind::Http => Arc::new(HttpBackend::from_config(&config.http)?),
        BackendKind::Mock => Arc::new(MockBackend::new(
            config.mock_seed,
            &config.prompts.mock_patterns(),
        )),
    };
    let gateway = Gateway::new(chat, config.http.retry_policy(), config.http.max_in_flight);
    let stage = StageContext {
        plan: &config.plan,
        prompts: &config.prompts,
        settings: &config.requests,
        gateway: &gateway,
    };
    let info = RunInfo {
        run_id: ctx.run_id.clone(),
        backend: kind.name().into(),
        mock_seed: (kind == BackendKind::Mock).then_some(config.mock_seed),
    };
    let layout = ctx.layout();
    let mut effective = config.clone();
    effective.backend = kind;
    write_file(&layout.reports().join("config.toml"), &effective.to_toml())?;
    let out = run_pipeline(&stage, &config.synthetic_split(), &layout, &info)?;
    println!(
        "train: {} pairs, valid: {} pairs -> {}",
        out.train.len(),
        out.valid.len(),
        layout.corpora().display()
    );
    Ok(())
}

pub fn sample(ctx: &Context, input: &Path) -> Result<(), CliError> {
    let natural = ctx.read_corpus(input)?;
    let splits = corpus::make_splits(&natural, &ctx.config.natural_split())?;
    let dir = ctx.layout().corpora();
    create_dir(&dir)?;
    let test = splits.test.expect("natural split has a test set");
    for (name, c) in [
        ("nat-train", &splits.train),
        ("nat-valid", &splits.valid),
        ("nat-test", &test),
    ] {
        corpus::write_jsonl(c, &dir.join(format!("{name}.jsonl")))?;
        println!(
            "{name}: {} pairs, {} tokens",
            c.len(),
            c.source_token_count()
        );
    }
    Ok(())
}

pub fn bpe_train(
    ctx: &Context,
    inputs: &[PathBuf],
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let corpora = inputs
        .iter()
        .map(|p| ctx.read_corpus(p))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&ParallelCorpus> = corpora.iter().collect();
    let model = bpe::train_bpe(&refs, ctx.config.bpe.target_vocab_size)?;
    let path = output.unwrap_or_else(|| ctx.layout().models().join("bpe.model"));
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    model.save(&path)?;
    println!(
        "{} merges, vocabulary {} -> {}",
        model.merges().len(),
        model.vocab().len(),
        path.display()
    );
    Ok(())
}

pub fn bpe_apply(model: &Path, input: &Path, output: &Path, decode: bool) -> Result<(), CliError> {
    let model = BpeModel::load(model)?;
    let text = fs::read_to_string(input).map_err(|e| CliError::io(input.display(), e))?;
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        if decode {
            let units: Vec<&str> = line.split_whitespace().collect();
            out.push_str(&bpe::decode(&units));
        } else {
            out.push_str(&model.encode_line(line));
        }
        out.push('\n');
    }
    write_file(output, &out)
}

pub struct ExperimentInputs {
    pub nat_train: PathBuf,
    pub syn_train: PathBuf,
    pub nat_valid: Option<PathBuf>,
    pub syn_valid: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct DiversityRow {
    corpus: String,
    side: String,
    type_count: usize,
    token_count: u64,
    ttr: f64,
}

struct Profiled {
    corpus: String,
    side: String,
    profile: FrequencyProfile,
}

fn profile_corpora(
    corpora: &[(String, &ParallelCorpus)],
    equal_tokens: bool,
) -> Result<Vec<Profiled>, CliError> {
    let sides = |c: &ParallelCorpus| -> [(String, Vec<String>); 2] {
        [
            (
                c.source_lang().to_string(),
                c.sources().map(String::from).collect(),
            ),
            (
                c.target_lang().to_string(),
                c.targets().map(String::from).collect(),
            ),
        ]
    };
    let all: Vec<(String, String, Vec<String>)> = corpora
        .iter()
        .flat_map(|(name, c)| {
            sides(c)
                .into_iter()
                .map(move |(side, lines)| (name.clone(), side, lines))
        })
        .collect();
    let cap = equal_tokens.then(|| {
        all.iter()
            .map(|(_, _, lines)| lines.iter().map(|l| corpus::count_tokens(l)).sum::<usize>())
            .min()
            .unwrap_or(0)
    });
    all.into_iter()
        .map(|(corpus, side, lines)| {
            let profile = match cap {
                Some(n) => frequency_profile_capped(&lines, n)?,
                None => frequency_profile(&lines)?,
            };
            Ok(Profiled {
                corpus,
                side,
                profile,
            })
        })
        .collect()
}

fn diversity_rows(profiles: &[Profiled]) -> Vec<DiversityRow> {
    profiles
        .iter()
        .map(|p| DiversityRow {
            corpus: p.corpus.clone(),
            side: p.side.clone(),
            type_count: p.profile.type_count,
            token_count: p.profile.token_count,
            ttr: p.profile.ttr,
        })
        .collect()
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).expect("writing to memory");
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 csv")
}

fn diversity_markdown(rows: &[DiversityRow]) -> String {
    let header = ["corpus", "side", "types", "tokens", "TTR"].map(String::from);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.corpus.clone(),
                r.side.clone(),
                r.type_count.to_string(),
                r.token_count.to_string(),
                format!("{:.3}", r.ttr),
            ]
        })
        .collect();
    markdown_table(&header, &body)
}

/// Writes `ttr.csv`, `zipf.csv` and one rank-frequency profile per corpus
/// side into `dir`.
fn write_profiles(dir: &Path, profiles: &[Profiled]) -> Result<Vec<DiversityRow>, CliError> {
    let rows = diversity_rows(profiles);
    let ttr = csv_string(|w| rows.iter().try_for_each(|r| w.serialize(r)));
    write_file(&dir.join("ttr.csv"), &ttr)?;
    let zipf = csv_string(|w| {
        w.write_record([
            "corpus",
            "side",
            "rank",
            "frequency",
            "log10_rank",
            "log10_frequency",
        ])?;
        for p in profiles {
            for (r, (lr, lf)) in p.profile.rank_frequency.iter().zip(p.profile.zipf_points()) {
                w.serialize((&p.corpus, &p.side, r.rank, r.frequency, lr, lf))?;
            }
        }
        Ok(())
    });
    write_file(&dir.join("zipf.csv"), &zipf)?;
    let profile_dir = dir.join("profiles");
    create_dir(&profile_dir)?;
    for p in profiles {
        p.profile
            .write(&profile_dir.join(format!("{}.{}.csv", p.corpus, p.side)))?;
    }
    Ok(rows)
}

pub fn experiment(
    ctx: &Context,
    inputs: &ExperimentInputs,
    analyze_only: bool,
) -> Result<(), CliError> {
    let nat_train = ctx.read_corpus(&inputs.nat_train)?;
    let syn_train = ctx.read_corpus(&inputs.syn_train)?;
    let mut eval: Vec<(&str, ParallelCorpus)> = Vec::new();
    for (label, path) in [
        (SYNTH_VALID, &inputs.syn_valid),
        (NAT_VALID, &inputs.nat_valid),
        (TEST, &inputs.test),
    ] {
        if let Some(p) = path {
            eval.push((label, ctx.read_corpus(p)?));
        }
    }
    let reports = ctx.layout().reports();
    let profiles = profile_corpora(
        &[
            ("nat-train".into(), &nat_train),
            ("syn-train".into(), &syn_train),
        ],
        true,
    )?;
    let rows = write_profiles(&reports, &profiles)?;
    let diversity = diversity_markdown(&rows);
    if analyze_only {
        print!("{diversity}");
        return Ok(());
    }

    let sets: Vec<(&str, &ParallelCorpus)> = eval.iter().map(|(l, c)| (*l, c)).collect();
    let exp = experiment::run_experiment(&nat_train, &syn_train, &sets, &ctx.config.experiment)?;
    let models_dir = ctx.layout().models();
    create_dir(&models_dir)?;
    for (label, model) in &exp.models {
        model.save(&models_dir.join(format!("lexicon-{label}.tsv")))?;
    }
    let mut markdown = String::new();
    if eval.iter().any(|(l, _)| *l == TEST) {
        markdown.push_str(&experiment::render_results(&[&exp.matrix]));
    } else {
        markdown.push_str("## Cross-method BLEU\n\n");
        markdown.push_str(&exp.matrix.to_markdown());
    }
    markdown.push_str("\n## Lexical diversity\n\n");
    markdown.push_str(&diversity);
    write_file(&reports.join("results.md"), &markdown)?;
    write_json(
        &reports.join("results.json"),
        &json!({
            "matrix": exp.matrix,
            "training": exp.training,
            "diversity": rows,
            "experiment": ctx.config.experiment,
            "rng_seed": ctx.config.rng_seed,
        }),
    )?;
    for f in &exp.matrix.failures {
        log::warn!("{} on {} failed: {}", f.row, f.column, f.reason);
    }
    print!("{markdown}");
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExportFormat {
    PlainPair,
    Jsonl,
}

/// Reference NMT setup the exported corpora are meant for.
fn training_metadata(ctx: &Context) -> serde_json::Value {
    json!({
        "toolkit": "fairseq",
        "architecture": "transformer",
        "attention_heads": 4,
        "layers": 3,
        "batch_size": 2000,
        "max_epochs": 100,
        "early_stopping": "validation loss",
        "bpe": {
            "joint_source_target": true,
            "vocab_size": ctx.config.bpe.target_vocab_size,
        },
        "evaluation": "SacreBLEU",
    })
}

pub fn export(
    ctx: &Context,
    inputs: &[PathBuf],
    format: ExportFormat,
    out_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let out_dir = out_dir.unwrap_or_else(|| ctx.run_dir.join("export"));
    let mut files = Vec::new();
    let mut corpora = Vec::new();
    for path in inputs {
        let c = ctx.read_corpus(path)?;
        if c.is_empty() {
            return Err(CliError::Insufficient(format!(
                "{} has no sentence pairs",
                path.display()
            )));
        }
        corpora.push((corpus_name(path), c));
    }
    create_dir(&out_dir)?;
    for (name, c) in &corpora {
        match format {
            ExportFormat::PlainPair => {
                corpus::write_plain_pair(c, &out_dir.join(name))?;
                files.push(format!("{name}.{}", c.source_lang()));
                files.push(format!("{name}.{}", c.target_lang()));
            }
            ExportFormat::Jsonl => {
                corpus::write_jsonl(c, &out_dir.join(format!("{name}.jsonl")))?;
                files.push(format!("{name}.jsonl"));
            }
        }
    }
    let splits: Vec<_> = corpora
        .iter()
        .map(|(name, c)| json!({"name": name, "pairs": c.len(), "source_tokens": c.source_token_count()}))
        .collect();
    write_json(
        &out_dir.join("metadata.json"),
        &json!({
            "source_lang": ctx.source_lang(),
            "target_lang": ctx.target_lang(),
            "format": match format {
                ExportFormat::PlainPair => "plain-pair",
                ExportFormat::Jsonl => "jsonl",
            },
            "files": files,
            "corpora": splits,
            "training": training_metadata(ctx),
        }),
    )?;
    println!(
        "exported {} corpora to {}",
        corpora.len(),
        out_dir.display()
    );
    Ok(())
}

pub fn analyze(ctx: &Context, inputs: &[PathBuf], equal_tokens: bool) -> Result<(), CliError> {
    let corpora = inputs
        .iter()
        .map(|p| Ok((corpus_name(p), ctx.read_corpus(p)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let refs: Vec<(String, &ParallelCorpus)> =
        corpora.iter().map(|(n, c)| (n.clone(), c)).collect();
    let profiles = profile_corpora(&refs, equal_tokens)?;
    let rows = write_profiles(&ctx.layout().reports(), &profiles)?;
    print!("{}", diversity_markdown(&rows));
    Ok(())
}

pub fn fixtures(ctx: &Context, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let dir = out_dir.unwrap_or_else(|| ctx.run_dir.join("fixtures"));
    create_dir(&dir)?;
    let f = resources::controlled_fixture();
    for (name, c) in [
        ("natural-sample", &resources::natural_sample()),
        ("nat-train", &f.nat_train),
        ("nat-valid", &f.nat_valid),
        ("syn-train", &f.syn_train),
        ("syn-valid", &f.syn_valid),
        ("test", &f.test),
    ] {
        corpus::write_jsonl(c, &dir.join(format!("{name}.jsonl")))?;
    }
    println!("wrote fixtures to {}", dir.display());
    Ok(())
}
