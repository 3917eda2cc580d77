use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

mod commands;
mod config;
mod error;

use config::{BackendKind, RunConfig};

/// Synthetic parallel corpus generation, tokenization and evaluation.
#[derive(Parser, Debug)]
#[command(name = "corpus-forge", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override a configuration value, e.g. `--set plan.n_nouns=5`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output goes to `<runs_dir>/<run-id>/`.
    #[arg(long, global = true, default_value = "default")]
    run_id: String,

    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus: seed words, sentences, translations, splits.
    Hallucinate {
        #[arg(long, value_enum)]
        backend: Option<BackendKind>,
    },
    /// Split a natural corpus into train/valid/test by token budget.
    Sample {
        /// `.jsonl` file or plain-pair stem (`<stem>.<src>` + `<stem>.<tgt>`).
        #[arg(long)]
        input: PathBuf,
    },
    /// Train a joint source-target BPE model on training corpora.
    BpeTrain {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        /// Defaults to `models/bpe.model` in the run directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Segment (or with --decode, restore) a text file line by line.
    BpeApply {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        decode: bool,
    },
    /// Train Synth/Nat/Aug lexicon models and write the evaluation report.
    Experiment {
        #[arg(long)]
        nat_train: PathBuf,
        #[arg(long)]
        syn_train: PathBuf,
        #[arg(long)]
        nat_valid: Option<PathBuf>,
        #[arg(long)]
        syn_valid: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        /// Only write the diversity profiles.
        #[arg(long)]
        analyze_only: bool,
    },
    /// Write corpora as toolkit-ready files plus training metadata.
    Export {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "plain-pair")]
        format: commands::ExportFormat,
        /// Defaults to `export/` in the run directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Write the bundled natural sample and controlled splits as JSON lines.
    Fixtures {
        /// Defaults to `fixtures/` in the run directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Type-token ratios and rank-frequency profiles of corpora.
    Analyze {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        /// Profile only the first N tokens of each side, N being the
        /// smallest side, so ratios are comparable.
        #[arg(long)]
        equal_tokens: bool,
    },
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn run(cli: Cli) -> Result<(), error::CliError> {
    let config = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    let run_dir = config.runs_dir.join(&cli.run_id);
    let ctx = commands::Context {
        config,
        run_id: cli.run_id,
        run_dir,
    };
    match cli.command {
        Command::Hallucinate { backend } => commands::hallucinate(&ctx, backend),
        Command::Sample { input } => commands::sample(&ctx, &input),
        Command::BpeTrain { inputs, output } => commands::bpe_train(&ctx, &inputs, output),
        Command::BpeApply {
            model,
            input,
            output,
            decode,
        } => commands::bpe_apply(&model, &input, &output, decode),
        Command::Experiment {
            nat_train,
            syn_train,
            nat_valid,
            syn_valid,
            test,
            analyze_only,
        } => commands::experiment(
            &ctx,
            &commands::ExperimentInputs {
                nat_train,
                syn_train,
                nat_valid,
                syn_valid,
                test,
            },
            analyze_only,
        ),
        Command::Export {
            inputs,
            format,
            out_dir,
        } => commands::export(&ctx, &inputs, format, out_dir),
        Command::Fixtures { out_dir } => commands::fixtures(&ctx, out_dir),
        Command::Analyze {
            inputs,
            equal_tokens,
        } => commands::analyze(&ctx, &inputs, equal_tokens),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("corpus-forge: {e}");
            e.exit_code()
        }
    }
}
