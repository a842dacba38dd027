mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use patclass::config::PipelineConfig;

/// Weakly supervised hierarchical patent classification.
///
/// Every command reads one TOML configuration file. Values can be
/// overridden with `--set key=value`, where keys are the dotted paths
/// listed below; overrides win over the file.
#[derive(Debug, Parser)]
#[command(name = "patclass", version)]
struct Cli {
    /// Configuration file; built-in defaults are used when omitted.
    #[arg(short, long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set training.max_epochs=10`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Shorthand for `--set seed=N`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Weakly label every usable corpus record and write labels as JSON Lines.
    Label(LabelArgs),
    /// Label, sample negatives and write train/validation/test CSV splits.
    BuildDataset,
    /// Train a classifier on the dataset and write its checkpoint.
    Train,
    /// Score the checkpoint on a dataset split.
    Evaluate(SplitArgs),
    /// Write class probabilities and assigned codes for corpus records.
    Predict(PredictArgs),
    /// Attribute one document's class output to its tokens.
    Explain(ExplainArgs),
    /// Write precision/recall against threshold for every class.
    Curves(SplitArgs),
    /// Summarize dataset, training and evaluation artifacts in one file.
    Report,
}

#[derive(Debug, Args)]
struct LabelArgs {
    /// Worker threads; 0 uses every core. Output order never depends on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output file instead of `paths.labels`.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// train, validation or test; defaults to `evaluation.split`.
    #[arg(long)]
    split: Option<String>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// JSON Lines records to classify; defaults to `paths.corpus`.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Output file; defaults to `predictions.jsonl` in the report directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    /// Document id, looked up in the dataset and then in the corpus.
    #[arg(long)]
    id: String,
    /// Class to explain; defaults to `explain.target_class`.
    #[arg(long)]
    class: Option<String>,
    /// html, ansi or csv; defaults to `explain.format`.
    #[arg(long)]
    format: Option<String>,
    /// Integration steps; defaults to `explain.steps`.
    #[arg(long)]
    steps: Option<usize>,
    /// Output file; defaults to a name derived from id and class in the
    /// report directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn config_keys_help() -> String {
    let keys = PipelineConfig::default_keys();
    let width = keys.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::from("Configuration keys and defaults:\n");
    for (k, v) in keys {
        out.push_str(&format!("  {k:<width$}  {v}\n"));
    }
    out
}

fn main() -> ExitCode {
    let matches = Cli::command().after_help(config_keys_help()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.category();
            eprintln!("error[{}]: {e}", category.as_str());
            ExitCode::from(category.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> patclass::Result<()> {
    let mut overrides = cli.overrides;
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = PipelineConfig::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Label(a) => commands::label(&cfg, a.workers, a.output),
        Command::BuildDataset => commands::build_dataset(&cfg),
        Command::Train => commands::train(&cfg),
        Command::Evaluate(a) => commands::evaluate(&cfg, a.split),
        Command::Predict(a) => commands::predict(&cfg, a.input, a.output),
        Command::Explain(a) => commands::explain(
            &cfg,
            commands::ExplainRequest {
                id: a.id,
                class: a.class,
                format: a.format,
                steps: a.steps,
                output: a.output,
            },
        ),
        Command::Curves(a) => commands::curves(&cfg, a.split),
        Command::Report => commands::report(&cfg),
    }
}
