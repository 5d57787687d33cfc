use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jointspace_cli::{commands, CliError, CliResult, ExperimentConfig};

#[derive(Parser)]
#[command(name = "jointspace", version, about = "Align text and image embeddings and evaluate cross-modal retrieval")]
struct Cli {
    /// Experiment config (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed, overriding the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic paired dataset.
    Synth,
    /// Turn report sections into text features.
    Featurize,
    /// PCA-reduce train and test features.
    Pca,
    /// Train one model per seed.
    Align,
    /// Score trained models on the test split.
    Evaluate,
    /// Supervision-fraction (and section) sweep.
    Sweep,
    /// Chance-level metrics.
    Baseline,
}

fn run(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    let out = cfg.output.dir.clone();
    match cli.command {
        Command::Synth => commands::cmd_synth(&cfg, &out),
        Command::Featurize => commands::cmd_featurize(&cfg, &out),
        Command::Pca => commands::cmd_pca(&cfg, &out),
        Command::Align => commands::cmd_align(&cfg, &out),
        Command::Evaluate => commands::cmd_evaluate(&cfg, &out),
        Command::Sweep => commands::cmd_sweep(&cfg, &out).map(|o| o.files),
        Command::Baseline => commands::cmd_baseline(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(files) => {
            if !cli.quiet {
                for f in files {
                    println!("{}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &CliError) -> u8 {
    e.exit_code() as u8
}
