use std::path::PathBuf;
use std::process::ExitCode;

use anonmine::anonclf::CostConfig;
use anonmine::pipeline::{self, Overrides, PipelineConfig, CONFIG_ENV};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "anonmine", version, about = "Profile anonymity classification and sensitive-account discovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root; every stage writes a subdirectory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Anonymous and Identifiable misclassification costs, as `a,i`.
    #[arg(long, global = true, value_parser = parse_costs)]
    costs: Option<CostConfig>,
    /// Fixed topic count instead of perplexity selection.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    min_followers: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate synthetic accounts, followers, follow edges and tweets.
    Synth,
    /// Train and cross-validate the anonymity classifier.
    Train,
    /// Label the followers with the trained classifier.
    Classify,
    /// Score targets by the anonymity of their followers.
    Score,
    /// Compare topic weights of sensitive and non-sensitive targets.
    Lda,
    /// Summarize every stage that has run.
    Report,
}

fn parse_costs(s: &str) -> Result<CostConfig, String> {
    let (a, i) = s.split_once(',').ok_or("expected two costs as a,i")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    CostConfig::new(num(a)?, num(i)?).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> anonmine::Result<()> {
    let overrides = Overrides { seed: cli.seed, out: cli.out, costs: cli.costs, k: cli.k, min_followers: cli.min_followers };
    let cfg = PipelineConfig::load(cli.config.as_deref())?.apply(&overrides)?;
    let summary = match cli.command {
        Command::Synth => serde_json::to_string_pretty(&pipeline::cmd_synth(&cfg)?)?,
        Command::Train => serde_json::to_string_pretty(&pipeline::cmd_train(&cfg)?)?,
        Command::Classify => serde_json::to_string_pretty(&pipeline::cmd_classify(&cfg)?)?,
        Command::Score => serde_json::to_string_pretty(&pipeline::cmd_score(&cfg)?)?,
        Command::Lda => serde_json::to_string_pretty(&pipeline::cmd_lda(&cfg)?)?,
        Command::Report => pipeline::cmd_report(&cfg)?.display().to_string(),
    };
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("anonmine: {e}");
            ExitCode::FAILURE
        }
    }
}
