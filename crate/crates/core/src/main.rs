use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use magic_net::experiment::{replay, run_experiment, ExperimentConfig};
use magic_net::streams::write_dump;

#[derive(Parser)]
#[command(name = "magic-net", version, about = "Streaming continual learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run this single seed instead of the configured list.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Write a per-point trace (t, prediction, label, running_kappa).
    #[arg(long)]
    trace: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate streams, run the learner and evaluate it for every seed.
    Run(Common),
    /// Run the configured learner on a stream dump.
    Replay {
        #[command(flatten)]
        common: Common,
        /// Stream dump (CSV with a JSON sidecar).
        #[arg(long)]
        dump: PathBuf,
    },
    /// Write the stream of every seed as a dump.
    Generate(Common),
}

fn load(common: &Common) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&common.config)
        .with_context(|| format!("loading {}", common.config.display()))?;
    if let Some(seed) = common.seed_override {
        cfg.seeds = vec![seed];
    }
    cfg.trace |= common.trace;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    Ok((cfg, out))
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(common) => {
            let (cfg, out) = load(&common)?;
            for s in run_experiment(&cfg, &out, cfg.trace)? {
                let note = if s.resumed { " (already complete)" } else { "" };
                println!(
                    "seed {}: end kappa {} avg {:.4} bwt {:.4}{note}",
                    s.seed,
                    s.end.map_or("n/a".to_string(), |v| format!("{v:.4}")),
                    s.avg,
                    s.bwt
                );
            }
            println!("results in {}", out.display());
        }
        Command::Replay { common, dump } => {
            let (cfg, out) = load(&common)?;
            let s = replay(&cfg, &dump, &out, cfg.trace)?;
            println!(
                "seed {}: avg {:.4} bwt {:.4}; results in {}",
                s.seed,
                s.avg,
                s.bwt,
                out.display()
            );
        }
        Command::Generate(common) => {
            let (cfg, out) = load(&common)?;
            std::fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            for &seed in &cfg.seeds {
                let stream = magic_net::streams::build_configuration(
                    &cfg.source,
                    cfg.n_concepts,
                    cfg.concept_length,
                    seed,
                )?;
                let path = out.join(format!("stream_seed{seed}.csv"));
                write_dump(&stream, &path)?;
                println!("{} ({} points)", path.display(), stream.len());
            }
        }
    }
    Ok(())
}
