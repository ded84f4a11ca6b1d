use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rgpl::benchmark::Mode;
use rgpl::commands::{cmd_analyze, cmd_eval, cmd_prepare, cmd_sweep, cmd_train, ExperimentConfig};
use rgpl::eval::Metric;

#[derive(Parser)]
#[command(
    name = "rgpl",
    version,
    about = "Dense retriever domain adaptation with remined hard negatives"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write corpus, queries, qrels and the Base checkpoint
    Prepare {
        #[command(flatten)]
        common: Common,
    },
    /// Mine initial negatives and adapt the Base model
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "rgpl")]
        mode: Mode,
        /// Refresh interval in steps (R-GPL)
        #[arg(long)]
        k: Option<usize>,
    },
    /// Evaluate a checkpoint: `base`, a run name such as `rgpl-k1000`, or a path
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "base")]
        checkpoint: String,
        /// Second checkpoint for a one-sided significance test
        #[arg(long)]
        against: Option<String>,
        #[arg(long)]
        metric: Vec<Metric>,
    },
    /// Train and evaluate one model per refresh interval (0 or `inf` = GPL)
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_k)]
        k: Vec<usize>,
        #[arg(long, default_value = "ndcg@10")]
        metric: Metric,
    },
    /// Write curves, histograms and projections for a training run
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "rgpl-k1000")]
        run: String,
    },
}

fn parse_k(s: &str) -> Result<usize, String> {
    match s {
        "inf" | "never" => Ok(0),
        _ => s.parse().map_err(|_| format!("invalid k {s:?}")),
    }
}

fn load(common: &Common) -> rgpl::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn run(cli: Cli) -> rgpl::Result<()> {
    match cli.command {
        Command::Prepare { common } => {
            let manifest = cmd_prepare(&load(&common)?)?;
            println!("{}", serde_json::to_string_pretty(&manifest).unwrap_or_default());
        }
        Command::Train { common, mode, k } => {
            let dir = cmd_train(&load(&common)?, mode, k)?;
            println!("{}", dir.display());
        }
        Command::Eval {
            common,
            checkpoint,
            against,
            metric,
        } => {
            let config = load(&common)?;
            let metrics = if metric.is_empty() { config.metrics()? } else { metric };
            let out = cmd_eval(&config, &checkpoint, against.as_deref(), &metrics)?;
            for r in &out.reports {
                println!("{}\t{:.6}", r.name(), r.aggregate);
            }
            for s in &out.significance {
                println!("{s}");
            }
        }
        Command::Sweep { common, k, metric } => {
            let config = load(&common)?;
            let mut ks = if k.is_empty() { config.eval.sweep_k.clone() } else { k };
            if !ks.contains(&0) {
                ks.push(0);
            }
            for row in cmd_sweep(&config, &ks, metric)? {
                println!("{}\t{}\t{:.6}", row.k, row.run, row.value);
            }
        }
        Command::Analyze { common, run } => {
            let dir = cmd_analyze(&load(&common)?, &run)?;
            println!("{}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Ok(n) = std::env::var("RGPL_WORKERS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not set worker count: {e}");
                }
            }
            _ => log::warn!("ignoring RGPL_WORKERS={n:?}; expected a positive integer"),
        }
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
