//! Experiment CLI: train, evaluate, export.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use colf::env::ScenarioConfig;
use colf::exp::{evaluate, export_trial, train_run, EvalOptions, PerceptionMode, RunConfig};
use colf::grounding::MisalignmentModel;
use colf::policy::PolicyPair;

#[derive(Parser)]
#[command(name = "colf", about = "Leader-follower cooperative pushing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy pair from a TOML run config.
    Train {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Training seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for checkpoints and metrics.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint.
    Eval {
        /// Checkpoint path.
        #[arg(long)]
        ckpt: PathBuf,
        /// Scenario preset name or TOML file.
        #[arg(long)]
        scenario: String,
        /// Trials per seed.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Comma-separated evaluation seeds.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        /// Perception mode: vector | grounded.
        #[arg(long, default_value = "vector", value_parser = parse_perception)]
        perception: PerceptionMode,
        /// Follower wrong-landmark probability (grounded mode).
        #[arg(long, default_value_t = 0.0)]
        p_wrong: f64,
        /// Follower perception noise std (m).
        #[arg(long, default_value_t = 0.0)]
        noise_std: f64,
        /// Sample actions instead of using the distribution mean.
        #[arg(long)]
        sample: bool,
        /// Directory for trajectory logs (enables logging).
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Export one logged trial as line-delimited JSON.
    Export {
        /// Run directory containing trajectories.jsonl.
        #[arg(long)]
        run: PathBuf,
        /// Trial index.
        #[arg(long)]
        trial: usize,
    },
}

fn parse_perception(s: &str) -> Result<PerceptionMode, String> {
    s.parse().map_err(|e: colf::Error| e.to_string())
}

fn run() -> colf::Result<()> {
    match Cli::parse().command {
        Command::Train { config, seed, out } => {
            let mut cfg = RunConfig::from_toml_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let res = train_run(
                cfg.method()?,
                &cfg.scenario()?,
                &cfg.train,
                cfg.iterations,
                cfg.checkpoint_every,
                cfg.seed,
                &out,
            )?;
            println!(
                "trained {} iterations (aborted: {}); checkpoint: {}; metrics: {}",
                res.iterations_run,
                res.aborted,
                res.final_checkpoint.display(),
                res.metrics_path.display()
            );
        }
        Command::Eval {
            ckpt,
            scenario,
            trials,
            seeds,
            perception,
            p_wrong,
            noise_std,
            sample,
            log_dir,
        } => {
            let (pair, _) = PolicyPair::load(&ckpt)?;
            let scenario = ScenarioConfig::preset_or_file(&scenario)?;
            let opts = EvalOptions {
                trials,
                seeds,
                perception,
                follower_mis: MisalignmentModel { p_wrong, noise_std, bias: [0.0, 0.0] },
                sample_actions: sample,
                trajectory_dir: log_dir,
            };
            let report = evaluate(&pair, &scenario, &opts)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(colf::Error::from)?);
        }
        Command::Export { run, trial } => {
            let path = export_trial(&run, trial)?;
            println!("exported {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("COLF_LOG", "info"))
        .init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
