//! The `prlab` command-line surface. Every subcommand shares `--config`,
//! `--out`, and `--seed`; the config file provides whatever the flags do
//! not. Exit codes: 0 success, 1 validation problem (bad flag, bad config),
//! 2 runtime failure (stage error, damaged artifact, io).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rewardfn::load_bundle;

use crate::config::{ExperimentConfig, SourceKind};
use crate::error::{stage_failure, BenchError};
use crate::provenance::StageStatus;
use crate::stages::{
    run_benchmark, run_pipeline, stage_bench, stage_bundle, stage_demo, stage_eval, stage_sample,
    stage_train, write_run_log, Paths,
};

#[derive(Debug, Parser)]
#[command(
    name = "prlab",
    version,
    about = "Progress-reward laboratory: demos, pair sampling, representation training, \
             reward bundling, and SAC benchmarks over one artifact directory."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment config file (TOML). Omitted sections and flags fall back
    /// to the built-in block-insertion protocol.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Artifact directory; overrides the config's out_dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Global seed; every stage seed in the config offsets from it.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Record the scripted reference demonstration.
    Demo {
        #[command(flatten)]
        common: Common,
        /// Environment: block-insertion or latch-door. Overrides the config.
        #[arg(long)]
        env: Option<String>,
        /// Demonstration length in simulator steps. Overrides the config.
        #[arg(long)]
        horizon: Option<u32>,
    },
    /// Expand the demonstration into the observation-pair dataset.
    Sample {
        #[command(flatten)]
        common: Common,
    },
    /// Train the representation encoders on the pair dataset.
    TrainRepr {
        #[command(flatten)]
        common: Common,
        /// Optimizer iterations. Overrides the config.
        #[arg(long)]
        iterations: Option<u32>,
    },
    /// Bundle the reward model from the demonstration and checkpoint.
    BundleReward {
        #[command(flatten)]
        common: Common,
    },
    /// Score held-out trajectories with the bundled reward.
    EvalReward {
        #[command(flatten)]
        common: Common,
    },
    /// Train a single SAC run against one reward source.
    TrainRl {
        #[command(flatten)]
        common: Common,
        /// Reward source: dense, handcrafted, or sparse.
        #[arg(long, default_value = "dense")]
        source: String,
        /// Seed label for the run (effective seed = global + label).
        #[arg(long, default_value_t = 1)]
        rl_seed: u64,
    },
    /// Run the full benchmark matrix (every source x every seed).
    Bench {
        #[command(flatten)]
        common: Common,
        /// Worker threads; defaults to the machine's parallelism.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Write plot-data CSVs from recorded runs (and reward curves if the
    /// bundle is present but they are missing).
    Export {
        #[command(flatten)]
        common: Common,
    },
    /// Run every stage in order, skipping stages whose recorded input and
    /// output hashes still match.
    Pipeline {
        #[command(flatten)]
        common: Common,
        /// Worker threads for the benchmark stage.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.experiment.global_seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.experiment.out_dir = out.display().to_string();
    }
    Ok(cfg)
}

fn paths_of(cfg: &ExperimentConfig) -> Paths {
    Paths::new(cfg.out_dir())
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn dispatch(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Demo { common, env, horizon } => {
            let mut cfg = load_config(&common)?;
            if let Some(env) = env {
                cfg.experiment.env = env;
            }
            if let Some(h) = horizon {
                cfg.demo.horizon = h;
            }
            cfg.validate()?;
            let paths = paths_of(&cfg);
            let demo = stage_demo(&cfg, &paths)?;
            println!(
                "demo: {} steps, success={}, wrote {}",
                demo.horizon(),
                demo.success,
                paths.demo().display()
            );
        }
        Command::Sample { common } => {
            let cfg = load_config(&common)?;
            cfg.validate()?;
            let paths = paths_of(&cfg);
            let dataset = stage_sample(&cfg, &paths)?;
            println!("sample: {} pairs, wrote {}", dataset.records.len(), paths.pairs().display());
        }
        Command::TrainRepr { common, iterations } => {
            let mut cfg = load_config(&common)?;
            if let Some(n) = iterations {
                cfg.train.iterations = n;
            }
            cfg.validate()?;
            let paths = paths_of(&cfg);
            stage_train(&cfg, &paths)?;
            println!(
                "train-repr: {} iterations, wrote {} and {}",
                cfg.train.iterations,
                paths.checkpoint().display(),
                paths.training_csv().display()
            );
        }
        Command::BundleReward { common } => {
            let cfg = load_config(&common)?;
            cfg.validate()?;
            let paths = paths_of(&cfg);
            let rm = stage_bundle(&cfg, &paths)?;
            println!(
                "bundle-reward: denominator {}, wrote {}",
                rm.denominator(),
                paths.bundle().display()
            );
        }
        Command::EvalReward { common } => {
            let cfg = load_config(&common)?;
            cfg.validate()?;
            let paths = paths_of(&cfg);
            let s = stage_eval(&cfg, &paths)?;
            let rho = s.spearman.map(|r| r.to_string()).unwrap_or_else(|| "undefined".into());
            println!(
                "eval-reward: spearman(t, p) = {rho} over {} steps; p {} -> {}; move-away p {} -> {}",
                s.success_steps, s.p_first, s.p_last, s.away_p_first, s.away_p_last
            );
        }
        Command::TrainRl { common, source, rl_seed } => {
            let mut cfg = load_config(&common)?;
            let source = SourceKind::parse(&source)?;
            cfg.rl.sources = vec![source.label().to_owned()];
            cfg.rl.seeds = vec![rl_seed];
            cfg.validate()?;
            let paths = paths_of(&cfg);
            let rm = if source == SourceKind::Dense {
                Some(load_bundle(&paths.bundle()).map_err(stage_failure("train-rl"))?.0)
            } else {
                None
            };
            let metrics = run_benchmark(&cfg, rm.as_ref(), 1)?;
            let run = &metrics.runs[0];
            let path = write_run_log(&paths, run)?;
            let agg = &metrics.aggregates[0];
            println!(
                "train-rl: {} seed {} -> {} episodes, first success {}, final-20% {}, wrote {} ({})",
                agg.source,
                agg.seed,
                agg.episodes,
                agg.first_success.map(|e| e.to_string()).unwrap_or_else(|| "never".into()),
                agg.final20,
                path.display(),
                run.status
            );
        }
        Command::Bench { common, jobs } => {
            let cfg = load_config(&common)?;
            cfg.validate()?;
            let paths = paths_of(&cfg);
            let metrics = stage_bench(&cfg, &paths, jobs.unwrap_or_else(default_jobs))?;
            for (agg, run) in metrics.aggregates.iter().zip(&metrics.runs) {
                println!(
                    "bench: {} seed {} -> episodes {}, first success {}, final-20% {}, auc {} ({})",
                    agg.source,
                    agg.seed,
                    agg.episodes,
                    agg.first_success.map(|e| e.to_string()).unwrap_or_else(|| "never".into()),
                    agg.final20,
                    agg.auc,
                    run.status
                );
            }
            println!("bench: wrote {}", paths.metrics().display());
        }
        Command::Export { common } => {
            let cfg = load_config(&common)?;
            cfg.validate()?;
            let paths = paths_of(&cfg);
            let metrics = crate::stages::reload_metrics(&cfg, &paths)?;
            crate::stages::export_curves(&cfg, &paths, &metrics)?;
            for source in cfg.sources()? {
                println!("export: wrote {}", paths.curve(source).display());
            }
            if !paths.rewards_success().exists() && paths.bundle().exists() {
                stage_eval(&cfg, &paths)?;
                println!(
                    "export: wrote {} and {}",
                    paths.rewards_success().display(),
                    paths.rewards_failure().display()
                );
            }
        }
        Command::Pipeline { common, jobs } => {
            let cfg = load_config(&common)?;
            cfg.validate()?;
            let paths = paths_of(&cfg);
            let statuses = run_pipeline(&cfg, &paths, jobs.unwrap_or_else(default_jobs))?;
            for (stage, status) in statuses {
                let word = match status {
                    StageStatus::Ran => "ran",
                    StageStatus::Skipped => "skipped (hash match)",
                };
                println!("pipeline: {stage}: {word}");
            }
        }
    }
    Ok(())
}

/// Full CLI entry: parse, dispatch, and map the outcome to an exit code.
/// Kept off `main` so tests can drive it with synthetic argv.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => match dispatch(cli) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // Prints help to stdout, usage + error text to stderr.
            let _ = e.print();
            code
        }
    }
}
