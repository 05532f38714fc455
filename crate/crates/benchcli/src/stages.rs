//! Pipeline stage runners. Each stage reads its inputs from the artifact
//! directory and writes its outputs back there, so the pipeline can resume
//! from any completed stage purely off the filesystem; `run_pipeline` wires
//! the stages together under provenance control. The CLI calls the same
//! functions directly for the per-stage subcommands.
//!
//! Artifact layout inside the out directory:
//!
//! - `demo.prdm`             reference demonstration
//! - `pairs.prpd`            sampled observation-pair dataset
//! - `repr.prck`             trained representation checkpoint
//! - `training.csv`          loss history (iteration, l, l_recon, l_temporal)
//! - `reward.prrb`           bundled reward model
//! - `rewards_success.csv`   reward-vs-timestep along a held-out success
//! - `rewards_failure.csv`   reward-vs-timestep along a scripted move-away
//! - `runs/<source>-s<n>.csv` per-run RL training logs
//! - `metrics.csv`           per-run aggregates
//! - `curves_<source>.csv`   smoothed success rate, mean/min/max over seeds
//! - `provenance.toml`       stage input/output hashes

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use physim::{
    load_demo, record_demo, save_demo, sense, step_env, Action, Demonstration, EnvKind, EnvState,
    RecordOptions, WrenchWindow,
};
use replearn::{save_history, train, ArchConfig, ReprModel};
use rewardfn::{load_bundle, save_bundle, RewardModel};
use sacrl::{handcrafted_reward, run_csv, sparse_reward, train_run, RewardSource, RunConfig, RunLog};
use tvfs::{build_pair_dataset, fnv1a, load_dataset, save_dataset, PairDataset};

use crate::config::{ExperimentConfig, SourceKind};
use crate::error::{stage_failure, BenchError};
use crate::metrics::{
    curve_csv, metrics_csv, run_log_from_path, smoothed_success, RunMetrics, RunRecord,
    SMOOTH_WINDOW,
};
use crate::provenance::{
    artifact_key, ensure_stage, sha256_file, sha256_hex, Manifest, StageStatus,
};

/// Simulator steps driven by the scripted move-away controller when
/// producing the failure-trajectory reward curve.
pub const AWAY_STEPS: u32 = 150;

/// Well-known artifact paths inside one out directory.
#[derive(Debug, Clone)]
pub struct Paths {
    pub out: PathBuf,
}

impl Paths {
    pub fn new(out: impl Into<PathBuf>) -> Paths {
        Paths { out: out.into() }
    }

    pub fn demo(&self) -> PathBuf {
        self.out.join("demo.prdm")
    }

    pub fn pairs(&self) -> PathBuf {
        self.out.join("pairs.prpd")
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.out.join("repr.prck")
    }

    pub fn training_csv(&self) -> PathBuf {
        self.out.join("training.csv")
    }

    pub fn bundle(&self) -> PathBuf {
        self.out.join("reward.prrb")
    }

    pub fn rewards_success(&self) -> PathBuf {
        self.out.join("rewards_success.csv")
    }

    pub fn rewards_failure(&self) -> PathBuf {
        self.out.join("rewards_failure.csv")
    }

    pub fn run_log(&self, source: SourceKind, seed_label: u64) -> PathBuf {
        self.out.join("runs").join(format!("{}-s{seed_label}.csv", source.label()))
    }

    pub fn metrics(&self) -> PathBuf {
        self.out.join("metrics.csv")
    }

    pub fn curve(&self, source: SourceKind) -> PathBuf {
        self.out.join(format!("curves_{}.csv", source.label()))
    }

    pub fn manifest(&self) -> PathBuf {
        self.out.join("provenance.toml")
    }
}

/// Records the reference demonstration and writes `demo.prdm`.
pub fn stage_demo(cfg: &ExperimentConfig, paths: &Paths) -> Result<Demonstration, BenchError> {
    let fail = stage_failure("demo");
    let kind = cfg.env_kind()?;
    let demo = record_demo(kind, cfg.demo_seed(), cfg.record_options()).map_err(fail)?;
    std::fs::create_dir_all(&paths.out)?;
    save_demo(&demo, &paths.demo()).map_err(stage_failure("demo"))?;
    Ok(demo)
}

/// Expands the demonstration into the pair dataset and writes `pairs.prpd`.
pub fn stage_sample(cfg: &ExperimentConfig, paths: &Paths) -> Result<PairDataset, BenchError> {
    let fail = stage_failure("sample");
    let demo = load_demo(&paths.demo()).map_err(stage_failure("sample"))?;
    let sched = cfg.schedule(demo.horizon() as u32)?;
    let dataset = build_pair_dataset(&demo, &cfg.sampling_config(), &sched).map_err(fail)?;
    save_dataset(&dataset, &paths.pairs()).map_err(stage_failure("sample"))?;
    Ok(dataset)
}

/// Trains the representation on the pair dataset; writes `repr.prck` and
/// `training.csv`. A rollback-abort inside training fails the stage — a
/// poisoned encoder must not flow into the reward model silently.
pub fn stage_train(cfg: &ExperimentConfig, paths: &Paths) -> Result<ReprModel, BenchError> {
    let fail = stage_failure("train-repr");
    let dataset = load_dataset(&paths.pairs()).map_err(stage_failure("train-repr"))?;
    let tc = cfg.train_config();
    // Init and shuffle streams come from distinct seeds so the two uses
    // never read the same ChaCha sequence.
    let model = ReprModel::new(ArchConfig::default(), tc.seed.wrapping_add(1)).map_err(fail)?;
    let outcome = train(model, &dataset, &tc).map_err(stage_failure("train-repr"))?;
    if let Some(abort) = &outcome.abort {
        return Err(BenchError::Stage {
            stage: "train-repr",
            message: format!(
                "training aborted at iteration {} (rolled back to {:?})",
                abort.iteration, abort.rolled_back_to
            ),
        });
    }
    outcome.model.save(&paths.checkpoint()).map_err(stage_failure("train-repr"))?;
    save_history(&paths.training_csv(), &outcome.history).map_err(stage_failure("train-repr"))?;
    Ok(outcome.model)
}

/// Builds the reward model from the demo and checkpoint and writes
/// `reward.prrb`. The bundle's embedded provenance word is an FNV-1a digest
/// of its two input hashes.
pub fn stage_bundle(cfg: &ExperimentConfig, paths: &Paths) -> Result<RewardModel, BenchError> {
    let fail = stage_failure("bundle-reward");
    let demo = load_demo(&paths.demo()).map_err(stage_failure("bundle-reward"))?;
    let model = ReprModel::load(ArchConfig::default(), &paths.checkpoint())
        .map_err(stage_failure("bundle-reward"))?;
    let rm = RewardModel::from_demo(model, &demo, cfg.ref_mode()?, cfg.distance()?, cfg.reward_mode()?)
        .map_err(fail)?;
    let lineage = format!("{} {}", sha256_file(&paths.demo())?, sha256_file(&paths.checkpoint())?);
    save_bundle(&rm, fnv1a(lineage.as_bytes()), &paths.bundle())
        .map_err(stage_failure("bundle-reward"))?;
    Ok(rm)
}

/// Numbers the eval subcommand prints; everything also lands in the two
/// rewards CSVs.
#[derive(Debug, Clone, Copy)]
pub struct EvalSummary {
    /// Spearman rank correlation between time and progress along the
    /// held-out success; None when undefined (constant progress).
    pub spearman: Option<f64>,
    pub success_steps: usize,
    pub p_first: f64,
    pub p_last: f64,
    pub away_p_first: f64,
    pub away_p_last: f64,
}

/// Evaluates the bundled reward along two held-out trajectories — a fresh
/// successful expert run and a scripted move-away — and writes one
/// `t,p,handcrafted,sparse` CSV per trajectory.
pub fn stage_eval(cfg: &ExperimentConfig, paths: &Paths) -> Result<EvalSummary, BenchError> {
    let fail = stage_failure("eval-reward");
    let (rm, _) = load_bundle(&paths.bundle()).map_err(stage_failure("eval-reward"))?;
    let kind = cfg.env_kind()?;

    // Held-out success: a different env seed than the reference demo, and
    // recording stops at success so the curve ends at the goal.
    let holdout = record_demo(
        kind,
        cfg.holdout_seed(),
        RecordOptions { horizon: cfg.demo.horizon, stop_on_success: true },
    )
    .map_err(fail)?;
    if !holdout.success {
        return Err(BenchError::Stage {
            stage: "eval-reward",
            message: format!("held-out scripted demo (seed {}) did not succeed", cfg.holdout_seed()),
        });
    }
    let mut times = Vec::with_capacity(holdout.steps.len());
    let mut progress = Vec::with_capacity(holdout.steps.len());
    let mut success_rows = String::from("t,p,handcrafted,sparse\n");
    for (t, step) in holdout.steps.iter().enumerate() {
        let p = rm.progress(&step.obs).map_err(stage_failure("eval-reward"))?;
        times.push(t as f64);
        progress.push(p);
        success_rows.push_str(&format!(
            "{t},{p},{},{}\n",
            handcrafted_reward(&step.state),
            sparse_reward(&step.state)
        ));
    }
    std::fs::write(paths.rewards_success(), success_rows)?;

    // Scripted move-away from the same held-out initial state.
    let away = away_trajectory(kind, cfg.holdout_seed(), &rm).map_err(|e| match e {
        e @ BenchError::Stage { .. } => e,
        other => BenchError::Stage { stage: "eval-reward", message: other.to_string() },
    })?;
    let mut failure_rows = String::from("t,p,handcrafted,sparse\n");
    for (t, (p, hc, sp)) in away.iter().enumerate() {
        failure_rows.push_str(&format!("{t},{p},{hc},{sp}\n"));
    }
    std::fs::write(paths.rewards_failure(), failure_rows)?;

    Ok(EvalSummary {
        spearman: crate::metrics::spearman(&times, &progress),
        success_steps: holdout.steps.len(),
        p_first: progress[0],
        p_last: *progress.last().expect("non-empty demo"),
        away_p_first: away[0].0,
        away_p_last: away.last().expect("non-empty trajectory").0,
    })
}

/// Constant action that undoes the task: lifts the block up and away from
/// the slot, or turns the latch handle opposite to the opening direction.
fn away_action(kind: EnvKind) -> Action {
    match kind {
        EnvKind::BlockInsert => Action::new(0.5, 0.9, 0.0),
        EnvKind::LatchDoor => Action::new(0.0, 0.2, 0.9),
    }
}

/// (progress, handcrafted, sparse) per step along the move-away rollout,
/// including the initial state at t = 0.
fn away_trajectory(
    kind: EnvKind,
    seed: u64,
    rm: &RewardModel,
) -> Result<Vec<(f64, f64, f64)>, BenchError> {
    let fail = stage_failure("eval-reward");
    let mut state = EnvState::init(kind, seed);
    let mut window = WrenchWindow::new();
    let action = away_action(kind);
    let mut rows = Vec::with_capacity(AWAY_STEPS as usize + 1);
    let obs = sense(&state, &window);
    rows.push((rm.progress(&obs).map_err(fail)?, handcrafted_reward(&state), sparse_reward(&state)));
    for _ in 0..AWAY_STEPS {
        let (next, wrench) = step_env(&state, action, physim::DT).map_err(stage_failure("eval-reward"))?;
        state = next;
        window.push(wrench);
        let obs = sense(&state, &window);
        rows.push((
            rm.progress(&obs).map_err(stage_failure("eval-reward"))?,
            handcrafted_reward(&state),
            sparse_reward(&state),
        ));
    }
    Ok(rows)
}

/// One cell of the benchmark matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedRun {
    pub source: SourceKind,
    pub seed_label: u64,
    pub run_seed: u64,
}

/// The benchmark matrix in deterministic (source-major) order. Run seeds
/// depend only on the seed label, never the source, so every source faces
/// identical per-episode environment draws.
pub fn run_plan(cfg: &ExperimentConfig) -> Result<Vec<PlannedRun>, BenchError> {
    let sources = cfg.sources()?;
    let mut plan = Vec::with_capacity(sources.len() * cfg.rl.seeds.len());
    for source in sources {
        for &label in &cfg.rl.seeds {
            plan.push(PlannedRun { source, seed_label: label, run_seed: cfg.run_seed(label) });
        }
    }
    Ok(plan)
}

fn execute_run(cfg: &ExperimentConfig, rm: Option<&RewardModel>, planned: PlannedRun) -> RunRecord {
    let blank = |status: String| RunRecord {
        source: planned.source.label().to_owned(),
        seed: planned.seed_label,
        run_seed: planned.run_seed,
        records: Vec::new(),
        status,
    };
    let kind = match cfg.env_kind() {
        Ok(k) => k,
        Err(e) => return blank(format!("failed: {e}")),
    };
    let source = match (planned.source, rm) {
        (SourceKind::Dense, Some(rm)) => RewardSource::Dense(rm),
        (SourceKind::Dense, None) => {
            return blank("failed: dense source requested without a reward bundle".into())
        }
        (SourceKind::Handcrafted, _) => RewardSource::Handcrafted,
        (SourceKind::Sparse, _) => RewardSource::Sparse,
    };
    let run_cfg = RunConfig {
        kind,
        episodes: cfg.rl.episodes,
        rollout: cfg.rollout_options(),
        seed: planned.run_seed,
        hyper: cfg.sac_hyper(),
        buffer_capacity: cfg.rl.buffer_capacity,
    };
    match train_run(&source, &run_cfg) {
        Ok(log) => {
            let status = match &log.aborted {
                None => "ok".to_owned(),
                Some(a) => format!("aborted at episode {}: {}", a.episode, a.reason),
            };
            RunRecord {
                source: log.source,
                seed: planned.seed_label,
                run_seed: planned.run_seed,
                records: log.records,
                status,
            }
        }
        Err(e) => blank(format!("failed: {e}")),
    }
}

/// Trains one SAC agent per (source, seed) cell across a pool of `jobs`
/// worker threads. A failed run is recorded in its metrics row and the
/// remaining runs proceed. Results come back in plan order regardless of
/// scheduling, so downstream files are deterministic.
pub fn run_benchmark(
    cfg: &ExperimentConfig,
    rm: Option<&RewardModel>,
    jobs: usize,
) -> Result<RunMetrics, BenchError> {
    let plan = run_plan(cfg)?;
    let workers = jobs.max(1).min(plan.len());
    let slots: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; plan.len()]);
    let next: Mutex<usize> = Mutex::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = {
                    let mut cursor = next.lock().expect("queue lock");
                    if *cursor >= plan.len() {
                        break;
                    }
                    let i = *cursor;
                    *cursor += 1;
                    i
                };
                let record = execute_run(cfg, rm, plan[i]);
                slots.lock().expect("slot lock")[i] = Some(record);
            });
        }
    });
    let runs: Vec<RunRecord> = slots
        .into_inner()
        .expect("worker threads joined")
        .into_iter()
        .map(|r| r.expect("every planned run leaves a record"))
        .collect();
    Ok(RunMetrics::from_runs(runs))
}

/// Writes one run's log where the benchmark collector puts it (header-only
/// when the run recorded no episodes) and returns the path.
pub fn write_run_log(paths: &Paths, run: &RunRecord) -> Result<PathBuf, BenchError> {
    std::fs::create_dir_all(paths.out.join("runs"))?;
    let source = SourceKind::parse(&run.source)?;
    let path = paths.run_log(source, run.seed);
    let log = RunLog {
        source: run.source.clone(),
        seed: run.run_seed,
        records: run.records.clone(),
        aborted: None,
    };
    std::fs::write(&path, run_csv(&log))?;
    Ok(path)
}

/// Single collector for benchmark output: one log per planned run plus
/// `metrics.csv`.
pub fn write_benchmark(paths: &Paths, metrics: &RunMetrics) -> Result<(), BenchError> {
    for run in &metrics.runs {
        write_run_log(paths, run)?;
    }
    std::fs::write(paths.metrics(), metrics_csv(metrics))?;
    Ok(())
}

/// Runs the benchmark stage end to end: load bundle if any source needs it,
/// train everything, write logs and metrics.
pub fn stage_bench(cfg: &ExperimentConfig, paths: &Paths, jobs: usize) -> Result<RunMetrics, BenchError> {
    let needs_dense = cfg.sources()?.contains(&SourceKind::Dense);
    let rm = if needs_dense {
        Some(load_bundle(&paths.bundle()).map_err(stage_failure("bench"))?.0)
    } else {
        None
    };
    let metrics = run_benchmark(cfg, rm.as_ref(), jobs)?;
    write_benchmark(paths, &metrics)?;
    Ok(metrics)
}

/// Smoothed success-rate curves per source (mean/min/max over seeds),
/// written as `curves_<source>.csv`.
pub fn export_curves(cfg: &ExperimentConfig, paths: &Paths, metrics: &RunMetrics) -> Result<(), BenchError> {
    for source in cfg.sources()? {
        let curves: Vec<Vec<f64>> = metrics
            .runs
            .iter()
            .filter(|r| r.source == source.label() && !r.records.is_empty())
            .map(|r| smoothed_success(&r.records, SMOOTH_WINDOW))
            .collect();
        if curves.is_empty() {
            return Err(BenchError::Stage {
                stage: "export",
                message: format!("no completed runs for source '{}'", source.label()),
            });
        }
        std::fs::write(paths.curve(source), curve_csv(&curves))?;
    }
    Ok(())
}

/// Reloads the benchmark logs from disk into metrics, for the standalone
/// export subcommand. Seed labels are recovered from the file layout.
pub fn reload_metrics(cfg: &ExperimentConfig, paths: &Paths) -> Result<RunMetrics, BenchError> {
    let mut runs = Vec::new();
    for planned in run_plan(cfg)? {
        let path = paths.run_log(planned.source, planned.seed_label);
        let (source, run_seed, records) = run_log_from_path(&path)?;
        // Header-only logs (a run that failed before its first episode)
        // carry no identity in their rows; take it from the plan.
        let empty = records.is_empty();
        runs.push(RunRecord {
            source: if empty { planned.source.label().to_owned() } else { source },
            seed: planned.seed_label,
            run_seed: if empty { planned.run_seed } else { run_seed },
            records,
            status: if empty { "no recorded episodes".to_owned() } else { "ok".to_owned() },
        });
    }
    Ok(RunMetrics::from_runs(runs))
}

// ---------------------------------------------------------------------------
// Provenance-controlled pipeline.

fn config_input(fingerprint: String) -> (String, String) {
    ("config".to_owned(), sha256_hex(fingerprint.as_bytes()))
}

fn file_input(root: &Path, path: &Path) -> Result<(String, String), BenchError> {
    Ok((artifact_key(root, path), sha256_file(path)?))
}

fn demo_fingerprint(cfg: &ExperimentConfig) -> String {
    format!(
        "env={} seed={} horizon={} stop_on_success={}",
        cfg.experiment.env,
        cfg.demo_seed(),
        cfg.demo.horizon,
        cfg.demo.stop_on_success
    )
}

fn sample_fingerprint(cfg: &ExperimentConfig) -> String {
    let s = cfg.sampling_config();
    format!(
        "interval={} branches={} steps={} seed={} theta_min={} theta_max={}",
        s.interval, s.branches, s.steps, s.seed, cfg.sampling.theta_min, cfg.sampling.theta_max
    )
}

fn train_fingerprint(cfg: &ExperimentConfig) -> String {
    let t = cfg.train_config();
    format!(
        "arch={:?} iterations={} batch={} lr={} lambda={} seed={} checkpoint_every={}",
        ArchConfig::default(),
        t.iterations,
        t.batch,
        t.lr,
        t.lambda,
        t.seed,
        t.checkpoint_every
    )
}

fn bundle_fingerprint(cfg: &ExperimentConfig) -> String {
    format!(
        "distance={} mode={} goal_frames={}",
        cfg.reward.distance, cfg.reward.mode, cfg.reward.goal_frames
    )
}

fn eval_fingerprint(cfg: &ExperimentConfig) -> String {
    format!(
        "holdout_seed={} away_steps={} horizon={}",
        cfg.holdout_seed(),
        AWAY_STEPS,
        cfg.demo.horizon
    )
}

fn bench_fingerprint(cfg: &ExperimentConfig) -> String {
    let h = cfg.sac_hyper();
    let r = cfg.rollout_options();
    format!(
        "episodes={} horizon={} repeat={} gamma={} tau={} alpha={} lr={} batch={} warmup={} \
         updates={} capacity={} sources={:?} seeds={:?} run_seeds={:?}",
        cfg.rl.episodes,
        r.horizon,
        r.action_repeat,
        h.gamma,
        h.tau,
        h.alpha,
        h.lr,
        h.batch,
        h.warmup,
        h.updates_per_step,
        cfg.rl.buffer_capacity,
        cfg.rl.sources,
        cfg.rl.seeds,
        cfg.rl.seeds.iter().map(|&l| cfg.run_seed(l)).collect::<Vec<_>>()
    )
}

fn export_fingerprint() -> String {
    format!("smooth_window={SMOOTH_WINDOW}")
}

/// Runs every stage in order under provenance control and reports, per
/// stage, whether it executed or was skipped on a hash match. Any failure
/// halts the pipeline at that stage; earlier artifacts stay on disk.
pub fn run_pipeline(
    cfg: &ExperimentConfig,
    paths: &Paths,
    jobs: usize,
) -> Result<Vec<(&'static str, StageStatus)>, BenchError> {
    cfg.validate()?;
    std::fs::create_dir_all(&paths.out)?;
    let manifest_path = paths.manifest();
    let root = paths.out.clone();
    let mut manifest = Manifest::load(&manifest_path)?;
    let mut statuses = Vec::new();

    let status = ensure_stage(
        &mut manifest,
        &manifest_path,
        &root,
        "demo",
        BTreeMap::from([config_input(demo_fingerprint(cfg))]),
        &[paths.demo()],
        || stage_demo(cfg, paths).map(|_| ()),
    )?;
    statuses.push(("demo", status));

    let inputs = BTreeMap::from([
        config_input(sample_fingerprint(cfg)),
        file_input(&root, &paths.demo())?,
    ]);
    let status = ensure_stage(&mut manifest, &manifest_path, &root, "sample", inputs, &[paths.pairs()], || {
        stage_sample(cfg, paths).map(|_| ())
    })?;
    statuses.push(("sample", status));

    let inputs = BTreeMap::from([
        config_input(train_fingerprint(cfg)),
        file_input(&root, &paths.pairs())?,
    ]);
    let status = ensure_stage(
        &mut manifest,
        &manifest_path,
        &root,
        "train-repr",
        inputs,
        &[paths.checkpoint(), paths.training_csv()],
        || stage_train(cfg, paths).map(|_| ()),
    )?;
    statuses.push(("train-repr", status));

    let inputs = BTreeMap::from([
        config_input(bundle_fingerprint(cfg)),
        file_input(&root, &paths.demo())?,
        file_input(&root, &paths.checkpoint())?,
    ]);
    let status = ensure_stage(
        &mut manifest,
        &manifest_path,
        &root,
        "bundle-reward",
        inputs,
        &[paths.bundle()],
        || stage_bundle(cfg, paths).map(|_| ()),
    )?;
    statuses.push(("bundle-reward", status));

    let inputs = BTreeMap::from([
        config_input(eval_fingerprint(cfg)),
        file_input(&root, &paths.bundle())?,
    ]);
    let status = ensure_stage(
        &mut manifest,
        &manifest_path,
        &root,
        "eval-reward",
        inputs,
        &[paths.rewards_success(), paths.rewards_failure()],
        || stage_eval(cfg, paths).map(|_| ()),
    )?;
    statuses.push(("eval-reward", status));

    let mut inputs = BTreeMap::from([config_input(bench_fingerprint(cfg))]);
    if cfg.sources()?.contains(&SourceKind::Dense) {
        let (key, hash) = file_input(&root, &paths.bundle())?;
        inputs.insert(key, hash);
    }
    let mut bench_outputs: Vec<PathBuf> =
        run_plan(cfg)?.iter().map(|p| paths.run_log(p.source, p.seed_label)).collect();
    bench_outputs.push(paths.metrics());
    let status = ensure_stage(&mut manifest, &manifest_path, &root, "bench", inputs, &bench_outputs, || {
        stage_bench(cfg, paths, jobs).map(|_| ())
    })?;
    statuses.push(("bench", status));

    let mut inputs = BTreeMap::from([config_input(export_fingerprint())]);
    for planned in run_plan(cfg)? {
        let (key, hash) = file_input(&root, &paths.run_log(planned.source, planned.seed_label))?;
        inputs.insert(key, hash);
    }
    let export_outputs: Vec<PathBuf> = cfg.sources()?.iter().map(|&s| paths.curve(s)).collect();
    let status = ensure_stage(&mut manifest, &manifest_path, &root, "export", inputs, &export_outputs, || {
        let metrics = reload_metrics(cfg, paths)?;
        export_curves(cfg, paths, &metrics)
    })?;
    statuses.push(("export", status));

    Ok(statuses)
}
