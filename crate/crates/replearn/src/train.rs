use std::fs;
use std::path::Path;

use gradnet::{Adam, AdamConfig, GradnetError, Graph};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvfs::PairDataset;

use crate::error::ReplearnError;
use crate::loss::{combine, pair_loss, LossBreakdown, PairLossNodes};
use crate::model::{Bind, ReprModel};
use crate::sample::Sample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Optimizer steps. Zero is a no-op that returns the model unchanged.
    pub iterations: u32,
    pub batch: usize,
    pub lr: f64,
    /// Weight of the temporal term in the combined objective.
    pub lambda: f64,
    /// Seeds the epoch shuffles; two runs with equal seeds and inputs produce
    /// bit-identical models.
    pub seed: u64,
    /// A rollback snapshot is taken every this many completed iterations
    /// (0 keeps only the pre-training snapshot). A non-finite loss or update
    /// aborts onto the latest snapshot instead of poisoning the result.
    pub checkpoint_every: u32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 5000,
            batch: 32,
            lr: 1e-4,
            lambda: 10.0,
            seed: 0,
            checkpoint_every: 500,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ReplearnError> {
        if self.batch == 0 {
            return Err(ReplearnError::BadTrain("batch size must be >= 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(ReplearnError::BadTrain(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(ReplearnError::BadTrain(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// One iteration's reported losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iteration: u32,
    pub loss: LossBreakdown,
}

/// Why training stopped before the configured iteration count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainAbort {
    /// Iteration whose forward pass or parameter update went non-finite.
    pub iteration: u32,
    /// Snapshot the returned model was rolled back to; `None` means the
    /// pre-training parameters.
    pub rolled_back_to: Option<u32>,
}

pub struct TrainOutcome {
    pub model: ReprModel,
    pub history: Vec<LossRecord>,
    pub abort: Option<TrainAbort>,
}

enum StepOutcome {
    Loss(LossBreakdown),
    /// The forward pass, backward sweep or updated parameters left the finite
    /// range; the iteration's work is discarded.
    NonFinite,
}

struct Shuffler {
    order: Vec<usize>,
    cursor: usize,
}

impl Shuffler {
    fn new(n: usize) -> Shuffler {
        // Cursor at the end forces a shuffle before the first draw.
        Shuffler { order: (0..n).collect(), cursor: n }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> usize {
        if self.cursor == self.order.len() {
            self.order.shuffle(rng);
            self.cursor = 0;
        }
        let idx = self.order[self.cursor];
        self.cursor += 1;
        idx
    }
}

fn run_iteration(
    model: &mut ReprModel,
    opt: &mut Adam,
    pairs: &[(Sample, Sample)],
    shuffler: &mut Shuffler,
    rng: &mut ChaCha8Rng,
    cfg: &TrainConfig,
) -> Result<StepOutcome, ReplearnError> {
    let mut g = Graph::new();
    let mut bind = Bind::new(model.params());
    let mut acc: Option<PairLossNodes> = None;
    let mut build = || -> Result<(gradnet::NodeId, LossBreakdown), ReplearnError> {
        for _ in 0..cfg.batch {
            let (s_t, s_next) = &pairs[shuffler.next(rng)];
            let terms = pair_loss(model, &mut g, &mut bind, s_t, s_next)?;
            acc = Some(match acc.take() {
                None => terms,
                Some(a) => PairLossNodes {
                    l_temporal: g.add(a.l_temporal, terms.l_temporal)?,
                    l_recon_t: g.add(a.l_recon_t, terms.l_recon_t)?,
                    l_recon_next: g.add(a.l_recon_next, terms.l_recon_next)?,
                },
            });
        }
        let sums = acc.take().expect("batch >= 1");
        let inv = 1.0 / cfg.batch as f64;
        let means = PairLossNodes {
            l_temporal: g.scale(sums.l_temporal, inv)?,
            l_recon_t: g.scale(sums.l_recon_t, inv)?,
            l_recon_next: g.scale(sums.l_recon_next, inv)?,
        };
        combine(&mut g, &means, cfg.lambda)
    };
    let (l, breakdown) = match build() {
        Ok(out) => out,
        Err(e) if is_non_finite(&e) => return Ok(StepOutcome::NonFinite),
        Err(e) => return Err(e),
    };
    let grads = match g.backward(l, model.params().len()) {
        Ok(grads) => grads,
        Err(GradnetError::NonFinite { .. }) => return Ok(StepOutcome::NonFinite),
        Err(e) => return Err(e.into()),
    };
    opt.step(model.params_mut(), &grads)?;
    let exploded = (0..model.params().len()).any(|i| !model.params().by_id(i).all_finite());
    if exploded {
        return Ok(StepOutcome::NonFinite);
    }
    Ok(StepOutcome::Loss(breakdown))
}

/// Failures that abort onto the last snapshot rather than propagating: the
/// loss left the finite range, or an update drove the pre-normalization
/// dynamic vector into the degenerate-norm guard.
fn is_non_finite(err: &ReplearnError) -> bool {
    matches!(
        err,
        ReplearnError::Graph(GradnetError::NonFinite { .. })
            | ReplearnError::Graph(GradnetError::DegenerateNorm { .. })
    )
}

/// Train on pre-built sample pairs. Exposed so reduced-size variants (which
/// cannot come from simulator observations) run through the same loop.
pub fn train_on_samples(
    model: ReprModel,
    pairs: &[(Sample, Sample)],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, ReplearnError> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(ReplearnError::EmptyDataset);
    }
    let mut model = model;
    let mut opt = Adam::new(AdamConfig { lr: cfg.lr, ..AdamConfig::default() }, model.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut shuffler = Shuffler::new(pairs.len());
    let mut history = Vec::with_capacity(cfg.iterations as usize);
    let mut snapshot = model.to_bytes();
    let mut snapshot_iter: Option<u32> = None;
    let mut abort = None;

    for it in 0..cfg.iterations {
        match run_iteration(&mut model, &mut opt, pairs, &mut shuffler, &mut rng, cfg)? {
            StepOutcome::Loss(loss) => {
                history.push(LossRecord { iteration: it, loss });
                if cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0 {
                    snapshot = model.to_bytes();
                    snapshot_iter = Some(it);
                }
            }
            StepOutcome::NonFinite => {
                model = ReprModel::from_bytes(model.config().clone(), &snapshot)?;
                abort = Some(TrainAbort { iteration: it, rolled_back_to: snapshot_iter });
                break;
            }
        }
    }

    Ok(TrainOutcome { model, history, abort })
}

/// Train over a sampled pair dataset (the standard path: simulator-sized
/// observations, shuffled mini-batches).
pub fn train(
    model: ReprModel,
    dataset: &PairDataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, ReplearnError> {
    let arch = model.config().clone();
    let pairs = dataset
        .records
        .iter()
        .map(|r| Ok((Sample::from_obs(&arch, &r.obs)?, Sample::from_obs(&arch, &r.obs_next)?)))
        .collect::<Result<Vec<_>, ReplearnError>>()?;
    train_on_samples(model, &pairs, cfg)
}

/// Loss history as CSV: `iteration,l,l_recon,l_temporal`.
pub fn history_csv(history: &[LossRecord]) -> String {
    let mut out = String::from("iteration,l,l_recon,l_temporal\n");
    for r in history {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.iteration, r.loss.l, r.loss.l_recon, r.loss.l_temporal
        ));
    }
    out
}

pub fn save_history(path: &Path, history: &[LossRecord]) -> Result<(), ReplearnError> {
    Ok(fs::write(path, history_csv(history))?)
}
