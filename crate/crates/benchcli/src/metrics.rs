//! Aggregate statistics over benchmark runs, and the CSV schemas they are
//! stored in. Every aggregate is a pure function of the per-episode records,
//! so anything written to disk can be recomputed exactly from the raw logs.
//!
//! Schemas (all plain comma-joined, integers and `{}`-formatted floats, one
//! header line, `\n` endings — float formatting is Rust's shortest
//! round-trip form, so parsing a file back recovers the exact bits):
//!
//! - per-run log (written by the RL crate):
//!   `episode,return,success,length,reward_source,seed`
//! - `metrics.csv`: `source,seed,episodes,first_success,final20_rate,auc,status`
//!   with an empty `first_success` cell when the run never succeeded and
//!   `seed` being the config's seed label, not the effective run seed.
//! - curve files: `episode,mean,min,max` of the smoothed success rate
//!   across seeds.

use sacrl::EpisodeRecord;

use crate::error::BenchError;

/// Trailing window for success-rate smoothing.
pub const SMOOTH_WINDOW: usize = 20;

/// One finished (or failed) benchmark run. `seed` is the config's seed
/// label; `run_seed` is the effective seed actually driving the run
/// (global + label), which is what the per-run CSV records.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub source: String,
    pub seed: u64,
    pub run_seed: u64,
    pub records: Vec<EpisodeRecord>,
    /// "ok", or a short explanation when the run aborted or failed; the
    /// episodes recorded before the fault are kept either way.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub source: String,
    pub seed: u64,
    pub episodes: u32,
    /// Episode index of the first success, as logged; None = never.
    pub first_success: Option<u32>,
    /// Success rate over the final 20% of recorded episodes.
    pub final20: f64,
    /// Mean of the smoothed success-rate curve — the area under it,
    /// normalized by episode count so runs of different lengths compare.
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl RunMetrics {
    pub fn from_runs(runs: Vec<RunRecord>) -> RunMetrics {
        let aggregates = runs.iter().map(aggregate).collect();
        RunMetrics { runs, aggregates }
    }

    /// The stored aggregates re-derived from the raw records. Equal to
    /// `self.aggregates` by construction; tests and auditors rely on it.
    pub fn recomputed_aggregates(&self) -> Vec<Aggregate> {
        self.runs.iter().map(aggregate).collect()
    }
}

pub fn aggregate(run: &RunRecord) -> Aggregate {
    Aggregate {
        source: run.source.clone(),
        seed: run.seed,
        episodes: run.records.len() as u32,
        first_success: first_success(&run.records),
        final20: final_success_rate(&run.records),
        auc: auc(&run.records),
    }
}

pub fn first_success(records: &[EpisodeRecord]) -> Option<u32> {
    records.iter().find(|r| r.success).map(|r| r.episode)
}

/// Fraction of successes over the last ceil(n/5) episodes (0 for an empty
/// log).
pub fn final_success_rate(records: &[EpisodeRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let k = records.len().div_euclid(5) + usize::from(records.len() % 5 != 0);
    let tail = &records[records.len() - k..];
    tail.iter().filter(|r| r.success).count() as f64 / k as f64
}

/// Mean of the trailing-window smoothed curve; 0 for an empty log.
pub fn auc(records: &[EpisodeRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let curve = smoothed_success(records, SMOOTH_WINDOW);
    curve.iter().sum::<f64>() / curve.len() as f64
}

/// Success rate over a trailing window, truncated at the left edge: entry e
/// averages episodes max(0, e+1-window) ..= e, so early entries average
/// whatever prefix exists.
pub fn smoothed_success(records: &[EpisodeRecord], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be >= 1");
    let mut out = Vec::with_capacity(records.len());
    let mut successes_in_window = 0usize;
    for e in 0..records.len() {
        successes_in_window += usize::from(records[e].success);
        if e >= window {
            successes_in_window -= usize::from(records[e - window].success);
        }
        let width = (e + 1).min(window);
        out.push(successes_in_window as f64 / width as f64);
    }
    out
}

/// Tie-averaged ranks, 1-based: equal values share the mean of the rank
/// positions they occupy.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("ranks need finite values"));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = shared;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with tie-averaged ranks. None when either
/// input has no variance (the coefficient is undefined), lengths differ,
/// fewer than two points exist, or a value is non-finite.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if !xs.iter().chain(ys).all(|v| v.is_finite()) {
        return None;
    }
    pearson(&ranks(xs), &ranks(ys))
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    let denom = (va * vb).sqrt();
    if denom == 0.0 {
        None
    } else {
        Some(cov / denom)
    }
}

pub fn metrics_csv(m: &RunMetrics) -> String {
    let mut out = String::from("source,seed,episodes,first_success,final20_rate,auc,status\n");
    for (agg, run) in m.aggregates.iter().zip(&m.runs) {
        let first = agg.first_success.map(|e| e.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            agg.source, agg.seed, agg.episodes, first, agg.final20, agg.auc, run.status
        ));
    }
    out
}

/// Per-source curve across seeds: each row aggregates the smoothed success
/// rates of every seed curve long enough to have that episode.
pub fn curve_csv(curves: &[Vec<f64>]) -> String {
    let rows = curves.iter().map(|c| c.len()).max().unwrap_or(0);
    let mut out = String::from("episode,mean,min,max\n");
    for e in 0..rows {
        let vals: Vec<f64> = curves.iter().filter_map(|c| c.get(e).copied()).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.push_str(&format!("{e},{mean},{min},{max}\n"));
    }
    out
}

/// Parses a per-run log back into records. Returns (source, run seed,
/// records); the caller maps the run seed back to its label. A header-only
/// file (a run that failed before its first episode) parses to an empty
/// record list with blank identity.
pub fn run_log_from_csv(text: &str) -> Result<(String, u64, Vec<EpisodeRecord>), String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let expect = ["episode", "return", "success", "length", "reward_source", "seed"];
    let headers = reader.headers().map_err(|e| e.to_string())?;
    if headers.iter().ne(expect) {
        return Err(format!("unexpected run log header: {headers:?}"));
    }
    let mut source = String::new();
    let mut run_seed = 0u64;
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let field = |i: usize| row.get(i).ok_or_else(|| format!("row too short: {row:?}"));
        let episode: u32 = field(0)?.parse().map_err(|e| format!("bad episode: {e}"))?;
        let ret: f64 = field(1)?.parse().map_err(|e| format!("bad return: {e}"))?;
        let success = match field(2)? {
            "0" => false,
            "1" => true,
            other => return Err(format!("bad success flag '{other}'")),
        };
        let length: u32 = field(3)?.parse().map_err(|e| format!("bad length: {e}"))?;
        source = field(4)?.to_owned();
        run_seed = field(5)?.parse().map_err(|e| format!("bad seed: {e}"))?;
        records.push(EpisodeRecord { episode, ret, success, length });
    }
    Ok((source, run_seed, records))
}

/// Same, but from a file, with the path folded into the error.
pub fn run_log_from_path(path: &std::path::Path) -> Result<(String, u64, Vec<EpisodeRecord>), BenchError> {
    let text = std::fs::read_to_string(path)?;
    run_log_from_csv(&text).map_err(|msg| BenchError::Provenance {
        path: path.to_owned(),
        detail: format!("unreadable run log: {msg}"),
    })
}
