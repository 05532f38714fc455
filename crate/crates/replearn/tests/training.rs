//! Training-curve behavior on a real sampled dataset: reconstruction improves
//! and the temporal consistency term ends below its value at initialization.

use std::f64::consts::PI;

use physim::{record_demo, EnvKind, RecordOptions};
use replearn::{hybrid_loss, ArchConfig, ReprModel, Sample, TrainConfig};
use tvfs::{build_pair_dataset, PairDataset, SamplingConfig, Source, VarianceSchedule};

fn hundred_pair_dataset() -> PairDataset {
    let demo = record_demo(EnvKind::BlockInsert, 0, RecordOptions::default()).unwrap();
    let horizon = demo.horizon() as u32;
    let sched = VarianceSchedule::new(PI / 12.0, PI / 4.0, horizon).unwrap();
    let config =
        SamplingConfig { interval: horizon / 4, branches: 2, steps: 4, seed: 11 };
    let mut ds = build_pair_dataset(&demo, &config, &sched).unwrap();
    assert!(ds.records.len() >= 100, "demo too short: {} pairs", ds.records.len());
    ds.records.truncate(100);
    ds
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean temporal term over the demonstration-sourced pairs.
fn demo_temporal_loss(model: &ReprModel, ds: &PairDataset, lambda: f64) -> f64 {
    let cfg = model.config();
    let losses: Vec<f64> = ds
        .records
        .iter()
        .filter(|r| r.source == Source::Demo)
        .take(40)
        .map(|r| {
            let s_t = Sample::from_obs(cfg, &r.obs).unwrap();
            let s_next = Sample::from_obs(cfg, &r.obs_next).unwrap();
            hybrid_loss(model, &s_t, &s_next, lambda).unwrap().l_temporal
        })
        .collect();
    assert!(!losses.is_empty());
    mean(&losses)
}

#[test]
fn training_improves_reconstruction_and_temporal_consistency() {
    let ds = hundred_pair_dataset();
    let model = ReprModel::new(ArchConfig::default(), 1).unwrap();
    let tc = TrainConfig {
        iterations: 250,
        batch: 16,
        lr: 1e-3,
        checkpoint_every: 100,
        ..TrainConfig::default()
    };

    let temporal_before = demo_temporal_loss(&model, &ds, tc.lambda);
    let out = replearn::train(model, &ds, &tc).unwrap();
    assert!(out.abort.is_none(), "training aborted: {:?}", out.abort);
    assert_eq!(out.history.len(), 250);

    // Smoothed trend: the mean over the first iterations must sit above the
    // mean over the last ones, for the combined loss and for reconstruction
    // alone.
    let window = 25;
    let l: Vec<f64> = out.history.iter().map(|r| r.loss.l).collect();
    let recon: Vec<f64> = out.history.iter().map(|r| r.loss.l_recon).collect();
    assert!(
        mean(&l[250 - window..]) < mean(&l[..window]),
        "combined loss did not fall: {} -> {}",
        mean(&l[..window]),
        mean(&l[250 - window..])
    );
    assert!(
        mean(&recon[250 - window..]) < mean(&recon[..window]),
        "reconstruction did not improve: {} -> {}",
        mean(&recon[..window]),
        mean(&recon[250 - window..])
    );

    let temporal_after = demo_temporal_loss(&out.model, &ds, tc.lambda);
    assert!(
        temporal_after < temporal_before,
        "temporal term did not improve: {temporal_before} -> {temporal_after}"
    );

    // Unit displacements stay unit through training.
    for r in ds.records.iter().step_by(17) {
        let dh = out.model.encode_dynamic(&r.obs).unwrap();
        let norm: f64 = dh.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-6);
    }
}
