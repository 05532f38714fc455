//! Progress along a real demonstration after a short training run: the
//! learned signal should already rise from start to goal, with the endpoint
//! anchors holding exactly.

use std::f64::consts::PI;

use physim::{record_demo, EnvKind, RecordOptions};
use replearn::{ArchConfig, ReprModel, TrainConfig};
use rewardfn::{DistanceKind, RefMode, RewardModel, RewardMode};
use tvfs::{build_pair_dataset, SamplingConfig, VarianceSchedule};

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[test]
fn progress_rises_along_the_demonstration() {
    let demo = record_demo(EnvKind::BlockInsert, 0, RecordOptions::default()).unwrap();
    assert!(demo.success);
    let horizon = demo.horizon() as u32;
    let sched = VarianceSchedule::new(PI / 12.0, PI / 4.0, horizon).unwrap();
    let config = SamplingConfig { interval: horizon / 4, branches: 2, steps: 4, seed: 11 };
    let mut ds = build_pair_dataset(&demo, &config, &sched).unwrap();
    ds.records.truncate(100);

    let model = ReprModel::new(ArchConfig::default(), 1).unwrap();
    let tc = TrainConfig {
        iterations: 250,
        batch: 16,
        lr: 1e-3,
        checkpoint_every: 100,
        ..TrainConfig::default()
    };
    let out = replearn::train(model, &ds, &tc).unwrap();
    assert!(out.abort.is_none());

    let rm = RewardModel::from_demo(
        out.model,
        &demo,
        RefMode::Endpoints,
        DistanceKind::Euclidean,
        RewardMode::Progress,
    )
    .unwrap();

    let p: Vec<f64> = demo.steps.iter().map(|s| rm.progress(&s.obs).unwrap()).collect();

    // Anchors are exact by construction, trained or not.
    assert_eq!(p[0], 0.0);
    assert_eq!(*p.last().unwrap(), 1.0);
    assert!(p.iter().all(|v| v.is_finite()));

    // Directional trend: the final quarter of the trajectory scores clearly
    // above the first quarter.
    let q = p.len() / 4;
    let early = mean(&p[..q]);
    let late = mean(&p[p.len() - q..]);
    assert!(
        late > early + 0.2,
        "progress did not rise along the demo: early {early:.3}, late {late:.3}"
    );
}
