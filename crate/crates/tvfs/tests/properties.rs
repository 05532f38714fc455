use proptest::prelude::*;
use tvfs::{build_pair_dataset, dataset_to_bytes, SamplingConfig, VarianceSchedule};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// θ(t) = θ(T−t), bit for bit, for arbitrary valid schedules.
    #[test]
    fn schedule_is_bitwise_symmetric(
        lo in 0.0f64..1.0,
        span in 0.0f64..2.0,
        t_len in 1u32..700,
    ) {
        let sched = VarianceSchedule::new(lo, lo + span, t_len).unwrap();
        for t in 0..=t_len {
            let a = sched.eval(t).unwrap().to_bits();
            let b = sched.eval(t_len - t).unwrap().to_bits();
            prop_assert_eq!(a, b, "t={}", t);
        }
    }

    /// The schedule never leaves [θ_min, θ_max].
    #[test]
    fn schedule_stays_in_band(
        lo in 0.0f64..1.5,
        span in 0.0f64..1.5,
        t_len in 1u32..700,
        t in 0u32..700,
    ) {
        let sched = VarianceSchedule::new(lo, lo + span, t_len).unwrap();
        let theta = sched.eval_clamped(t.min(t_len));
        prop_assert!(theta >= lo - 1e-12 && theta <= lo + span + 1e-12);
    }
}

#[test]
fn latch_dataset_serialization_is_deterministic() {
    // Same demo, same config: the serialized datasets are byte-identical.
    let demo = physim::record_demo(
        physim::EnvKind::LatchDoor,
        3,
        physim::RecordOptions { horizon: 30, stop_on_success: false },
    )
    .unwrap();
    let sched = VarianceSchedule::new(0.25, 0.8, 30).unwrap();
    let config = SamplingConfig { interval: 10, branches: 2, steps: 4, seed: 77 };
    let a = dataset_to_bytes(&build_pair_dataset(&demo, &config, &sched).unwrap());
    let b = dataset_to_bytes(&build_pair_dataset(&demo, &config, &sched).unwrap());
    assert_eq!(a, b);
}
