use physim::{Demonstration, Observation};
use replearn::ReprModel;

use crate::distance::DistanceKind;
use crate::error::RewardfnError;

/// Reference embeddings closer than this are rejected: the progress ratio
/// would amplify encoder noise without bound.
pub const DENOM_EPS: f64 = 1e-6;

/// What `dense_reward` pays out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    /// The progress value of the post-action observation (default).
    Progress,
    /// The change in progress across the transition.
    Delta,
}

impl RewardMode {
    pub fn code(self) -> u8 {
        match self {
            RewardMode::Progress => 0,
            RewardMode::Delta => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<RewardMode> {
        match code {
            0 => Some(RewardMode::Progress),
            1 => Some(RewardMode::Delta),
            _ => None,
        }
    }
}

/// How the goal reference is taken from a demonstration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefMode {
    /// Single endpoint observations (default).
    Endpoints,
    /// Average the goal embedding over the final `frames` observations to
    /// smooth out settling wobble. The initial reference stays a single frame.
    AveragedGoal { frames: usize },
}

/// Reference embeddings from a successful demonstration: h0 from its first
/// observation, hg from its last (or an average over the final frames).
pub fn make_refs(
    model: &ReprModel,
    demo: &Demonstration,
    mode: RefMode,
) -> Result<(Vec<f64>, Vec<f64>), RewardfnError> {
    if !demo.success {
        return Err(RewardfnError::FailedDemo);
    }
    let h0 = model.encode_static(&demo.steps[0].obs)?;
    let hg = match mode {
        RefMode::Endpoints => {
            model.encode_static(&demo.steps.last().expect("demos are never empty").obs)?
        }
        RefMode::AveragedGoal { frames } => {
            if frames == 0 {
                return Err(RewardfnError::BadReference("averaging window must be >= 1".into()));
            }
            let take = frames.min(demo.steps.len());
            let tail = &demo.steps[demo.steps.len() - take..];
            let mut mean = vec![0.0; h0.len()];
            for step in tail {
                let h = model.encode_static(&step.obs)?;
                for (m, v) in mean.iter_mut().zip(&h) {
                    *m += v;
                }
            }
            for m in &mut mean {
                *m /= take as f64;
            }
            mean
        }
    };
    Ok((h0, hg))
}

/// A frozen representation model plus demonstration endpoints, evaluating
/// task progress p = 1 - d(h(s), hg) / d(h0, hg). Immutable after
/// construction, so rollout workers may share it freely.
pub struct RewardModel {
    model: ReprModel,
    h0: Vec<f64>,
    hg: Vec<f64>,
    kind: DistanceKind,
    mode: RewardMode,
    denom: f64,
}

impl RewardModel {
    /// Standard construction: references from a successful demonstration.
    pub fn from_demo(
        model: ReprModel,
        demo: &Demonstration,
        refs: RefMode,
        kind: DistanceKind,
        mode: RewardMode,
    ) -> Result<RewardModel, RewardfnError> {
        let (h0, hg) = make_refs(&model, demo, refs)?;
        RewardModel::from_embeddings(model, h0, hg, kind, mode)
    }

    /// Construction from explicit references; the entry point for loading
    /// bundles and for synthetic-embedding analysis.
    pub fn from_embeddings(
        model: ReprModel,
        h0: Vec<f64>,
        hg: Vec<f64>,
        kind: DistanceKind,
        mode: RewardMode,
    ) -> Result<RewardModel, RewardfnError> {
        let embed = model.config().embed;
        if h0.len() != embed || hg.len() != embed {
            return Err(RewardfnError::BadReference(format!(
                "references are {}/{}-dimensional, embedding width is {embed}",
                h0.len(),
                hg.len()
            )));
        }
        if !h0.iter().chain(&hg).all(|v| v.is_finite()) {
            return Err(RewardfnError::BadReference("non-finite reference value".into()));
        }
        let denom = kind.measure(&h0, &hg);
        if !(denom > DENOM_EPS) {
            return Err(RewardfnError::DegenerateReferences(denom));
        }
        Ok(RewardModel { model, h0, hg, kind, mode, denom })
    }

    /// Task progress of an observation: 0 at the initial reference, 1 at the
    /// goal, deliberately unclamped — negative values mean "farther from the
    /// goal than the start was".
    pub fn progress(&self, obs: &Observation) -> Result<f64, RewardfnError> {
        let h = self.model.encode_static(obs)?;
        self.progress_of_embedding(&h)
    }

    /// Progress of an embedding directly (synthetic points, invariance
    /// analysis).
    pub fn progress_of_embedding(&self, h: &[f64]) -> Result<f64, RewardfnError> {
        if h.len() != self.hg.len() {
            return Err(RewardfnError::BadReference(format!(
                "embedding is {}-dimensional, references are {}",
                h.len(),
                self.hg.len()
            )));
        }
        Ok(1.0 - self.kind.measure(h, &self.hg) / self.denom)
    }

    /// Reward for the transition that produced `next`. Progress mode reads
    /// only the post-action observation; delta mode pays the change.
    pub fn dense_reward(
        &self,
        prev: &Observation,
        next: &Observation,
    ) -> Result<f64, RewardfnError> {
        match self.mode {
            RewardMode::Progress => self.progress(next),
            RewardMode::Delta => Ok(self.progress(next)? - self.progress(prev)?),
        }
    }

    pub fn model(&self) -> &ReprModel {
        &self.model
    }

    pub fn references(&self) -> (&[f64], &[f64]) {
        (&self.h0, &self.hg)
    }

    pub fn denominator(&self) -> f64 {
        self.denom
    }

    pub fn distance(&self) -> DistanceKind {
        self.kind
    }

    pub fn mode(&self) -> RewardMode {
        self.mode
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use physim::{record_demo, EnvKind, RecordOptions};
    use replearn::ArchConfig;

    fn tiny() -> ArchConfig {
        ArchConfig {
            grid: 8,
            embed: 4,
            conv_channels: vec![2, 2],
            branch_out: 4,
            fusion_hidden: 8,
            causal_channels: vec![2, 2],
            causal_dilations: vec![1, 2],
            decoder_base: 4,
            ..ArchConfig::default()
        }
    }

    fn tiny_reward(h0: Vec<f64>, hg: Vec<f64>, mode: RewardMode) -> RewardModel {
        let model = ReprModel::new(tiny(), 1).unwrap();
        RewardModel::from_embeddings(model, h0, hg, DistanceKind::Euclidean, mode).unwrap()
    }

    fn demo() -> Demonstration {
        record_demo(EnvKind::BlockInsert, 0, RecordOptions::default()).unwrap()
    }

    #[test]
    fn endpoint_progress_is_exact() {
        let model = ReprModel::new(ArchConfig::default(), 3).unwrap();
        let demo = demo();
        let rm = RewardModel::from_demo(
            model,
            &demo,
            RefMode::Endpoints,
            DistanceKind::Euclidean,
            RewardMode::Progress,
        )
        .unwrap();
        assert_eq!(rm.progress(&demo.steps[0].obs).unwrap(), 0.0);
        assert_eq!(rm.progress(&demo.steps.last().unwrap().obs).unwrap(), 1.0);
        assert!(rm.denominator() > DENOM_EPS);
    }

    #[test]
    fn failed_demos_are_rejected() {
        // Five steps is far too short for the expert to finish the insertion.
        let short = record_demo(
            EnvKind::BlockInsert,
            0,
            RecordOptions { horizon: 5, stop_on_success: true },
        )
        .unwrap();
        assert!(!short.success);
        let model = ReprModel::new(ArchConfig::default(), 3).unwrap();
        assert!(matches!(
            make_refs(&model, &short, RefMode::Endpoints),
            Err(RewardfnError::FailedDemo)
        ));
    }

    #[test]
    fn references_are_deterministic() {
        let model = ReprModel::new(ArchConfig::default(), 5).unwrap();
        let demo = demo();
        let a = make_refs(&model, &demo, RefMode::Endpoints).unwrap();
        let b = make_refs(&model, &demo, RefMode::Endpoints).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn averaged_goal_mode_is_the_mean_of_the_tail() {
        let model = ReprModel::new(ArchConfig::default(), 5).unwrap();
        let demo = demo();
        let (_, hg) = make_refs(&model, &demo, RefMode::AveragedGoal { frames: 5 }).unwrap();
        let tail = &demo.steps[demo.steps.len() - 5..];
        let mut expected = vec![0.0; hg.len()];
        for step in tail {
            for (e, v) in expected.iter_mut().zip(model.encode_static(&step.obs).unwrap()) {
                *e += v;
            }
        }
        for e in &mut expected {
            *e /= 5.0;
        }
        assert_eq!(hg, expected);
        assert!(matches!(
            make_refs(&model, &demo, RefMode::AveragedGoal { frames: 0 }),
            Err(RewardfnError::BadReference(_))
        ));
    }

    #[test]
    fn synthetic_point_twice_as_far_scores_minus_one() {
        let h0 = vec![1.0, 2.0, -0.5, 3.0];
        let hg = vec![0.0, -1.0, 0.25, 1.0];
        let rm = tiny_reward(h0.clone(), hg.clone(), RewardMode::Progress);
        // hg + 2*(h0 - hg) doubles every component's offset from the goal.
        let far: Vec<f64> = h0.iter().zip(&hg).map(|(a, g)| g + 2.0 * (a - g)).collect();
        assert_eq!(rm.progress_of_embedding(&far).unwrap(), -1.0);
        assert_eq!(rm.progress_of_embedding(&h0).unwrap(), 0.0);
        assert_eq!(rm.progress_of_embedding(&hg).unwrap(), 1.0);
    }

    #[test]
    fn progress_is_translation_invariant_and_scale_covariant() {
        let h0 = vec![0.3, -1.2, 0.7, 2.0];
        let hg = vec![-0.4, 0.9, 1.5, -0.1];
        let h = vec![0.1, 0.2, -0.9, 1.1];
        let rm = tiny_reward(h0.clone(), hg.clone(), RewardMode::Progress);
        let p = rm.progress_of_embedding(&h).unwrap();

        let shift = [10.0, -3.5, 0.25, 100.0];
        let add = |v: &[f64]| v.iter().zip(&shift).map(|(a, s)| a + s).collect::<Vec<_>>();
        let shifted = tiny_reward(add(&h0), add(&hg), RewardMode::Progress);
        let p_shift = shifted.progress_of_embedding(&add(&h)).unwrap();
        assert!((p - p_shift).abs() <= 1e-10, "{p} vs {p_shift}");

        let c = 37.5;
        let scale = |v: &[f64]| v.iter().map(|a| a * c).collect::<Vec<_>>();
        let scaled = tiny_reward(scale(&h0), scale(&hg), RewardMode::Progress);
        let p_scale = scaled.progress_of_embedding(&scale(&h)).unwrap();
        assert!((p - p_scale).abs() <= 1e-10, "{p} vs {p_scale}");
    }

    #[test]
    fn degenerate_references_are_rejected() {
        let model = ReprModel::new(tiny(), 1).unwrap();
        let h = vec![1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            RewardModel::from_embeddings(
                model,
                h.clone(),
                h,
                DistanceKind::Euclidean,
                RewardMode::Progress
            ),
            Err(RewardfnError::DegenerateReferences(_))
        ));
        let model = ReprModel::new(tiny(), 1).unwrap();
        assert!(RewardModel::from_embeddings(
            model,
            vec![0.0; 4],
            vec![f64::NAN; 4],
            DistanceKind::Euclidean,
            RewardMode::Progress
        )
        .is_err());
    }

    #[test]
    fn reward_modes_pay_progress_or_its_change() {
        let model = ReprModel::new(ArchConfig::default(), 3).unwrap();
        let demo = demo();
        let rm = RewardModel::from_demo(
            model,
            &demo,
            RefMode::Endpoints,
            DistanceKind::Euclidean,
            RewardMode::Progress,
        )
        .unwrap();
        let first = &demo.steps[0].obs;
        let last = &demo.steps.last().unwrap().obs;
        // Progress mode ignores the pre-action observation.
        assert_eq!(rm.dense_reward(first, last).unwrap(), 1.0);
        assert_eq!(rm.dense_reward(last, last).unwrap(), 1.0);

        let model = ReprModel::new(ArchConfig::default(), 3).unwrap();
        let delta = RewardModel::from_demo(
            model,
            &demo,
            RefMode::Endpoints,
            DistanceKind::Euclidean,
            RewardMode::Delta,
        )
        .unwrap();
        // A transition that does not move the embedding pays zero.
        assert_eq!(delta.dense_reward(last, last).unwrap(), 0.0);
        assert_eq!(delta.dense_reward(first, last).unwrap(), 1.0);
    }
}
