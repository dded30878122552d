//! Reward-stream equivalence between the cross-product machine and the
//! history-latch baselines on random action sequences.

use std::sync::Arc;

use gaitrm::env::{ContactObservation, ToyEnvConfig, ToyQuadruped};
use gaitrm::product::{GaitEnv, MilestoneLatch, WrapperKind};
use gaitrm::rm::RmStateId;
use gaitrm::{build_gait_rm, Action, Gait, RewardParams};
use proptest::prelude::*;

fn wrapped(kind: WrapperKind, gait: Gait) -> GaitEnv<ToyQuadruped> {
    let rm = Arc::new(build_gait_rm(gait, RewardParams::default()));
    let toy = ToyQuadruped::new(ToyEnvConfig::default()).unwrap();
    GaitEnv::new(kind, toy, Some(rm), RewardParams::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn wrappers_agree_on_rewards(
        gait in prop::sample::select(Gait::ALL.to_vec()),
        actions in prop::collection::vec(0u8..16, 1..120),
    ) {
        let mut envs: Vec<_> = WrapperKind::ALL.iter().map(|k| wrapped(*k, gait)).collect();
        for e in &mut envs {
            e.reset(0);
        }
        for &a in &actions {
            let action = Action::from_code(a).unwrap();
            let steps: Vec<_> = envs.iter_mut().map(|e| e.step(action).unwrap()).collect();
            let cross = &steps[0];
            for (kind, (s, env)) in WrapperKind::ALL.iter().zip(steps.iter().zip(&envs)) {
                prop_assert_eq!(s.done, cross.done);
                match kind {
                    WrapperKind::NoGait => {}
                    _ => prop_assert_eq!(s.reward.to_bits(), cross.reward.to_bits(), "{}", kind),
                }
                let width = s.obs.features().len();
                let expected = match kind {
                    WrapperKind::Gait3T => 3 * ContactObservation::SIZE,
                    WrapperKind::GaitAugmented => ContactObservation::SIZE + 4,
                    WrapperKind::CrossProduct => ContactObservation::SIZE + 1,
                    _ => ContactObservation::SIZE,
                };
                prop_assert_eq!(width, expected);
                if *kind == WrapperKind::GaitNaive {
                    let q1 = envs[0].rm_state() == RmStateId(1);
                    prop_assert_eq!(env.latch() == MilestoneLatch::PoseA, q1);
                }
            }
            if cross.done {
                break;
            }
        }
    }
}
