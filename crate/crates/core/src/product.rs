//! Cross-product environments and the baseline wrappers.
//!
//! [`GaitEnv`] wraps a base [`Environment`] in one of five ways. The
//! cross-product wrapper runs the reward machine alongside the environment and
//! exposes its state in the observation, which makes the gait reward
//! Markovian. The naive, stacked and augmented baselines pay the same rewards
//! through a history latch ([`oracle_reward_step`]) but never reveal it, so
//! their observation process is non-Markovian. The no-gait baseline pays the
//! walk reward only.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{self, Action, ContactObservation, EnvError, Environment, StepInfo};
use crate::props::{Guard, LabelSet};
use crate::rm::{compute_reward, RewardMachine, RewardParams, RewardSpec, RmError, RmStateId, ValidationReport};

#[derive(Debug, Error)]
pub enum ProductError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Rm(#[from] RmError),
    #[error("reward machine is not valid:\n{0}")]
    InvalidMachine(ValidationReport),
    #[error("reward machine is not a two-state gait cycle: {0}")]
    NotGaitShaped(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WrapperKind {
    #[serde(rename = "cross_product")]
    CrossProduct,
    #[serde(rename = "no_gait")]
    NoGait,
    #[serde(rename = "naive")]
    GaitNaive,
    #[serde(rename = "stack3")]
    Gait3T,
    #[serde(rename = "augmented")]
    GaitAugmented,
}

impl WrapperKind {
    pub const ALL: [WrapperKind; 5] = [
        WrapperKind::CrossProduct,
        WrapperKind::NoGait,
        WrapperKind::GaitNaive,
        WrapperKind::Gait3T,
        WrapperKind::GaitAugmented,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WrapperKind::CrossProduct => "cross_product",
            WrapperKind::NoGait => "no_gait",
            WrapperKind::GaitNaive => "naive",
            WrapperKind::Gait3T => "stack3",
            WrapperKind::GaitAugmented => "augmented",
        }
    }

    pub fn needs_gait(self) -> bool {
        self != WrapperKind::NoGait
    }
}

impl fmt::Display for WrapperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WrapperKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WrapperKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown wrapper {s:?} (expected cross_product, no_gait, naive, stack3 or augmented)"))
    }
}

/// Most recent milestone pose seen, the history the non-Markovian reward depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MilestoneLatch {
    #[default]
    None,
    PoseA,
    PoseB,
}

/// Pose guards and bonus specs pulled out of a two-state gait machine.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitPoses {
    pub pose_a: Guard,
    pub bonus_a: RewardSpec,
    pub pose_b: Guard,
    pub bonus_b: RewardSpec,
}

impl GaitPoses {
    /// Requires a valid machine with two states where each state has one
    /// bonus edge to the other state and walk self-loops otherwise.
    pub fn from_rm(rm: &RewardMachine) -> Result<GaitPoses, ProductError> {
        let report = rm.validate();
        if !report.is_valid() {
            return Err(ProductError::InvalidMachine(report));
        }
        if rm.state_count() != 2 {
            return Err(ProductError::NotGaitShaped(format!("{} states", rm.state_count())));
        }
        let q0 = rm.initial();
        let q1 = RmStateId(1 - q0.0);
        let edge = |from: RmStateId, to: RmStateId| -> Result<(Guard, RewardSpec), ProductError> {
            let mut crossing = rm.outgoing(from).filter(|t| t.to == to);
            let t = crossing.next().ok_or_else(|| {
                ProductError::NotGaitShaped(format!("no edge {} -> {}", rm.state_name(from), rm.state_name(to)))
            })?;
            if crossing.next().is_some() {
                return Err(ProductError::NotGaitShaped(format!(
                    "several edges {} -> {}",
                    rm.state_name(from),
                    rm.state_name(to)
                )));
            }
            if !matches!(t.reward, RewardSpec::SwitchPoseBonus { .. }) {
                return Err(ProductError::NotGaitShaped("pose edge without switch-pose bonus".into()));
            }
            if rm.outgoing(from).any(|s| s.to == from && s.reward != RewardSpec::Walk) {
                return Err(ProductError::NotGaitShaped("self-loop without walk reward".into()));
            }
            Ok((t.guard.clone(), t.reward))
        };
        let (pose_a, bonus_a) = edge(q0, q1)?;
        let (pose_b, bonus_b) = edge(q1, q0)?;
        Ok(GaitPoses {
            pose_a,
            bonus_a,
            pose_b,
            bonus_b,
        })
    }
}

/// History-based reward: a bonus for reaching pose A unless pose A is already
/// the latest milestone, and for reaching pose B only right after pose A.
/// Every other step earns the walk reward.
pub fn oracle_reward_step(
    latch: MilestoneLatch,
    labels: LabelSet,
    info: &StepInfo,
    poses: &GaitPoses,
    params: &RewardParams,
) -> (f64, MilestoneLatch) {
    use MilestoneLatch as M;
    if poses.pose_a.eval(labels) && matches!(latch, M::None | M::PoseB) {
        (compute_reward(&poses.bonus_a, info, params), M::PoseA)
    } else if poses.pose_b.eval(labels) && latch == M::PoseA {
        (compute_reward(&poses.bonus_b, info, params), M::PoseB)
    } else {
        (compute_reward(&RewardSpec::Walk, info, params), latch)
    }
}

/// Observation emitted by a [`GaitEnv`]; the variant follows the wrapper kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Plain(ContactObservation),
    CrossProduct {
        base: ContactObservation,
        rm_state: RmStateId,
    },
    /// Oldest first.
    Stacked([ContactObservation; 3]),
    Augmented {
        base: ContactObservation,
        labels: LabelSet,
    },
}

impl Observation {
    /// The most recent base observation.
    pub fn current(&self) -> &ContactObservation {
        match self {
            Observation::Plain(b) => b,
            Observation::CrossProduct { base, .. } | Observation::Augmented { base, .. } => base,
            Observation::Stacked(s) => &s[2],
        }
    }

    /// Flat feature vector: base features, then stacked frames, RM state
    /// index or label bits depending on the variant.
    pub fn features(&self) -> Vec<f64> {
        match self {
            Observation::Plain(b) => b.features().to_vec(),
            Observation::CrossProduct { base, rm_state } => {
                let mut v = base.features().to_vec();
                v.push(rm_state.0 as f64);
                v
            }
            Observation::Stacked(s) => s.iter().flat_map(|b| b.features()).collect(),
            Observation::Augmented { base, labels } => {
                let mut v = base.features().to_vec();
                v.extend(crate::props::Prop::ALL.map(|p| if labels.contains(p) { 1.0 } else { 0.0 }));
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrappedStep {
    pub obs: Observation,
    pub reward: f64,
    pub info: StepInfo,
    pub labels: LabelSet,
    /// Episode ended by the environment's termination or an accepting RM state.
    pub terminal: bool,
    /// `terminal` or truncated.
    pub done: bool,
}

/// Passive reward-machine runner used to score gait adherence independently
/// of whatever the policy observes.
#[derive(Debug, Clone)]
pub struct RmTracker {
    rm: Arc<RewardMachine>,
    state: RmStateId,
    transitions: u32,
}

impl RmTracker {
    pub fn new(rm: Arc<RewardMachine>) -> RmTracker {
        let state = rm.initial();
        RmTracker {
            rm,
            state,
            transitions: 0,
        }
    }

    pub fn reset(&mut self) {
        self.state = self.rm.initial();
        self.transitions = 0;
    }

    /// Advances on `labels`; returns whether the machine changed state.
    pub fn observe(&mut self, labels: LabelSet) -> Result<bool, RmError> {
        let (next, _) = self.rm.step(self.state, labels)?;
        let changed = next != self.state;
        self.state = next;
        self.transitions += u32::from(changed);
        Ok(changed)
    }

    pub fn state(&self) -> RmStateId {
        self.state
    }

    pub fn transitions(&self) -> u32 {
        self.transitions
    }

    pub fn machine(&self) -> &RewardMachine {
        &self.rm
    }
}

#[derive(Debug, Clone)]
pub struct GaitEnv<E> {
    kind: WrapperKind,
    env: E,
    rm: Option<Arc<RewardMachine>>,
    poses: Option<GaitPoses>,
    params: RewardParams,
    rm_state: RmStateId,
    latch: MilestoneLatch,
    frames: [ContactObservation; 3],
    labels: LabelSet,
}

fn blank_frame() -> ContactObservation {
    ContactObservation {
        airborne: LabelSet::EMPTY,
        foot_heights: [0.0; 4],
        last_delta_x: 0.0,
    }
}

impl<E: Environment> GaitEnv<E> {
    fn build(
        kind: WrapperKind,
        env: E,
        rm: Option<Arc<RewardMachine>>,
        poses: Option<GaitPoses>,
        params: RewardParams,
    ) -> GaitEnv<E> {
        let rm_state = rm.as_ref().map_or(RmStateId(0), |m| m.initial());
        GaitEnv {
            kind,
            env,
            rm,
            poses,
            params,
            rm_state,
            latch: MilestoneLatch::None,
            frames: [blank_frame(); 3],
            labels: LabelSet::EMPTY,
        }
    }

    /// Wraps `env` with `kind`. `rm` is required for every kind except
    /// [`WrapperKind::NoGait`], where it is ignored.
    pub fn new(
        kind: WrapperKind,
        env: E,
        rm: Option<Arc<RewardMachine>>,
        params: RewardParams,
    ) -> Result<GaitEnv<E>, ProductError> {
        match kind {
            WrapperKind::NoGait => Ok(wrap_nogait(env, params)),
            WrapperKind::CrossProduct => wrap_cross_product(env, require(rm)?, params),
            WrapperKind::GaitNaive => wrap_naive(env, require(rm)?, params),
            WrapperKind::Gait3T => wrap_stack3(env, require(rm)?, params),
            WrapperKind::GaitAugmented => wrap_augmented(env, require(rm)?, params),
        }
    }

    pub fn kind(&self) -> WrapperKind {
        self.kind
    }

    pub fn base(&self) -> &E {
        &self.env
    }

    pub fn machine(&self) -> Option<&Arc<RewardMachine>> {
        self.rm.as_ref()
    }

    /// Internal automaton state (meaningful for the cross-product wrapper).
    pub fn rm_state(&self) -> RmStateId {
        self.rm_state
    }

    /// Internal history latch (meaningful for the latch-based baselines).
    pub fn latch(&self) -> MilestoneLatch {
        self.latch
    }

    /// Labels of the most recent step (empty after reset).
    pub fn labels(&self) -> LabelSet {
        self.labels
    }

    fn emit(&self, base: ContactObservation) -> Observation {
        match self.kind {
            WrapperKind::NoGait | WrapperKind::GaitNaive => Observation::Plain(base),
            WrapperKind::CrossProduct => Observation::CrossProduct {
                base,
                rm_state: self.rm_state,
            },
            WrapperKind::Gait3T => Observation::Stacked(self.frames),
            WrapperKind::GaitAugmented => Observation::Augmented {
                base,
                labels: self.labels,
            },
        }
    }

    pub fn reset(&mut self, seed: u64) -> Observation {
        let base = self.env.reset(seed);
        if let Some(rm) = &self.rm {
            self.rm_state = rm.initial();
        }
        self.latch = MilestoneLatch::None;
        self.frames = [base; 3];
        self.labels = env::label(&base.foot_heights, self.env.clearance());
        self.emit(base)
    }

    pub fn step(&mut self, action: Action) -> Result<WrappedStep, ProductError> {
        let (base, info) = self.env.step(action)?;
        let labels = env::label(&info.foot_heights, self.env.clearance());
        self.labels = labels;
        let mut terminal = info.terminated;
        let reward = match self.kind {
            WrapperKind::NoGait => compute_reward(&RewardSpec::Walk, &info, &self.params),
            WrapperKind::CrossProduct => {
                let rm = self.rm.as_ref().expect("cross-product wrapper holds a machine");
                let (next, spec) = rm.step(self.rm_state, labels)?;
                self.rm_state = next;
                terminal |= rm.is_accepting(next);
                compute_reward(&spec, &info, &self.params)
            }
            WrapperKind::GaitNaive | WrapperKind::Gait3T | WrapperKind::GaitAugmented => {
                let poses = self.poses.as_ref().expect("baseline wrapper holds gait poses");
                let (r, latch) = oracle_reward_step(self.latch, labels, &info, poses, &self.params);
                self.latch = latch;
                r
            }
        };
        self.frames = [self.frames[1], self.frames[2], base];
        let done = terminal || info.truncated;
        Ok(WrappedStep {
            obs: self.emit(base),
            reward,
            info,
            labels,
            terminal,
            done,
        })
    }
}

fn require(rm: Option<Arc<RewardMachine>>) -> Result<Arc<RewardMachine>, ProductError> {
    rm.ok_or_else(|| ProductError::NotGaitShaped("this wrapper needs a reward machine".into()))
}

/// Cross-product MDP over (environment state, RM state).
pub fn wrap_cross_product<E: Environment>(
    env: E,
    rm: Arc<RewardMachine>,
    params: RewardParams,
) -> Result<GaitEnv<E>, ProductError> {
    let report = rm.validate();
    if !report.is_valid() {
        return Err(ProductError::InvalidMachine(report));
    }
    Ok(GaitEnv::build(WrapperKind::CrossProduct, env, Some(rm), None, params))
}

/// Base observation only, latch-based gait reward.
pub fn wrap_naive<E: Environment>(
    env: E,
    rm: Arc<RewardMachine>,
    params: RewardParams,
) -> Result<GaitEnv<E>, ProductError> {
    let poses = GaitPoses::from_rm(&rm)?;
    Ok(GaitEnv::build(WrapperKind::GaitNaive, env, Some(rm), Some(poses), params))
}

/// Last three base observations, padded with the reset observation.
pub fn wrap_stack3<E: Environment>(
    env: E,
    rm: Arc<RewardMachine>,
    params: RewardParams,
) -> Result<GaitEnv<E>, ProductError> {
    let poses = GaitPoses::from_rm(&rm)?;
    Ok(GaitEnv::build(WrapperKind::Gait3T, env, Some(rm), Some(poses), params))
}

/// Base observation plus the four label bits. In the toy environment the bits
/// repeat the airborne pattern already in the base observation.
pub fn wrap_augmented<E: Environment>(
    env: E,
    rm: Arc<RewardMachine>,
    params: RewardParams,
) -> Result<GaitEnv<E>, ProductError> {
    let poses = GaitPoses::from_rm(&rm)?;
    Ok(GaitEnv::build(WrapperKind::GaitAugmented, env, Some(rm), Some(poses), params))
}

/// Walk reward on the base observation, no machine.
pub fn wrap_nogait<E: Environment>(env: E, params: RewardParams) -> GaitEnv<E> {
    GaitEnv::build(WrapperKind::NoGait, env, None, None, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ToyEnvConfig, ToyQuadruped};
    use crate::props::Prop::*;
    use crate::rm::{build_gait_rm, Gait};

    fn toy() -> ToyQuadruped {
        ToyQuadruped::new(ToyEnvConfig::default()).unwrap()
    }

    fn trot() -> Arc<RewardMachine> {
        Arc::new(build_gait_rm(Gait::Trot, RewardParams::default()))
    }

    fn act(p: &[crate::props::Prop]) -> Action {
        Action(LabelSet::from_props(p.iter().copied()))
    }

    #[test]
    fn cross_product_first_bonus() {
        let mut w = wrap_cross_product(toy(), trot(), RewardParams::default()).unwrap();
        let obs = w.reset(0);
        assert!(matches!(obs, Observation::CrossProduct { rm_state: RmStateId(0), .. }));
        let step = w.step(act(&[FL, BR])).unwrap();
        let expected = 10000.0 * 0.05f64.tanh();
        assert_eq!(step.reward, expected);
        assert!((step.reward - 499.583).abs() < 1e-3);
        assert!(matches!(step.obs, Observation::CrossProduct { rm_state: RmStateId(1), .. }));
    }

    #[test]
    fn cross_product_self_loop_pays_walk() {
        let mut w = wrap_cross_product(toy(), trot(), RewardParams::default()).unwrap();
        w.reset(0);
        let step = w.step(act(&[FL])).unwrap();
        assert_eq!(step.labels, LabelSet::from_props([FL]));
        assert_eq!(step.reward, 0.05 - 0.001 * 5.0);
        assert_eq!(w.rm_state(), RmStateId(0));
        let step = w.step(act(&[])).unwrap();
        assert_eq!(step.reward, 0.05);
    }

    #[test]
    fn naive_bonus_only_on_first_repeat() {
        let mut w = wrap_naive(toy(), trot(), RewardParams::default()).unwrap();
        let obs = w.reset(0);
        assert_eq!(w.latch(), MilestoneLatch::None);
        assert!(matches!(obs, Observation::Plain(_)));
        let first = w.step(act(&[FL, BR])).unwrap();
        assert!(first.reward > 400.0);
        w.step(act(&[])).unwrap();
        let again = w.step(act(&[FL, BR])).unwrap();
        assert!(again.reward < 1.0);
    }

    #[test]
    fn oracle_branches() {
        let poses = GaitPoses::from_rm(&trot()).unwrap();
        let p = RewardParams::default();
        let a = LabelSet::from_props([FL, BR]);
        let b = LabelSet::from_props([FR, BL]);
        let info = StepInfo::new(0.05, 10.0);
        let walk = 0.05 - 0.001 * 10.0;
        let bonus = 10000.0 * 0.05f64.tanh();
        assert_eq!(oracle_reward_step(MilestoneLatch::None, b, &info, &poses, &p), (walk, MilestoneLatch::None));
        assert_eq!(oracle_reward_step(MilestoneLatch::None, a, &info, &poses, &p), (bonus, MilestoneLatch::PoseA));
        assert_eq!(oracle_reward_step(MilestoneLatch::PoseA, a, &info, &poses, &p), (walk, MilestoneLatch::PoseA));
        assert_eq!(oracle_reward_step(MilestoneLatch::PoseA, b, &info, &poses, &p), (bonus, MilestoneLatch::PoseB));
        assert_eq!(oracle_reward_step(MilestoneLatch::PoseB, a, &info, &poses, &p), (bonus, MilestoneLatch::PoseA));
    }

    #[test]
    fn stack3_padding_and_order() {
        let mut w = wrap_stack3(toy(), trot(), RewardParams::default()).unwrap();
        let o0 = *w.reset(0).current();
        match w.reset(0) {
            Observation::Stacked(s) => assert_eq!(s, [o0; 3]),
            other => panic!("{other:?}"),
        }
        let o1 = *w.step(act(&[FL, BR])).unwrap().obs.current();
        let s2 = w.step(act(&[FR, BL])).unwrap().obs;
        let o2 = *s2.current();
        assert_eq!(s2, Observation::Stacked([o0, o1, o2]));
        assert_eq!(s2.features().len(), 3 * ContactObservation::SIZE);
    }

    #[test]
    fn augmented_appends_label_bits() {
        let mut w = wrap_augmented(toy(), trot(), RewardParams::default()).unwrap();
        let obs = w.reset(0);
        assert_eq!(&obs.features()[4..], &[0.0; 4]);
        let obs = w.step(act(&[FL, BR])).unwrap().obs;
        assert_eq!(&obs.features()[4..], &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(obs.features().len(), ContactObservation::SIZE + 4);
    }

    #[test]
    fn nogait_pays_walk() {
        let mut w = wrap_nogait(toy(), RewardParams::default());
        w.reset(0);
        let s = w.step(act(&[])).unwrap();
        assert_eq!(s.reward, 0.0);
        let s = w.step(act(&[FL, BR])).unwrap();
        assert_eq!(s.reward, 0.05 - 0.001 * 10.0);
    }

    #[test]
    fn nogait_returns_equal_for_trot_and_pace_cycles() {
        let run = |g: Gait| {
            let (a, b) = g.poses();
            let mut w = wrap_nogait(toy(), RewardParams::default());
            w.reset(0);
            (0..100).map(|t| w.step(Action(if t % 2 == 0 { a } else { b })).unwrap().reward).sum::<f64>()
        };
        assert_eq!(run(Gait::Trot), run(Gait::Pace));
        assert_eq!(run(Gait::Trot), run(Gait::Bound));
    }

    #[test]
    fn rejects_non_gait_machines() {
        let rm = crate::rm::RewardMachine::new(
            vec!["only".into()],
            RmStateId(0),
            Default::default(),
            vec![crate::rm::Transition {
                from: RmStateId(0),
                guard: "FL | !FL".parse().unwrap(),
                to: RmStateId(0),
                reward: RewardSpec::Walk,
            }],
            RewardParams::default(),
        )
        .unwrap();
        assert!(matches!(
            wrap_naive(toy(), Arc::new(rm), RewardParams::default()),
            Err(ProductError::NotGaitShaped(_))
        ));
    }

    #[test]
    fn wrapper_names_round_trip() {
        for k in WrapperKind::ALL {
            assert_eq!(k.name().parse::<WrapperKind>().unwrap(), k);
        }
        assert!("bogus".parse::<WrapperKind>().is_err());
    }
}
