//! Tabular Q-learning over wrapped environments and the evaluation protocol.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Action, Environment, StepInfo};
use crate::product::{GaitEnv, Observation, ProductError, RmTracker, WrapperKind};
use crate::props::LabelSet;
use crate::rm::{Gait, RewardMachine, RmError, RmStateId};

pub type ActionValues = [f64; Action::COUNT];

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("observation does not belong to wrapper {0}")]
    UnknownWrapper(WrapperKind),
    #[error("invalid learner config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Rm(#[from] RmError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of `total_steps` over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    pub total_steps: u64,
    pub eval_every: u64,
    pub eval_episodes: u32,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            alpha: 0.1,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.5,
            total_steps: 200_000,
            eval_every: 5_000,
            eval_episodes: 10,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidConfig(m.to_owned()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.epsilon_start) || !unit.contains(&self.epsilon_end) {
            return bad("epsilon bounds must lie in [0, 1]");
        }
        if !unit.contains(&self.epsilon_decay_fraction) {
            return bad("epsilon_decay_fraction must lie in [0, 1]");
        }
        if self.eval_every == 0 || self.eval_episodes == 0 {
            return bad("eval_every and eval_episodes must be positive");
        }
        Ok(())
    }

    /// Exploration rate before taking step `step` (0-based).
    pub fn epsilon_at(&self, step: u64) -> f64 {
        let horizon = self.epsilon_decay_fraction * self.total_steps as f64;
        if horizon <= 0.0 || step as f64 >= horizon {
            return self.epsilon_end;
        }
        let frac = step as f64 / horizon;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Zero-initialized action values per observed key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QTable {
    values: BTreeMap<u32, ActionValues>,
}

impl QTable {
    pub fn new() -> QTable {
        QTable::default()
    }

    pub fn values(&self, key: u32) -> ActionValues {
        self.values.get(&key).copied().unwrap_or([0.0; Action::COUNT])
    }

    pub fn get(&self, key: u32, action: Action) -> f64 {
        self.values(key)[action.code() as usize]
    }

    pub fn set(&mut self, key: u32, action: Action, value: f64) {
        self.values.entry(key).or_insert([0.0; Action::COUNT])[action.code() as usize] = value;
    }

    pub fn max_value(&self, key: u32) -> f64 {
        self.values(key).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Highest-valued action; ties go to the lowest action code, so unseen
    /// keys map to action 0.
    pub fn greedy(&self, key: u32) -> Action {
        let vals = self.values(key);
        let mut best = 0;
        for (i, v) in vals.iter().enumerate().skip(1) {
            if *v > vals[best] {
                best = i;
            }
        }
        Action::from_code(best as u8).expect("16 actions")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = u32> + '_ {
        self.values.keys().copied()
    }
}

/// One-step Q-learning update; terminal transitions do not bootstrap.
pub fn q_update(
    q: &mut QTable,
    key: u32,
    action: Action,
    reward: f64,
    next_key: u32,
    done: bool,
    config: &LearnerConfig,
) {
    let target = if done {
        reward
    } else {
        reward + config.gamma * q.max_value(next_key)
    };
    let old = q.get(key, action);
    q.set(key, action, old + config.alpha * (target - old));
}

/// Number of distinct keys `discretize` can produce for `kind`.
pub fn key_space(kind: WrapperKind, rm_states: usize) -> u32 {
    match kind {
        WrapperKind::CrossProduct => 16 * rm_states as u32,
        WrapperKind::Gait3T => 16 * 16 * 16,
        WrapperKind::GaitAugmented => 16 * 16,
        WrapperKind::GaitNaive | WrapperKind::NoGait => 16,
    }
}

/// Injective table key for an observation emitted by a `kind` wrapper.
pub fn discretize(obs: &Observation, kind: WrapperKind) -> Result<u32, LearnError> {
    let code = |l: LabelSet| u32::from(l.bits());
    match (kind, obs) {
        (WrapperKind::GaitNaive | WrapperKind::NoGait, Observation::Plain(b)) => Ok(code(b.airborne)),
        (WrapperKind::CrossProduct, Observation::CrossProduct { base, rm_state }) => {
            Ok(code(base.airborne) + 16 * rm_state.0 as u32)
        }
        (WrapperKind::Gait3T, Observation::Stacked(frames)) => Ok(frames
            .iter()
            .rev()
            .fold(0, |acc, f| acc * 16 + code(f.airborne))),
        (WrapperKind::GaitAugmented, Observation::Augmented { base, labels }) => {
            Ok(code(base.airborne) + 16 * code(*labels))
        }
        _ => Err(LearnError::UnknownWrapper(kind)),
    }
}

pub trait Policy {
    fn act(&self, obs: &Observation) -> Result<Action, LearnError>;
}

/// Greedy policy over a Q-table.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    pub q: QTable,
    pub kind: WrapperKind,
}

impl Policy for GreedyPolicy {
    fn act(&self, obs: &Observation) -> Result<Action, LearnError> {
        Ok(self.q.greedy(discretize(obs, self.kind)?))
    }
}

/// Hand-coded gait: lift pose A unless pose A is currently up, then lift pose B.
#[derive(Debug, Clone, Copy)]
pub struct CyclePolicy {
    pub pose_a: LabelSet,
    pub pose_b: LabelSet,
}

impl CyclePolicy {
    pub fn for_gait(gait: Gait) -> CyclePolicy {
        let (pose_a, pose_b) = gait.poses();
        CyclePolicy { pose_a, pose_b }
    }
}

impl Policy for CyclePolicy {
    fn act(&self, obs: &Observation) -> Result<Action, LearnError> {
        let now = obs.current().airborne;
        Ok(Action(if now == self.pose_a { self.pose_b } else { self.pose_a }))
    }
}

/// Always issues the same command.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPolicy(pub Action);

impl Policy for ConstantPolicy {
    fn act(&self, _obs: &Observation) -> Result<Action, LearnError> {
        Ok(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub mean_return: f64,
    pub mean_pose_transitions: f64,
    pub mean_distance: f64,
    pub episodes: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStep {
    /// 1-based step index within the episode.
    pub step: u32,
    pub action: Action,
    pub labels: LabelSet,
    pub reward: f64,
    pub info: StepInfo,
    /// Tracker state after the step, when a tracker is attached.
    pub tracker_state: Option<RmStateId>,
    pub pose_transition: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub steps: Vec<RolloutStep>,
    pub total_return: f64,
    pub pose_transitions: u32,
    pub distance: f64,
}

/// Runs one greedy episode, at most `max_steps` long.
pub fn rollout<E: Environment, P: Policy + ?Sized>(
    policy: &P,
    env: &mut GaitEnv<E>,
    tracker: Option<&Arc<RewardMachine>>,
    seed: u64,
    max_steps: u32,
) -> Result<Episode, LearnError> {
    let mut tracker = tracker.map(|rm| RmTracker::new(Arc::clone(rm)));
    let mut obs = env.reset(seed);
    let mut steps = Vec::new();
    let mut total_return = 0.0;
    for t in 1..=max_steps {
        let action = policy.act(&obs)?;
        let step = env.step(action)?;
        let pose_transition = match tracker.as_mut() {
            Some(tr) => tr.observe(step.labels)?,
            None => false,
        };
        total_return += step.reward;
        steps.push(RolloutStep {
            step: t,
            action,
            labels: step.labels,
            reward: step.reward,
            info: step.info.clone(),
            tracker_state: tracker.as_ref().map(RmTracker::state),
            pose_transition,
        });
        obs = step.obs;
        if step.done {
            break;
        }
    }
    Ok(Episode {
        steps,
        total_return,
        pose_transitions: tracker.map_or(0, |t| t.transitions()),
        distance: env.base().base_x(),
    })
}

/// Runs `episodes` full greedy episodes and averages return, pose transitions
/// (counted by a passive tracker over `tracker`) and final base position.
pub fn evaluate<E: Environment, P: Policy + ?Sized>(
    policy: &P,
    env: &mut GaitEnv<E>,
    tracker: Option<&Arc<RewardMachine>>,
    episodes: u32,
) -> Result<EvalMetrics, LearnError> {
    if episodes == 0 {
        return Err(LearnError::InvalidConfig("evaluation needs at least one episode".into()));
    }
    // Running means, so identical episodes average to exactly their own value.
    let (mut ret, mut trans, mut dist) = (0.0, 0.0, 0.0);
    for ep in 0..episodes {
        let e = rollout(policy, env, tracker, u64::from(ep), u32::MAX)?;
        let k = f64::from(ep + 1);
        ret += (e.total_return - ret) / k;
        trans += (f64::from(e.pose_transitions) - trans) / k;
        dist += (e.distance - dist) / k;
    }
    Ok(EvalMetrics {
        mean_return: ret,
        mean_pose_transitions: trans,
        mean_distance: dist,
        episodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: u64,
    pub metrics: EvalMetrics,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub q: QTable,
    pub curve: Vec<CurvePoint>,
}

impl TrainOutcome {
    pub fn policy(&self, kind: WrapperKind) -> GreedyPolicy {
        GreedyPolicy {
            q: self.q.clone(),
            kind,
        }
    }
}

/// Epsilon-greedy Q-learning. Every `eval_every` steps the current greedy
/// policy is scored on a fresh copy of `env`.
pub fn train<E: Environment + Clone>(
    env: &mut GaitEnv<E>,
    config: &LearnerConfig,
    tracker: Option<&Arc<RewardMachine>>,
) -> Result<TrainOutcome, LearnError> {
    config.validate()?;
    let kind = env.kind();
    let eval_template = env.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut q = QTable::new();
    let mut curve = Vec::new();
    let mut episode = 0u64;
    let mut key = discretize(&env.reset(config.seed), kind)?;

    for t in 0..config.total_steps {
        let action = if rng.gen::<f64>() < config.epsilon_at(t) {
            Action::from_code(rng.gen_range(0..Action::COUNT as u8)).expect("in range")
        } else {
            q.greedy(key)
        };
        let step = env.step(action)?;
        let next_key = discretize(&step.obs, kind)?;
        q_update(&mut q, key, action, step.reward, next_key, step.terminal, config);
        key = if step.done {
            episode += 1;
            discretize(&env.reset(config.seed.wrapping_add(episode)), kind)?
        } else {
            next_key
        };

        if (t + 1) % config.eval_every == 0 {
            let policy = GreedyPolicy { q: q.clone(), kind };
            let mut eval_env = eval_template.clone();
            let metrics = evaluate(&policy, &mut eval_env, tracker, config.eval_episodes)?;
            curve.push(CurvePoint { step: t + 1, metrics });
        }
    }
    Ok(TrainOutcome { q, curve })
}

pub const POLICY_FORMAT_VERSION: u32 = 1;

/// On-disk greedy policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub version: u32,
    pub wrapper: WrapperKind,
    pub gait: Option<Gait>,
    /// Campaign manifest this policy belongs to, if any.
    pub manifest: Option<String>,
    pub seed: Option<u64>,
    pub q: QTable,
}

impl PolicyFile {
    pub fn new(wrapper: WrapperKind, gait: Option<Gait>, q: QTable) -> PolicyFile {
        PolicyFile {
            version: POLICY_FORMAT_VERSION,
            wrapper,
            gait,
            manifest: None,
            seed: None,
            q,
        }
    }

    pub fn policy(&self) -> GreedyPolicy {
        GreedyPolicy {
            q: self.q.clone(),
            kind: self.wrapper,
        }
    }
}
