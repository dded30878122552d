//! Reward machines over quadruped foot-contact propositions.
//!
//! - [`props`]: the four foot-in-air propositions, label sets and guard formulas.
//! - [`rm`]: reward machines, the built-in trot/pace/bound machines, rewards and the file format.
//! - [`env`]: the toy contact environment and the labeling function.
//! - [`product`]: the cross-product environment, baseline wrappers and the history-latch reward.
//! - [`learn`]: tabular Q-learning and the evaluation protocol.
//! - [`cli`]: command implementations behind the `gaitrm` binary.

pub mod cli;
pub mod env;
pub mod learn;
pub mod product;
pub mod props;
pub mod rm;

pub use env::{Action, Environment, StepInfo, ToyEnvConfig, ToyQuadruped};
pub use learn::{evaluate, train, EvalMetrics, LearnerConfig, QTable};
pub use product::{GaitEnv, MilestoneLatch, Observation, WrapperKind};
pub use props::{parse_guard, Guard, LabelSet, Prop};
pub use rm::{build_gait_rm, compute_reward, Gait, RewardMachine, RewardParams, RewardSpec};
