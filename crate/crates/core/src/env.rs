//! Desk-scale quadruped contact environment and the labeling function.
//!
//! The toy environment keeps only what the gait rewards read: forward
//! progress of the base, a power figure for the energy penalty, and foot
//! heights for labeling. Each action is a target airborne pattern; feet settle
//! to it within a single step.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::props::{LabelSet, Prop};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("episode has finished (terminated or truncated); call reset first")]
    EpisodeFinished,
    #[error("action code {0} out of range 0..16")]
    InvalidAction(u8),
}

/// Labeling function: a foot is in the air iff its height is at least `clearance`.
pub fn label(foot_heights: &[f64; 4], clearance: f64) -> LabelSet {
    Prop::ALL
        .into_iter()
        .filter(|p| foot_heights[p.index()] >= clearance)
        .fold(LabelSet::EMPTY, LabelSet::with)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FootPhase {
    Planted,
    Lifting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootState {
    /// Height above ground in meters.
    pub height: f64,
    pub phase: FootPhase,
}

impl FootState {
    pub const PLANTED: FootState = FootState {
        height: 0.0,
        phase: FootPhase::Planted,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyEnvConfig {
    /// Minimum height (m) at which a foot counts as airborne.
    pub clearance: f64,
    /// Height (m) a lifted foot reaches after one step.
    pub lift_height: f64,
    /// Base advance (m) per balanced change of the airborne set.
    pub stride_gain: f64,
    /// Power units charged per airborne foot per step.
    pub lift_power_cost: f64,
    /// Actions per episode.
    pub episode_length: u32,
    pub stumble_terminates: bool,
    pub rng_seed: u64,
}

impl Default for ToyEnvConfig {
    fn default() -> Self {
        ToyEnvConfig {
            clearance: 0.05,
            lift_height: 0.10,
            stride_gain: 0.05,
            lift_power_cost: 5.0,
            episode_length: 100,
            stumble_terminates: true,
            rng_seed: 0,
        }
    }
}

impl ToyEnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let finite = [
            self.clearance,
            self.lift_height,
            self.stride_gain,
            self.lift_power_cost,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(EnvError::InvalidConfig("non-finite parameter".into()));
        }
        if self.clearance <= 0.0 {
            return Err(EnvError::InvalidConfig(format!(
                "clearance must be positive, got {}",
                self.clearance
            )));
        }
        if self.lift_height < self.clearance {
            return Err(EnvError::InvalidConfig(format!(
                "lift_height {} is below clearance {}; no foot could ever be labeled airborne",
                self.lift_height, self.clearance
            )));
        }
        if self.stride_gain < 0.0 || self.lift_power_cost < 0.0 {
            return Err(EnvError::InvalidConfig(
                "stride_gain and lift_power_cost must be non-negative".into(),
            ));
        }
        if self.episode_length == 0 {
            return Err(EnvError::InvalidConfig("episode_length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Toy action: the set of feet that should be in the air after the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action(pub LabelSet);

impl Action {
    pub const COUNT: usize = 16;

    pub fn from_code(code: u8) -> Result<Action, EnvError> {
        LabelSet::from_bits(code)
            .map(Action)
            .ok_or(EnvError::InvalidAction(code))
    }

    pub fn code(self) -> u8 {
        self.0.bits()
    }

    pub fn all() -> impl Iterator<Item = Action> {
        LabelSet::all().map(Action)
    }
}

/// Optional joint-level power inputs; when present they take precedence over
/// [`StepInfo::power`] in the energy penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPower {
    pub torques: Vec<f64>,
    pub velocities: Vec<f64>,
}

/// Physical outcome of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub delta_x: f64,
    pub power: f64,
    pub joint_power: Option<JointPower>,
    pub foot_heights: [f64; 4],
    pub terminated: bool,
    pub truncated: bool,
}

impl StepInfo {
    /// Info with only the reward inputs set; feet planted, episode running.
    pub fn new(delta_x: f64, power: f64) -> StepInfo {
        StepInfo {
            delta_x,
            power,
            joint_power: None,
            foot_heights: [0.0; 4],
            terminated: false,
            truncated: false,
        }
    }

    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Base observation of the toy environment. The tabular key is the 4-bit
/// airborne pattern; heights and last progress are there for richer learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactObservation {
    pub airborne: LabelSet,
    pub foot_heights: [f64; 4],
    pub last_delta_x: f64,
}

impl ContactObservation {
    /// Size of [`Self::features`].
    pub const SIZE: usize = 4;

    pub fn code(&self) -> u8 {
        self.airborne.bits()
    }

    /// Airborne flags in FL, FR, BL, BR order.
    pub fn features(&self) -> [f64; 4] {
        Prop::ALL.map(|p| if self.airborne.contains(p) { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyEnvState {
    pub feet: [FootState; 4],
    pub base_x: f64,
    pub prev_base_x: f64,
    pub fallen: bool,
    pub step_count: u32,
    pub terminated: bool,
    pub truncated: bool,
    pub seed: u64,
}

impl ToyEnvState {
    fn at_rest(seed: u64) -> ToyEnvState {
        ToyEnvState {
            feet: [FootState::PLANTED; 4],
            base_x: 0.0,
            prev_base_x: 0.0,
            fallen: false,
            step_count: 0,
            terminated: false,
            truncated: false,
            seed,
        }
    }

    pub fn foot_heights(&self) -> [f64; 4] {
        self.feet.map(|f| f.height)
    }

    /// Feet currently commanded into the air.
    pub fn airborne(&self) -> LabelSet {
        Prop::ALL
            .into_iter()
            .filter(|p| self.feet[p.index()].phase == FootPhase::Lifting)
            .fold(LabelSet::EMPTY, LabelSet::with)
    }
}

/// Reset/step contract shared by base environments and wrappers.
pub trait Environment {
    fn reset(&mut self, seed: u64) -> ContactObservation;
    fn step(&mut self, action: Action) -> Result<(ContactObservation, StepInfo), EnvError>;
    /// Threshold used by the labeling function.
    fn clearance(&self) -> f64;
    /// Current base position along the walking direction (m).
    fn base_x(&self) -> f64;
}

#[derive(Debug, Clone)]
pub struct ToyQuadruped {
    config: ToyEnvConfig,
    state: ToyEnvState,
}

impl ToyQuadruped {
    pub fn new(config: ToyEnvConfig) -> Result<ToyQuadruped, EnvError> {
        config.validate()?;
        let state = ToyEnvState::at_rest(config.rng_seed);
        Ok(ToyQuadruped { config, state })
    }

    pub fn config(&self) -> &ToyEnvConfig {
        &self.config
    }

    pub fn state(&self) -> &ToyEnvState {
        &self.state
    }

    pub fn observe(&self) -> ContactObservation {
        ContactObservation {
            airborne: self.state.airborne(),
            foot_heights: self.state.foot_heights(),
            last_delta_x: self.state.base_x - self.state.prev_base_x,
        }
    }
}

impl Environment for ToyQuadruped {
    fn reset(&mut self, seed: u64) -> ContactObservation {
        self.state = ToyEnvState::at_rest(seed);
        self.observe()
    }

    fn step(&mut self, action: Action) -> Result<(ContactObservation, StepInfo), EnvError> {
        let cfg = &self.config;
        let st = &mut self.state;
        if st.terminated || st.truncated {
            return Err(EnvError::EpisodeFinished);
        }
        let before = st.airborne();
        let target = action.0;
        for p in Prop::ALL {
            st.feet[p.index()] = if target.contains(p) {
                FootState {
                    height: cfg.lift_height,
                    phase: FootPhase::Lifting,
                }
            } else {
                FootState::PLANTED
            };
        }

        let planted = 4 - target.len();
        st.fallen = planted < 2;
        let delta_x = if !st.fallen && target != before {
            cfg.stride_gain
        } else {
            0.0
        };
        st.prev_base_x = st.base_x;
        st.base_x += delta_x;
        st.step_count += 1;
        st.terminated = st.fallen && cfg.stumble_terminates;
        st.truncated = !st.terminated && st.step_count >= cfg.episode_length;

        let info = StepInfo {
            delta_x,
            power: cfg.lift_power_cost * target.len() as f64,
            joint_power: None,
            foot_heights: st.foot_heights(),
            terminated: st.terminated,
            truncated: st.truncated,
        };
        Ok((self.observe(), info))
    }

    fn clearance(&self) -> f64 {
        self.config.clearance
    }

    fn base_x(&self) -> f64 {
        self.state.base_x
    }
}

/// One row of a trajectory log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: u32,
    pub action: u8,
    pub height_fl: f64,
    pub height_fr: f64,
    pub height_bl: f64,
    pub height_br: f64,
    /// Label bits as a 4-bit code (FL = bit 0).
    pub labels: u8,
    pub delta_x: f64,
    pub power: f64,
    pub reward: f64,
    /// Empty when no reward machine is attached.
    pub rm_state: String,
    pub terminated: bool,
    pub truncated: bool,
}

pub fn write_trajectory<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
