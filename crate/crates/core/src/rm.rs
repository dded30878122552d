//! Reward machines over foot-contact labels.
//!
//! A machine has named states, an initial state, an optional accepting set
//! and guarded transitions. Each transition carries the reward function
//! emitted when it fires. The built-in gait machines are two-state cycles that
//! pay a progress-scaled bonus each time the robot switches to the next pose.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::StepInfo;
use crate::props::{Guard, LabelSet, ParseError, Prop};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RmStateId(pub usize);

impl RmStateId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Reward function attached to a transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardSpec {
    /// Forward progress minus the energy penalty.
    Walk,
    /// `b * tanh(delta_x)`.
    SwitchPoseBonus { b: f64 },
}

/// How joint torques and velocities collapse into the energy term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyReduction {
    /// `|sum_i tau_i * v_i|`, the absolute mechanical power.
    #[default]
    InnerProduct,
    /// `sum_i |tau_i * v_i|`.
    SumAbs,
    /// Euclidean norm of the elementwise product.
    ElementwiseNorm,
}

impl EnergyReduction {
    fn is_default(&self) -> bool {
        *self == EnergyReduction::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardParams {
    /// Energy penalty weight.
    pub w_e: f64,
    pub gamma: f64,
    /// Default switch-pose bonus scale used by the gait builders.
    pub bonus_b: f64,
    #[serde(default, skip_serializing_if = "EnergyReduction::is_default")]
    pub energy_reduction: EnergyReduction,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            w_e: 0.001,
            gamma: 0.99,
            bonus_b: 10000.0,
            energy_reduction: EnergyReduction::InnerProduct,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), RmError> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(RmError::InvalidParams(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.w_e >= 0.0 && self.w_e.is_finite()) {
            return Err(RmError::InvalidParams(format!("w_e must be finite and >= 0, got {}", self.w_e)));
        }
        if !self.bonus_b.is_finite() {
            return Err(RmError::InvalidParams("bonus_b must be finite".into()));
        }
        Ok(())
    }

    /// Energy usage of one step, before weighting.
    pub fn energy(&self, info: &StepInfo) -> f64 {
        match &info.joint_power {
            Some(jp) => {
                let products = jp.torques.iter().zip(&jp.velocities).map(|(t, v)| t * v);
                match self.energy_reduction {
                    EnergyReduction::InnerProduct => products.sum::<f64>().abs(),
                    EnergyReduction::SumAbs => products.map(f64::abs).sum(),
                    EnergyReduction::ElementwiseNorm => products.map(|p| p * p).sum::<f64>().sqrt(),
                }
            }
            None => info.power.abs(),
        }
    }
}

/// Reward for one step given the spec of the transition that fired.
pub fn compute_reward(spec: &RewardSpec, info: &StepInfo, params: &RewardParams) -> f64 {
    match *spec {
        RewardSpec::Walk => info.delta_x - params.w_e * params.energy(info),
        RewardSpec::SwitchPoseBonus { b } => b * info.delta_x.tanh(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from: RmStateId,
    pub guard: Guard,
    pub to: RmStateId,
    pub reward: RewardSpec,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RmError {
    #[error("state {0} is not part of this machine")]
    UnknownState(usize),
    #[error("no transition out of {state} matches {labels}")]
    NoTransition { state: String, labels: LabelSet },
    #[error("{count} transitions out of {state} match {labels}")]
    Ambiguous {
        state: String,
        labels: LabelSet,
        count: usize,
    },
    #[error("invalid reward parameters: {0}")]
    InvalidParams(String),
    #[error("invalid machine:\n{0}")]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardMachine {
    states: Vec<String>,
    initial: RmStateId,
    accepting: BTreeSet<RmStateId>,
    transitions: Vec<Transition>,
    params: RewardParams,
}

impl RewardMachine {
    pub fn new(
        states: Vec<String>,
        initial: RmStateId,
        accepting: BTreeSet<RmStateId>,
        transitions: Vec<Transition>,
        params: RewardParams,
    ) -> Result<RewardMachine, RmError> {
        let n = states.len();
        let check = |s: RmStateId| if s.0 < n { Ok(()) } else { Err(RmError::UnknownState(s.0)) };
        check(initial)?;
        for s in &accepting {
            check(*s)?;
        }
        for t in &transitions {
            check(t.from)?;
            check(t.to)?;
        }
        params.validate()?;
        Ok(RewardMachine {
            states,
            initial,
            accepting,
            transitions,
            params,
        })
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> impl Iterator<Item = RmStateId> {
        (0..self.states.len()).map(RmStateId)
    }

    pub fn state_name(&self, s: RmStateId) -> &str {
        &self.states[s.0]
    }

    pub fn state_by_name(&self, name: &str) -> Option<RmStateId> {
        self.states.iter().position(|s| s == name).map(RmStateId)
    }

    pub fn initial(&self) -> RmStateId {
        self.initial
    }

    pub fn accepting(&self) -> &BTreeSet<RmStateId> {
        &self.accepting
    }

    pub fn is_accepting(&self, s: RmStateId) -> bool {
        self.accepting.contains(&s)
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn params(&self) -> &RewardParams {
        &self.params
    }

    pub fn outgoing(&self, s: RmStateId) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.from == s)
    }

    /// Fires the unique transition out of `state` enabled by `labels`.
    pub fn step(&self, state: RmStateId, labels: LabelSet) -> Result<(RmStateId, RewardSpec), RmError> {
        if state.0 >= self.states.len() {
            return Err(RmError::UnknownState(state.0));
        }
        let mut enabled = self.outgoing(state).filter(|t| t.guard.eval(labels));
        let first = enabled.next().ok_or_else(|| RmError::NoTransition {
            state: self.state_name(state).to_owned(),
            labels,
        })?;
        let extra = enabled.count();
        if extra > 0 {
            return Err(RmError::Ambiguous {
                state: self.state_name(state).to_owned(),
                labels,
                count: extra + 1,
            });
        }
        Ok((first.to, first.reward))
    }

    /// Exhaustive check over every (state, label set) pair plus reachability.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for s in self.states() {
            for l in LabelSet::all() {
                let matching: Vec<usize> = self
                    .transitions
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| t.from == s && t.guard.eval(l))
                    .map(|(i, _)| i)
                    .collect();
                match matching.len() {
                    0 => report.gaps.push(Gap {
                        state: self.state_name(s).to_owned(),
                        labels: l,
                    }),
                    1 => {}
                    _ => report.ambiguities.push(Ambiguity {
                        state: self.state_name(s).to_owned(),
                        labels: l,
                        transitions: matching,
                    }),
                }
            }
        }

        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial.0] = true;
        while let Some(s) = queue.pop_front() {
            for t in self.outgoing(s) {
                if !seen[t.to.0] && !t.guard.satisfying_sets().is_empty() {
                    seen[t.to.0] = true;
                    queue.push_back(t.to);
                }
            }
        }
        report.unreachable = self
            .states()
            .filter(|s| !seen[s.0])
            .map(|s| self.state_name(s).to_owned())
            .collect();
        report
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub state: String,
    pub labels: LabelSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ambiguity {
    pub state: String,
    pub labels: LabelSet,
    /// Indices into the machine's transition list.
    pub transitions: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub gaps: Vec<Gap>,
    pub ambiguities: Vec<Ambiguity>,
    pub unreachable: Vec<String>,
}

impl ValidationReport {
    pub fn is_total(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn is_deterministic(&self) -> bool {
        self.ambiguities.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        self.is_total() && self.is_deterministic() && self.unreachable.is_empty()
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "deterministic: {}", yes_no(self.is_deterministic()))?;
        writeln!(f, "total: {}", yes_no(self.is_total()))?;
        writeln!(f, "all states reachable: {}", yes_no(self.unreachable.is_empty()))?;
        for g in &self.gaps {
            writeln!(f, "  coverage gap: state {} has no transition for {}", g.state, g.labels)?;
        }
        for a in &self.ambiguities {
            writeln!(
                f,
                "  ambiguity: state {} matches transitions {:?} for {}",
                a.state, a.transitions, a.labels
            )?;
        }
        for u in &self.unreachable {
            writeln!(f, "  unreachable: {u}")?;
        }
        write!(f, "valid: {}", yes_no(self.is_valid()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gait {
    Trot,
    Pace,
    Bound,
}

impl Gait {
    pub const ALL: [Gait; 3] = [Gait::Trot, Gait::Pace, Gait::Bound];

    /// The two milestone poses as airborne sets: (pose A from q0, pose B from q1).
    pub fn poses(self) -> (LabelSet, LabelSet) {
        use Prop::*;
        let (a, b) = match self {
            Gait::Trot => ([FL, BR], [FR, BL]),
            Gait::Pace => ([FL, BL], [FR, BR]),
            Gait::Bound => ([FL, FR], [BL, BR]),
        };
        (LabelSet::from_props(a), LabelSet::from_props(b))
    }

    pub fn name(self) -> &'static str {
        match self {
            Gait::Trot => "trot",
            Gait::Pace => "pace",
            Gait::Bound => "bound",
        }
    }
}

impl fmt::Display for Gait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Gait {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Gait::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| format!("unknown gait {s:?} (expected trot, pace or bound)"))
    }
}

/// Two-state gait machine: q0 waits for pose A, q1 waits for pose B. Reaching
/// the awaited pose pays `params.bonus_b * tanh(dx)` and flips the state; any
/// other label self-loops with the walk reward.
pub fn build_gait_rm(gait: Gait, params: RewardParams) -> RewardMachine {
    let (a, b) = gait.poses();
    let (q0, q1) = (RmStateId(0), RmStateId(1));
    let bonus = RewardSpec::SwitchPoseBonus { b: params.bonus_b };
    let pose_a = Guard::exact_pose(a);
    let pose_b = Guard::exact_pose(b);
    let transitions = vec![
        Transition {
            from: q0,
            guard: Guard::not(pose_a.clone()),
            to: q0,
            reward: RewardSpec::Walk,
        },
        Transition {
            from: q0,
            guard: pose_a,
            to: q1,
            reward: bonus,
        },
        Transition {
            from: q1,
            guard: Guard::not(pose_b.clone()),
            to: q1,
            reward: RewardSpec::Walk,
        },
        Transition {
            from: q1,
            guard: pose_b,
            to: q0,
            reward: bonus,
        },
    ];
    RewardMachine::new(
        vec!["q0".into(), "q1".into()],
        q0,
        BTreeSet::new(),
        transitions,
        params,
    )
    .expect("gait machine is well formed")
}

// ---------------------------------------------------------------------------
// File format

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RmDocument {
    version: u32,
    states: Vec<String>,
    initial: String,
    accepting: Vec<String>,
    transitions: Vec<TransitionDocument>,
    params: RewardParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionDocument {
    from: String,
    to: String,
    guard: String,
    reward: RewardDocument,
}

// Struct variants so that stray keys such as `b` on a walk reward are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RewardDocument {
    Walk {},
    SwitchPoseBonus { b: f64 },
}

impl From<RewardSpec> for RewardDocument {
    fn from(spec: RewardSpec) -> Self {
        match spec {
            RewardSpec::Walk => RewardDocument::Walk {},
            RewardSpec::SwitchPoseBonus { b } => RewardDocument::SwitchPoseBonus { b },
        }
    }
}

impl From<RewardDocument> for RewardSpec {
    fn from(doc: RewardDocument) -> Self {
        match doc {
            RewardDocument::Walk {} => RewardSpec::Walk,
            RewardDocument::SwitchPoseBonus { b } => RewardSpec::SwitchPoseBonus { b },
        }
    }
}

#[derive(Debug, Error)]
pub enum RmFileError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed document at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("transitions[{index}]: bad guard {text:?}: {source}")]
    Guard {
        index: usize,
        text: String,
        source: ParseError,
    },
    #[error("{location}: unknown state {name:?}")]
    UnknownState { location: String, name: String },
    #[error("duplicate state name {0:?}")]
    DuplicateState(String),
    #[error(transparent)]
    Machine(#[from] RmError),
}

impl From<serde_json::Error> for RmFileError {
    fn from(e: serde_json::Error) -> Self {
        use serde_json::error::Category;
        match e.classify() {
            Category::Io => RmFileError::Io(e.into()),
            Category::Data => RmFileError::Schema {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
            Category::Syntax | Category::Eof => RmFileError::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
        }
    }
}

/// Result of loading a machine file. Loading does not require validity; the
/// report says whether the machine is deterministic, total and connected.
#[derive(Debug, Clone)]
pub struct LoadedRm {
    pub machine: RewardMachine,
    pub report: ValidationReport,
}

impl LoadedRm {
    pub fn warnings(&self) -> Option<&ValidationReport> {
        (!self.report.is_valid()).then_some(&self.report)
    }
}

fn to_document(rm: &RewardMachine) -> RmDocument {
    let name = |s: RmStateId| rm.state_name(s).to_owned();
    RmDocument {
        version: FORMAT_VERSION,
        states: rm.states.clone(),
        initial: name(rm.initial),
        accepting: rm.accepting.iter().map(|s| name(*s)).collect(),
        transitions: rm
            .transitions
            .iter()
            .map(|t| TransitionDocument {
                from: name(t.from),
                to: name(t.to),
                guard: t.guard.render(),
                reward: t.reward.into(),
            })
            .collect(),
        params: rm.params,
    }
}

fn from_document(doc: RmDocument) -> Result<RewardMachine, RmFileError> {
    if doc.version != FORMAT_VERSION {
        return Err(RmFileError::Version(doc.version));
    }
    let mut seen = BTreeSet::new();
    for s in &doc.states {
        if !seen.insert(s.as_str()) {
            return Err(RmFileError::DuplicateState(s.clone()));
        }
    }
    let lookup = |name: &str, location: String| {
        doc.states
            .iter()
            .position(|s| s == name)
            .map(RmStateId)
            .ok_or_else(|| RmFileError::UnknownState {
                location,
                name: name.to_owned(),
            })
    };
    let initial = lookup(&doc.initial, "initial".into())?;
    let accepting = doc
        .accepting
        .iter()
        .enumerate()
        .map(|(i, n)| lookup(n, format!("accepting[{i}]")))
        .collect::<Result<BTreeSet<_>, _>>()?;
    let transitions = doc
        .transitions
        .iter()
        .enumerate()
        .map(|(i, t)| {
            Ok(Transition {
                from: lookup(&t.from, format!("transitions[{i}].from"))?,
                to: lookup(&t.to, format!("transitions[{i}].to"))?,
                guard: t.guard.parse().map_err(|source| RmFileError::Guard {
                    index: i,
                    text: t.guard.clone(),
                    source,
                })?,
                reward: t.reward.into(),
            })
        })
        .collect::<Result<Vec<_>, RmFileError>>()?;
    for (i, t) in transitions.iter().enumerate() {
        if let RewardSpec::SwitchPoseBonus { b } = t.reward {
            if !b.is_finite() {
                return Err(RmError::InvalidParams(format!("transitions[{i}]: bonus b must be finite")).into());
            }
        }
    }
    Ok(RewardMachine::new(doc.states, initial, accepting, transitions, doc.params)?)
}

/// Serializes a valid machine as a pretty-printed JSON document with a
/// trailing newline.
pub fn rm_to_string(rm: &RewardMachine) -> Result<String, RmFileError> {
    let report = rm.validate();
    if !report.is_valid() {
        return Err(RmError::Invalid(report).into());
    }
    let mut text = serde_json::to_string_pretty(&to_document(rm))?;
    text.push('\n');
    Ok(text)
}

pub fn rm_from_str(text: &str) -> Result<LoadedRm, RmFileError> {
    let doc: RmDocument = serde_json::from_str(text)?;
    let machine = from_document(doc)?;
    let report = machine.validate();
    Ok(LoadedRm { machine, report })
}

pub fn save_rm<W: Write>(rm: &RewardMachine, mut out: W) -> Result<(), RmFileError> {
    out.write_all(rm_to_string(rm)?.as_bytes())?;
    Ok(())
}

pub fn load_rm<R: Read>(mut input: R) -> Result<LoadedRm, RmFileError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    rm_from_str(&text)
}
