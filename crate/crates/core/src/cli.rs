//! Command implementations for the `gaitrm` binary.
//!
//! Exit codes: 0 success, 1 I/O or parse failure, 2 semantic failure (invalid
//! machine, bad flag combination, incompatible policy).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{write_trajectory, ToyEnvConfig, ToyQuadruped, TrajectoryRow};
use crate::learn::{self, key_space, CurvePoint, LearnerConfig, PolicyFile, TrainOutcome};
use crate::product::{GaitEnv, WrapperKind};
use crate::props::Prop;
use crate::rm::{self, build_gait_rm, Gait, RewardMachine, RewardParams};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";
pub const AGGREGATE_FILE: &str = "aggregate_curve.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Semantic(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } => 1,
            CliError::Usage(_) | CliError::Semantic(_) => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

fn parse_err<E: std::fmt::Display>(path: &Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    }
}

fn semantic<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Semantic(e.to_string())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(parse_err(path))?;
    for r in rows {
        w.serialize(r).map_err(parse_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(parse_err(path))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(parse_err(path))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Parser)]
#[command(name = "gaitrm", version, about = "Reward-machine gait specification toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a reward machine file for determinism, totality and reachability.
    Validate { file: PathBuf },
    /// Write a built-in gait reward machine to a file.
    ExportRm {
        #[arg(long)]
        gait: Gait,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train tabular policies over several seeds.
    Train(TrainArgs),
    /// Evaluate a saved policy.
    Eval(EvalArgs),
    /// Roll out a saved policy and write a foot-contact diagram.
    Diagram(DiagramArgs),
    /// Summarize every campaign under a directory.
    Compare {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub gait: Option<Gait>,
    #[arg(long)]
    pub wrapper: WrapperKind,
    /// Number of training runs.
    #[arg(long, default_value_t = 5)]
    pub seeds: u32,
    /// First seed; runs use seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Campaign root; results go to <out>/<gait>-<wrapper>/.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON document with optional "env", "learner" and "reward" sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub total_steps: Option<u64>,
    #[arg(long)]
    pub eval_every: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub policy: PathBuf,
    /// Gait whose machine scores pose transitions (defaults to the policy's gait).
    #[arg(long)]
    pub gait: Option<Gait>,
    #[arg(long)]
    pub wrapper: Option<WrapperKind>,
    #[arg(long, default_value_t = 10)]
    pub episodes: u32,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the first episode's trajectory as CSV.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagramArgs {
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long)]
    pub gait: Option<Gait>,
    #[arg(long)]
    pub wrapper: Option<WrapperKind>,
    #[arg(long, default_value_t = 100)]
    pub steps: u32,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Optional configuration document passed with `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: ToyEnvConfig,
    pub learner: LearnerConfig,
    pub reward: RewardParams,
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => serde_json::from_str(&read_text(p)?).map_err(parse_err(p)),
    }
}

/// Written to the campaign directory before training starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub campaign: String,
    pub gait: Option<Gait>,
    pub wrapper: WrapperKind,
    pub seeds: Vec<u64>,
    pub learner: LearnerConfig,
    pub env: ToyEnvConfig,
    pub reward: RewardParams,
    pub curve_files: Vec<String>,
    pub policy_files: Vec<String>,
    pub aggregate_file: String,
    /// Policy for keys never seen in training.
    pub unseen_key_fallback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub campaign: String,
    pub seed: u64,
    pub step: u64,
    pub mean_return: f64,
    pub mean_pose_transitions: f64,
    pub mean_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub campaign: String,
    pub step: u64,
    pub seeds: usize,
    pub mean_return_mean: f64,
    pub mean_return_std: f64,
    pub mean_pose_transitions_mean: f64,
    pub mean_pose_transitions_std: f64,
    pub mean_distance_mean: f64,
    pub mean_distance_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub gait: String,
    pub wrapper: String,
    pub seeds_expected: usize,
    pub seeds_found: usize,
    pub pose_transitions_mean: f64,
    pub pose_transitions_std: f64,
    pub distance_mean: f64,
    pub distance_std: f64,
    pub complete: bool,
}

/// One row of a foot-contact diagram. Contact bits are 1 when the foot is on
/// the ground. `transition` is 1 when the RM state differs from the previous
/// row (from the initial state for the first row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactDiagramRow {
    pub step: u32,
    pub fl: u8,
    pub fr: u8,
    pub bl: u8,
    pub br: u8,
    pub rm_state: String,
    pub transition: u8,
    /// 1 on the last row when the episode ended before the requested steps.
    pub ended_early: u8,
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn campaign_name(gait: Option<Gait>, wrapper: WrapperKind) -> String {
    format!("{}-{}", gait.map_or("none", Gait::name), wrapper.name())
}

fn gait_machine(gait: Option<Gait>, params: RewardParams) -> Option<Arc<RewardMachine>> {
    gait.map(|g| Arc::new(build_gait_rm(g, params)))
}

fn make_env(
    kind: WrapperKind,
    rm: Option<Arc<RewardMachine>>,
    config: &RunConfig,
) -> Result<GaitEnv<ToyQuadruped>, CliError> {
    let toy = ToyQuadruped::new(config.env.clone()).map_err(semantic)?;
    GaitEnv::new(kind, toy, rm, config.reward).map_err(semantic)
}

/// Parses `args` (including the program name) and runs the command. Output
/// goes to `out`; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok((text, code)) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a command, returning its report text and exit code.
pub fn execute(command: Command) -> Result<(String, i32), CliError> {
    match command {
        Command::Validate { file } => cmd_validate(&file),
        Command::ExportRm { gait, out } => {
            let text = rm::rm_to_string(&build_gait_rm(gait, RewardParams::default())).map_err(semantic)?;
            write_text(&out, &text)?;
            Ok((format!("wrote {}\n", out.display()), 0))
        }
        Command::Train(args) => cmd_train(&args).map(|s| (s, 0)),
        Command::Eval(args) => cmd_eval(&args).map(|s| (s, 0)),
        Command::Diagram(args) => cmd_diagram(&args).map(|s| (s, 0)),
        Command::Compare { out } => cmd_compare(&out).map(|s| (s, 0)),
    }
}

pub fn cmd_validate(path: &Path) -> Result<(String, i32), CliError> {
    let text = read_text(path)?;
    let loaded = rm::rm_from_str(&text).map_err(parse_err(path))?;
    let code = if loaded.report.is_valid() { 0 } else { 2 };
    let text = format!(
        "{}: {} states, {} transitions\n{}\n",
        path.display(),
        loaded.machine.state_count(),
        loaded.machine.transitions().len(),
        loaded.report
    );
    Ok((text, code))
}

fn curve_rows(campaign: &str, seed: u64, curve: &[CurvePoint]) -> Vec<CurveRow> {
    curve
        .iter()
        .map(|p| CurveRow {
            campaign: campaign.to_owned(),
            seed,
            step: p.step,
            mean_return: p.metrics.mean_return,
            mean_pose_transitions: p.metrics.mean_pose_transitions,
            mean_distance: p.metrics.mean_distance,
        })
        .collect()
}

fn aggregate(campaign: &str, runs: &[Vec<CurvePoint>]) -> Vec<AggregateRow> {
    let len = runs.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let col = |f: fn(&CurvePoint) -> f64| runs.iter().map(|r| f(&r[i])).collect::<Vec<_>>();
            let (rm, rs) = mean_std(&col(|p| p.metrics.mean_return));
            let (pm, ps) = mean_std(&col(|p| p.metrics.mean_pose_transitions));
            let (dm, ds) = mean_std(&col(|p| p.metrics.mean_distance));
            AggregateRow {
                campaign: campaign.to_owned(),
                step: runs[0][i].step,
                seeds: runs.len(),
                mean_return_mean: rm,
                mean_return_std: rs,
                mean_pose_transitions_mean: pm,
                mean_pose_transitions_std: ps,
                mean_distance_mean: dm,
                mean_distance_std: ds,
            }
        })
        .collect()
}

pub fn cmd_train(args: &TrainArgs) -> Result<String, CliError> {
    if args.wrapper.needs_gait() && args.gait.is_none() {
        return Err(CliError::Usage(format!("--wrapper {} requires --gait", args.wrapper)));
    }
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let mut config = load_config(args.config.as_deref())?;
    if let Some(n) = args.total_steps {
        config.learner.total_steps = n;
    }
    if let Some(n) = args.eval_every {
        config.learner.eval_every = n;
    }
    config.learner.validate().map_err(semantic)?;
    config.env.validate().map_err(semantic)?;
    config.reward.validate().map_err(semantic)?;

    let campaign = campaign_name(args.gait, args.wrapper);
    let dir = args.out.join(&campaign);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let seeds: Vec<u64> = (0..u64::from(args.seeds)).map(|i| args.seed + i).collect();
    let manifest = RunManifest {
        toolkit_version: TOOLKIT_VERSION.to_owned(),
        campaign: campaign.clone(),
        gait: args.gait,
        wrapper: args.wrapper,
        seeds: seeds.clone(),
        learner: config.learner.clone(),
        env: config.env.clone(),
        reward: config.reward,
        curve_files: seeds.iter().map(|s| format!("seed_{s}_curve.csv")).collect(),
        policy_files: seeds.iter().map(|s| format!("seed_{s}_policy.json")).collect(),
        aggregate_file: AGGREGATE_FILE.to_owned(),
        unseen_key_fallback: "zero action values; greedy tie-break picks action 0".to_owned(),
    };
    write_text(&dir.join(MANIFEST_FILE), &to_json(&manifest))?;

    let rm = gait_machine(args.gait, config.reward);
    let outcomes: Vec<Result<TrainOutcome, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let rm = rm.clone();
                let config = &config;
                scope.spawn(move || {
                    let mut env = make_env(args.wrapper, rm.clone(), config)?;
                    let learner = LearnerConfig {
                        seed,
                        ..config.learner.clone()
                    };
                    learn::train(&mut env, &learner, rm.as_ref()).map_err(semantic)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });

    let mut curves = Vec::new();
    let mut report = String::new();
    for ((seed, outcome), (curve_file, policy_file)) in seeds
        .iter()
        .zip(outcomes)
        .zip(manifest.curve_files.iter().zip(&manifest.policy_files))
    {
        let outcome = outcome?;
        write_csv(&dir.join(curve_file), &curve_rows(&campaign, *seed, &outcome.curve))?;
        let mut file = PolicyFile::new(args.wrapper, args.gait, outcome.q);
        file.manifest = Some(MANIFEST_FILE.to_owned());
        file.seed = Some(*seed);
        write_text(&dir.join(policy_file), &to_json(&file))?;
        if let Some(last) = outcome.curve.last() {
            let _ = writeln!(
                report,
                "seed {seed}: pose transitions {:.2}, distance {:.3} m, return {:.3}",
                last.metrics.mean_pose_transitions, last.metrics.mean_distance, last.metrics.mean_return
            );
        }
        curves.push(outcome.curve);
    }
    write_csv(&dir.join(AGGREGATE_FILE), &aggregate(&campaign, &curves))?;
    let _ = writeln!(report, "wrote campaign {}", dir.display());
    Ok(report)
}

struct LoadedPolicy {
    file: PolicyFile,
    kind: WrapperKind,
    gait: Option<Gait>,
}

fn load_policy(path: &Path, gait: Option<Gait>, wrapper: Option<WrapperKind>) -> Result<LoadedPolicy, CliError> {
    let file: PolicyFile = serde_json::from_str(&read_text(path)?).map_err(parse_err(path))?;
    if let Some(w) = wrapper {
        if w != file.wrapper {
            return Err(CliError::Semantic(format!(
                "policy was trained with wrapper {} and its keys do not match wrapper {w}",
                file.wrapper
            )));
        }
    }
    let limit = key_space(file.wrapper, 2);
    if let Some(k) = file.q.keys().find(|k| *k >= limit) {
        return Err(CliError::Semantic(format!(
            "policy key {k} is outside the {} key space ({limit} keys)",
            file.wrapper
        )));
    }
    let gait = gait.or(file.gait);
    if file.wrapper.needs_gait() && gait.is_none() {
        return Err(CliError::Usage(format!("wrapper {} requires --gait", file.wrapper)));
    }
    Ok(LoadedPolicy {
        kind: file.wrapper,
        gait,
        file,
    })
}

pub fn cmd_eval(args: &EvalArgs) -> Result<String, CliError> {
    let config = load_config(args.config.as_deref())?;
    let loaded = load_policy(&args.policy, args.gait, args.wrapper)?;
    let rm = gait_machine(loaded.gait, config.reward);
    let mut env = make_env(loaded.kind, rm.clone(), &config)?;
    let policy = loaded.file.policy();
    let metrics = learn::evaluate(&policy, &mut env, rm.as_ref(), args.episodes).map_err(semantic)?;
    if let Some(path) = &args.trajectory {
        let ep = learn::rollout(&policy, &mut env, rm.as_ref(), 0, u32::MAX).map_err(semantic)?;
        let rows: Vec<TrajectoryRow> = ep
            .steps
            .iter()
            .map(|s| TrajectoryRow {
                step: s.step,
                action: s.action.code(),
                height_fl: s.info.foot_heights[0],
                height_fr: s.info.foot_heights[1],
                height_bl: s.info.foot_heights[2],
                height_br: s.info.foot_heights[3],
                labels: s.labels.bits(),
                delta_x: s.info.delta_x,
                power: s.info.power,
                reward: s.reward,
                rm_state: match (&rm, s.tracker_state) {
                    (Some(m), Some(u)) => m.state_name(u).to_owned(),
                    _ => String::new(),
                },
                terminated: s.info.terminated,
                truncated: s.info.truncated,
            })
            .collect();
        let file = fs::File::create(path).map_err(io_err(path))?;
        write_trajectory(file, &rows).map_err(parse_err(path))?;
    }
    Ok(format!(
        "episodes: {}\nmean_return: {}\nmean_pose_transitions: {}\nmean_distance: {}\n",
        metrics.episodes, metrics.mean_return, metrics.mean_pose_transitions, metrics.mean_distance
    ))
}

/// Builds diagram rows from a rollout.
pub fn diagram_rows(rm: &RewardMachine, episode: &learn::Episode, requested: u32) -> Vec<ContactDiagramRow> {
    let mut prev = rm.initial();
    let n = episode.steps.len();
    episode
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let state = s.tracker_state.unwrap_or(prev);
            let on_ground = |p: Prop| u8::from(!s.labels.contains(p));
            let row = ContactDiagramRow {
                step: s.step,
                fl: on_ground(Prop::FL),
                fr: on_ground(Prop::FR),
                bl: on_ground(Prop::BL),
                br: on_ground(Prop::BR),
                rm_state: rm.state_name(state).to_owned(),
                transition: u8::from(state != prev),
                ended_early: u8::from(i + 1 == n && (n as u32) < requested),
            };
            prev = state;
            row
        })
        .collect()
}

pub fn cmd_diagram(args: &DiagramArgs) -> Result<String, CliError> {
    let config = load_config(args.config.as_deref())?;
    let loaded = load_policy(&args.policy, args.gait, args.wrapper)?;
    let gait = loaded
        .gait
        .ok_or_else(|| CliError::Usage("diagram needs --gait for its RM-state column".into()))?;
    let rm = Arc::new(build_gait_rm(gait, config.reward));
    let env_rm = loaded.kind.needs_gait().then(|| Arc::clone(&rm));
    let mut env = make_env(loaded.kind, env_rm, &config)?;
    let ep = learn::rollout(&loaded.file.policy(), &mut env, Some(&rm), 0, args.steps).map_err(semantic)?;
    let rows = diagram_rows(&rm, &ep, args.steps);
    write_csv(&args.out, &rows)?;
    let mut msg = format!("wrote {} rows to {}\n", rows.len(), args.out.display());
    if (rows.len() as u32) < args.steps {
        let _ = writeln!(msg, "episode ended early after {} of {} steps", rows.len(), args.steps);
    }
    Ok(msg)
}

fn find_manifests(root: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut found = Vec::new();
    if root.join(MANIFEST_FILE).is_file() {
        found.push(root.join(MANIFEST_FILE));
    }
    let entries = fs::read_dir(root).map_err(io_err(root))?;
    for entry in entries {
        let path = entry.map_err(io_err(root))?.path();
        if path.join(MANIFEST_FILE).is_file() {
            found.push(path.join(MANIFEST_FILE));
        }
    }
    found.sort();
    Ok(found)
}

pub fn cmd_compare(root: &Path) -> Result<String, CliError> {
    let manifests = find_manifests(root)?;
    if manifests.is_empty() {
        return Err(CliError::Semantic(format!("no campaign manifests under {}", root.display())));
    }
    let mut rows = Vec::new();
    for path in manifests {
        let manifest: RunManifest = serde_json::from_str(&read_text(&path)?).map_err(parse_err(&path))?;
        let dir = path.parent().expect("manifest has a parent directory");
        let mut poses = Vec::new();
        let mut dists = Vec::new();
        for file in &manifest.curve_files {
            let p = dir.join(file);
            if !p.is_file() {
                continue;
            }
            let curve: Vec<CurveRow> = read_csv(&p)?;
            if let Some(last) = curve.last() {
                poses.push(last.mean_pose_transitions);
                dists.push(last.mean_distance);
            }
        }
        let (pm, ps) = mean_std(&poses);
        let (dm, ds) = mean_std(&dists);
        rows.push(ComparisonRow {
            gait: manifest.gait.map_or("none", Gait::name).to_owned(),
            wrapper: manifest.wrapper.name().to_owned(),
            seeds_expected: manifest.seeds.len(),
            seeds_found: poses.len(),
            pose_transitions_mean: pm,
            pose_transitions_std: ps,
            distance_mean: dm,
            distance_std: ds,
            complete: poses.len() == manifest.seeds.len(),
        });
    }
    rows.sort_by(|a, b| (&a.gait, &a.wrapper).cmp(&(&b.gait, &b.wrapper)));
    write_csv(&root.join(COMPARISON_FILE), &rows)?;

    let mut table = format!(
        "{:<6} {:<14} {:>6} {:>22} {:>22}\n",
        "gait", "wrapper", "seeds", "pose transitions", "distance (m)"
    );
    for r in &rows {
        let _ = writeln!(
            table,
            "{:<6} {:<14} {:>6} {:>22} {:>22}{}",
            r.gait,
            r.wrapper,
            format!("{}/{}", r.seeds_found, r.seeds_expected),
            format!("{:.2} ± {:.2}", r.pose_transitions_mean, r.pose_transitions_std),
            format!("{:.3} ± {:.3}", r.distance_mean, r.distance_std),
            if r.complete { "" } else { "  [incomplete]" }
        );
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_sample() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
        assert!(mean_std(&[]).0.is_nan());
    }

    #[test]
    fn campaign_names() {
        assert_eq!(campaign_name(Some(Gait::Trot), WrapperKind::CrossProduct), "trot-cross_product");
        assert_eq!(campaign_name(None, WrapperKind::NoGait), "none-no_gait");
    }

    #[test]
    fn config_document_defaults_and_rejects_unknown() {
        let c: RunConfig = serde_json::from_str(r#"{"learner": {"total_steps": 10}}"#).unwrap();
        assert_eq!(c.learner.total_steps, 10);
        assert_eq!(c.env, ToyEnvConfig::default());
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
