use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gaitrm::cli::ContactDiagramRow;
use gaitrm::learn::{PolicyFile, QTable};
use gaitrm::rm::rm_to_string;
use gaitrm::{build_gait_rm, Action, Gait, LabelSet, RewardParams, WrapperKind};

fn gaitrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaitrm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_fixtures_match_builder() {
    for g in Gait::ALL {
        let shipped = fs::read_to_string(fixture(&format!("{g}.rm.json"))).unwrap();
        let built = rm_to_string(&build_gait_rm(g, RewardParams::default())).unwrap();
        assert_eq!(shipped, built, "{g}");
    }
}

#[test]
fn validate_builtin_machine() {
    let o = gaitrm(&["validate", s(&fixture("trot.rm.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("deterministic: yes"), "{out}");
    assert!(out.contains("total: yes"), "{out}");
}

#[test]
fn validate_overlapping_guards() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("trot.rm.json"))
        .unwrap()
        .replace("\"guard\": \"!(FL & !FR & !BL & BR)\"", "\"guard\": \"!FR\"");
    let path = dir.path().join("overlap.rm.json");
    fs::write(&path, text).unwrap();
    let o = gaitrm(&["validate", s(&path)]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    assert!(out.contains("deterministic: no"), "{out}");
    assert!(out.contains("{FL, BR}"), "{out}");
}

#[test]
fn validate_missing_or_malformed_file() {
    let o = gaitrm(&["validate", "/no/such/machine.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/no/such/machine.json"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"version\": 1,").unwrap();
    assert_eq!(gaitrm(&["validate", s(&path)]).status.code(), Some(1));
}

#[test]
fn train_requires_gait_for_gait_wrappers() {
    let dir = tempfile::tempdir().unwrap();
    let o = gaitrm(&["train", "--wrapper", "cross_product", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--gait"));
    let o = gaitrm(&["train", "--wrapper", "bogus", "--gait", "trot", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_writes_campaign_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = gaitrm(&[
        "train", "--gait", "trot", "--wrapper", "cross_product", "--seeds", "5",
        "--total-steps", "4000", "--eval-every", "1000", "--out", s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let camp = dir.path().join("trot-cross_product");
    let mut names: Vec<String> = fs::read_dir(&camp)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let curves = names.iter().filter(|n| n.starts_with("seed_") && n.ends_with("_curve.csv")).count();
    assert_eq!(curves, 5);
    assert!(names.contains(&"aggregate_curve.csv".to_string()));
    assert!(names.contains(&"manifest.json".to_string()));
    assert_eq!(names.iter().filter(|n| n.ends_with("_policy.json")).count(), 5);

    let agg = fs::read_to_string(camp.join("aggregate_curve.csv")).unwrap();
    assert!(agg.starts_with("campaign,step,seeds,mean_return_mean,"));
    assert_eq!(agg.lines().count(), 5);
    let curve = fs::read_to_string(camp.join("seed_0_curve.csv")).unwrap();
    assert!(curve.starts_with("campaign,seed,step,mean_return,mean_pose_transitions,mean_distance\n"));

    let policy: PolicyFile =
        serde_json::from_str(&fs::read_to_string(camp.join("seed_3_policy.json")).unwrap()).unwrap();
    assert_eq!(policy.manifest.as_deref(), Some("manifest.json"));
    assert_eq!(policy.seed, Some(3));
}

#[test]
fn no_gait_without_gait_is_allowed() {
    let dir = tempfile::tempdir().unwrap();
    let o = gaitrm(&[
        "train", "--wrapper", "no_gait", "--seeds", "1", "--total-steps", "2000",
        "--eval-every", "1000", "--out", s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("none-no_gait/manifest.json").is_file());
}

fn write_policy(dir: &Path, name: &str, kind: WrapperKind, gait: Option<Gait>, choose: impl Fn(u32) -> Action) -> PathBuf {
    let mut q = QTable::new();
    for key in 0..gaitrm::learn::key_space(kind, 2) {
        q.set(key, choose(key), 1.0);
    }
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string(&PolicyFile::new(kind, gait, q)).unwrap()).unwrap();
    path
}

fn perfect_trot(dir: &Path) -> PathBuf {
    let (a, b) = Gait::Trot.poses();
    write_policy(dir, "trot.json", WrapperKind::GaitNaive, Some(Gait::Trot), move |key| {
        Action(if key == u32::from(a.bits()) { b } else { a })
    })
}

fn read_diagram(path: &Path) -> Vec<ContactDiagramRow> {
    csv::Reader::from_path(path)
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

#[test]
fn diagram_of_perfect_trot() {
    let dir = tempfile::tempdir().unwrap();
    let policy = perfect_trot(dir.path());
    let out = dir.path().join("diagram.csv");
    let o = gaitrm(&["diagram", "--policy", s(&policy), "--steps", "10", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("step,fl,fr,bl,br,rm_state,transition,ended_early\n"));
    let rows = read_diagram(&out);
    assert_eq!(rows.len(), 10);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.transition, 1);
        assert_eq!(r.rm_state, if i % 2 == 0 { "q1" } else { "q0" });
        let contacts = (r.fl, r.fr, r.bl, r.br);
        assert_eq!(contacts, if i % 2 == 0 { (0, 1, 1, 0) } else { (1, 0, 0, 1) });
        assert_eq!(r.ended_early, 0);
    }
}

#[test]
fn diagram_of_standing_and_falling() {
    let dir = tempfile::tempdir().unwrap();
    let stand = write_policy(dir.path(), "stand.json", WrapperKind::GaitNaive, Some(Gait::Trot), |_| {
        Action(LabelSet::EMPTY)
    });
    let out = dir.path().join("stand.csv");
    assert_eq!(gaitrm(&["diagram", "--policy", s(&stand), "--steps", "7", "--out", s(&out)]).status.code(), Some(0));
    let rows = read_diagram(&out);
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| (r.fl, r.fr, r.bl, r.br, r.transition) == (1, 1, 1, 1, 0)));

    let fall = write_policy(dir.path(), "fall.json", WrapperKind::GaitNaive, Some(Gait::Trot), |_| {
        Action(LabelSet::FULL)
    });
    let out = dir.path().join("fall.csv");
    let o = gaitrm(&["diagram", "--policy", s(&fall), "--steps", "7", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("ended early"));
    let rows = read_diagram(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].ended_early, 1);
}

#[test]
fn diagram_rejects_incompatible_wrapper() {
    let dir = tempfile::tempdir().unwrap();
    let policy = perfect_trot(dir.path());
    let out = dir.path().join("d.csv");
    let o = gaitrm(&[
        "diagram", "--policy", s(&policy), "--wrapper", "cross_product", "--steps", "5", "--out", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("wrapper"));
}

#[test]
fn eval_reports_metrics_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let policy = perfect_trot(dir.path());
    let traj = dir.path().join("traj.csv");
    let o = gaitrm(&["eval", "--policy", s(&policy), "--trajectory", s(&traj)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("episodes: 10"), "{out}");
    assert!(out.contains("mean_pose_transitions: 100"), "{out}");
    let text = fs::read_to_string(&traj).unwrap();
    assert!(text.starts_with("step,action,height_fl,"));
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn compare_across_wrappers() {
    let dir = tempfile::tempdir().unwrap();
    for w in WrapperKind::ALL {
        let o = gaitrm(&[
            "train", "--gait", "trot", "--wrapper", w.name(), "--seeds", "2", "--total-steps", "2000",
            "--eval-every", "1000", "--out", s(dir.path()),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    fs::remove_file(dir.path().join("trot-stack3/seed_1_curve.csv")).unwrap();
    let o = gaitrm(&["compare", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = stdout(&o);
    assert_eq!(table.lines().count(), 6, "{table}");
    let stack_line = table.lines().find(|l| l.contains("stack3")).unwrap();
    assert!(stack_line.contains("[incomplete]"));
    assert!(stack_line.contains("1/2"));

    let rows: Vec<gaitrm::cli::ComparisonRow> = csv::Reader::from_path(dir.path().join("comparison.csv"))
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows.iter().filter(|r| !r.complete).count(), 1);
}

#[test]
fn compare_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = gaitrm(&["compare", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}
