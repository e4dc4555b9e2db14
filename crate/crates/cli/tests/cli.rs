use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_dgkd");

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    /// Toy data plus a small one-point-grid config.
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let out = run_ok(Command::new(BIN).args(["toy-data", "--train-per-domain", "30", "--out"]).arg(dir.path().join("data")));
        assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 8);
        let cfg = r#"
output_dir = "runs"
seeds = [0]
sources = [
  { name = "alpha", train = "data/alpha-train.jsonl.gz", dev = "data/alpha-dev.jsonl.gz" },
  { name = "beta", train = "data/beta-train.jsonl.gz", dev = "data/beta-dev.jsonl.gz" },
  { name = "gamma", train = "data/gamma-train.jsonl.gz", dev = "data/gamma-dev.jsonl.gz" },
]
targets = [{ name = "delta", test = "data/delta-test.jsonl.gz" }]

[windows]
max_len = 40

[student]
hidden_dim = 8
ffn_dim = 16
dropout = 0.0

[teacher]
epochs = 1

[teacher.encoder]
hidden_dim = 8
ffn_dim = 16

[grid]
learning_rates = [3e-3]
epochs = [1]

[grid.methods.kd_gold]
tau = [2.0]

[report]
methods = ["erm", "kd_gold"]
"#;
        std::fs::write(dir.path().join("cfg.toml"), cfg).unwrap();
        Self { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn dgkd(&self, args: &[&str]) -> Command {
        let mut c = Command::new(BIN);
        c.args(args).arg("--config").arg(self.path("cfg.toml"));
        c.env_remove("DGKD_OUTPUT_DIR").env_remove("DGKD_DATA_ROOT").env_remove("DGKD_JOBS");
        c
    }
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn dgkd")
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = run(cmd);
    assert!(out.status.success(), "dgkd failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn run_err(cmd: &mut Command) -> String {
    let out = run(cmd);
    assert!(!out.status.success(), "dgkd unexpectedly succeeded");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn files_under(dir: &Path) -> usize {
    std::fs::read_dir(dir).map(|r| r.count()).unwrap_or(0)
}

#[test]
fn prepare_writes_one_manifest_per_combo_and_is_idempotent() {
    let ws = Workspace::new();
    run_ok(&mut ws.dgkd(&["validate"]));
    let first = stdout(&run_ok(&mut ws.dgkd(&["prepare"])));
    assert!(first.contains("0 unchanged"), "{first}");
    assert_eq!(files_under(&ws.path("runs/combos")), 3);
    let plan = std::fs::read_to_string(ws.path("runs/plan.json")).unwrap();
    for c in ["wo-alpha", "wo-beta", "wo-gamma"] {
        assert!(plan.contains(c));
    }
    let second = stdout(&run_ok(&mut ws.dgkd(&["prepare"])));
    assert!(second.starts_with("prepare: 0 file(s) written"), "{second}");
}

#[test]
fn corrupt_gzip_input_names_the_file() {
    let ws = Workspace::new();
    std::fs::write(ws.path("data/beta-dev.jsonl.gz"), b"\x1f\x8b\x08\x00garbage").unwrap();
    let err = run_err(&mut ws.dgkd(&["prepare"]));
    assert!(err.contains("beta-dev.jsonl.gz"), "{err}");
}

#[test]
fn validate_rejects_missing_data_files() {
    let ws = Workspace::new();
    std::fs::remove_file(ws.path("data/gamma-train.jsonl.gz")).unwrap();
    let err = run_err(&mut ws.dgkd(&["validate"]));
    assert!(err.contains("gamma-train.jsonl.gz"), "{err}");
}

#[test]
fn missing_prerequisites_name_the_producing_command() {
    let ws = Workspace::new();
    let err = run_err(&mut ws.dgkd(&["train", "--method", "erm", "--combo", "wo-alpha", "--seed", "0"]));
    assert!(err.contains("dgkd prepare"), "{err}");
    run_ok(&mut ws.dgkd(&["prepare"]));
    let err = run_err(&mut ws.dgkd(&["train", "--method", "kd_gold", "--combo", "wo-alpha", "--seed", "0"]));
    assert!(err.contains("dgkd cache-logits --combo wo-alpha"), "{err}");
    let err = run_err(&mut ws.dgkd(&["cache-logits", "--combo", "wo-alpha"]));
    assert!(err.contains("dgkd train-teacher --combo wo-alpha"), "{err}");
    let err = run_err(&mut ws.dgkd(&["train", "--method", "episodic", "--combo", "wo-alpha", "--seed", "0"]));
    assert!(err.contains("dgkd train-teacher --companions"), "{err}");
    let err = run_err(&mut ws.dgkd(&["evaluate", "--method", "erm"]));
    assert!(err.contains("dgkd train --method erm --combo wo-alpha --seed 0"), "{err}");
}

#[test]
fn erm_training_is_quick_and_reproducible() {
    let ws = Workspace::new();
    run_ok(&mut ws.dgkd(&["prepare"]));
    let args = ["train", "--method", "erm", "--combo", "wo-beta", "--seed", "3"];
    let started = Instant::now();
    let a = stdout(&run_ok(&mut ws.dgkd(&args)));
    assert!(started.elapsed().as_secs() < 300);
    let result = ws.path("runs/runs/erm/wo-beta/p0-s3/result.json");
    let first = std::fs::read(&result).unwrap();
    let b = stdout(&run_ok(&mut ws.dgkd(&args)));
    assert_eq!(a, b);
    assert_eq!(first, std::fs::read(&result).unwrap());
    assert!(ws.path("runs/runs/erm/wo-beta/p0-s3/log.jsonl").exists());
}

#[test]
fn full_pipeline_reports_are_refused_when_partial_and_stable_when_regenerated() {
    let ws = Workspace::new();
    for step in [&["prepare"][..], &["train-teacher"], &["cache-logits"], &["sweep", "--method", "kd_gold"]] {
        run_ok(&mut ws.dgkd(step));
    }
    let manifest = std::fs::read_to_string(ws.path("runs/sweeps/kd_gold.json")).unwrap();
    assert_eq!(manifest.matches("\"combo\"").count(), 3);

    run_ok(&mut ws.dgkd(&["train", "--method", "erm", "--jobs", "2"]));
    run_ok(&mut ws.dgkd(&["evaluate", "--method", "erm"]));
    let err = run_err(&mut ws.dgkd(&["report"]));
    assert!(err.contains("kd_gold") && err.contains("--allow-partial"), "{err}");
    let partial = stdout(&run_ok(&mut ws.dgkd(&["report", "--allow-partial"])));
    assert!(partial.contains("| erm |") && !partial.contains("| kd_gold |"));

    run_ok(&mut ws.dgkd(&["train", "--method", "kd_gold"]));
    run_ok(&mut ws.dgkd(&["evaluate"]));
    let report = stdout(&run_ok(&mut ws.dgkd(&["report"])));
    assert!(report.contains("| kd_gold |") && report.contains("| Method | delta | Avg. |"), "{report}");
    let saved = std::fs::read(ws.path("runs/reports/report.md")).unwrap();
    run_ok(&mut ws.dgkd(&["report"]));
    assert_eq!(saved, std::fs::read(ws.path("runs/reports/report.md")).unwrap());

    let csv = stdout(&run_ok(&mut ws.dgkd(&["coverage"])));
    assert!(csv.starts_with("covered,covering,coverage_pct,examples\n"));
    // One non-baseline method has no ordered pairs.
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let ws = Workspace::new();
    let elsewhere = ws.path("elsewhere");
    run_ok(ws.dgkd(&["prepare"]).env("DGKD_OUTPUT_DIR", &elsewhere));
    assert!(elsewhere.join("plan.json").exists());
    assert!(!ws.path("runs").exists());
}
