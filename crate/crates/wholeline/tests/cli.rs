//! End-to-end checks of the command line tool and the shipped configurations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use wholeline::config::presets;
use wholeline::report::read_csv;
use wholeline::ExperimentConfig;

const SMALL: &str = r#"
problem = "gaussian"
boundary = "ced"
scheme = "irk4"
domain.x_l = -5.0
domain.x_r = 5.0
domain.orders = [20, 120, 600]
time.final = 0.02
time.steps = 20
output.stride = 5
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wholeline"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_config(config: &Path, out: &Path) -> std::process::Output {
    bin().arg("run").arg(config).arg("--out").arg(out).output().unwrap()
}

#[test]
fn run_writes_series_summary_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = run_config(&cfg, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(fs::File::open(dir.path().join("small.csv")).unwrap()).unwrap();
    // samples at steps 0, 5, 10, 15, 20
    assert_eq!(rows.len(), 5);
    let times: Vec<f64> = rows.iter().map(|r| r[0].unwrap()).collect();
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    assert!((times[4] - 0.02).abs() < 1e-15);
    let last = &rows[4];
    assert!(last[1].unwrap() < 1e-6, "delta {:?}", last[1]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("small.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["steps_completed"], 20);
    assert_eq!(summary["config"]["scheme"], "irk4");
    let field = fs::read_to_string(dir.path().join("small_field.csv")).unwrap();
    assert_eq!(field.lines().count(), 1 + 21 + 121 + 601);
}

#[test]
fn identical_configs_give_identical_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run_config(&cfg, &a).status.success());
    assert!(run_config(&cfg, &b).status.success());
    assert_eq!(fs::read(a.join("small.csv")).unwrap(), fs::read(b.join("small.csv")).unwrap());
    assert_eq!(fs::read(a.join("small_field.csv")).unwrap(), fs::read(b.join("small_field.csv")).unwrap());
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let tbc_with_exteriors = SMALL.replace("boundary = \"ced\"", "boundary = \"tbc\"").replace("scheme = \"irk4\"", "scheme = \"cn\"");
    let missing_layer = SMALL.replace("boundary = \"ced\"", "boundary = \"pml\"");
    for (i, text) in [tbc_with_exteriors.as_str(), missing_layer.as_str(), "problem = 3", "not toml ["].iter().enumerate() {
        let cfg = write(dir.path(), &format!("bad{i}.toml"), text);
        assert_eq!(run_config(&cfg, dir.path()).status.code(), Some(2), "case {i}");
    }
    assert_eq!(run_config(&dir.path().join("missing.toml"), dir.path()).status.code(), Some(2));
    let cfg = write(dir.path(), "small.toml", SMALL);
    let invalid = bin().args(["sweep"]).arg(&cfg).args(["--param", "domain.x_r", "--values", "4,-9"]).output().unwrap();
    assert_eq!(invalid.status.code(), Some(2));
    let single = bin().args(["converge"]).arg(&cfg).args(["--resolutions", "20"]).output().unwrap();
    assert_eq!(single.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three_and_flags_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
problem = "soliton"
boundary = "ced"
scheme = "irk4"
domain.x_l = -5.0
domain.x_r = 5.0
domain.orders = [12, 48, 12]
time.final = 0.1
time.steps = 10
soliton.a = 1.0
soliton.c = 0.0
solver.tolerance = 1e-300
solver.max_iterations = 2
"#;
    let cfg = write(dir.path(), "stiff.toml", text);
    let out = run_config(&cfg, dir.path());
    assert_eq!(out.status.code(), Some(3));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("stiff.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "failed");
    assert_eq!(summary["partial"], true);
    assert_eq!(summary["steps_completed"], 0);
    assert!(summary["failure"].as_str().unwrap().contains("step 1"));
}

#[test]
fn converge_and_sweep_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", &SMALL.replace("scheme = \"irk4\"", "scheme = \"cn\""));
    let out = bin().arg("converge").arg(&cfg).args(["--resolutions", "10,20,40", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("small_converge.json")).unwrap()).unwrap();
    let order = report["order"].as_f64().unwrap();
    assert!((order - 2.0).abs() < 0.3, "order {order}");
    assert!(dir.path().join("small_n40.csv").exists());

    let out = bin()
        .arg("sweep")
        .arg(&cfg)
        .args(["--param", "domain.x_r", "--values", "4,5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("small_sweep.json")).unwrap()).unwrap();
    assert_eq!(report["entries"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("small_domain_x_r_4.csv").exists());
}

#[test]
fn shipped_configurations_match_presets() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in presets::NAMES {
        let path = root.join(format!("{name}.toml"));
        let config = ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(config, presets::get(name).unwrap(), "{name}");
    }
}

#[test]
fn presets_command_prints_loadable_configuration() {
    let out = bin().args(["presets", "linear-tbc"]).output().unwrap();
    assert!(out.status.success());
    let config = ExperimentConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(config, presets::get("linear-tbc").unwrap());
    assert_eq!(bin().args(["presets", "nope"]).output().unwrap().status.code(), Some(2));
}
