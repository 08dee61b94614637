//! End-to-end behavior of the `hsmax` binary on small configs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hsmax_cli::config::RunConfig;
use tempfile::TempDir;

const HEADER: &str = r#"
seed = 0

[grids.line]
dim = 1
extent = 8.0
n = 256

[kernels.gauss]
family = "gaussian"

[scales.line]
grid = "line"

[families.bump]
spec = { family = "bump", center = [0.0], width = 1.0 }
"#;

fn hsmax(dir: &TempDir, body: &str, args: &[&str]) -> Output {
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, format!("{HEADER}\n{body}")).unwrap();
    Command::new(env!("CARGO_BIN_EXE_hsmax"))
        .args(args)
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn reports(dir: &TempDir) -> Vec<serde_json::Value> {
    let text = fs::read_to_string(dir.path().join("out/reports.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn exponent_below_the_admissible_range_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let body = r#"
[evaluations.too-small]
operator = "hardy-sobolev"
input = "bump"
grid = "line"
scales = "line"
p = 0.4
"#;
    let o = hsmax(&dir, body, &["run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("1/p < 1 + 1/d"), "{}", stderr(&o));
}

#[test]
fn empty_check_list_succeeds_with_no_reports() {
    let dir = TempDir::new().unwrap();
    let o = hsmax(&dir, "", &["run"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(reports(&dir).is_empty());
}

#[test]
fn weak_embedding_reports_one_passing_row_per_case() {
    let dir = TempDir::new().unwrap();
    let body = "[checks.we]\nkind = \"weak-embedding\"\nseed = 1\ncount = 100\n";
    let o = hsmax(&dir, body, &["run"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = reports(&dir);
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r["pass"] == true));
    assert_eq!(rows[0]["check_id"], "we/000");
}

#[test]
fn unresolved_kernel_name_is_reported() {
    let dir = TempDir::new().unwrap();
    let body = r#"
[evaluations.m]
operator = "maximal"
input = "bump"
grid = "line"
kernel = "gaussian-typo"
scales = "line"
"#;
    let o = hsmax(&dir, body, &["describe"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("evaluations.m") && err.contains("gaussian-typo"), "{err}");
}

#[test]
fn describe_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let body = "[checks.um]\nkind = \"unit-mass\"\n";
    let a = hsmax(&dir, body, &["describe"]);
    let b = hsmax(&dir, body, &["describe"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).contains("claim:"));
    assert!(!dir.path().join("out").exists(), "describe must not write outputs");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let o = hsmax(&dir, "[checks.um]\nkind = \"unit-mass\"\ntolerence = 1.0\n", &["describe"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tolerence"), "{}", stderr(&o));
}

#[test]
fn hex_float_literals_parse_exactly() {
    let text = format!(
        "{HEADER}\n[checks.t]\nkind = \"theorem1\"\nfamily = \"bump\"\nkernel = \"gauss\"\ngrid = \"line\"\np = 0x1.ccccccccccccdp-1\n"
    );
    let cfg = RunConfig::parse(&text).unwrap();
    let json = serde_json::to_value(&cfg.checks["t"]).unwrap();
    assert_eq!(json["p"].as_f64().unwrap().to_bits(), 0.9f64.to_bits());
}

#[test]
fn oversized_work_exceeds_the_memory_budget() {
    let dir = TempDir::new().unwrap();
    let body = "[limits]\nmemory_mb = 1\n\n[grids.big]\ndim = 2\nextent = 8.0\nn = 1024\n\n\
                [evaluations.s]\noperator = \"sample\"\ninput = \"bump2\"\ngrid = \"big\"\n\n\
                [families.bump2]\nspec = { family = \"bump\", center = [0.0, 0.0], width = 1.0 }\n";
    let o = hsmax(&dir, body, &["run"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("memory_mb"));
}

#[test]
fn tiny_tolerance_scale_fails_the_check_but_still_writes_reports() {
    let dir = TempDir::new().unwrap();
    let body = "[checks.um]\nkind = \"unit-mass\"\n";
    let o = hsmax(&dir, body, &["run", "--tolerance-scale", "1e-30"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let rows = reports(&dir);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["pass"], false);
    assert!(Path::new(&dir.path().join("out/summary.csv")).exists());
}

#[test]
fn non_positive_tolerance_scale_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = hsmax(&dir, "", &["run", "--tolerance-scale", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_override_changes_seeded_checks_only_through_the_seed() {
    let body = "[checks.co]\nkind = \"conv-oracle\"\nseed = 0\ncount = 5\n";
    let run = |seed: &str| {
        let dir = TempDir::new().unwrap();
        let o = hsmax(&dir, body, &["run", "--seed", seed]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let mut r = reports(&dir).remove(0);
        r.as_object_mut().unwrap().remove("runtime_s");
        r
    };
    assert_eq!(run("4"), run("4"));
    assert_ne!(run("4")["inputs_digest"], run("5")["inputs_digest"]);
}
