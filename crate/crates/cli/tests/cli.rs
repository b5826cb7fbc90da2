use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pstlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pstlab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PSTLAB_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const SLICING: &str = "experiment = \"slicing\"\nseed = 5\n[twirl]\nmode = \"sampled\"\ncount = 4\n\
                       [slicing]\nm = [1, 2, 4]\n";

#[test]
fn version_prints_crate_version() {
    let dir = tempfile::tempdir().unwrap();
    let out = pstlab(&["version"], dir.path());
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("pstlab {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn identities_for_one_qubit_pass_and_write_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = pstlab(&["identities", "--n", "1", "--out-dir", "ids"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("pass")).count(), 6);
    let csv = fs::read_to_string(dir.path().join("ids/identities.csv")).unwrap();
    assert!(csv.starts_with("check,n,trials,max_residual,tolerance,passed\n"));
}

#[test]
fn run_output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SLICING);
    for (threads, sub) in [("1", "a"), ("4", "b")] {
        let out = pstlab(&["run", &cfg, "--threads", threads, "--out-dir", sub], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir.path().join("a/slicing.csv")).unwrap();
    let b = fs::read(dir.path().join("b/slicing.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn env_var_sets_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SLICING);
    let out = Command::new(env!("CARGO_BIN_EXE_pstlab"))
        .args(["run", &cfg, "--seed", "9"])
        .current_dir(dir.path())
        .env("PSTLAB_OUT_DIR", "env-out")
        .output()
        .unwrap();
    assert!(out.status.success());
    let sidecar = fs::read_to_string(dir.path().join("env-out/slicing.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&sidecar).unwrap();
    assert_eq!(json["metadata"]["seed"], 9);
    assert_eq!(json["config"]["seed"], 9);
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("parse.toml", "experiment = \"slicing\"\nseed = 1\nunknown = 2\n", 2, "unknown"),
        ("noseed.toml", "experiment = \"slicing\"\n", 2, "seed"),
        ("invalid.toml", "experiment = \"slicing\"\nseed = 1\n[slicing]\nm = [1, 0, 2]\n", 3, "slicing.m[1]"),
        ("overflow.toml", "experiment = \"slicing\"\nseed = 1\n[slicing]\nzeta = 1e300\n", 4, "non-finite"),
    ];
    for (name, text, code, needle) in cases {
        let cfg = write_config(dir.path(), name, text);
        let out = pstlab(&["run", &cfg, "--out-dir", "o"], dir.path());
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(code), "{name}: {stderr}");
        assert!(stderr.contains(needle), "{name}: {stderr}");
    }
    let missing = pstlab(&["run", "does-not-exist.toml"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    let bad_flag = pstlab(&["identities", "--n", "4"], dir.path());
    assert_eq!(bad_flag.status.code(), Some(2));
}
