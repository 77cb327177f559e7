use std::path::Path;
use std::process::Command;

fn reconkit(args: &[&str], out: &Path) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_reconkit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    status.status.code().expect("exit code")
}

fn bare(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_reconkit")).args(args).output().unwrap().status.code().unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn algebra_check_passes_on_builtin_structures() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(reconkit(&["algebra-check", "--structure", "poly:4"], dir.path()), 0);
    let v = read_json(&dir.path().join("algebra_check.json"));
    assert_eq!(v["passed"], true);
    assert_eq!(reconkit(&["algebra-check", "--structure", "phi4", "--format", "csv"], dir.path()), 0);
    assert!(dir.path().join("algebra_check.csv").exists());
}

#[test]
fn unreadable_structure_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"d\": 1, ").unwrap();
    assert_eq!(reconkit(&["algebra-check", "--structure", bad.to_str().unwrap()], dir.path()), 2);
    assert_eq!(reconkit(&["algebra-check", "--structure", "poly:abc"], dir.path()), 2);
}

#[test]
fn corrupted_coproduct_fails_the_check() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(reconkit(&["build-structure", "--structure", "poly:2"], dir.path()), 0);
    let path = dir.path().join("structure.json");
    let mut v = read_json(&path);
    // X ↦ X ⊗ 1 + 1 ⊗ X+ becomes X ↦ X ⊗ 1 + 2 · 1 ⊗ X+
    v["delta"][4]["row"][0][2] = serde_json::json!("2");
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let out = dir.path().join("check");
    assert_eq!(reconkit(&["algebra-check", "--structure", path.to_str().unwrap()], &out), 1);
    let report = read_json(&out.join("algebra_check.json"));
    assert_eq!(report["passed"], false);
}

#[test]
fn bad_arguments_exit_with_two() {
    assert_eq!(bare(&["algebra-check", "--structure", "poly:4", "--grid", "1,30"]), 2);
    assert_eq!(bare(&["algebra-check", "--structure", "poly:4", "--tol", "foo=1"]), 2);
    assert_eq!(bare(&["algebra-check", "--structure", "poly:4", "--tol", "pi=-1"]), 2);
    assert_eq!(bare(&["frobnicate"]), 2);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(reconkit(&["brackets"], dir.path()), 2);
    assert_eq!(reconkit(&["build-model", "--structure", "phi4"], dir.path()), 2);
}

#[test]
fn missing_field_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.rkf");
    assert_eq!(reconkit(&["regularity", "--fields", missing.to_str().unwrap(), "--gamma", "1"], dir.path()), 2);
}

#[test]
fn polynomial_flow_through_the_commands() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(reconkit(&["build-model", "--structure", "poly:4", "--grid", "1,10"], p), 0);
    for name in ["structure.json", "model.json", "model.rkf", "model_report.json"] {
        assert!(p.join(name).exists(), "{name}");
    }
    let model = p.join("model.json");
    assert_eq!(reconkit(&["brackets", "--model", model.to_str().unwrap()], p), 0);
    let csv = std::fs::read_to_string(p.join("regularity.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("symbol,declared,estimated,pass"));

    let fields = p.join("model.rkf");
    let reg = p.join("reg");
    assert_eq!(reconkit(&["regularity", "--fields", fields.to_str().unwrap(), "--gamma", "0"], &reg), 0);
    assert!(reg.join("regularity.json").exists());
    assert_eq!(
        reconkit(&["regularity", "--fields", fields.to_str().unwrap(), "--gamma", "0", "--format", "csv"], &reg),
        0
    );
    assert!(reg.join("regularity.csv").exists());

    let rec = p.join("rec");
    assert_eq!(reconkit(&["reconstruct", "--model", model.to_str().unwrap()], &rec), 0);
}

#[test]
fn tree_model_round_trips_through_brackets() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(reconkit(&["build-model", "--structure", "phi4", "--grid", "1,10", "--seed", "3"], p), 0);
    let model = p.join("model.json");
    let code = reconkit(&["brackets", "--model", model.to_str().unwrap()], p);
    // a single noise draw may scatter past the regularity tolerance
    assert!(code == 0 || code == 1);
    let report = read_json(&p.join("brackets_report.json"));
    assert_eq!(report["report"]["items"][0]["passed"], true);
    let brackets = p.join("brackets.json");
    let fb = p.join("fb");
    assert_eq!(reconkit(&["from-brackets", "--brackets", brackets.to_str().unwrap()], &fb), 0);
    assert!(fb.join("model.json").exists());
    assert_eq!(reconkit(&["roundtrip", "--structure", "phi4", "--grid", "1,10", "--seed", "3"], &p.join("rt")), 0);
}

#[test]
fn tightened_tolerance_fails_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["build-model", "--structure", "phi4", "--grid", "1,10", "--seed", "3"];
    assert_eq!(reconkit(&args, &dir.path().join("a")), 0);
    let mut tight = args.to_vec();
    tight.extend(["--tol", "transition=0"]);
    assert_eq!(reconkit(&tight, &dir.path().join("b")), 1);
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["build-model", "--structure", "phi4", "--grid", "1,9", "--seed", "11"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(reconkit(&args, &a), 0);
    assert_eq!(reconkit(&args, &b), 0);
    for name in ["structure.json", "model.json", "model.rkf", "model_report.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}
