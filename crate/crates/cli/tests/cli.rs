use std::process::{Command, Output};

fn qktlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qktlab")).args(args).output().expect("binary runs")
}

fn without_wall_time(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).lines().filter(|l| !l.contains("wall_time_s")).collect::<Vec<_>>().join("\n")
}

#[test]
fn list_shows_builtins() {
    let out = qktlab(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["flat8", "hopf8", "solv8"] {
        assert!(text.contains(name), "{text}");
    }
    assert!(text.contains("HKT, non-balanced"));
    assert!(text.contains("QKT, non-HKT"));
}

#[test]
fn verify_passes_and_emits_json() {
    let out = qktlab(&["verify", "--model", "flat8", "--suite", "structure"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"suite\": \"structure\""));
    assert!(text.contains("\"pass\": true"));
}

#[test]
fn unknown_model_and_suite_exit_2() {
    let out = qktlab(&["verify", "--model", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown model 'nope'"));
    let out = qktlab(&["verify", "--model", "flat8", "--suite", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qktlab(&["verify", "--model", "flat8", "--tol", "abc"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_check_exits_1() {
    let out = qktlab(&["verify", "--model", "solv8", "--suite", "hkt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL hkt.precondition"));
}

#[test]
fn out_file_gets_the_report() {
    let path = std::env::temp_dir().join(format!("qktlab-{}.json", std::process::id()));
    let out = qktlab(&["verify", "--model", "hopf8", "--suite", "hkt", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let json = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(json.contains("\"model\": \"hopf8\""));
}

#[test]
fn identical_flags_identical_reports() {
    let args = ["verify", "--model", "solv8", "--suite", "twistor", "--seed", "3", "--c", "0.8"];
    let (a, b) = (qktlab(&args), qktlab(&args));
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(without_wall_time(&a.stdout), without_wall_time(&b.stdout));
}

#[test]
fn classify_prints_table() {
    let out = qktlab(&["classify", "--model", "flat8"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().any(|l| l.starts_with("hermitian") && l.contains("yes")));
    assert_eq!(text.lines().count(), 2 + 7);
}

#[test]
fn model_file_path_is_accepted() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/flat8.toml");
    let out = qktlab(&["verify", "--model", path, "--suite", "structure"]);
    assert_eq!(out.status.code(), Some(0));
}
