use std::path::Path;
use std::process::{Command, Output};

fn pnn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnn"))
        .args(args)
        .current_dir(dir)
        .env_remove("PNN_OUTPUT_ROOT")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn help_on_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["generate", "train", "gridsearch", "evaluate", "gpr", "report"] {
        let o = pnn(dir.path(), &[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(!o.stdout.is_empty());
    }
    assert_eq!(pnn(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(pnn(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn unknown_flag_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pnn(dir.path(), &["train", "--bogus"]).status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[model]\ndepht = 3\n").unwrap();
    let o = pnn(dir.path(), &["generate", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("depht"), "{}", stderr(&o));
}

#[test]
fn generate_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = pnn(dir.path(), &["generate", "--benchmark", "cubic", "--seed", "1", "-o", "c"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_rows(&dir.path().join("c/train.csv")), 1000);
    assert_eq!(data_rows(&dir.path().join("c/test.csv")), 500);
    let o = pnn(dir.path(), &["generate", "--benchmark", "ishigami", "--seed", "1", "-o", "i"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_rows(&dir.path().join("i/train.csv")), 3000);
    assert_eq!(data_rows(&dir.path().join("i/test.csv")), 1000);
}

#[test]
fn default_output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pnn"))
        .args(["generate", "--benchmark", "cubic", "--n-unique", "5", "--test-n-unique", "5"])
        .current_dir(dir.path())
        .env("PNN_OUTPUT_ROOT", "out")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("out/generate/train.csv").exists());
    assert!(dir.path().join("out/generate/manifest.json").exists());
}

#[test]
fn regeneration_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = pnn(dir.path(), &["generate", "--benchmark", "ishigami", "--seed", "9", "--n-unique", "20", "-o", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["train.csv", "test.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join("a").join(f)).unwrap(),
            std::fs::read(dir.path().join("b").join(f)).unwrap()
        );
    }
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pnn(dir.path(), &["train", "--train", "nope.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.csv"));
}

#[test]
fn malformed_csv_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "x,y\n1,2\n3,abc\n").unwrap();
    let o = pnn(dir.path(), &["train", "--train", "bad.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn divergence_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = pnn(dir.path(), &["generate", "--benchmark", "cubic", "--n-unique", "20", "-o", "d"]);
    assert!(o.status.success());
    let o = pnn(dir.path(), &["train", "--train", "d/train.csv", "--learning-rate", "1e300", "--epochs", "5", "-o", "t"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let msg = stderr(&o);
    assert!(msg.contains("epoch") && msg.contains("step"), "{msg}");
}

#[test]
fn checkpoints_round_trip_through_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let o = pnn(dir.path(), args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    };
    run(&["generate", "--benchmark", "cubic", "--n-unique", "30", "--test-n-unique", "10", "-o", "d"]);
    run(&["train", "--train", "d/train.csv", "--depth", "2", "--width", "4", "--epochs", "20", "-o", "t"]);
    run(&["evaluate", "--checkpoint", "t/checkpoint.json", "--test", "d/test.csv", "-o", "e1"]);
    run(&["evaluate", "--checkpoint", "t/checkpoint.json", "--test", "d/test.csv", "-o", "e2"]);
    let report = |d: &str| std::fs::read(dir.path().join(d).join("report.json")).unwrap();
    assert_eq!(report("e1"), report("e2"));

    run(&[
        "gpr", "--train", "d/train.csv", "--test", "d/test.csv",
        "--length-scale-bounds", "0.3,1", "--noise-variances", "0.01,0.1", "-o", "g",
    ]);
    run(&["evaluate", "--checkpoint", "g/checkpoint.json", "--test", "d/test.csv", "-o", "e3"]);
    let gpr_report: serde_json::Value = serde_json::from_slice(&report("g")).unwrap();
    let eval_report: serde_json::Value = serde_json::from_slice(&report("e3")).unwrap();
    let (a, b) = (
        gpr_report["r_squared"].as_f64().unwrap(),
        eval_report["r_squared"].as_f64().unwrap(),
    );
    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    for f in ["scatter_mean.csv", "scatter_interval.csv", "manifest.json"] {
        assert!(dir.path().join("e3").join(f).exists(), "{f}");
    }
}

#[test]
fn report_collects_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let o = pnn(dir.path(), &["generate", "--benchmark", "cubic", "--n-unique", "5", "-o", "runs/a"]);
    assert!(o.status.success());
    let o = pnn(dir.path(), &["report", "--root", "runs", "-o", "summary"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("summary/summary.json")).unwrap();
    assert!(text.contains("generate"));
}
