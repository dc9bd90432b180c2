use std::path::Path;
use std::process::{Command, Output};

fn osa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osa")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = osa(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = "synth_duration = 240\nper_class = 12\nfolds = 3\nconv_units = 4,4\nconv_kernel = 16,8\n\
conv_stride = 8,4\nlstm_units = 4\ndense_units = 4\nmax_epochs = 2\nbatch_size = 8\nprecision = f32\n";

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let cfg = root.join("small.cfg");
    std::fs::write(&cfg, SMALL).unwrap();
    let cohort = root.join("cohort");
    let windows = root.join("windows");
    let features = root.join("features.csv");
    let run = root.join("run");

    let msg = ok(&["synth", "--subjects-normal", "3", "--subjects-severe", "3", "--seed", "5", "--out", s(&cohort), "--config", s(&cfg)]);
    assert!(msg.contains("6 subjects"), "{msg}");
    assert!(cohort.join("manifest.jsonl").exists() && cohort.join("N0001.edf").exists() && cohort.join("S0003.xml").exists());

    ok(&["preprocess", "--in", s(&cohort), "--out", s(&windows), "--config", s(&cfg)]);
    assert!(windows.join("windows.bin").exists() && windows.join("skipped.csv").exists());

    ok(&["features", "--windows", s(&windows), "--out", s(&features)]);
    let header = std::fs::read_to_string(&features).unwrap();
    assert!(header.lines().count() > 24);

    let table = ok(&[
        "crossval", "--model", "both", "--config", s(&cfg), "--seed", "3", "--out", s(&run),
        "--windows", s(&windows), "--features", s(&features),
    ]);
    assert!(table.contains("Acc DL") && table.contains("Acc SVM"), "{table}");
    let first = std::fs::read(run.join("report.csv")).unwrap();

    std::fs::remove_file(run.join("report.csv")).unwrap();
    let again = ok(&["report", "--run", s(&run)]);
    assert_eq!(again, table);
    assert_eq!(std::fs::read(run.join("report.csv")).unwrap(), first);
}

#[test]
fn crossval_without_windows_synthesizes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.cfg");
    std::fs::write(&cfg, format!("{SMALL}synth_subjects_normal = 3\nsynth_subjects_severe = 3\n")).unwrap();
    let run = tmp.path().join("run");
    let table = ok(&["crossval", "--model", "svm", "--config", s(&cfg), "--out", s(&run)]);
    assert!(table.contains("Acc SVM") && !table.contains("Acc DL"), "{table}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(osa(&[]).status.code(), Some(1));
    assert_eq!(osa(&["crossval", "--model", "forest", "--out", "x"]).status.code(), Some(1));
    assert_eq!(osa(&["--help"]).status.code(), Some(0));

    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "colour = blue\n").unwrap();
    let out = osa(&["crossval", "--model", "svm", "--config", s(&bad), "--out", s(&tmp.path().join("r"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let missing = osa(&["preprocess", "--in", s(&tmp.path().join("nowhere")), "--out", s(&tmp.path().join("w"))]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(osa(&["report", "--run", s(tmp.path())]).status.code(), Some(2));
}
