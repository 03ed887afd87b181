use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn aspp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aspp"))
        .args(args)
        .env_remove("ASPP_THREADS")
        .output()
        .unwrap()
}

fn asset(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "assets", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn summary(out: &Output) -> Value {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(text.lines().count(), 1, "stdout: {text}");
    serde_json::from_str(&text).unwrap()
}

#[test]
fn glider_spec_passes() {
    let out = aspp(&["life", "validate", "--pattern", &asset("glider.rle"), "--spec", &asset("glider.spec")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&out)["passed"], true);
}

#[test]
fn failing_spec_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("wrong.spec");
    std::fs::write(&spec, "name = blinker\nkind = still-life\nperiod = 1\n").unwrap();
    let out = aspp(&["life", "validate", "--pattern", &asset("blinker.rle"), "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(summary(&out)["passed"], false);
}

#[test]
fn path_diameter() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path4.edges");
    std::fs::write(&path, "4 3 0\n0 1\n1 2\n2 3\n").unwrap();
    let out = aspp(&["graph", "diameter", "--graph", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&out)["diameter"], 3);

    std::fs::write(&path, "2 0 0\n").unwrap();
    let out = aspp(&["graph", "diameter", "--graph", path.to_str().unwrap()]);
    assert_eq!(summary(&out)["diameter"], "inf");
}

#[test]
fn complete_graph_estimate_respects_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k10.edges");
    let mut text = String::from("10 45 0\n");
    for a in 0..10 {
        for b in a + 1..10 {
            text.push_str(&format!("{a} {b}\n"));
        }
    }
    std::fs::write(&path, text).unwrap();
    let out = aspp(&[
        "converge", "estimate", "--alpha", "0.76", "--graph", path.to_str().unwrap(), "--trials", "10000", "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(summary(&out)["estimated_c"].as_f64().unwrap() <= 0.76);
}

#[test]
fn usage_errors_exit_two() {
    let out = aspp(&["life", "run", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = aspp(&["life", "run", "--pattern", "/definitely/missing.rle"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.rle");
    std::fs::write(&bad, "x = 2, y = 1\nq!").unwrap();
    let out = aspp(&["life", "run", "--pattern", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn every_subcommand_has_help_with_defaults() {
    let leaves: &[&[&str]] = &[
        &["life", "run"],
        &["life", "validate"],
        &["life", "soup-check"],
        &["converge", "estimate"],
        &["converge", "uniqueness"],
        &["converge", "decay"],
        &["color", "ablate"],
        &["color", "gen"],
        &["mpnn", "check"],
        &["mpnn", "influence"],
        &["distill", "demo"],
        &["graph", "diameter"],
    ];
    for leaf in leaves {
        let mut args = leaf.to_vec();
        args.push("--help");
        let out = aspp(&args);
        assert_eq!(out.status.code(), Some(0), "{leaf:?}");
        let help = String::from_utf8(out.stdout).unwrap();
        assert!(help.contains("--threads") && help.contains("--out"), "{leaf:?}");
    }
    let help = String::from_utf8(aspp(&["life", "soup-check", "--help"]).stdout).unwrap();
    assert!(help.contains("[default: 1000]"));
}

#[test]
fn artifacts_land_in_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("nested/out");
    let out = aspp(&["color", "gen", "--n", "12", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let edges = std::fs::read_to_string(out_dir.join("instance.edges")).unwrap();
    assert!(edges.starts_with("12 24 0\n"));
    let witness = std::fs::read_to_string(out_dir.join("instance.witness")).unwrap();
    assert_eq!(witness.lines().count(), 12);

    let out = aspp(&["life", "run", "--pattern", &asset("blinker.rle"), "--steps", "2", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rle = std::fs::read_to_string(out_dir.join("final.rle")).unwrap();
    let blinker = std::fs::read_to_string(asset("blinker.rle")).unwrap();
    let count = |t: &str| t.matches('o').count();
    assert_eq!(count(&rle), count(blinker.lines().last().unwrap()));
}

#[test]
fn render_goes_to_stderr() {
    let out = aspp(&["life", "run", "--pattern", &asset("block.rle"), "--steps", "1", "--render", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let frames = String::from_utf8(out.stderr.clone()).unwrap();
    assert!(frames.contains("t=0") && frames.contains("t=1") && frames.contains('#'));
    summary(&out);
}
