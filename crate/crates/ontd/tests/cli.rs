use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ontd::report::strip_timestamp;

fn ontd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ontd")).args(args).env_remove("ONTD_CONFIG").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_decompose_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    assert_eq!(code(&ontd(&["synth", "--ranks", "3,2,2", "--seed", "7", "--out", s(&d)])), 0);
    let fit = dir.path().join("fit");
    let o = ontd(&["decompose", s(&d.join("A.dtt")), "--ranks", "3,2,2", "--theta", "0", "--max-iter", "3000", "--out", s(&fit)]);
    assert!(code(&o) == 0 || code(&o) == 4, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.txt", "timing.txt", "residuals_mode1.csv", "model/model.txt", "model/core.dtt", "model/U3.csv"] {
        assert!(fit.join(f).exists(), "{f}");
    }
    let report = fs::read_to_string(fit.join("report.txt")).unwrap();
    assert!(report.starts_with("timestamp = "));
    assert!(report.contains("theta = 0.0000000000000000e0"));

    let o = ontd(&["evaluate", s(&fit.join("model")), "--truth", s(&d.join("truth")), "--out", s(&fit)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("mode1.match_error") && text.contains("mode3.similarity"));
    let err: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("reconstruction_relative_error = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err <= 1e-3, "{err}");
    assert!(fit.join("evaluation.txt").exists());

    let o = ontd(&["reconstruct", s(&fit.join("model")), "--format", "binary", "--out", s(&fit)]);
    assert_eq!(code(&o), 0);
    let o = ontd(&["info", s(&fit.join("reconstruction.dttb"))]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("dims: 12 8 8"));
}

#[test]
fn info_on_small_text_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.dtt");
    fs::write(&p, "DTT\n2\n2 2\n1 2 3 4").unwrap();
    let o = ontd(&["info", s(&p)]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().contains("dims: 2 2\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.dtt");
    fs::write(&p, "DTT\n2\n2 2\n1 2 3 4").unwrap();
    assert_eq!(code(&ontd(&["decompose", s(&p), "--ranks", "0,1"])), 1);
    assert_eq!(code(&ontd(&["decompose", s(&p), "--ranks", "1,1", "--gamma", "2"])), 1);
    assert_eq!(code(&ontd(&["decompose", s(&p)])), 1);
    assert_eq!(code(&ontd(&["decompose", s(&p), "--bogus"])), 1);
    fs::write(dir.path().join("bad.dtt"), "DTT\n2\n2 2\n1 2 3").unwrap();
    assert_eq!(code(&ontd(&["info", s(&dir.path().join("bad.dtt"))])), 2);
    assert_eq!(code(&ontd(&["info", s(&dir.path().join("missing.dtt"))])), 2);

    let out = dir.path().join("o");
    let o = ontd(&["decompose", s(&p), "--ranks", "1,1", "--max-iter", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 4);
    assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("status = max_iter"));
}

#[test]
fn config_file_and_env_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "ranks = 2,2\nseed = 5\nformat = binary\ntheta = 0.3\n").unwrap();
    let out = dir.path().join("o");
    let o = Command::new(env!("CARGO_BIN_EXE_ontd"))
        .args(["synth", "--seed", "6", "--out", s(&out)])
        .env("ONTD_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("synth.txt")).unwrap();
    assert!(text.contains("seed = 6\n") && text.contains("ranks = 2,2\n") && text.contains("format = binary\n"));
    assert!(out.join("A.dttb").exists());

    let o = ontd(&["synth", "--config", s(&cfg), "--theta", "0.7", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(out.join("synth.txt")).unwrap();
    let theta: f64 = text.lines().find_map(|l| l.strip_prefix("theta = ")).unwrap().parse().unwrap();
    assert_eq!(theta, 0.7);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    assert_eq!(code(&ontd(&["synth", "--ranks", "2,3,2", "--dims", "7,9,6", "--noise", "0.05", "--seed", "11", "--format", "binary", "--out", s(&d)])), 0);
    let input = d.join("A.dttb");
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["decompose", s(&input), "--ranks", "2,3,2", "--format", "binary", "--out", s(&out)];
        args.extend_from_slice(extra);
        let o = ontd(&args);
        assert!(code(&o) == 0 || code(&o) == 4);
        out
    };
    let a = run("a", &[]);
    let b = run("b", &[]);
    let c = run("c", &["--parallel-modes"]);
    for f in ["model/core.dttb", "model/U1.csv", "model/U2.csv", "model/U3.csv", "residuals_mode2.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(c.join(f)).unwrap(), "{f}");
    }
    // Only the timestamp and the output directory may differ.
    let report = |p: &Path| {
        strip_timestamp(&fs::read_to_string(p.join("report.txt")).unwrap())
            .replace(s(p), "OUT")
            .replace("parallel_modes = true", "parallel_modes = false")
    };
    assert_eq!(report(&a), report(&b));
    assert_eq!(report(&a), report(&c));
}
