use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sbridge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbridge")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn strip_wall_ms(jsonl: &str) -> Vec<serde_json::Value> {
    jsonl
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            v.as_object_mut().unwrap().remove("wall_ms");
            v
        })
        .collect()
}

#[test]
fn experiment_writes_outputs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = sbridge(&["experiment", "unimodal1d", "--seed", "7", "--n", "40", "--out", path(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in [
        "report.csv",
        "summary.csv",
        "trajectories_forward.csv",
        "trajectories_backward.csv",
    ] {
        let x = fs::read(a.join(name)).unwrap();
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let da = fs::read_to_string(a.join("diagnostics.jsonl")).unwrap();
    let db = fs::read_to_string(b.join("diagnostics.jsonl")).unwrap();
    assert_eq!(da.lines().count(), 5);
    assert_eq!(strip_wall_ms(&da), strip_wall_ms(&db));

    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    assert!(summary.starts_with("preset,method,seed,pi0_ks,pi0_emd,pi1_ks,pi1_emd\nunimodal1d,IPML,7,"));
}

#[test]
fn eval_of_a_file_against_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("x.csv");
    fs::write(&f, "x1,x2\n0.5,1\n-2,3\n4,0.25\n").unwrap();
    let out = dir.path().join("out");
    let o = sbridge(&["eval", path(&f), path(&f), "--out", path(&out)]);
    assert!(o.status.success());
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    for line in report.lines().skip(1) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(v, 0.0, "{line}");
    }
}

#[test]
fn mismatched_dimensions_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    fs::write(&a, "x1\n0\n1\n").unwrap();
    fs::write(&b, "x1,x2\n0,0\n1,1\n").unwrap();
    let o = sbridge(&["eval", path(&a), path(&b)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension"));

    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[data]\npi0 = \"a.csv\"\npi1 = \"b.csv\"\n").unwrap();
    let out = dir.path().join("out");
    let o = sbridge(&["solve", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension"));
    assert!(!out.join("report.csv").exists());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(sbridge(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(sbridge(&["experiment", "nosuchpreset"]).status.code(), Some(1));
    assert_eq!(sbridge(&["solve"]).status.code(), Some(1));
    assert_eq!(sbridge(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "preset = \"unimodal1d\"\ndt = 0.3\n").unwrap();
    let o = sbridge(&["solve", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`dt`"));
}

#[test]
fn sinkhorn_and_prior_sim_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ot");
    let o = sbridge(&["sinkhorn", "--preset", "bimodal1d", "--n", "50", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("sinkhorn_summary.csv")).unwrap();
    assert!(summary.contains("converged,true"));
    assert_eq!(fs::read_to_string(out.join("interpolant_0.csv")).unwrap().lines().count(), 51);

    let out = dir.path().join("prior");
    let o = sbridge(&["prior-sim", "--preset", "doublewell2d", "--n", "30", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let terminal = fs::read_to_string(out.join("prior_terminal.csv")).unwrap();
    assert!(terminal.starts_with("x1,x2\n"));
    assert_eq!(terminal.lines().count(), 31);
}
