use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stt(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stt"));
    cmd.args(args).env_remove("STT_CACHE_DIR");
    if let Some(dir) = cache {
        cmd.env("STT_CACHE_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn report(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("build prints JSON")
}

fn build_gaussian(dir: &Path, name: &str, cache: Option<&Path>) -> (serde_json::Value, Vec<u8>) {
    let path = dir.join(name);
    let out = stt(
        &["build", "--function", "genz-gaussian", "--dim", "4", "--degree", "5", "--seed", "3", "--no-timings", "--out"]
            .iter()
            .copied()
            .chain([path.to_str().unwrap()])
            .collect::<Vec<_>>(),
        cache,
    );
    (report(&out), fs::read(path).unwrap())
}

#[test]
fn build_reports_ranks_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, bytes_a) = build_gaussian(dir.path(), "a.stt", None);
    let (_, bytes_b) = build_gaussian(dir.path(), "b.stt", None);
    // The Gaussian family is a product of one-dimensional factors.
    assert_eq!(a["ranks"], serde_json::json!([1, 1, 1, 1, 1]));
    assert_eq!(a["converged"], true);
    assert!(a["eval_count"].as_u64().unwrap() > 0);
    assert_eq!(bytes_a, bytes_b);
}

#[test]
fn cache_serves_repeated_builds() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let (first, bytes_a) = build_gaussian(dir.path(), "a.stt", Some(&cache));
    let (second, bytes_b) = build_gaussian(dir.path(), "b.stt", Some(&cache));
    assert!(first["eval_count"].as_u64().unwrap() > 0);
    assert_eq!(second["eval_count"], 0);
    assert_eq!(first["ranks"], second["ranks"]);
    // Only the recorded evaluation count in the header differs; the cores
    // after it are identical.
    let body = |b: &[u8]| b[b.iter().position(|&c| c == b'\n').unwrap()..].to_vec();
    assert_eq!(body(&bytes_a), body(&bytes_b));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.stt");
    let bad_eps = stt(&["build", "--function", "bump", "--eps", "0", "--out", out.to_str().unwrap()], None);
    assert_eq!(bad_eps.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&bad_eps.stderr).is_empty());
    assert_eq!(stt(&["bench", "nonsense"], None).status.code(), Some(2));
    assert_eq!(stt(&["build", "--function", "no-such-fn", "--out", out.to_str().unwrap()], None).status.code(), Some(2));
    assert_eq!(stt(&["--help"], None).status.code(), Some(0));
}

#[test]
fn eval_appends_values_and_reports_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _) = build_gaussian(dir.path(), "g.stt", None);
    let surrogate = dir.path().join("g.stt");
    let s = surrogate.to_str().unwrap();

    let pts = dir.path().join("pts.csv");
    fs::write(&pts, "a,b,c,d\n0.1,0.2,0.3,0.4\n0.5,0.5,0.5,0.5\n").unwrap();
    let ok = stt(&["eval", "--surrogate", s, "--points", pts.to_str().unwrap()], None);
    assert!(ok.status.success());
    let text = String::from_utf8(ok.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "a,b,c,d,value");
    assert_eq!(lines.len(), 3);
    let v: f64 = lines[1].rsplit(',').next().unwrap().parse().unwrap();
    assert!(v.is_finite() && v > 0.0);

    fs::write(&pts, "").unwrap();
    let empty = stt(&["eval", "--surrogate", s, "--points", pts.to_str().unwrap()], None);
    assert!(empty.status.success());
    assert!(empty.stdout.is_empty());

    fs::write(&pts, "0.1,0.2,0.3,0.4\n0.1,oops,0.3,0.4\n").unwrap();
    let bad = stt(&["eval", "--surrogate", s, "--points", pts.to_str().unwrap()], None);
    assert_eq!(bad.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));

    fs::write(&pts, "0.1,0.2\n").unwrap();
    let short = stt(&["eval", "--surrogate", s, "--points", pts.to_str().unwrap()], None);
    assert_eq!(short.status.code(), Some(4));

    fs::write(dir.path().join("junk.stt"), b"not a surrogate").unwrap();
    let junk = stt(&["eval", "--surrogate", dir.path().join("junk.stt").to_str().unwrap(), "--points", pts.to_str().unwrap()], None);
    assert_eq!(junk.status.code(), Some(4));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("c.stt");
    fs::write(&cfg, serde_json::json!({"function": "genz-gaussian", "dim": [2], "degree": [3], "out": out}).to_string())
        .unwrap();
    let r = report(&stt(&["build", "--config", cfg.to_str().unwrap(), "--dim", "3"], None));
    assert_eq!(r["ranks"].as_array().unwrap().len(), 4);

    fs::write(&cfg, r#"{"function": "bump", "colour": "blue"}"#).unwrap();
    assert_eq!(stt(&["build", "--config", cfg.to_str().unwrap()], None).status.code(), Some(2));
}

#[test]
fn bench_csv_is_byte_stable_without_timings() {
    let args = ["bench", "genz", "--family", "gaussian", "--dim", "3", "--degree", "1,3", "--no-timings"];
    let a = stt(&args, None);
    let b = stt(&args, None);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("d,degree_or_gridsize,eps,eval_count,max_rank,rel_l2,rel_l2_se,seconds\n"));
    assert_eq!(text.lines().count(), 3);
}
