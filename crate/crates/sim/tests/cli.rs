use std::path::Path;
use std::process::{Command, Output};

use rotcf_core::drivers::Method;
use rotcf_sim::harness::{parse_csv, CSV_HEADER};
use rotcf_sim::report::RunRecord;
use rotcf_sim::RunConfig;

const SMALL: &str = "[scenario]\nB = 3\nK = 3\nM_x = 1\nM_y = 1\n";

fn rotcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotcf")).args(args).output().expect("binary runs")
}

fn error_json(out: &Output) -> serde_json::Value {
    assert!(!out.status.success(), "expected failure");
    let line = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(line.lines().last().expect("summary line")).expect("summary is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_a_consistent_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("run.json");
    let status = rotcf(&["simulate", "--config", &cfg, "--method", "two_stage", "--seed", "4", "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let record: RunRecord = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(record.method, Method::TwoStage);
    assert_eq!(record.seed, 4);
    assert_eq!(record.config, RunConfig::parse(SMALL).unwrap());
    assert_eq!(record.per_user_rates_bpshz.len(), 3);
    let worst = record.per_user_rates_bpshz.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((worst - record.min_rate_bpshz).abs() < 1e-12);
    assert_eq!(record.final_orientations.len(), 3);
    for f in &record.final_orientations {
        let norm = (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }
}

#[test]
fn simulate_is_reproducible_apart_from_timing() {
    let run = || {
        let out = rotcf(&["simulate", "--method", "random_orient", "--seed", "2", "--drop", "1"]);
        assert!(out.status.success());
        let mut r: RunRecord = serde_json::from_slice(&out.stdout).unwrap();
        r.wallclock_s = 0.0;
        r
    };
    assert_eq!(run(), run());
}

#[test]
fn trace_is_non_decreasing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = rotcf(&["trace", "--config", &cfg, "--method", "ao", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,min_rate_bpshz"));
    let rates: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(!rates.is_empty());
    assert!(rates.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{rates:?}");
}

#[test]
fn sweep_csv_is_deterministic_and_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = write(
        dir.path(),
        "sweep.toml",
        &format!(
            "{SMALL}\n[sweep]\nvariable = \"P_max_dBm\"\nvalues = [5.0, 15.0]\ndrops = 3\n\
             methods = [\"fixed_orient\", \"two_stage\"]\nseed = 9\n"
        ),
    );
    let run = |jobs: &str, name: &str| {
        let path = dir.path().join(name);
        let out = rotcf(&["sweep", "--config", &sweep, "--jobs", jobs, "--out", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (std::fs::read(&path).unwrap(), path)
    };
    let (first, path) = run("1", "a.csv");
    let (second, _) = run("1", "b.csv");
    let (threaded, _) = run("2", "c.csv");
    assert_eq!(first, second);
    assert_eq!(first, threaded);
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with(CSV_HEADER));
    let rows = parse_csv(&text, &path).unwrap();
    // value-major, methods in the fixed report order
    let order: Vec<(f64, Method)> = rows.iter().map(|r| (r.value, r.method)).collect();
    assert_eq!(
        order,
        [(5.0, Method::TwoStage), (5.0, Method::FixedOrient), (15.0, Method::TwoStage), (15.0, Method::FixedOrient)]
    );
    assert!(rows.iter().all(|r| r.variable == "P_max_dBm" && r.drops == 3 && r.seed == 9));
    assert!(rows.iter().all(|r| r.mean_min_rate_bpshz > 0.0 && r.stderr >= 0.0));
    // more power never hurts the same method on the same drops
    assert!(rows[2].mean_min_rate_bpshz > rows[0].mean_min_rate_bpshz);
}

#[test]
fn sweep_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = write(
        dir.path(),
        "sweep.toml",
        &format!("{SMALL}\n[sweep]\nvariable = \"B\"\nvalues = [2.0, 3.0]\ndrops = 2\nseed = 1\n"),
    );
    let out = rotcf(&["sweep", "--config", &sweep, "--method", "isotropic", "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_csv(&String::from_utf8(out.stdout).unwrap(), Path::new("<stdout>")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.method == Method::Isotropic && r.seed == 5));
}

#[test]
fn failures_exit_nonzero_with_a_json_summary() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[scenario]\nK = 0\n");
    let err = error_json(&rotcf(&["simulate", "--config", &bad]));
    assert_eq!(err["error"]["kind"], "config");
    assert_eq!(err["error"]["key"], "scenario.K");
    assert_eq!(err["error"]["path"], bad.as_str());

    let err = error_json(&rotcf(&["simulate", "--method", "best"]));
    assert_eq!(err["error"]["key"], "method");

    let missing = dir.path().join("missing.toml");
    let err = error_json(&rotcf(&["sweep", "--config", missing.to_str().unwrap()]));
    assert_eq!(err["error"]["kind"], "io");

    let low_p = write(dir.path(), "low_p.toml", "[scenario]\np = 1.0\n");
    let err = error_json(&rotcf(&["simulate", "--config", &low_p, "--method", "ao"]));
    assert_eq!(err["error"]["key"], "method");

    let sweep = write(dir.path(), "sweep.toml", "[sweep]\nvariable = \"p\"\nvalues = [3.0, 2.0]\n");
    let err = error_json(&rotcf(&["sweep", "--config", &sweep]));
    assert_eq!(err["error"]["key"], "sweep.values");
}

#[test]
fn malformed_csv_is_rejected() {
    let path = Path::new("x.csv");
    assert!(parse_csv("a,b\n1,2\n", path).is_err());
    assert!(parse_csv(&format!("{CSV_HEADER}\np,2,nobody,1,0,3,1\n"), path).is_err());
}

#[test]
fn validate_passes() {
    let out = rotcf(&["validate", "--seed", "11"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 6);
}
