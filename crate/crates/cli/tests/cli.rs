//! End-to-end tests of the `lerw` binary and the runner library.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use lerw_cli::calibrate::calibrate_from_records;
use lerw_cli::records::{load_records, ResultRecord, RECORDS_FILE};
use lerw_cli::report::{analyze, AnalysisSpec};
use lerw_cli::{run, CliError, Manifest, RunOptions};
use serde_json::Value;

fn lerw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lerw")).args(args).env_remove("LERW_OUT").env_remove("LERW_WORKERS").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn sorted_lines(path: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_to_string(path).unwrap().lines().map(String::from).collect();
    v.sort();
    v
}

const ONE_POINT: &str = r#"
schema_version = 1
name = "determinism"
estimator = "one_point"
seed = 2024

[grid]
scales = [4, 8, 12]
points = [[0.5, 0.0, 0.0], [0.0, 0.25, 0.25]]
trials = 3000
"#;

#[test]
fn records_identical_across_workers_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write(dir.path(), "m.toml", ONE_POINT);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (out, workers) in [(&a, "1"), (&b, "8"), (&c, "3")] {
        let o = lerw(&["run", "--manifest", &manifest, "--out", out.to_str().unwrap(), "--workers", workers, "--quiet"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ra = sorted_lines(&a.join(RECORDS_FILE));
    assert_eq!(ra.len(), 6);
    assert_eq!(ra, sorted_lines(&b.join(RECORDS_FILE)));

    // interrupt: keep two complete records and a torn third line, then resume
    let text = std::fs::read_to_string(c.join(RECORDS_FILE)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    std::fs::write(c.join(RECORDS_FILE), format!("{}\n{}\n{}", lines[0], lines[1], &lines[2][..40])).unwrap();
    let o = lerw(&["run", "--manifest", &manifest, "--out", c.to_str().unwrap(), "--workers", "2", "--quiet"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("4 cells run, 2 already complete"));
    assert_eq!(ra, sorted_lines(&c.join(RECORDS_FILE)));

    // a completed manifest is a no-op
    let o = lerw(&["run", "--manifest", &manifest, "--out", a.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 cells run, 6 already complete"));
    assert_eq!(ra, sorted_lines(&a.join(RECORDS_FILE)));
}

#[test]
fn env_overrides_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write(dir.path(), "m.toml", ONE_POINT);
    let out = dir.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_lerw"))
        .args(["run", "--manifest", &manifest, "--seed-override", "5", "--quiet"])
        .env("LERW_OUT", &out)
        .env("LERW_WORKERS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    let recs = load_records(&out).unwrap();
    assert_eq!(recs.len(), 6);
    assert!(recs.iter().all(|r| r.seed == 5));
}

#[test]
fn empty_grid_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let text = ONE_POINT.replace("scales = [4, 8, 12]", "scales = []");
    let m = Manifest::parse(&text).unwrap();
    let out = dir.path().join("out");
    let s = run(&m, &RunOptions { out: out.clone(), workers: 1, verbose: false }).unwrap();
    assert_eq!((s.executed, s.skipped), (0, 0));
    assert!(load_records(&out).unwrap().is_empty());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &ONE_POINT.replace("trials = 3000", "trials = 3000\nbogus = 1"));
    let o = lerw(&["run", "--manifest", &bad, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bogus") && err.contains("line"), "{err}");

    let outside = write(dir.path(), "pre.toml", &ONE_POINT.replace("[0.0, 0.25, 0.25]", "[0.0, 0.9, 0.9]"));
    let o = lerw(&["run", "--manifest", &outside, "--out", dir.path().join("y").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("one_point|m=4.0|x=[0.0,0.9,0.9]"), "{err}");
    assert!(load_records(&dir.path().join("y")).unwrap().is_empty());

    let mink = r#"
schema_version = 1
name = "mink"
estimator = "minkowski"
seed = 1
[grid]
scales = [32]
boxes = [[3, 3, 0, 0]]
resolutions = [3]
trials = 10
"#;
    let p = write(dir.path(), "mink.toml", mink);
    let o = lerw(&["run", "--manifest", &p, "--out", dir.path().join("z").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "beta is required");
    let p = write(
        dir.path(),
        "mink2.toml",
        &mink.replace("seed = 1", "seed = 1\nbeta = 1.6").replace("resolutions = [3]", "resolutions = [3, 4]"),
    );
    let o = lerw(&["run", "--manifest", &p, "--out", dir.path().join("z").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "2^-4 < 4/32: {}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("s=4"));
    assert!(load_records(&dir.path().join("z")).unwrap().is_empty());
}

fn synthetic(estimator: &str, m: f64, mean: f64, stderr: f64, extra: &[(&str, Value)]) -> ResultRecord {
    let mut params = BTreeMap::from([("m".to_string(), Value::from(m))]);
    for (k, v) in extra {
        params.insert(k.to_string(), v.clone());
    }
    ResultRecord {
        manifest_hash: "synthetic".into(),
        cell_key: format!("{estimator}|m={m}"),
        estimator: estimator.into(),
        descriptor: String::new(),
        params,
        mean,
        stderr,
        n_trials: 1000,
        seed: 0,
        cell_seed: 0,
        code_version: "test".into(),
    }
}

#[test]
fn report_recovers_synthetic_fit_and_flags_gaps() {
    let recs: Vec<ResultRecord> =
        [8.0, 16.0, 32.0, 64.0].iter().map(|&m| synthetic("es", m, 0.9 * m.powf(-0.4), 0.01 * m.powf(-0.4), &[])).collect();
    let spec: AnalysisSpec = toml::from_str(
        r#"
[[power_law]]
name = "es"
estimator = "es"
scales = [8, 16, 32, 64]
expected = -0.4
"#,
    )
    .unwrap();
    let rep = analyze(&recs, &spec, None).unwrap();
    let fit = &rep.power_law[0].fit;
    assert!((fit.exponent + 0.4).abs() < 1e-9 && (fit.amplitude - 0.9).abs() < 1e-9);
    assert_eq!(rep.power_law[0].expected_in_ci, Some(true));

    let gap: AnalysisSpec = toml::from_str(
        r#"
[[power_law]]
name = "es"
estimator = "es"
scales = [8, 16, 32, 64, 128]
"#,
    )
    .unwrap();
    let err = analyze(&recs, &gap, None).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    assert!(err.to_string().contains("128"));

    // through the binary
    let dir = tempfile::tempdir().unwrap();
    let lines: String = recs.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
    std::fs::write(dir.path().join(RECORDS_FILE), lines).unwrap();
    let a = write(dir.path(), "gap.toml", "[[power_law]]\nname = \"es\"\nestimator = \"es\"\nscales = [8, 128]\n");
    let o = lerw(&["report", "--out", dir.path().to_str().unwrap(), "--analysis", &a]);
    assert_eq!(o.status.code(), Some(4));
    let a = write(dir.path(), "ok.toml", "[[power_law]]\nname = \"es\"\nestimator = \"es\"\n");
    let o = lerw(&["report", "--out", dir.path().to_str().unwrap(), "--analysis", &a]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("es.csv")).unwrap();
    assert!(csv.starts_with("scale,mean,stderr,fit\n8,"));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn funceq_report_on_geometric_records() {
    let x = serde_json::json!([0.5, 0.0, 0.0]);
    let recs: Vec<ResultRecord> = [4.0f64, 4.5, 5.0, 5.5, 6.0]
        .iter()
        .map(|&t| synthetic("one_point", t.exp2(), 0.3 * 0.4f64.powf(t), 1e-4, &[("x", x.clone())]))
        .collect();
    let spec: AnalysisSpec = toml::from_str(
        "[[funceq]]\nname = \"fe\"\nn = [4, 5]\nr = [0, 0.5]\n[funceq.filter]\nx = [0.5, 0, 0]\n",
    )
    .unwrap();
    let rep = analyze(&recs, &spec, None).unwrap();
    assert!(rep.funceq[0].report.pass);
    assert!(rep.funceq[0].report.ratios.iter().all(|r| (r.ratio - 1.0).abs() < 1e-12));
    let err = analyze(&recs[..4], &spec, None).unwrap_err();
    assert!(matches!(err, CliError::MissingData(_)));
}

#[test]
fn calibration_policy_on_synthetic_records() {
    let exact: Vec<ResultRecord> =
        [8.0, 16.0, 32.0, 64.0].iter().map(|&m| synthetic("length", m, 2.0 * m.powf(1.6), 0.0, &[])).collect();
    let c = calibrate_from_records(&exact, "synthetic", "2026-01-01").unwrap();
    assert!((c.calibration.beta - 1.6).abs() < 1e-12);
    assert!(c.warning.is_none());

    let steep: Vec<ResultRecord> =
        [8.0, 16.0, 32.0, 64.0].iter().map(|&m| synthetic("length", m, m.powf(1.8), 0.0, &[])).collect();
    let err = calibrate_from_records(&steep, "synthetic", "2026-01-01").unwrap_err();
    assert_eq!(err.exit_code(), 5);

    let noisy: Vec<ResultRecord> =
        [8.0, 16.0, 32.0, 64.0].iter().map(|&m| synthetic("length", m, m.powf(1.65), 0.2 * m.powf(1.65), &[])).collect();
    let c = calibrate_from_records(&noisy, "synthetic", "2026-01-01").unwrap();
    assert!(c.warning.is_some(), "interval straddles 5/3 yet the point estimate is accepted");
}

#[test]
fn es_exponent_matches_calibrated_beta() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let len = write(
        dir.path(),
        "len.toml",
        "schema_version = 1\nname = \"len\"\nestimator = \"length\"\nseed = 3\n[grid]\nscales = [8, 16, 32, 64]\ntrials = 20000\n",
    );
    let o = lerw(&["calibrate-beta", "--manifest", &len, "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let beta = lerw_core::calibration::Calibration::load(&out.join("calibration.json")).unwrap().beta;
    assert!(beta > 1.0 && beta <= 5.0 / 3.0, "{beta}");

    let es = write(
        dir.path(),
        "es.toml",
        "schema_version = 1\nname = \"es\"\nestimator = \"es\"\nseed = 4\n[grid]\nscales = [8, 16, 32, 64]\ntrials = 40000\n",
    );
    let o = lerw(&["run", "--manifest", &es, "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success());
    let spec = write(dir.path(), "a.toml", "[[power_law]]\nname = \"es\"\nestimator = \"es\"\nscales = [8, 16, 32, 64]\n");
    let o = lerw(&["report", "--out", out.to_str().unwrap(), "--analysis", &spec]);
    assert!(o.status.success());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let slope = report["power_law"][0]["fit"]["exponent"].as_f64().unwrap();
    // scales up to 64 still carry visible corrections to scaling in both fits
    assert!((slope - (beta - 2.0)).abs() < 0.06, "Es exponent {slope} vs beta - 2 = {}", beta - 2.0);
}

#[test]
fn dump_path_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.lrwp");
    let o = lerw(&["dump-path", "--m", "16", "--seed", "3", "--trial", "7", "--output", file.to_str().unwrap()]);
    assert!(o.status.success());
    let decoded = lerw_core::pathio::decode_path(&std::fs::read(&file).unwrap()).unwrap();
    let direct = lerw_core::lerw_sample(&lerw_core::BallDomain::unit_ball(16.0), lerw_core::SeedSpec::new(3, 7));
    assert_eq!(decoded.points, direct.points);
    assert!(decoded.loop_erased);
    let o = lerw(&["dump-path", "--decode", file.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().nth(1) == Some("x,y,z") && text.lines().nth(2) == Some("0,0,0"));
}

#[test]
fn shipped_manifests_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../manifests");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.file_name().unwrap() == "analysis.toml" {
            let _: AnalysisSpec = toml::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        } else {
            let m = Manifest::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!m.cells().is_empty());
        }
        seen += 1;
    }
    assert_eq!(seen, 5);

    // one-point scales line up with the functional-equation exponents
    let m = Manifest::from_path(&dir.join("one_point.toml")).unwrap();
    for (s, t) in m.grid.scales.iter().zip([4.0f64, 4.5, 5.0, 5.5, 6.0]) {
        assert_eq!(*s, t.exp2());
    }
}
