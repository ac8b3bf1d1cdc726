use std::path::Path;
use std::process::{Command, Output};

fn twistmod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistmod")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.display().to_string()
}

fn field(csv: &str, point: &str, stat: &str) -> String {
    csv.lines()
        .find(|l| {
            let c: Vec<&str> = l.split(',').collect();
            c.len() == 7 && c[1] == point && c[2] == stat
        })
        .unwrap_or_else(|| panic!("no row {point}/{stat} in\n{csv}"))
        .split(',')
        .nth(4)
        .unwrap()
        .to_string()
}

#[test]
fn bad_probability_sum_exits_with_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"kind": "lyapunov", "systems": [{"p": [0.3, 0.6]}], "n": 100}"#,
    );
    let out = twistmod(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("probability-sum invariant"), "{msg}");
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_field_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "x.json", r#"{"kind": "locus", "systems": [{"r": 2}], "n_max": 2, "bogus": 1}"#);
    assert_eq!(twistmod(&["run", &cfg]).status.code(), Some(2));
}

#[test]
fn bounds_subcommand_at_unit_capacity() {
    let out = twistmod(&["bounds", "--alpha", "0", "--gamma", "6.38905609893065"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let point = "alpha=0.0;gamma=6.38905609893065";
    let c: f64 = field(&csv, point, "capacity").parse().unwrap();
    assert!((c - 1.0).abs() < 1e-12);
    assert_eq!(field(&csv, point, "alphabet_limit"), "2.0");
    assert!(csv.starts_with("# twistmod: "));
}

#[test]
fn autocorr_lag_zero_reference_is_one_third() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.json",
        r#"{"kind": "autocorr", "seed": 5, "system": {"r": 2}, "q": 1.0, "n": 8, "trials": 200, "k_max": 2}"#,
    );
    let out_path = dir.path().join("a.csv");
    let out = twistmod(&["run", &cfg, "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let row = csv.lines().find(|l| l.starts_with("autocorr,k=0,")).unwrap();
    assert_eq!(row.split(',').nth(5), Some(format!("{:?}", 1.0f64 / 3.0).as_str()));
    assert!(csv.contains("# seed: 5\n"));
}

#[test]
fn seed_override_changes_output_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.json",
        r#"{"kind": "autocorr", "seed": 5, "system": {"r": 2}, "q": 1.0, "n": 8, "trials": 200, "k_max": 1}"#,
    );
    let a = twistmod(&["run", &cfg]).stdout;
    let b = twistmod(&["run", &cfg, "--seed", "6"]).stdout;
    let hash = |v: &[u8]| {
        String::from_utf8_lossy(v)
            .lines()
            .find(|l| l.starts_with("# config_sha256: "))
            .map(str::to_string)
    };
    assert_ne!(hash(&a), hash(&b));
    assert_eq!(a, twistmod(&["run", &cfg, "--threads", "1"]).stdout);
}

#[test]
fn empty_sweep_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "l.json", r#"{"kind": "locus", "systems": [{"r": 2}], "n_max": 2}"#);
    let out = twistmod(&["sweep", &cfg, "--axis", "n", "--values", ""]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body, ["kind,point,statistic,unit,value,reference,stderr"]);
}

#[test]
fn enumeration_budget_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "l.json", r#"{"kind": "locus", "systems": [{"r": 5}], "n_max": 40}"#);
    let out = twistmod(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gamma_sweep_reports_monotone_anomaly_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m.json",
        r#"{"kind": "ml-sweep", "seed": 3, "system": {"r": 2}, "channel": {"gamma": 10.0},
            "n": 6, "trials": 200, "theta_grid": {"evenly_spaced": 9, "random": 0}}"#,
    );
    let out = twistmod(&["sweep", &cfg, "--axis", "gamma", "--values", "1,10,100,1000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(field(&csv, "sweep", "anomaly_rate_nonincreasing"), "1.0");
    assert!(csv.contains("# sweep_axis: gamma"));
    assert!(csv.lines().any(|l| l.starts_with("ml-sweep,gamma=1000.0;")));
}

#[test]
fn codebook_build_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"kind": "itinerary-scheme", "seed": 9, "n": 4, "m": 8, "channel": {"gamma": 10.0}, "trials": 1, "thetas": {"evenly_spaced": 2, "random": 0}}"#,
    );
    let book = dir.path().join("book.bin");
    let out = twistmod(&["codebook", "build", book.to_str().unwrap(), "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dump = twistmod(&["codebook", "dump", book.to_str().unwrap()]);
    assert!(dump.status.success());
    let text = String::from_utf8(dump.stdout).unwrap();
    assert!(text.contains("index,psi,c1,c2,c3,c4\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 9);
}
