use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn uqcal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uqcal")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = uqcal(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let i = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|x| x.unwrap()[i].parse().unwrap()).collect()
}

fn same_csvs(a: &Path, b: &Path) {
    let mut names: Vec<_> = fs::read_dir(a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?} differs");
    }
}

#[test]
fn prevalence_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/out");
    ok(&["prevalence", "--out", out.to_str().unwrap()]);
    for f in ["prevalence_posterior.csv", "prevalence_eur.csv", "prevalence.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let m = column(&out.join("prevalence_eur.csv"), "m");
    let eur = column(&out.join("prevalence_eur.csv"), "eur_exact");
    let at = |k: f64| eur[m.iter().position(|&x| x == k).unwrap()];
    assert!((at(12.0) - 0.008_547_0).abs() < 5e-8);
    assert_eq!(at(0.0), 0.0);
    let mc = column(&out.join("prevalence_eur.csv"), "eur_monte_carlo");
    let se = column(&out.join("prevalence_eur.csv"), "mc_standard_error");
    for i in 0..m.len() {
        assert!((mc[i] - eur[i]).abs() <= 3.0 * se[i] + 1e-15);
    }
}

#[test]
fn prevalence_finite_population() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["prevalence", "--population", "10", "--tested", "10", "--positives", "4", "--out", out]);
    let p = column(&dir.path().join("prevalence_finite_posterior.csv"), "probability");
    assert_eq!(p, vec![1.0]);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[global]\nseed = 3\n[prevalence]\nm_grid = [0, 5]\ntested = 20\npositives = 2\n").unwrap();
    let out = dir.path().join("o");
    ok(&["prevalence", "--config", cfg.to_str().unwrap(), "--m", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(column(&out.join("prevalence_eur.csv"), "m"), vec![7.0]);
    let var = column(&out.join("prevalence_eur.csv"), "posterior_variance")[0];
    assert!((var - 3.0 * 19.0 / (22.0f64 * 22.0 * 23.0)).abs() < 1e-15);
}

#[test]
fn config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[prevalence]\nalpah0 = 2\n").unwrap();
    let out = uqcal(&["prevalence", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpah0"));
    let out = uqcal(&["prevalence", "--alpha0=-1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

fn renewal_args<'a>(out: &'a str, cases: &'a str, si: &'a str) -> Vec<&'a str> {
    vec!["renewal", "--cases", cases, "--serial-interval", si, "--out", out, "--particles", "500", "--replicates", "200"]
}

#[test]
fn renewal_full_reporting_has_zero_eur() {
    let dir = tempfile::tempdir().unwrap();
    let cases = repo("data/renewal_cases.csv");
    let si = repo("data/serial_interval.csv");
    let mut args = renewal_args(dir.path().to_str().unwrap(), cases.to_str().unwrap(), si.to_str().unwrap());
    args.extend(["--rho", "1"]);
    ok(&args);
    let path = dir.path().join("renewal_rt.csv");
    let eur = column(&path, "eur");
    let se = column(&path, "se");
    assert_eq!(eur.len(), 70 - 7);
    for (e, s) in eur.iter().zip(&se) {
        assert!(e.abs() <= 3.0 * s);
    }
    assert_eq!(column(&path, "perfect_mean"), column(&path, "underreported_mean"));
}

#[test]
fn renewal_is_reproducible_across_threads() {
    let cases = repo("data/renewal_cases.csv");
    let si = repo("data/serial_interval.csv");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let mut args = renewal_args(dir.path().to_str().unwrap(), cases.to_str().unwrap(), si.to_str().unwrap());
        args.extend(["--threads", threads, "--seed", "99"]);
        ok(&args);
    }
    same_csvs(a.path(), b.path());
    assert!(column(&a.path().join("renewal_rt.csv"), "eur").iter().all(|&e| e > 0.0));
}

#[test]
fn renewal_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let si = repo("data/serial_interval.csv");
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "date,cases\n").unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "date,cases\n2022-01-01,4\n2022-01-02,-3\n").unwrap();
    let out_dir = dir.path().join("o");
    let out = uqcal(&renewal_args(out_dir.to_str().unwrap(), empty.to_str().unwrap(), si.to_str().unwrap()));
    assert_eq!(out.status.code(), Some(3));
    let out = uqcal(&renewal_args(out_dir.to_str().unwrap(), bad.to_str().unwrap(), si.to_str().unwrap()));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
}

const SMALL: [&str; 8] = ["--particles", "1000", "--replicates", "8", "--days", "24", "--sampled-days", "16"];

#[test]
fn surveillance_is_reproducible_across_threads() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let mut args = vec!["surveillance", "--simulate", "--out", dir.path().to_str().unwrap(), "--threads", threads];
        args.extend(SMALL);
        ok(&args);
    }
    same_csvs(a.path(), b.path());
    let summary = rows(&a.path().join("study_summary.csv"));
    assert_eq!(summary[0], vec!["days", "24"]);
    assert_eq!(rows(&a.path().join("study_replicates.csv")).len(), 8 * 24);
}

#[test]
fn surveillance_reads_its_own_inputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut args = vec!["surveillance", "--simulate", "--out", a.path().to_str().unwrap()];
    args.extend(SMALL);
    ok(&args);
    let cases = a.path().join("study_cases.csv");
    let ww = a.path().join("study_wastewater.csv");
    let mut args = vec![
        "surveillance",
        "--cases",
        cases.to_str().unwrap(),
        "--wastewater",
        ww.to_str().unwrap(),
        "--out",
        b.path().to_str().unwrap(),
    ];
    args.extend(SMALL);
    ok(&args);
    for f in ["study_ur.csv", "study_eur.csv", "study_replicates.csv", "study_summary.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn surveillance_full_coverage_and_preconditions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["surveillance", "--simulate", "--coverage-full", "--out", out];
    args.extend(SMALL);
    ok(&args);
    let path = dir.path().join("study_eur.csv");
    for (e, s) in column(&path, "eur").iter().zip(column(&path, "se")) {
        assert!(e.abs() <= 3.0 * s, "{e} {s}");
    }
    let out = uqcal(&["surveillance", "--simulate", "--replicates", "1", "--particles", "1000", "--out", out]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("full-population EUR"));
    let out = uqcal(&["surveillance", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn voi_report() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cases = repo("data/renewal_cases.csv");
    let si = repo("data/serial_interval.csv");
    for (dir, threads) in [(&a, "1"), (&b, "2")] {
        ok(&[
            "voi",
            "--out",
            dir.path().to_str().unwrap(),
            "--threads",
            threads,
            "--cases",
            cases.to_str().unwrap(),
            "--serial-interval",
            si.to_str().unwrap(),
        ]);
    }
    same_csvs(a.path(), b.path());
    let report = rows(&a.path().join("voi_report.csv"));
    assert_eq!(report.len(), 5);
    let quadratic = &report[0];
    assert_eq!(quadratic[0], "quadratic");
    assert!((quadratic[3].parse::<f64>().unwrap() - 0.008_547_0).abs() < 5e-8);
    let log = &report[1];
    assert_eq!(log[7], "");
    assert_eq!(log[3], log[8]);
}
