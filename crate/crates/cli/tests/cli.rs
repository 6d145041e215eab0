use std::path::Path;
use std::process::{Command, Output};

use blowuplab::commands::FunctionalsReport;
use blowuplab_core::exponents::{CaseLabel, RegionReport};
use blowuplab_core::kato::LifespanFit;
use blowuplab_core::solver::{BlowupInfo, RunOutcome};

fn blowuplab(args: &[&str]) -> Output {
    blowuplab_env(args, &[])
}

fn blowuplab_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_blowuplab"));
    cmd.args(args).env_remove("BLOWUPLAB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const COMPLIANT: [&str; 10] = ["--mu1", "0.5", "--mu2", "0.5", "--nu1sq", "0.01", "--nu2sq", "0.01", "--dr", "0.05"];

#[test]
fn exponents_defaults() {
    let o = blowuplab(&["exponents"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep: RegionReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rep.case_label, CaseLabel::CriticalDouble);
    assert_eq!(rep.delta1, 0.25);
    assert_eq!(rep.sigma1, Some(2.5));
    // lossless round trip of every number
    let again = serde_json::to_string_pretty(&rep).unwrap();
    assert_eq!(again.trim(), stdout(&o).trim());
}

#[test]
fn invalid_parameters_exit_2() {
    let o = blowuplab(&["simulate", "--p", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("p must exceed 1"), "{}", stderr(&o));
    assert_eq!(blowuplab(&["exponents", "--bogus"]).status.code(), Some(2));
}

#[test]
fn config_file_is_strict_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"params": {"eps": 0.1, "epsilon": 1}, "grid": {"dt": 0.1}}"#).unwrap();
    let o = blowuplab(&["exponents", "--config", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("params.epsilon") && err.contains("grid.dt"), "{err}");

    let good = dir.path().join("good.json");
    std::fs::write(&good, r#"{"params": {"mu1": 0, "mu2": 0, "nu1_sq": 0, "nu2_sq": 0, "p": 1.5}}"#).unwrap();
    let o = blowuplab(&["exponents", "--config", path_str(&good), "--p", "3"]);
    let rep: RegionReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rep.lambda_new_1, 4.0 / 5.0);
}

#[test]
fn kato_sweep_refuses_three_points() {
    let o = blowuplab(&["kato-sweep", "--eps-count", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("fit refused"), "{}", stderr(&o));
}

#[test]
fn kato_sweep_outside_region_exit_2() {
    let o = blowuplab(&["kato-sweep", "--N", "3", "--p", "6", "--q", "6", "--eps-count", "4"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn kato_sweep_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (c1, c2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let a = blowuplab_env(&["kato-sweep", "--csv", path_str(&c1)], &[("BLOWUPLAB_THREADS", "1")]);
    let b = blowuplab_env(&["kato-sweep", "--csv", path_str(&c2)], &[("BLOWUPLAB_THREADS", "4")]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let (ta, tb) = (std::fs::read_to_string(&c1).unwrap(), std::fs::read_to_string(&c2).unwrap());
    assert_eq!(ta, tb);
    assert_eq!(ta.lines().next(), Some("eps,ln_t_blow,t_blow,outcome"));
    assert_eq!(ta.lines().count(), 13);
    let fit: LifespanFit = serde_json::from_str(&stdout(&a)).unwrap();
    assert!((fit.fitted_slope + 1.0).abs() < 0.15);

    let bad = blowuplab_env(&["kato-sweep"], &[("BLOWUPLAB_THREADS", "zero")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn simulate_writes_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let json = dir.path().join("run.json");
    let mut args = vec!["simulate", "--functionals", "--eps", "0.5", "--t-max", "10", "--csv", path_str(&csv), "--json", path_str(&json)];
    args.extend(COMPLIANT);
    let o = blowuplab(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let info: BlowupInfo = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(info.outcome, RunOutcome::BlowupDetected);
    let text = std::fs::read_to_string(&csv).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("t,dt,max_ut,max_vt,support_radius,F1,F2,Ft1,Ft2,G1,G2,Gt1,Gt2,N1,N2"));
    assert_eq!(text.lines().count(), info.steps + 2);
    // byte-identical on a second run
    let o2 = blowuplab(&args);
    assert_eq!(o2.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), text);
}

#[test]
fn functionals_inline_and_from_csv_agree() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    let mut args = vec!["functionals", "--eps", "0.5", "--t-max", "10", "--csv", path_str(&csv)];
    args.extend(COMPLIANT);
    let o = blowuplab(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let inline: FunctionalsReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(inline.all_pass, "{inline:?}");
    assert!(inline.blowup.is_some());
    let kato = inline.kato.as_ref().unwrap();
    assert!(kato.t_blow > inline.blowup.as_ref().unwrap().crossing_time.unwrap());

    let mut args = vec!["functionals", "--eps", "0.5", "--t-max", "10", "--from-csv", path_str(&csv)];
    args.extend(COMPLIANT);
    let o = blowuplab(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let replay: FunctionalsReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(replay.blowup, None);
    assert_eq!(replay.lemmas, inline.lemmas);
    assert_eq!(replay.constants, inline.constants);
    assert_eq!(replay.kato, inline.kato);
}

#[test]
fn functionals_from_csv_reports_missing_columns() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("short.csv");
    std::fs::write(&csv, "t,F1\n0,1\n").unwrap();
    let o = blowuplab(&["functionals", "--from-csv", path_str(&csv)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing columns: F2"), "{}", stderr(&o));
}

#[test]
fn specfun_check_report() {
    let o = blowuplab(&["specfun-check"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let checks = v["checks"].as_array().unwrap();
    let k_half = checks.iter().find(|c| c["name"] == "k_half_max_rel_error").unwrap();
    assert_eq!(k_half["pass"], true);
    // the asymptotic band at t = 100 is too narrow for orders above 3/2
    let nu2 = checks.iter().find(|c| c["name"] == "asymptotic_ratio_t100_nu2.00").unwrap();
    assert_eq!(nu2["pass"], false);
    assert_eq!(v["all_pass"], false);
}
