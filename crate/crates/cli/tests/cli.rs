use std::path::Path;
use std::process::{Command, Output};

use chebfit::active::{lp_error, FunctionOracle};
use chebfit::weights::lewis_ratio_p1;
use chebfit::{BasisKind, PolyCoeffs};
use serde_json::Value;

fn chebfit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chebfit"))
        .args(args)
        .current_dir(dir)
        .env_remove("CHEBFIT_SEED")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn fit_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = chebfit(dir.path(), &["fit", "--oracle", "runge", "--d", "8", "--p", "2", "--n", "200", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.path().join("fit.json"));
    assert_eq!(doc["format_version"], 1);
    assert_eq!(doc["n_queries"], 200);
    assert_eq!(floats(&doc["coefficients"]["chebyshev_t"]).len(), 9);
    assert_eq!(floats(&doc["coefficients"]["monomial"]).len(), 9);
    let samples = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert!(samples.starts_with("t,b,prob,rescale,stage\n"));
    assert_eq!(samples.lines().count(), 201);
}

#[test]
fn polynomial_in_the_span_is_recovered() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("coeffs.json"), "[0.5, -1.0, 0.0, 2.0, 0.0, 0.25]").unwrap();
    let out = chebfit(dir.path(), &["fit", "--oracle", "poly:coeffs.json", "--d", "5", "--p", "1.5", "--n", "48"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&dir.path().join("fit.json"));
    assert!(doc["est_error"].as_f64().unwrap() <= 1e-6);
    let m = floats(&doc["coefficients"]["monomial"]);
    assert!((m[3] - 2.0).abs() < 1e-8 && (m[5] - 0.25).abs() < 1e-8);
}

#[test]
fn table_oracle_with_infinite_p_uses_the_sup_norm_fit() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,value\n");
    for k in 0..=200 {
        let t = -1.0 + k as f64 / 100.0;
        csv.push_str(&format!("{t},{}\n", (t as f64).exp()));
    }
    std::fs::write(dir.path().join("data.csv"), csv).unwrap();
    let out = chebfit(dir.path(), &["fit", "--oracle", "data.csv", "--d", "3", "--p", "inf", "--n", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.path().join("fit.json"));
    assert_eq!(doc["mode"], "linf");
    assert_eq!(doc["p"], "inf");
}

#[test]
fn fit_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for (p, oracle) in [("2", FunctionOracle::<f64>::runge()), ("inf", FunctionOracle::runge()), ("2/3", FunctionOracle::runge())] {
        let out = chebfit(dir.path(), &["fit", "--oracle", "runge", "--d", "6", "--p", p, "--n", "120"]);
        if p == "2/3" {
            // p < 1 is not a fitting norm
            assert_eq!(out.status.code(), Some(1));
            continue;
        }
        assert_eq!(out.status.code(), Some(0));
        let doc = json(&dir.path().join("fit.json"));
        let poly = PolyCoeffs::new(BasisKind::ChebyshevT, floats(&doc["coefficients"]["chebyshev_t"])).unwrap();
        let pv = if p == "inf" { f64::INFINITY } else { 2.0 };
        let again = lp_error(&oracle, Some(&poly), pv).unwrap();
        let stored = doc["est_error"].as_f64().unwrap();
        assert!((again - stored).abs() <= 1e-9, "p={p}: {again} vs {stored}");
    }
}

#[test]
fn reruns_are_byte_identical_and_report_the_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["fit", "--oracle", "abs", "--d", "4", "--p", "1.5", "--n", "60"];
    let first = chebfit(a.path(), &args);
    let second = Command::new(env!("CARGO_BIN_EXE_chebfit"))
        .args(args)
        .current_dir(b.path())
        .env("CHEBFIT_SEED", "42")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&first.stdout).contains("seed 42"));
    assert_eq!(first.stdout, second.stdout);
    for f in ["fit.json", "samples.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let c = tempfile::tempdir().unwrap();
    let other = Command::new(env!("CARGO_BIN_EXE_chebfit"))
        .args(args)
        .current_dir(c.path())
        .env("CHEBFIT_SEED", "7")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&other.stdout).contains("seed 7"));
    assert_ne!(std::fs::read(a.path().join("samples.csv")).unwrap(), std::fs::read(c.path().join("samples.csv")).unwrap());

    let adv = ["adversary", "--p", "2", "--eps", "0.2", "--n", "10", "--trials", "30"];
    chebfit(a.path(), &adv);
    chebfit(b.path(), &adv);
    for f in ["adversary-out/summary.json", "adversary-out/trials.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn weights_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = chebfit(dir.path(), &["weights", "--d", "6", "--p", "1", "--clip", "1", "--grid", "400"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("weights.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,v,w,tau_v,tau_w"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 414);
    for r in &rows {
        assert!(r[1] >= r[2]);
        let exact = lewis_ratio_p1(r[0], 6).unwrap();
        assert!((r[3] / r[1] - exact).abs() <= 1e-9 * exact.max(1e-3));
    }
    let cap = rows.iter().find(|r| r[0] == 1.0 - 1e-6).unwrap();
    assert!(cap[3] / cap[1] < 0.1);
}

#[test]
fn adversary_summary_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = chebfit(dir.path(), &["adversary", "--n", "10", "--p", "2", "--eps", "0.2", "--trials", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let s = json(&dir.path().join("adversary-out/summary.json"));
    for key in ["miss_rate", "failure_rate", "failure_rate_given_miss", "analytic_miss_prob", "interval_mass"] {
        assert!(s[key].is_f64(), "{key}");
    }
    assert_eq!(s["format_version"], 1);
    let trials = std::fs::read_to_string(dir.path().join("adversary-out/trials.csv")).unwrap();
    assert!(trials.starts_with("trial,seed,sign,missed,error_pow,failed\n"));
    assert_eq!(trials.lines().count(), 201);
}

#[test]
fn runge_bench_separates() {
    let dir = tempfile::tempdir().unwrap();
    let out = chebfit(dir.path(), &["bench", "runge", "--d", "20", "--n", "21"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("bench-out/runge.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("seed,uniform_error,chebyshev_error"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!(row[1] >= 10.0 * row[2]);
}

#[test]
fn verify_sweep_passes_and_failing_cells_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let small = ["verify", "--d", "4,8", "--p", "2/3,1", "--clip", "0.5,1", "--grid", "300", "--sens-d", "8", "--sens-p", "2", "--sens-grid", "40"];
    let out = chebfit(dir.path(), &small);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&dir.path().join("verify-out/summary.json"));
    assert_eq!(s["all_passed"], true);
    assert!(s["cells"].as_array().unwrap().len() > 10);
    let clips: Vec<f64> = s["ratio"].as_array().unwrap().iter().map(|r| r["clip"].as_f64().unwrap()).collect();
    assert_eq!(clips.len(), 8);
    assert_eq!(clips.iter().filter(|&&c| c == 0.5).count(), 4);

    // p = 3 is outside the reweighted-leverage range: the ratio cells error
    let out = chebfit(dir.path(), &["verify", "--d", "4", "--p", "3", "--grid", "50", "--sens-d", "", "--out", "bad"]);
    assert_eq!(out.status.code(), Some(3));
    let s = json(&dir.path().join("bad/summary.json"));
    let cells = s["cells"].as_array().unwrap();
    assert!(cells.iter().any(|c| c["passed"] == false && c["cell"] == "d=4 p=3 C=1" && c["error"].is_string()));
}

#[test]
fn bad_input_exits_1_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = chebfit(dir.path(), &["fit", "--oracle", "missing.csv", "--d", "3", "--p", "2", "--n", "50", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!dir.path().join("o").exists());
    let out = chebfit(dir.path(), &["fit", "--oracle", "runge", "--d", "3", "--p", "x", "--n", "50"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}
