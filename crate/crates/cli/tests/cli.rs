use std::fs;
use std::process::{Command, Output};

use tempfile::TempDir;

fn iongate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iongate")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV with a `#` header block.
fn rows(text: &str) -> Vec<Vec<String>> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    csv::Reader::from_reader(body.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let k = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|x| x.unwrap()[k].parse().unwrap()).collect()
}

#[test]
fn modes_table() {
    let o = iongate(&["modes"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("# units: frequencies in units of nu_1"));
    let r = rows(&text);
    assert_eq!(r.len(), 6);
    let eta: f64 = r[0][3].parse().unwrap();
    assert!((eta - 0.146).abs() < 5e-4);
    // last mode has no upper neighbour
    assert_eq!(r[5][3], "");
}

#[test]
fn modes_budget_scaling_and_json() {
    let o = iongate(&["modes", "--budget", "0.0025", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["budget"], "0.0025");
    let eta = v["result"]["rows"][0]["eta_max"].as_f64().unwrap();
    let full = iongate(&["modes", "--format", "json"]);
    let w: serde_json::Value = serde_json::from_slice(&full.stdout).unwrap();
    let eta_default = w["result"]["rows"][0]["eta_max"].as_f64().unwrap();
    assert!((eta / eta_default - 0.5).abs() < 1e-12);
}

#[test]
fn idealized_truth_table() {
    let o = iongate(&["truth-table"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 4);
    for row in r {
        assert_eq!(row[1], row[2]);
        assert!(row[3].parse::<f64>().unwrap() > 1.0 - 1e-8);
    }
}

#[test]
fn unknown_scheme_is_usage_error() {
    let o = iongate(&["truth-table", "--scheme", "bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn bad_subcommand_and_flag_are_usage_errors() {
    assert_eq!(iongate(&["nope"]).status.code(), Some(1));
    assert_eq!(iongate(&["modes", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(iongate(&["--help"]).status.code(), Some(0));
}

#[test]
fn empty_grid_is_usage_error() {
    let o = iongate(&["sweep", "--grid", "linear:0.4:0.6:0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_with_unknown_key_rejected() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "eta = 0.1\ncolour = blue\n").unwrap();
    let o = iongate(&["modes", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn flags_override_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "# mode table\nbudget = 0.04\nformat = json\n").unwrap();
    let o = iongate(&["modes", "-c", path.to_str().unwrap(), "--budget", "0.0025"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["budget"], "0.0025");
    assert_eq!(v["config"]["format"], "json");
}

#[test]
fn simulate_resonant_exchange() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fig.csv");
    let args = ["simulate", "--n-ions", "1", "--modes", "1", "--samples", "201", "-o", out.to_str().unwrap()];
    let o = iongate(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# omega_prime_resolved = 0.5"));
    let transfer = column(&text, "P_minus1").into_iter().fold(0.0, f64::max);
    assert!(transfer > 0.99, "{transfer}");

    let o = iongate(&["simulate", "--n-ions", "1", "--modes", "1", "--samples", "101", "--initial", "-0"]);
    assert!(o.status.success());
    let stationary = column(&stdout(&o), "P_minus0").into_iter().fold(1.0, f64::min);
    assert!(stationary > 0.995, "{stationary}");
}

#[test]
fn simulate_bare_rabi_flops() {
    let o = iongate(&["simulate", "--n-ions", "1", "--modes", "1", "--samples", "301", "--initial", "e0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let pe = column(&text, "P_e0");
    let pg = column(&text, "P_g0");
    assert!(pe.iter().cloned().fold(1.0, f64::min) < 0.2);
    assert!(pg.iter().cloned().fold(0.0, f64::max) > 0.8);
}

#[test]
fn simulate_integrated_matches_exact() {
    let base = ["simulate", "--n-ions", "1", "--modes", "1", "--samples", "11", "--t-final", "5", "--format", "json"];
    let exact: serde_json::Value = serde_json::from_slice(&iongate(&base).stdout).unwrap();
    let mut args = base.to_vec();
    args.extend(["--step", "0.01"]);
    let o = iongate(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stepped: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let a = exact["result"]["populations"]["P_plus0"].as_array().unwrap();
    let b = stepped["result"]["populations"]["P_plus0"].as_array().unwrap();
    for (x, y) in a.iter().zip(b) {
        assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-6);
    }
}

#[test]
fn simulate_bad_label_is_usage_error() {
    assert_eq!(iongate(&["simulate", "--initial", "q0"]).status.code(), Some(1));
    assert_eq!(iongate(&["simulate", "--initial", "+99"]).status.code(), Some(1));
}

#[test]
fn sweep_is_deterministic_and_reports_threshold() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "scheme = cz_standing\nmodes = 1\nfock_cutoff = 12\ngrid = log:0.5:2:5\nformat = json\nthreads = 1\n",
    )
    .unwrap();
    let run = || iongate(&["sweep", "-c", cfg.to_str().unwrap(), "--threshold", "0.99"]);
    let a = run();
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, run().stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["config"]["level"], "0.99");
    assert_eq!(v["result"]["points"].as_array().unwrap().len(), 5);
    assert!(v["summary"]["threshold"].as_f64().is_some());
}

#[test]
fn sweep_csv_lists_points() {
    let o = iongate(&["sweep", "--scheme", "lightshift", "--modes", "1", "--grid", "linear:0.49:0.51:3", "-j", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("# peak_fidelity = "));
    let f = column(&text, "fidelity");
    assert_eq!(f.len(), 3);
    assert!(f[1] > 0.99, "{f:?}");
}

#[test]
fn sweep_point_failure_exits_two() {
    // one Fock level cannot hold the exchange
    let o = iongate(&["sweep", "--scheme", "lightshift", "--modes", "1", "--fock-cutoff", "2", "--grid", "linear:0.5:0.5:1"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    assert!(!r[0][3].is_empty());
}
