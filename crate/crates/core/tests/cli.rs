use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mcse::cli::RunReport;
use mcse::experiments::{ar1_generate, Ar1Config, ChainGenerator};
use serde_json::Value;
use tempfile::TempDir;

fn mcse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcse")).args(args).output().expect("run mcse")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn series_file(dir: &TempDir, name: &str, v: &[f64]) -> PathBuf {
    let text: String = v.iter().map(|x| format!("{x:?}\n")).collect();
    write(dir, name, &text)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn estimate_module_examples() {
    let dir = TempDir::new().unwrap();
    let f = series_file(&dir, "four.csv", &[1.0, 2.0, 3.0, 4.0]);
    let o = mcse(&["estimate", s(&f), "--method", "bm", "--b", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["sigma"][0][0].as_f64(), Some(4.0));
    let o = mcse(&["estimate", s(&f), "--method", "initseq"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["sigma"][0][0].as_f64(), Some(1.875));
    assert_eq!(json(&o)["method"]["family"], "initial_sequence");
}

#[test]
fn usage_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let f = series_file(&dir, "four.csv", &[1.0, 2.0, 3.0, 4.0]);
    for args in [
        vec!["estimate", s(&f), "--method", "initseq", "--lugsail", "over"],
        vec!["estimate", s(&f), "--window", "qs"],
        vec!["estimate", s(&f), "--lugsail", "zero", "--r", "3"],
        vec!["estimate", s(&f), "--lugsail", "custom", "--r", "2"],
        vec!["estimate", s(&f), "--method", "magic"],
        vec!["estimate", s(&f), "--b", "4"],
        vec!["miness", "--eps", "-1"],
        vec!["simci", s(&f), "--targets", "mean:0,quant:0"],
        vec!["estimate", s(&f), "--columns", "7"],
        vec!["nonsense"],
    ] {
        let o = mcse(&args);
        assert_eq!(code(&o), 3, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.csv", "");
    let one = write(&dir, "one.csv", "1.0\n");
    let ragged = write(&dir, "ragged.csv", "1,2\n3\n4,5\n");
    let junk = write(&dir, "junk.csv", "a,b\n1,2\nx,3\n");
    let missing = dir.path().join("missing.csv");
    for f in [&empty, &one, &ragged, &junk, &missing] {
        let o = mcse(&["ess", s(f)]);
        assert_eq!(code(&o), 2, "{f:?}: {}", String::from_utf8_lossy(&o.stderr));
        let stderr = String::from_utf8_lossy(&o.stderr);
        assert_eq!(stderr.lines().count(), 1, "{stderr}");
    }
}

#[test]
fn numerical_failures_exit_4() {
    let dir = TempDir::new().unwrap();
    let constant = series_file(&dir, "const.csv", &[2.0; 10]);
    let o = mcse(&["estimate", s(&constant), "--method", "initseq"]);
    assert_eq!(code(&o), 4);
    let o = mcse(&["ess", s(&constant), "--b", "2"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn headers_tabs_and_column_selection() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "chain.tsv", "alpha\tbeta\tgamma\n1\t10\t0\n2\t20\t1\n3\t30\t0\n4\t40\t1\n");
    let o = mcse(&["estimate", s(&f), "--b", "2", "--columns", "beta,alpha"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["p"], 2);
    assert_eq!(v["columns"][0], "beta");
    assert_eq!(v["sigma"][1][1].as_f64(), Some(4.0));
    assert_eq!(v["sigma"][0][0].as_f64(), Some(400.0));
    let o = mcse(&["estimate", s(&f), "--b", "2", "--columns", "2", "--out", "csv"]);
    assert!(stdout(&o).starts_with("quantity,i,j,value\nsigma,0,0,"));
}

#[test]
fn json_report_round_trips_sigma() {
    let dir = TempDir::new().unwrap();
    let chain = ChainGenerator::ar1(0.7).generate(3000, 5, 0).unwrap();
    let other = ChainGenerator::ar1(0.2).generate(3000, 6, 0).unwrap();
    let text: String = (0..3000)
        .map(|i| format!("{:?},{:?}\n", chain.column(0)[i], chain.column(0)[i] * 0.3 + other.column(0)[i]))
        .collect();
    let f = write(&dir, "two.csv", &text);
    let o = mcse(&["estimate", s(&f), "--method", "sv", "--window", "tukey-hanning", "--lugsail", "adaptive"]);
    assert_eq!(code(&o), 0);
    let report: RunReport = serde_json::from_slice(&o.stdout).unwrap();
    let lib = mcse::EstimatorSpec::new(mcse::Method::Spectral(mcse::LagWindow::TukeyHanning))
        .with_lugsail(mcse::LugsailConfig::adaptive())
        .estimate(&mcse::SampleMatrix::from_columns(&[
            chain.column(0).to_vec(),
            chain.column(0).iter().zip(other.column(0)).map(|(a, b)| a * 0.3 + b).collect(),
        ])
        .unwrap())
        .unwrap();
    assert_eq!(report.sigma_matrix(), lib.sigma);
    let again: RunReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(again, report);
}

#[test]
fn ess_commands() {
    let dir = TempDir::new().unwrap();
    let iid = ChainGenerator::IidNormal.generate(1000, 3, 0).unwrap();
    let f = series_file(&dir, "iid.csv", iid.column(0));
    let o = mcse(&["ess", s(&f), "--method", "bm", "--b", "1"]);
    assert_eq!(code(&o), 0);
    let ess = json(&o)["ess"].as_f64().unwrap();
    assert!((ess - 1000.0).abs() < 1e-9, "{ess}");

    let ar = ar1_generate(&Ar1Config::new(0.92, 200_000, 11).unwrap()).unwrap();
    let f = series_file(&dir, "ar.csv", ar.column(0));
    let o = mcse(&["ess", s(&f), "--lugsail", "over", "--rule", "square-root"]);
    assert_eq!(code(&o), 0);
    let ratio = json(&o)["ess_ratio"].as_f64().unwrap();
    assert!(ratio > 0.02 && ratio < 0.05, "{ratio}");
}

#[test]
fn miness_golden_values() {
    for (eps, p, expect) in [("0.05", "1", 6146), ("0.05", "10", 8831), ("0.10", "1", 1536)] {
        let o = mcse(&["miness", "--alpha", "0.05", "--eps", eps, "--p", p]);
        assert_eq!(code(&o), 0);
        let got = json(&o)["min_ess"].as_u64().unwrap();
        assert!(got.abs_diff(expect) <= 1, "{eps} {p}: {got}");
    }
    let o = mcse(&["miness", "--out", "csv"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,epsilon,p,min_ess,exact"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..4], &["0.05", "0.05", "1", "6146"]);
    assert!((row[4].parse::<f64>().unwrap() - 6146.3341).abs() < 1e-3);
}

#[test]
fn stopcheck_exit_codes() {
    let dir = TempDir::new().unwrap();
    // With b = 1, Σ_n equals Λ_n, so the rule reduces to 2·z/√n + 1/n < ε.
    let iid = ChainGenerator::IidNormal.generate(10_000, 9, 0).unwrap();
    let big = series_file(&dir, "big.csv", iid.column(0));
    let small = series_file(&dir, "small.csv", &iid.column(0)[..4900]);
    let o = mcse(&["stopcheck", s(&big), "--b", "1", "--nstar", "1000"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let d = &json(&o)["decision"];
    assert_eq!(d["terminate"], true);
    assert!((d["lhs"].as_f64().unwrap() / d["rhs"].as_f64().unwrap() - (0.039199 + 0.0001) / 0.05).abs() < 1e-4);
    let o = mcse(&["stopcheck", s(&small), "--b", "1", "--nstar", "1000"]);
    assert_eq!(code(&o), 10);
    // default n* is the minimum ESS (6146 here), so 4900 rows always continue
    let o = mcse(&["stopcheck", s(&small), "--b", "1"]);
    assert_eq!(code(&o), 10);
    let o = mcse(&["stopcheck", s(&big), "--b", "1", "--nstar", "20000"]);
    assert_eq!(code(&o), 10);
}

#[test]
fn simci_commands() {
    let dir = TempDir::new().unwrap();
    let iid = ChainGenerator::IidNormal.generate(5000, 2, 0).unwrap();
    let f = series_file(&dir, "iid.csv", iid.column(0));
    let o = mcse(&["simci", s(&f), "--targets", "mean:0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let z = json(&o)["z_star"].as_f64().unwrap();
    assert!((z - 1.96).abs() < 0.01, "{z}");

    let chain = dir.path().join("mixture.csv");
    let o = mcse(&["experiment", "mixture", "--n", "50000", "--seed", "3", "--chain-out", s(&chain)]);
    assert_eq!(code(&o), 0);
    let o = mcse(&["simci", s(&chain), "--targets", "mean:0,quant:0:0.1,quant:0:0.9"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let targets = v["targets"].as_array().unwrap();
    assert_eq!(targets.len(), 3);
    for t in targets {
        let (lo, est, hi) = (t["lower"].as_f64().unwrap(), t["estimate"].as_f64().unwrap(), t["upper"].as_f64().unwrap());
        assert!(lo < est && est < hi, "{t}");
    }
    assert!(v["z_star"].as_f64().unwrap() > 1.96);
    let o = mcse(&["simci", s(&chain), "--targets", "mean:0,median:0"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn experiments_are_seed_deterministic() {
    let args = ["experiment", "ar1-coverage", "--reps", "50", "--n", "1000,5000", "--seed", "4", "--out", "csv"];
    let a = mcse(&args);
    assert_eq!(code(&a), 0);
    let table = stdout(&a);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "estimator,n,replications,coverage,std_error,mean_sigma,failures");
    assert_eq!(lines.len(), 1 + 3 * 2);
    assert_eq!(a.stdout, mcse(&args).stdout);

    let ess = ["experiment", "ar1-ess", "--reps", "20", "--n", "2000", "--seed", "4"];
    assert_eq!(mcse(&ess).stdout, mcse(&ess).stdout);
    let mix = ["experiment", "mixture", "--n", "5000", "--seed", "8"];
    assert_eq!(mcse(&mix).stdout, mcse(&mix).stdout);
    let logit = ["experiment", "logistic", "--n", "2000", "--p-coef", "3", "--n-obs", "100", "--seed", "8"];
    let o = mcse(&logit);
    assert_eq!(code(&o), 0);
    assert_eq!(o.stdout, mcse(&logit).stdout);
    let simci = |seed: &str| {
        let dir = TempDir::new().unwrap();
        let chain = dir.path().join("c.csv");
        mcse(&["experiment", "mixture", "--n", "5000", "--seed", "1", "--chain-out", s(&chain)]);
        mcse(&["simci", s(&chain), "--targets", "mean:0,quant:0:0.5", "--seed", seed]).stdout
    };
    assert_eq!(simci("5"), simci("5"));
}

#[test]
fn bench_reports_expected_ordering() {
    let o = mcse(&["experiment", "bench", "--n", "50000", "--p-coef", "10", "--n-obs", "200", "--reps", "3"]);
    assert_eq!(code(&o), 0);
    let rows = json(&o);
    let time = |name: &str| {
        rows.as_array().unwrap().iter().find(|r| r["estimator"] == name).unwrap()["median_secs"].as_f64().unwrap()
    };
    assert_eq!(rows.as_array().unwrap().len(), 8);
    assert!(time("bm") < time("sv") && time("sv") < time("initseq"));
}
