use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use volrisk_core::distributions::InnovationDist;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_volrisk"));
    c.env("VOLRISK_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

/// Weekday price CSV built from seeded t draws.
fn write_prices(path: &Path, seed: u64, n: usize, vol: f64) {
    let r = InnovationDist::StudentT { shape: 6.0 }.sample(n, seed);
    let mut day = chrono::NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let mut p = 100.0f64;
    let mut text = String::from("Date,Close\n");
    for z in r {
        use chrono::Datelike;
        while day.weekday().number_from_monday() > 5 {
            day = day.succ_opt().unwrap();
        }
        text.push_str(&format!("{day},{p:.6}\n"));
        p *= (vol * z).exp();
        day = day.succ_opt().unwrap();
    }
    fs::write(path, text).unwrap();
}

fn toy_config(dir: &Path, extra: &str) -> PathBuf {
    write_prices(&dir.join("a.csv"), 1, 520, 0.01);
    write_prices(&dir.join("b.csv"), 2, 520, 0.02);
    let cfg = format!(
        r#"output_dir = "out"
seed = 11
{extra}
[[assets]]
symbol = "AAA"
source = "a.csv"
columns = {{ date = "Date", close = "Close" }}

[[assets]]
symbol = "BBB"
source = "b.csv"
columns = {{ date = "Date", close = "Close" }}

[[periods]]
name = "pre"
start = "2019-01-01"
end = "2019-12-31"

[[periods]]
name = "during"
start = "2020-01-01"
end = "2020-12-31"

[[periods]]
name = "full"
start = "2019-01-01"
end = "2020-12-31"
"#
    );
    let p = dir.join("run.toml");
    fs::write(&p, cfg).unwrap();
    p
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn describe_writes_four_tables_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = toy_config(tmp.path(), "");
    let out = run(&["describe", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = listing(&tmp.path().join("out"));
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, [
        "correlation.csv",
        "correlation.json",
        "jarque_bera.csv",
        "jarque_bera.json",
        "stats.csv",
        "stats.json",
        "unit_root.csv",
        "unit_root.json"
    ]);
    let stats = String::from_utf8(first.iter().find(|(n, _)| n == "stats.csv").unwrap().1.clone()).unwrap();
    assert_eq!(stats.lines().count(), 3);
    assert!(run(&["describe", "--config", cfg.to_str().unwrap()]).status.success());
    assert_eq!(first, listing(&tmp.path().join("out")));
}

#[test]
fn missing_source_exits_two_naming_the_symbol() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = toy_config(tmp.path(), "");
    fs::remove_file(tmp.path().join("b.csv")).unwrap();
    let out = run(&["describe", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BBB"));
}

#[test]
fn config_errors_exit_three_and_validate_is_dry() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "levels = [0.9, 1.2]\n[[assets]]\nsymbol = 'A'\nsource = 'a.csv'\n").unwrap();
    assert_eq!(run(&["risk", "--config", bad.to_str().unwrap()]).status.code(), Some(3));
    fs::write(&bad, "nonsense = [").unwrap();
    assert_eq!(run(&["risk", "--config", bad.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(run(&["fit"]).status.code(), Some(3));

    let cfg = toy_config(tmp.path(), "");
    let out = run(&["report", "--validate", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("config ok"));
    assert!(!tmp.path().join("out").exists());
    assert_eq!(run(&["risk", "--validate", "--levels", "0.9,x", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

#[test]
fn risk_layout_and_amount_scaling() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = toy_config(tmp.path(), "");
    let c = cfg.to_str().unwrap();
    assert!(run(&["risk", "--config", c, "--out", tmp.path().join("w1").to_str().unwrap()]).status.success());
    assert!(run(&["risk", "--config", c, "--portfolio-amount", "1000", "--out", tmp.path().join("w1000").to_str().unwrap()])
        .status
        .success());
    let a = read_json(&tmp.path().join("w1/risk.json"));
    let b = read_json(&tmp.path().join("w1000/risk.json"));
    let assets = a["assets"].as_array().unwrap();
    assert_eq!(assets.len(), 2);
    for (ai, asset) in assets.iter().enumerate() {
        let periods = asset["periods"].as_array().unwrap();
        assert_eq!(periods.len(), 3);
        for (pi, p) in periods.iter().enumerate() {
            let levels = p["levels"].as_array().unwrap();
            assert_eq!(levels.len(), 3);
            for (li, l) in levels.iter().enumerate() {
                let other = &b["assets"][ai]["periods"][pi]["levels"][li];
                for key in ["var_gaussian", "var_cf", "var_empirical"] {
                    let (x, y) = (l[key].as_f64().unwrap(), other[key].as_f64().unwrap());
                    assert!((y - 1000.0 * x).abs() <= 1e-9 * y.abs().max(1.0), "{key}: {x} vs {y}");
                }
            }
        }
    }
    let csv = fs::read_to_string(tmp.path().join("w1/risk.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("asset,level,pre:var,pre:cfvar,pre:empirical_var,pre:max_drawdown,during:var"));
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let dd = fs::read_to_string(tmp.path().join("w1/drawdown_AAA.csv")).unwrap();
    assert_eq!(dd.lines().count() - 1, 519);
}

#[test]
fn simulate_then_fit_summarizes_every_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let out = run(&["simulate", "--seed", "5", "--out", sim.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = sim.join("simulate.toml");
    let first = tmp.path().join("fit1");
    let second = tmp.path().join("fit2");
    for dir in [&first, &second] {
        let o = run(&["fit", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(listing(&first), listing(&second));
    let summary = fs::read_to_string(first.join("summary.txt")).unwrap();
    assert_eq!(summary.matches("EGARCH(1,1)").count(), 3);
    assert_eq!(summary.matches("joint DCC(1,1)").count(), 1);
    let dcc = read_json(&first.join("dcc.json"));
    assert!(dcc["aic_per_obs"].as_f64().unwrap().is_finite());
    assert_eq!(dcc["correlations"]["pairs"].as_array().unwrap().len(), 3);
    assert!(dcc.get("r_path").is_none());
    let fit = read_json(&first.join("fit_SIM1.json"));
    let (ll, k, aic) = (fit["loglik"].as_f64().unwrap(), fit["n_params"].as_f64().unwrap(), fit["aic"].as_f64().unwrap());
    assert!((aic - (2.0 * k - 2.0 * ll)).abs() < 1e-9);
}

#[test]
fn capped_iterations_exit_one_with_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = toy_config(tmp.path(), "[model]\nmax_iter = 1\ndistribution = \"student_t\"\n");
    let out = run(&["fit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(tmp.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("NOT CONVERGED"));
    assert!(tmp.path().join("out/fit_AAA.json").exists());
}

#[test]
fn garch_baseline_runs_from_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = toy_config(tmp.path(), "[model]\nvariance = \"garch11\"\ndistribution = \"normal\"\njoint = \"normal\"\n");
    let out = run(&["fit", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit = read_json(&tmp.path().join("out/fit_BBB.json"));
    let names: Vec<&str> = fit["estimates"].as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["mu", "alpha0", "alpha1", "gamma1"]);
}
