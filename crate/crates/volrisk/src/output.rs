//! Output tables: JSON documents and fixed-precision CSV mirrors.

use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::Serialize;
use volrisk_core::dcc::DccFit;
use volrisk_core::egarch::{Estimate, VolFit};
use volrisk_core::linalg::Matrix;
use volrisk_core::risk::PeriodRisk;
use volrisk_core::stats::{DescriptiveStats, Significance, TestResult};

/// One file in the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> Self {
        let mut contents = serde_json::to_string_pretty(value).expect("tables serialize");
        contents.push('\n');
        Self { name: name.into(), contents }
    }
}

/// File-name-safe form of a symbol: `^DJI` becomes `_DJI`.
pub fn file_stem(symbol: &str) -> String {
    symbol.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

pub fn fixed(x: f64, decimals: usize) -> String {
    if x.is_finite() {
        let s = format!("{x:.decimals$}");
        // avoid "-0.000"
        if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
            s.trim_start_matches('-').to_string()
        } else {
            s
        }
    } else {
        x.to_string()
    }
}

fn opt_fixed(x: Option<f64>, decimals: usize) -> String {
    x.map(|v| fixed(v, decimals)).unwrap_or_default()
}

fn csv_from_rows(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolStats<'a> {
    pub symbol: &'a str,
    #[serde(flatten)]
    pub stats: &'a DescriptiveStats,
    pub kurtosis: f64,
}

pub fn stats_table(rows: &[(String, DescriptiveStats)]) -> [Artifact; 2] {
    let json: Vec<SymbolStats> =
        rows.iter().map(|(s, st)| SymbolStats { symbol: s, stats: st, kurtosis: st.kurtosis() }).collect();
    let header = strings(&["symbol", "n", "mean", "std", "min", "max", "skewness", "excess_kurtosis", "q25", "q75", "sharpe"]);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(s, st)| {
            let mut r = vec![s.clone(), st.n.to_string()];
            r.extend([st.mean, st.std, st.min, st.max, st.skewness, st.excess_kurtosis, st.q25, st.q75].map(|v| fixed(v, 6)));
            r.push(opt_fixed(st.sharpe, 6));
            r
        })
        .collect();
    [Artifact::json("stats.json", &json), Artifact { name: "stats.csv".into(), contents: csv_from_rows(&header, &body) }]
}

#[derive(Debug, Clone, Serialize)]
struct CorrelationDoc<'a> {
    symbols: &'a [String],
    matrix: Vec<Vec<f64>>,
}

pub fn correlation_table(symbols: &[String], m: &Matrix) -> [Artifact; 2] {
    let mut header = vec!["symbol".to_string()];
    header.extend(symbols.iter().cloned());
    let body: Vec<Vec<String>> = symbols
        .iter()
        .enumerate()
        .map(|(i, s)| std::iter::once(s.clone()).chain(m.row(i).iter().map(|v| fixed(*v, 6))).collect())
        .collect();
    [
        Artifact::json("correlation.json", &CorrelationDoc { symbols, matrix: m.to_rows() }),
        Artifact { name: "correlation.csv".into(), contents: csv_from_rows(&header, &body) },
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolTest<'a> {
    pub symbol: &'a str,
    #[serde(flatten)]
    pub result: &'a TestResult,
}

fn test_row(symbol: &str, t: &TestResult) -> Vec<String> {
    let cv = |s: Significance| opt_fixed(t.critical_value(s), 6);
    vec![
        symbol.to_string(),
        t.test_name.clone(),
        fixed(t.statistic, 6),
        opt_fixed(t.p_value, 6),
        t.lags.map(|l| l.to_string()).unwrap_or_default(),
        t.nobs.to_string(),
        cv(Significance::OnePercent),
        cv(Significance::FivePercent),
        cv(Significance::TenPercent),
        format!("{:.2}", t.significance.level()),
        t.reject_null.to_string(),
    ]
}

fn test_header() -> Vec<String> {
    strings(&["symbol", "test", "statistic", "p_value", "lags", "nobs", "cv_0.01", "cv_0.05", "cv_0.10", "significance", "reject_null"])
}

/// `stem.json` and `stem.csv` for `(symbol, result)` rows.
pub fn test_table(stem: &str, rows: &[(String, TestResult)]) -> [Artifact; 2] {
    let json: Vec<SymbolTest> = rows.iter().map(|(s, t)| SymbolTest { symbol: s, result: t }).collect();
    let body: Vec<Vec<String>> = rows.iter().map(|(s, t)| test_row(s, t)).collect();
    [
        Artifact::json(format!("{stem}.json"), &json),
        Artifact { name: format!("{stem}.csv"), contents: csv_from_rows(&test_header(), &body) },
    ]
}

/// `***`, `**`, `*` for two-sided normal tests at 1%, 5%, 10%.
pub fn significance_stars(t_stat: Option<f64>) -> &'static str {
    match t_stat.map(f64::abs) {
        Some(t) if t >= 2.576 => "***",
        Some(t) if t >= 1.96 => "**",
        Some(t) if t >= 1.645 => "*",
        _ => "",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub t_stat: Option<f64>,
    pub stars: &'static str,
}

fn estimate_rows(es: &[Estimate]) -> Vec<EstimateRow> {
    es.iter()
        .map(|e| EstimateRow {
            name: e.name.clone(),
            value: e.value,
            std_error: e.std_error,
            t_stat: e.t_stat(),
            stars: significance_stars(e.t_stat()),
        })
        .collect()
}

/// Stage-one fit as written to `fit_<symbol>.json`.
#[derive(Debug, Clone, Serialize)]
pub struct FitDoc<'a, P: Serialize> {
    pub symbol: &'a str,
    pub model: &'a str,
    pub params: &'a P,
    pub estimates: Vec<EstimateRow>,
    pub loglik: f64,
    pub n_params: usize,
    pub nobs: usize,
    pub aic: f64,
    pub aic_per_obs: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

pub fn fit_doc<'a, P: Serialize>(fit: &'a VolFit<P>, model: &'a str) -> FitDoc<'a, P> {
    FitDoc {
        symbol: &fit.symbol,
        model,
        params: &fit.params,
        estimates: estimate_rows(&fit.estimates),
        loglik: fit.loglik,
        n_params: fit.n_params,
        nobs: fit.nobs,
        aic: fit.aic,
        aic_per_obs: fit.aic_per_obs,
        converged: fit.converged,
        iterations: fit.iterations,
        gradient_norm: fit.gradient_norm,
    }
}

/// `date, return, residual, variance, std_residual` per observation.
pub fn fit_paths_csv<P>(fit: &VolFit<P>, returns: &[f64]) -> String {
    let header = strings(&["date", "return", "residual", "variance", "std_residual"]);
    let body: Vec<Vec<String>> = (0..fit.nobs)
        .map(|t| {
            vec![
                fit.dates[t].to_string(),
                format!("{:e}", returns[t]),
                format!("{:e}", fit.eps[t]),
                format!("{:e}", fit.h[t]),
                fixed(fit.z[t], 6),
            ]
        })
        .collect();
    csv_from_rows(&header, &body)
}

#[derive(Debug, Clone, Serialize)]
struct CorrelationSeries<'a> {
    dates: &'a [NaiveDate],
    pairs: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Clone, Serialize)]
struct DccDoc<'a> {
    symbols: &'a [String],
    params: &'a volrisk_core::dcc::DccParams,
    estimates: Vec<EstimateRow>,
    loglik: f64,
    loglik_joint: f64,
    n_params_joint: usize,
    aic_joint: f64,
    aic_per_obs: f64,
    nobs: usize,
    converged: bool,
    iterations: usize,
    gradient_norm: f64,
    qbar: Vec<Vec<f64>>,
    correlations: CorrelationSeries<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_path: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_path: Option<Vec<Vec<Vec<f64>>>>,
}

fn pair_name(a: &str, b: &str) -> String {
    format!("{a}~{b}")
}

fn pairs(fit: &DccFit) -> Vec<(String, Vec<f64>)> {
    let k = fit.symbols.len();
    let mut out = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            out.push((pair_name(&fit.symbols[i], &fit.symbols[j]), fit.r_path.iter().map(|r| r[(i, j)]).collect()));
        }
    }
    out
}

/// `dcc.json` and `dcc_correlations.csv`.
pub fn dcc_tables(fit: &DccFit, export_paths: bool) -> [Artifact; 2] {
    let ps = pairs(fit);
    let mats = |m: &[Matrix]| m.iter().map(Matrix::to_rows).collect::<Vec<_>>();
    let doc = DccDoc {
        symbols: &fit.symbols,
        params: &fit.params,
        estimates: estimate_rows(&fit.estimates),
        loglik: fit.loglik,
        loglik_joint: fit.loglik_joint,
        n_params_joint: fit.n_params_joint,
        aic_joint: fit.aic_joint,
        aic_per_obs: fit.aic_per_obs,
        nobs: fit.nobs,
        converged: fit.converged,
        iterations: fit.iterations,
        gradient_norm: fit.gradient_norm,
        qbar: fit.qbar.to_rows(),
        correlations: CorrelationSeries { dates: &fit.dates, pairs: ps.clone() },
        q_path: export_paths.then(|| mats(&fit.q_path)),
        r_path: export_paths.then(|| mats(&fit.r_path)),
    };
    let mut header = vec!["date".to_string()];
    header.extend(ps.iter().map(|(n, _)| n.clone()));
    let body: Vec<Vec<String>> = fit
        .dates
        .iter()
        .enumerate()
        .map(|(t, d)| std::iter::once(d.to_string()).chain(ps.iter().map(|(_, v)| fixed(v[t], 6))).collect())
        .collect();
    [Artifact::json("dcc.json", &doc), Artifact { name: "dcc_correlations.csv".into(), contents: csv_from_rows(&header, &body) }]
}

/// Stage-one block of the human-readable summary.
pub struct SummaryBlock<'a> {
    pub title: String,
    pub estimates: &'a [Estimate],
    pub loglik: f64,
    pub aic_per_obs: f64,
    pub nobs: usize,
    pub converged: bool,
}

pub fn summary_text(blocks: &[SummaryBlock]) -> String {
    let mut s = String::new();
    for b in blocks {
        let _ = writeln!(s, "== {}", b.title);
        let _ = writeln!(s, "{:<10} {:>14} {:>12} {:>9}", "param", "estimate", "std.err", "t");
        for e in b.estimates {
            let t = e.t_stat();
            let _ = writeln!(
                s,
                "{:<10} {:>14.6} {:>12} {:>9} {}",
                e.name,
                e.value,
                e.std_error.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into()),
                t.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into()),
                significance_stars(t)
            );
        }
        let _ = writeln!(
            s,
            "loglik {:.3}   AIC/n {:.4}   nobs {}   {}",
            b.loglik,
            b.aic_per_obs,
            b.nobs,
            if b.converged { "converged" } else { "NOT CONVERGED" }
        );
        s.push('\n');
    }
    s.push_str("significance: *** 1%, ** 5%, * 10% (two-sided normal)\n");
    s
}

/// `risk.json` and `risk.csv`: asset rows, level sub-rows and one column
/// group per period.
pub fn risk_tables(report: &std::collections::BTreeMap<String, Vec<PeriodRisk>>, warnings: &[String]) -> [Artifact; 2] {
    #[derive(Serialize)]
    struct Doc<'a> {
        assets: Vec<AssetDoc<'a>>,
        warnings: &'a [String],
    }
    #[derive(Serialize)]
    struct AssetDoc<'a> {
        symbol: &'a str,
        periods: Vec<PeriodDoc<'a>>,
    }
    #[derive(Serialize)]
    struct PeriodDoc<'a> {
        name: &'a str,
        start: NaiveDate,
        end: NaiveDate,
        stats: &'a DescriptiveStats,
        levels: &'a [volrisk_core::risk::LevelRisk],
        max_drawdown: f64,
    }
    let doc = Doc {
        assets: report
            .iter()
            .map(|(sym, ps)| AssetDoc {
                symbol: sym,
                periods: ps
                    .iter()
                    .map(|p| PeriodDoc {
                        name: &p.period.name,
                        start: p.period.start,
                        end: p.period.end,
                        stats: &p.stats,
                        levels: &p.levels,
                        max_drawdown: p.drawdown.max_drawdown,
                    })
                    .collect(),
            })
            .collect(),
        warnings,
    };
    let period_names: Vec<&str> = report.values().next().map(|ps| ps.iter().map(|p| p.period.name.as_str()).collect()).unwrap_or_default();
    let mut header = strings(&["asset", "level"]);
    for p in &period_names {
        for col in ["var", "cfvar", "empirical_var", "max_drawdown"] {
            header.push(format!("{p}:{col}"));
        }
    }
    let mut body = Vec::new();
    for (sym, ps) in report {
        let n_levels = ps.first().map_or(0, |p| p.levels.len());
        for li in 0..n_levels {
            let mut row = vec![sym.clone(), format!("{:.2}", ps[0].levels[li].level)];
            for p in ps {
                let l = &p.levels[li];
                row.extend([l.var_gaussian, l.var_cf, l.var_empirical, p.drawdown.max_drawdown].map(|v| fixed(v, 3)));
            }
            body.push(row);
        }
    }
    [Artifact::json("risk.json", &doc), Artifact { name: "risk.csv".into(), contents: csv_from_rows(&header, &body) }]
}

pub fn drawdown_csv(series: &[(NaiveDate, f64)]) -> String {
    let header = strings(&["date", "drawdown"]);
    let body: Vec<Vec<String>> = series.iter().map(|(d, v)| vec![d.to_string(), fixed(*v, 6)]).collect();
    csv_from_rows(&header, &body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stars_follow_normal_thresholds() {
        assert_eq!(significance_stars(Some(2.576)), "***");
        assert_eq!(significance_stars(Some(-2.0)), "**");
        assert_eq!(significance_stars(Some(1.7)), "*");
        assert_eq!(significance_stars(Some(1.0)), "");
        assert_eq!(significance_stars(None), "");
    }

    #[test]
    fn fixed_formatting() {
        assert_eq!(fixed(0.0897, 3), "0.090");
        assert_eq!(fixed(-0.0001, 3), "0.000");
        assert_eq!(fixed(-1.5, 6), "-1.500000");
        assert_eq!(fixed(f64::NAN, 3), "NaN");
        assert_eq!(file_stem("^DJI"), "_DJI");
    }
}
