//! Downside risk: Gaussian, Cornish–Fisher and empirical value at risk, and
//! drawdown paths. Every VaR is reported as a positive loss, scaled by the
//! amount at risk `W`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::NaiveDate;

use crate::market_data::{ReturnPanel, ReturnSeries};
use crate::math::{exp, norm_quantile};
use crate::stats::{describe, quantile_sorted, DescriptiveStats};
use crate::{Error, Result};

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability(level))
    }
}

fn check_amount(amount: f64) -> Result<()> {
    if amount > 0.0 && amount.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!("portfolio amount must be positive, got {amount}")))
    }
}

fn check_stats(s: &DescriptiveStats) -> Result<()> {
    if s.std > 0.0 && s.std.is_finite() && s.mean.is_finite() {
        Ok(())
    } else {
        Err(Error::ZeroVariance)
    }
}

/// `-(μ + z_α σ) W` with `z_α` the lower-tail quantile at `1 - level`.
pub fn gaussian_var(stats: &DescriptiveStats, level: f64, amount: f64) -> Result<f64> {
    check_level(level)?;
    check_amount(amount)?;
    check_stats(stats)?;
    let z = norm_quantile(1.0 - level);
    Ok(-(stats.mean + z * stats.std) * amount)
}

/// Cornish–Fisher adjusted quantile for skewness `s` and excess kurtosis `k`.
pub fn cornish_fisher_z(z: f64, s: f64, k: f64) -> f64 {
    let z2 = z * z;
    let z3 = z2 * z;
    z + (z2 - 1.0) * s / 6.0 + (z3 - 3.0 * z) * k / 24.0 - (2.0 * z3 - 5.0 * z) * s * s / 36.0
}

/// `-(μ + Z_CF σ) W`: the Gaussian form with the lower-tail quantile
/// replaced by its Cornish–Fisher adjustment. Negative values are gains.
pub fn cf_var(stats: &DescriptiveStats, level: f64, amount: f64) -> Result<f64> {
    check_level(level)?;
    check_amount(amount)?;
    check_stats(stats)?;
    let z = cornish_fisher_z(norm_quantile(1.0 - level), stats.skewness, stats.excess_kurtosis);
    Ok(-(stats.mean + z * stats.std) * amount)
}

/// Fewest observations accepted by [`empirical_var`].
pub const EMPIRICAL_MIN_OBS: usize = 10;

/// `-q W` with `q` the type-7 sample quantile at `1 - level`.
pub fn empirical_var(r: &[f64], level: f64, amount: f64) -> Result<f64> {
    check_level(level)?;
    check_amount(amount)?;
    if r.len() < EMPIRICAL_MIN_OBS {
        return Err(Error::TooShort { needed: EMPIRICAL_MIN_OBS, got: r.len() });
    }
    if let Some(i) = r.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    let mut sorted = r.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(-quantile_sorted(&sorted, 1.0 - level) * amount)
}

/// Whether `n` observations fill the tail at `level`, i.e. `n ≥ 1/(1 - level)`.
pub fn tail_is_populated(n: usize, level: f64) -> bool {
    n as f64 * (1.0 - level) >= 1.0
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Drawdown {
    pub series: Vec<(NaiveDate, f64)>,
    pub max_drawdown: f64,
}

/// Drawdown of log-return wealth `W_t = exp(Σ r)` from its running peak.
pub fn drawdown_values(r: &[f64]) -> (Vec<f64>, f64) {
    let mut cum = 0.0;
    let mut peak = f64::NEG_INFINITY;
    let mut out = Vec::with_capacity(r.len());
    let mut worst = 0.0_f64;
    for v in r {
        cum += v;
        if cum > peak {
            peak = cum;
        }
        let dd = exp(cum - peak) - 1.0;
        worst = worst.min(dd);
        out.push(dd);
    }
    (out, worst)
}

pub fn drawdown(r: &ReturnSeries) -> Drawdown {
    let (dd, max_drawdown) = drawdown_values(r.values());
    Drawdown { series: r.dates().iter().copied().zip(dd).collect(), max_drawdown }
}

/// Inclusive named date range.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Period {
    pub name: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Period {
    pub fn new(name: impl Into<String>, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let name = name.into();
        if start > end {
            return Err(Error::EmptyPeriod(name));
        }
        Ok(Self { name, start, end })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RiskSpec {
    pub levels: Vec<f64>,
    pub amount: f64,
    /// An empty list means one period named `full` spanning the data.
    pub periods: Vec<Period>,
}

impl Default for RiskSpec {
    fn default() -> Self {
        Self { levels: alloc::vec![0.90, 0.95, 0.99], amount: 1.0, periods: Vec::new() }
    }
}

impl RiskSpec {
    pub fn validate(&self) -> Result<()> {
        self.levels.iter().try_for_each(|l| check_level(*l))?;
        check_amount(self.amount)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelRisk {
    pub level: f64,
    pub var_gaussian: f64,
    pub var_cf: f64,
    pub var_empirical: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodRisk {
    pub period: Period,
    pub stats: DescriptiveStats,
    pub levels: Vec<LevelRisk>,
    pub drawdown: Drawdown,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RiskReport {
    pub assets: BTreeMap<String, Vec<PeriodRisk>>,
    /// Cells whose sample is shorter than `1/(1 - level)`.
    pub warnings: Vec<String>,
}

/// Risk cells for every `spec` period of one series; short-tail warnings are
/// appended to `warnings`.
pub fn asset_risk(series: &ReturnSeries, spec: &RiskSpec, warnings: &mut Vec<String>) -> Result<Vec<PeriodRisk>> {
    spec.validate()?;
    let periods = if spec.periods.is_empty() {
        let d = series.dates();
        let (Some(first), Some(last)) = (d.first(), d.last()) else {
            return Err(Error::EmptyPeriod("full".to_string()));
        };
        alloc::vec![Period::new("full", *first, *last)?]
    } else {
        spec.periods.clone()
    };
    let mut rows = Vec::with_capacity(periods.len());
    for p in &periods {
        let sub = series.restrict(p.start, p.end);
        if sub.is_empty() {
            return Err(Error::EmptyPeriod(p.name.clone()));
        }
        let stats = describe(&sub, None)?;
        let mut levels = Vec::with_capacity(spec.levels.len());
        for &level in &spec.levels {
            if !tail_is_populated(sub.len(), level) {
                warnings.push(alloc::format!(
                    "{} {}: {} observations is too few for level {}",
                    series.symbol(),
                    p.name,
                    sub.len(),
                    level
                ));
            }
            levels.push(LevelRisk {
                level,
                var_gaussian: gaussian_var(&stats, level, spec.amount)?,
                var_cf: cf_var(&stats, level, spec.amount)?,
                var_empirical: empirical_var(sub.values(), level, spec.amount)?,
            });
        }
        rows.push(PeriodRisk { period: p.clone(), stats, levels, drawdown: drawdown(&sub) });
    }
    Ok(rows)
}

/// [`asset_risk`] for every member of the panel, keyed by symbol.
pub fn risk_report(panel: &ReturnPanel, spec: &RiskSpec) -> Result<RiskReport> {
    let mut report = RiskReport::default();
    for series in panel.series() {
        let rows = asset_risk(series, spec, &mut report.warnings)?;
        report.assets.insert(series.symbol().to_string(), rows);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{abs, ln};
    use crate::stats::describe_values;
    use alloc::vec;

    fn stats(mean: f64, std: f64, skewness: f64, excess_kurtosis: f64) -> DescriptiveStats {
        DescriptiveStats { n: 100, mean, std, min: -1.0, max: 1.0, skewness, excess_kurtosis, q25: 0.0, q75: 0.0, sharpe: None }
    }

    #[test]
    fn gaussian_examples() {
        assert!(abs(gaussian_var(&stats(0.0, 1.0, 0.0, 0.0), 0.95, 1.0).unwrap() - 1.6448536269514722) < 1e-12);
        assert!(abs(gaussian_var(&stats(0.001, 0.02, 0.0, 0.0), 0.99, 1.0).unwrap() - 0.045527) < 1e-6);
        assert!(gaussian_var(&stats(0.0, 1.0, 0.0, 0.0), 1.0, 1.0).is_err());
        assert!(gaussian_var(&stats(0.0, 0.0, 0.0, 0.0), 0.95, 1.0).is_err());
    }

    #[test]
    fn cornish_fisher_examples() {
        assert!(abs(cornish_fisher_z(1.0, 0.6, 3.0) - 0.78) < 1e-15);
        assert_eq!(cornish_fisher_z(0.0, 0.9, 5.0), -0.9 / 6.0);
        assert_eq!(cornish_fisher_z(-2.1, 0.0, 0.0), -2.1);
        let s = stats(0.0004, 0.013, 0.0, 0.0);
        assert_eq!(cf_var(&s, 0.99, 2.0).unwrap(), gaussian_var(&s, 0.99, 2.0).unwrap());
    }

    #[test]
    fn empirical_examples() {
        let r: Vec<f64> = (0..300).map(|i| [-0.05, 0.0, 0.05][i % 3]).collect();
        assert!(abs(empirical_var(&r, 0.90, 1.0).unwrap() - 0.05) < 1e-12);
        let pos: Vec<f64> = (1..=20).map(|i| i as f64 * 1e-3).collect();
        assert!(empirical_var(&pos, 0.95, 1.0).unwrap() < 0.0);
        assert!(matches!(empirical_var(&pos[..9], 0.95, 1.0), Err(Error::TooShort { .. })));
    }

    #[test]
    fn drawdown_examples() {
        let (dd, max) = drawdown_values(&[ln(2.0), ln(0.5)]);
        assert_eq!(dd[0], 0.0);
        assert!(abs(dd[1] + 0.5) < 1e-15);
        assert!(abs(max + 0.5) < 1e-15);
        let (dd, max) = drawdown_values(&[0.01, 0.02, 0.0, 0.03]);
        assert!(dd.iter().all(|v| *v == 0.0));
        assert_eq!(max, 0.0);
    }

    #[test]
    fn single_cell_report_matches_describe() {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let v: Vec<f64> = (0..60).map(|i| 0.01 * ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let s = ReturnSeries::with_daily_calendar("A", d0, v.clone()).unwrap();
        let panel = ReturnPanel::new(vec![s]).unwrap();
        let spec = RiskSpec { levels: vec![0.95], amount: 1.0, periods: vec![] };
        let rep = risk_report(&panel, &spec).unwrap();
        let cell = &rep.assets["A"][0];
        assert_eq!(cell.levels.len(), 1);
        assert_eq!(cell.stats, describe_values(&v, None).unwrap());
        assert!(rep.warnings.is_empty());
        let late = Period::new("late", NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2021, 2, 1).unwrap()).unwrap();
        let spec = RiskSpec { periods: vec![late], ..spec };
        assert_eq!(risk_report(&panel, &spec).unwrap_err(), Error::EmptyPeriod("late".into()));
    }
}
