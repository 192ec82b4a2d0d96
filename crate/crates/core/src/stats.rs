//! Descriptive statistics and the normality / stationarity test battery.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::market_data::{ReturnPanel, ReturnSeries};
use crate::math::{abs, floor, powf, sqrt};
use crate::{Error, Result};

/// Sample moments and order statistics of a return series.
///
/// `std` uses the `n - 1` denominator. Skewness and excess kurtosis are the
/// biased central-moment ratios `m3 / m2^1.5` and `m4 / m2^2 - 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub q25: f64,
    pub q75: f64,
    pub sharpe: Option<f64>,
}

impl DescriptiveStats {
    /// Raw (non-excess) kurtosis.
    pub fn kurtosis(&self) -> f64 {
        self.excess_kurtosis + 3.0
    }
}

pub fn describe(r: &ReturnSeries, risk_free: Option<f64>) -> Result<DescriptiveStats> {
    describe_values(r.values(), risk_free)
}

pub fn describe_values(x: &[f64], risk_free: Option<f64>) -> Result<DescriptiveStats> {
    let n = x.len();
    if n < 4 {
        return Err(Error::TooShort { needed: 4, got: n });
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let ss = m2;
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if !(m2 > 0.0) || m2 <= (1e-14 * mean) * (1e-14 * mean) {
        return Err(Error::ZeroVariance);
    }
    let std = sqrt(ss / (nf - 1.0));
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(DescriptiveStats {
        n,
        mean,
        std,
        min: sorted[0],
        max: sorted[n - 1],
        skewness: m3 / powf(m2, 1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        q25: quantile_sorted(&sorted, 0.25),
        q75: quantile_sorted(&sorted, 0.75),
        sharpe: risk_free.map(|rf| (mean - rf) / std),
    })
}

/// Linear interpolation between order statistics ("type 7").
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = floor(h) as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Significance levels at which decisions are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Significance {
    #[cfg_attr(feature = "serde", serde(rename = "0.01"))]
    OnePercent,
    #[default]
    #[cfg_attr(feature = "serde", serde(rename = "0.05"))]
    FivePercent,
    #[cfg_attr(feature = "serde", serde(rename = "0.10"))]
    TenPercent,
}

impl Significance {
    pub const ALL: [Significance; 3] = [Self::OnePercent, Self::FivePercent, Self::TenPercent];

    pub fn level(self) -> f64 {
        match self {
            Self::OnePercent => 0.01,
            Self::FivePercent => 0.05,
            Self::TenPercent => 0.10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriticalValue {
    pub level: f64,
    pub value: f64,
}

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestResult {
    pub test_name: String,
    pub statistic: f64,
    pub critical_values: Vec<CriticalValue>,
    pub p_value: Option<f64>,
    pub significance: Significance,
    pub reject_null: bool,
    /// Lag order (ADF) or bandwidth (KPSS) actually used.
    pub lags: Option<usize>,
    pub nobs: usize,
}

impl TestResult {
    pub fn critical_value(&self, s: Significance) -> Option<f64> {
        self.critical_values.iter().find(|c| abs(c.level - s.level()) < 1e-12).map(|c| c.value)
    }
}

/// `JB = n/6 * (S^2 + (K - 3)^2 / 4)` with raw kurtosis `K`, against
/// chi-square(2).
pub fn jarque_bera(s: &DescriptiveStats, significance: Significance) -> Result<TestResult> {
    if s.n < 4 {
        return Err(Error::TooShort { needed: 4, got: s.n });
    }
    if !(s.std > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let k_raw = s.kurtosis();
    let jb = s.n as f64 / 6.0 * (s.skewness * s.skewness + 0.25 * (k_raw - 3.0) * (k_raw - 3.0));
    let p = crate::math::chi2_2_sf(jb);
    // chi-square(2) quantiles: -2 ln(level)
    let critical_values = Significance::ALL
        .iter()
        .map(|l| CriticalValue { level: l.level(), value: -2.0 * crate::math::ln(l.level()) })
        .collect();
    Ok(TestResult {
        test_name: "jarque_bera".to_string(),
        statistic: jb,
        critical_values,
        p_value: Some(p),
        significance,
        reject_null: p < significance.level(),
        lags: None,
        nobs: s.n,
    })
}

/// Lag selection for the augmented Dickey-Fuller regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LagPolicy {
    /// `floor(12 * (n / 100)^(1/4))`
    #[default]
    Schwert,
    Fixed(usize),
}

impl LagPolicy {
    pub fn lags(self, n: usize) -> usize {
        match self {
            Self::Schwert => floor(12.0 * powf(n as f64 / 100.0, 0.25)) as usize,
            Self::Fixed(p) => p,
        }
    }
}

/// MacKinnon (2010) response-surface coefficients, constant / no trend,
/// one variable: `tau_inf, b1, b2, b3`.
const ADF_CONSTANT_SURFACE: [(f64, [f64; 4]); 3] = [
    (0.01, [-3.43035, -6.5393, -16.786, -79.433]),
    (0.05, [-2.86154, -2.8903, -4.234, -40.040]),
    (0.10, [-2.56677, -1.5384, -2.809, 0.0]),
];

pub fn adf_critical_values(nobs: usize) -> Vec<CriticalValue> {
    let t = nobs as f64;
    ADF_CONSTANT_SURFACE
        .iter()
        .map(|(level, b)| CriticalValue { level: *level, value: b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t) })
        .collect()
}

/// Augmented Dickey-Fuller test with constant and no trend.
///
/// Regresses `Δy_t` on `1, y_{t-1}, Δy_{t-1}, …, Δy_{t-p}`; the statistic is
/// the t-ratio of the `y_{t-1}` coefficient. Null: unit root.
pub fn adf_test(r: &ReturnSeries, lag_policy: LagPolicy, significance: Significance) -> Result<TestResult> {
    adf_values(r.values(), lag_policy, significance)
}

pub fn adf_values(y: &[f64], lag_policy: LagPolicy, significance: Significance) -> Result<TestResult> {
    let n = y.len();
    let lags = lag_policy.lags(n);
    if n <= lags + 10 {
        return Err(Error::TooShort { needed: lags + 11, got: n });
    }
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let k = 2 + lags;
    let mut rows = Vec::with_capacity(dy.len() - lags);
    let mut response = Vec::with_capacity(dy.len() - lags);
    for i in lags..dy.len() {
        let mut x = vec![1.0, y[i]];
        x.extend((1..=lags).map(|j| dy[i - j]));
        rows.push(x);
        response.push(dy[i]);
    }
    let fit = ols(&rows, &response, k)?;
    let statistic = fit.coef[1] / fit.std_err(1);
    if !statistic.is_finite() {
        return Err(Error::ZeroVariance);
    }
    let nobs = response.len();
    let critical_values = adf_critical_values(nobs);
    let cv = critical_values.iter().find(|c| abs(c.level - significance.level()) < 1e-12).map(|c| c.value).unwrap();
    Ok(TestResult {
        test_name: "adf".to_string(),
        statistic,
        critical_values,
        p_value: None,
        significance,
        reject_null: statistic < cv,
        lags: Some(lags),
        nobs,
    })
}

struct OlsFit {
    coef: Vec<f64>,
    cov: Matrix,
}

impl OlsFit {
    fn std_err(&self, i: usize) -> f64 {
        sqrt(self.cov[(i, i)])
    }
}

fn ols(rows: &[Vec<f64>], y: &[f64], k: usize) -> Result<OlsFit> {
    let n = rows.len();
    if n <= k {
        return Err(Error::TooShort { needed: k + 1, got: n });
    }
    let mut xtx = Matrix::zeros(k, k);
    let mut xty = vec![0.0; k];
    for (x, &yi) in rows.iter().zip(y) {
        for a in 0..k {
            xty[a] += x[a] * yi;
            for b in 0..=a {
                xtx[(a, b)] += x[a] * x[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            xtx[(b, a)] = xtx[(a, b)];
        }
    }
    let inv = xtx.inverse().ok_or(Error::ZeroVariance)?;
    let coef = inv.mul_vec(&xty);
    let rss: f64 = rows
        .iter()
        .zip(y)
        .map(|(x, &yi)| {
            let fit: f64 = x.iter().zip(&coef).map(|(a, b)| a * b).sum();
            (yi - fit) * (yi - fit)
        })
        .sum();
    let s2 = rss / (n - k) as f64;
    let mut cov = inv;
    for i in 0..k {
        for j in 0..k {
            cov[(i, j)] *= s2;
        }
    }
    Ok(OlsFit { coef, cov })
}

/// Bartlett-kernel bandwidth for the KPSS long-run variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandwidthPolicy {
    /// `floor(4 * (n / 100)^(1/4))`
    #[default]
    NeweyWest,
    Fixed(usize),
}

impl BandwidthPolicy {
    pub fn bandwidth(self, n: usize) -> usize {
        match self {
            Self::NeweyWest => floor(4.0 * powf(n as f64 / 100.0, 0.25)) as usize,
            Self::Fixed(l) => l,
        }
    }
}

/// Kwiatkowski-Phillips-Schmidt-Shin level-stationarity critical values.
const KPSS_LEVEL_CRITICAL: [(f64, f64); 3] = [(0.01, 0.739), (0.05, 0.463), (0.10, 0.347)];

/// KPSS test of level stationarity. Null: stationary.
pub fn kpss_test(r: &ReturnSeries, bandwidth: BandwidthPolicy, significance: Significance) -> Result<TestResult> {
    kpss_values(r.values(), bandwidth, significance)
}

pub fn kpss_values(y: &[f64], bandwidth: BandwidthPolicy, significance: Significance) -> Result<TestResult> {
    let n = y.len();
    let l = bandwidth.bandwidth(n);
    if n <= l + 10 {
        return Err(Error::TooShort { needed: l + 11, got: n });
    }
    let nf = n as f64;
    let mean = y.iter().sum::<f64>() / nf;
    let e: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let mut partial = 0.0;
    let mut eta = 0.0;
    for v in &e {
        partial += v;
        eta += partial * partial;
    }
    let mut lrv: f64 = e.iter().map(|v| v * v).sum();
    for j in 1..=l {
        let w = 1.0 - j as f64 / (l as f64 + 1.0);
        let g: f64 = e[j..].iter().zip(&e[..n - j]).map(|(a, b)| a * b).sum();
        lrv += 2.0 * w * g;
    }
    lrv /= nf;
    if !(lrv > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let statistic = eta / (nf * nf * lrv);
    let critical_values: Vec<CriticalValue> =
        KPSS_LEVEL_CRITICAL.iter().map(|(level, value)| CriticalValue { level: *level, value: *value }).collect();
    let cv = critical_values.iter().find(|c| abs(c.level - significance.level()) < 1e-12).map(|c| c.value).unwrap();
    Ok(TestResult {
        test_name: "kpss".to_string(),
        statistic,
        critical_values,
        p_value: None,
        significance,
        reject_null: statistic > cv,
        lags: Some(l),
        nobs: n,
    })
}

/// Pearson correlation of two equal-length samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Symmetric, unit-diagonal correlation matrix of the panel's series.
pub fn pearson_correlation(panel: &ReturnPanel) -> Result<Matrix> {
    let k = panel.width();
    if k < 2 {
        return Err(Error::TooFewSeries { needed: 2, got: k });
    }
    let s = panel.series();
    let mut m = Matrix::identity(k);
    for i in 0..k {
        for j in 0..i {
            let c = pearson(s[i].values(), s[j].values())?;
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_is_degenerate() {
        assert_eq!(describe_values(&[0.01; 10], None).unwrap_err(), Error::ZeroVariance);
        assert!(matches!(describe_values(&[0.1, 0.2, 0.3], None), Err(Error::TooShort { .. })));
    }

    #[test]
    fn symmetric_two_point_sample() {
        let s = describe_values(&[-0.5, 0.5, -0.5, 0.5], Some(0.0)).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.skewness, 0.0);
        // two-point distribution: m4/m2^2 = 1
        assert!(abs(s.excess_kurtosis + 2.0) < 1e-15);
        assert!(abs(s.std - sqrt(1.0 / 3.0)) < 1e-15);
        assert_eq!(s.sharpe, Some(0.0));
        assert!(s.min <= s.q25 && s.q25 <= s.q75 && s.q75 <= s.max);
    }

    #[test]
    fn jb_examples() {
        let mut s = describe_values(&[-1.0, 1.0, -2.0, 2.0, 0.5], None).unwrap();
        s.skewness = 0.0;
        s.excess_kurtosis = 0.0;
        let r = jarque_bera(&s, Significance::FivePercent).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject_null);
        s.n = 600;
        s.skewness = 1.0;
        s.excess_kurtosis = 3.0;
        let r = jarque_bera(&s, Significance::FivePercent).unwrap();
        assert!(abs(r.statistic - 325.0) < 1e-12);
        assert!(r.reject_null);
        assert!(abs(r.critical_value(Significance::FivePercent).unwrap() - 5.991_464_547_107_979) < 1e-12);
    }

    #[test]
    fn quantile_type7() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&x, 0.25), 1.75);
        assert_eq!(quantile_sorted(&x, 0.5), 2.5);
        assert_eq!(quantile_sorted(&x, 1.0), 4.0);
        assert_eq!(quantile_sorted(&x, 0.0), 1.0);
    }

    #[test]
    fn adf_critical_values_asymptote() {
        let cv = adf_critical_values(100_000_000);
        assert!(abs(cv[1].value + 2.86154) < 1e-6);
        let cv = adf_critical_values(500);
        // statsmodels reports -2.8674 at nobs = 500
        assert!(abs(cv[1].value + 2.8674) < 1e-3);
    }

    #[test]
    fn lag_rules() {
        assert_eq!(LagPolicy::Schwert.lags(1000), 21);
        assert_eq!(LagPolicy::Schwert.lags(516), 18);
        assert_eq!(BandwidthPolicy::NeweyWest.bandwidth(1000), 7);
        assert_eq!(LagPolicy::Fixed(3).lags(10), 3);
    }

    #[test]
    fn pearson_identity_and_antisymmetry() {
        let x = [0.1, -0.3, 0.2, 0.05, -0.02];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!(abs(pearson(&x, &x).unwrap() - 1.0) < 1e-15);
        assert!(abs(pearson(&x, &neg).unwrap() + 1.0) < 1e-15);
        assert_eq!(pearson(&x, &[1.0; 5]).unwrap_err(), Error::ZeroVariance);
    }
}
