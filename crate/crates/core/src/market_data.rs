//! Dated price and return series, log returns and calendar alignment.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;

use crate::math::ln;
use crate::{Error, Result};

/// One trading day of a price series. Only `close` is required.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriceObs {
    pub date: NaiveDate,
    pub close: f64,
    pub open: Option<f64>,
    pub high: Option<f64>,
    pub low: Option<f64>,
    pub volume: Option<f64>,
}

impl PriceObs {
    pub fn close_only(date: NaiveDate, close: f64) -> Self {
        Self { date, close, open: None, high: None, low: None, volume: None }
    }
}

/// Daily closes with strictly increasing dates and positive prices.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriceSeries {
    symbol: String,
    observations: Vec<PriceObs>,
}

impl PriceSeries {
    /// Validates an already date-ordered sequence.
    pub fn new(symbol: impl Into<String>, observations: Vec<PriceObs>) -> Result<Self> {
        if observations.len() < 2 {
            return Err(Error::TooShort { needed: 2, got: observations.len() });
        }
        for (i, o) in observations.iter().enumerate() {
            if !(o.close > 0.0) || !o.close.is_finite() {
                return Err(Error::NonPositivePrice { row: i + 1 });
            }
        }
        for (i, w) in observations.windows(2).enumerate() {
            if w[1].date == w[0].date {
                return Err(Error::DuplicateDate { date: w[1].date });
            }
            if w[1].date < w[0].date {
                return Err(Error::UnorderedDates { index: i + 1 });
            }
        }
        Ok(Self { symbol: symbol.into(), observations })
    }

    /// Sorts by date first. Row numbers in errors are 1-based positions in
    /// the input order.
    pub fn from_unordered(symbol: impl Into<String>, observations: Vec<PriceObs>) -> Result<Self> {
        for (i, o) in observations.iter().enumerate() {
            if !(o.close > 0.0) || !o.close.is_finite() {
                return Err(Error::NonPositivePrice { row: i + 1 });
            }
        }
        let mut obs = observations;
        obs.sort_by_key(|o| o.date);
        Self::new(symbol, obs)
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn observations(&self) -> &[PriceObs] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.close).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.observations.iter().map(|o| o.date).collect()
    }
}

/// Dated log returns.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReturnSeries {
    symbol: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(symbol: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch { expected: dates.len(), got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        for (i, w) in dates.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::UnorderedDates { index: i + 1 });
            }
        }
        Ok(Self { symbol: symbol.into(), dates, values })
    }

    /// Attaches consecutive synthetic calendar days starting at `start`.
    pub fn with_daily_calendar(symbol: impl Into<String>, start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        let dates = start.iter_days().take(values.len()).collect();
        Self::new(symbol, dates, values)
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Observations with `start <= date <= end`.
    pub fn restrict(&self, start: NaiveDate, end: NaiveDate) -> ReturnSeries {
        let (dates, values) = self
            .dates
            .iter()
            .zip(&self.values)
            .filter(|(d, _)| **d >= start && **d <= end)
            .map(|(d, v)| (*d, *v))
            .unzip();
        ReturnSeries { symbol: self.symbol.clone(), dates, values }
    }
}

/// `r_t = ln(P_t / P_{t-1})`, dated at `t`.
pub fn log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    let obs = prices.observations();
    if obs.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: obs.len() });
    }
    let values = obs.windows(2).map(|w| ln(w[1].close / w[0].close)).collect();
    let dates = obs[1..].iter().map(|o| o.date).collect();
    ReturnSeries::new(prices.symbol(), dates, values)
}

/// Return series restricted to one shared calendar.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReturnPanel {
    dates: Vec<NaiveDate>,
    series: Vec<ReturnSeries>,
}

impl ReturnPanel {
    /// Wraps series that already share one calendar.
    pub fn new(series: Vec<ReturnSeries>) -> Result<Self> {
        let dates = series.first().map(|s| s.dates.clone()).unwrap_or_default();
        if series.iter().any(|s| s.dates != dates) {
            return Err(Error::CalendarMismatch);
        }
        Ok(Self { dates, series })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn series(&self) -> &[ReturnSeries] {
        &self.series
    }

    pub fn symbols(&self) -> Vec<&str> {
        self.series.iter().map(ReturnSeries::symbol).collect()
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn width(&self) -> usize {
        self.series.len()
    }

    pub fn restrict(&self, start: NaiveDate, end: NaiveDate) -> ReturnPanel {
        let series: Vec<_> = self.series.iter().map(|s| s.restrict(start, end)).collect();
        let dates = series.first().map(|s| s.dates.clone()).unwrap_or_default();
        ReturnPanel { dates, series }
    }
}

/// Strict intersection of calendars; no filling of missing days.
pub fn align_panel(series: &[ReturnSeries]) -> Result<ReturnPanel> {
    if series.len() < 2 {
        return Err(Error::TooFewSeries { needed: 2, got: series.len() });
    }
    let mut common: BTreeSet<NaiveDate> = series[0].dates.iter().copied().collect();
    for s in &series[1..] {
        let other: BTreeSet<NaiveDate> = s.dates.iter().copied().collect();
        common = common.intersection(&other).copied().collect();
    }
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let aligned = series
        .iter()
        .map(|s| {
            let (dates, values) = s
                .dates
                .iter()
                .zip(&s.values)
                .filter(|(d, _)| common.contains(d))
                .map(|(d, v)| (*d, *v))
                .unzip();
            ReturnSeries { symbol: s.symbol.clone(), dates, values }
        })
        .collect();
    ReturnPanel::new(aligned)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{abs, exp};
    use alloc::vec;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn prices(closes: &[f64]) -> PriceSeries {
        let obs = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| PriceObs::close_only(d(2020, 1, 1) + chrono::Days::new(i as u64), c))
            .collect();
        PriceSeries::new("X", obs).unwrap()
    }

    #[test]
    fn log_return_examples() {
        assert_eq!(log_returns(&prices(&[100.0, 100.0])).unwrap().values(), &[0.0]);
        let r = log_returns(&prices(&[100.0, 100.0 * core::f64::consts::E])).unwrap();
        assert!(abs(r.values()[0] - 1.0) < 1e-15);
        let r = log_returns(&prices(&[100.0, 110.0, 99.0])).unwrap();
        assert!(abs(r.values()[0] - 0.095_310_179_804_324_87) < 1e-15);
        assert!(abs(r.values()[1] + 0.105_360_515_657_826_3) < 1e-15);
        assert_eq!(r.dates()[0], d(2020, 1, 2));
        let back: f64 = r.values().iter().sum();
        assert!(abs(exp(back) - 0.99) < 1e-14);
    }

    #[test]
    fn price_series_contracts() {
        let obs = vec![PriceObs::close_only(d(2020, 1, 2), 100.0), PriceObs::close_only(d(2020, 1, 3), -5.0)];
        assert_eq!(PriceSeries::new("X", obs).unwrap_err(), Error::NonPositivePrice { row: 2 });
        let obs = vec![PriceObs::close_only(d(2020, 1, 2), 100.0), PriceObs::close_only(d(2020, 1, 2), 101.0)];
        assert_eq!(PriceSeries::from_unordered("X", obs).unwrap_err(), Error::DuplicateDate { date: d(2020, 1, 2) });
        let obs = vec![PriceObs::close_only(d(2020, 1, 2), 100.0)];
        assert!(matches!(PriceSeries::new("X", obs), Err(Error::TooShort { .. })));
        let shuffled = vec![
            PriceObs::close_only(d(2020, 1, 3), 101.0),
            PriceObs::close_only(d(2020, 1, 2), 100.0),
            PriceObs::close_only(d(2020, 1, 6), 99.0),
        ];
        let mut sorted = shuffled.clone();
        sorted.sort_by_key(|o| o.date);
        assert_eq!(PriceSeries::from_unordered("X", shuffled).unwrap(), PriceSeries::new("X", sorted).unwrap());
    }

    #[test]
    fn align_weekdays_with_daily_calendar() {
        // 2020-01-06 is a Monday.
        let a = ReturnSeries::with_daily_calendar("A", d(2020, 1, 6), vec![0.01; 7]).unwrap();
        let weekdays: Vec<_> = (6..11).map(|day| d(2020, 1, day)).collect();
        let b = ReturnSeries::new("B", weekdays.clone(), vec![0.02; 5]).unwrap();
        let panel = align_panel(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(panel.dates(), weekdays.as_slice());
        assert_eq!(panel.symbols(), vec!["A", "B"]);
        let same = align_panel(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(same.series()[0], a);
        let late = ReturnSeries::new("C", vec![d(2021, 1, 1)], vec![0.0]).unwrap();
        assert_eq!(align_panel(&[a.clone(), late]).unwrap_err(), Error::EmptyIntersection);
        assert!(matches!(align_panel(&[a]), Err(Error::TooFewSeries { .. })));
    }
}
