//! Price CSVs from disk or HTTP.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use volrisk_core::market_data::{PriceObs, PriceSeries};

/// Header names for each field; matching ignores case and surrounding
/// whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub date: String,
    pub close: String,
    pub open: Option<String>,
    pub high: Option<String>,
    pub low: Option<String>,
    pub volume: Option<String>,
    /// Drop rows whose close is empty, `null`, `NA` or `NaN` instead of
    /// failing.
    pub skip_missing: bool,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            date: "date".into(),
            close: "close".into(),
            open: None,
            high: None,
            low: None,
            volume: None,
            skip_missing: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot fetch {url}: {message}")]
    Fetch { url: String, message: String },
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error(transparent)]
    Series(#[from] volrisk_core::Error),
}

pub fn is_url(source: &str) -> bool {
    source.starts_with("http://") || source.starts_with("https://")
}

/// Body of a local file or an HTTP(S) resource.
pub fn read_source(source: &str) -> Result<String, IngestError> {
    if is_url(source) {
        let mut resp = ureq::get(source)
            .call()
            .map_err(|e| IngestError::Fetch { url: source.into(), message: e.to_string() })?;
        resp.body_mut()
            .read_to_string()
            .map_err(|e| IngestError::Fetch { url: source.into(), message: e.to_string() })
    } else {
        std::fs::read_to_string(Path::new(source)).map_err(|e| IngestError::Read { path: source.into(), source: e })
    }
}

pub fn load_price_series(symbol: &str, source: &str, columns: &ColumnMap) -> Result<PriceSeries, IngestError> {
    let text = read_source(source)?;
    parse_price_csv(symbol, &text, columns)
}

/// Accepts `YYYY-MM-DD` or `YYYY/MM/DD`, optionally followed by a time of
/// day, which is dropped.
pub fn parse_date(field: &str) -> Option<NaiveDate> {
    let day = field.trim().split(['T', ' ']).next()?;
    NaiveDate::parse_from_str(day, "%Y-%m-%d").or_else(|_| NaiveDate::parse_from_str(day, "%Y/%m/%d")).ok()
}

fn is_missing(field: &str) -> bool {
    matches!(field.trim().to_ascii_lowercase().as_str(), "" | "null" | "na" | "nan" | "n/a")
}

fn parse_number(field: &str) -> Option<f64> {
    field.trim().replace(',', "").parse::<f64>().ok()
}

/// Rows may arrive in any date order; they are sorted, and duplicates are
/// rejected. Row numbers in errors count data rows from 1.
pub fn parse_price_csv(symbol: &str, text: &str, columns: &ColumnMap) -> Result<PriceSeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| IngestError::MalformedRow { row: 0, reason: e.to_string() })?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name.trim()));
    let require = |name: &str| find(name).ok_or_else(|| IngestError::MissingColumn(name.to_string()));
    let date_ix = require(&columns.date)?;
    let close_ix = require(&columns.close)?;
    let optional = |name: &Option<String>| -> Result<Option<usize>, IngestError> { name.as_deref().map(require).transpose() };
    let (open_ix, high_ix, low_ix, vol_ix) =
        (optional(&columns.open)?, optional(&columns.high)?, optional(&columns.low)?, optional(&columns.volume)?);

    let mut obs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| IngestError::MalformedRow { row, reason: e.to_string() })?;
        let field = |ix: usize| rec.get(ix).unwrap_or("");
        let date = parse_date(field(date_ix))
            .ok_or_else(|| IngestError::MalformedRow { row, reason: format!("unparseable date `{}`", field(date_ix)) })?;
        let raw_close = field(close_ix);
        if columns.skip_missing && is_missing(raw_close) {
            log::warn!("{symbol}: skipping row {row} ({date}) with missing close");
            continue;
        }
        let close = parse_number(raw_close)
            .ok_or_else(|| IngestError::MalformedRow { row, reason: format!("unparseable close `{raw_close}`") })?;
        if !(close > 0.0) || !close.is_finite() {
            return Err(volrisk_core::Error::NonPositivePrice { row }.into());
        }
        let opt = |ix: Option<usize>| ix.and_then(|k| parse_number(field(k)));
        obs.push(PriceObs { date, close, open: opt(open_ix), high: opt(high_ix), low: opt(low_ix), volume: opt(vol_ix) });
    }
    Ok(PriceSeries::from_unordered(symbol, obs)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let s = parse_price_csv("A", "Date,Close\n2020-01-02,100.0\n2020-01-03,101.0\n", &ColumnMap {
            date: "Date".into(),
            close: "Close".into(),
            ..ColumnMap::default()
        })
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.closes(), vec![100.0, 101.0]);
    }

    #[test]
    fn negative_close_names_the_row() {
        let e = parse_price_csv("A", "date,close\n2020-01-02,100\n2020-01-03,-5\n", &ColumnMap::default()).unwrap_err();
        assert_eq!(e.to_string(), "non-positive price at row 2");
    }

    #[test]
    fn shuffled_rows_are_sorted() {
        let sorted = "date,close\n2020-01-02,1\n2020-01-03,2\n2020-01-06,3\n";
        let shuffled = "date,close\n2020-01-06,3\n2020-01-02,1\n2020-01-03,2\n";
        let a = parse_price_csv("A", sorted, &ColumnMap::default()).unwrap();
        let b = parse_price_csv("A", shuffled, &ColumnMap::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicates_and_missing_columns() {
        let dup = "date,close\n2020-01-02,1\n2020-01-02,2\n";
        assert!(matches!(parse_price_csv("A", dup, &ColumnMap::default()), Err(IngestError::Series(volrisk_core::Error::DuplicateDate { .. }))));
        assert!(matches!(parse_price_csv("A", "day,close\n", &ColumnMap::default()), Err(IngestError::MissingColumn(c)) if c == "date"));
        let bad = "date,close\n2020-01-02,1\n2020-13-40,2\n";
        assert!(matches!(parse_price_csv("A", bad, &ColumnMap::default()), Err(IngestError::MalformedRow { row: 2, .. })));
    }

    #[test]
    fn timestamps_missing_values_and_ohlcv() {
        let text = "Date,Open,High,Low,Close,Volume\n2020-01-02 00:00:00,1,2,0.5,1.5,\"1,000\"\n2020-01-03T00:00:00Z,1,2,0.5,null,0\n2020/01/06,1,2,0.5,1.7,10\n";
        let cols = ColumnMap {
            date: "Date".into(),
            close: "Close".into(),
            open: Some("Open".into()),
            volume: Some("Volume".into()),
            skip_missing: true,
            ..ColumnMap::default()
        };
        let s = parse_price_csv("A", text, &cols).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.observations()[0].volume, Some(1000.0));
        assert_eq!(s.dates()[1], NaiveDate::from_ymd_opt(2020, 1, 6).unwrap());
        let strict = ColumnMap { skip_missing: false, ..cols };
        assert!(parse_price_csv("A", text, &strict).is_err());
    }
}
