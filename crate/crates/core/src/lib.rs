//! Volatility and downside-risk estimation for daily return panels.
//!
//! The crate covers the whole two-stage pipeline: log returns and the
//! descriptive/normality/stationarity battery ([`market_data`], [`stats`]),
//! standardized innovation laws ([`distributions`]), per-asset EGARCH(1,1)
//! and GARCH(1,1) maximum likelihood ([`egarch`]), DCC(1,1) dynamic
//! correlation over the standardized residuals ([`dcc`]), and parametric,
//! Cornish-Fisher and empirical VaR plus drawdowns ([`risk`]).
//!
//! Everything here is pure computation over in-memory data. The crate is
//! `no_std` (with `alloc`) when the default `std` feature is disabled; file
//! formats, HTTP and the command line live in the `volrisk` crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod dcc;
pub mod distributions;
pub mod egarch;
mod error;
pub mod linalg;
pub mod market_data;
pub mod math;
pub mod optimize;
pub mod risk;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
