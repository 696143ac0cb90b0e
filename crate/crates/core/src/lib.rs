//! Additive time-series forecasting with changepoint trends and Fourier
//! seasonality, and a continuous-authentication pipeline built on top of it.
//!
//! The crate is organised as:
//!
//! * [`forecast`]: trend / seasonality / event components, penalized fitting,
//!   Monte Carlo prediction bands and spectral period estimation.
//! * [`auth`]: window features, one-class novelty gating, coverage-based
//!   ("tolerable error") decisions and accept-and-retrain bookkeeping.
//! * [`energy`]: sensor current tables, duty-cycle schedules and the
//!   risk-driven scanning policy.
//! * [`data`]: CSV ingestion, normalization and rolling-origin splits.
//! * [`eval`]: error metrics and the rolling cross-validation harness.
//! * [`synth`]: seeded synthetic accelerometer generators.

pub mod activity;
pub mod auth;
pub mod data;
pub mod energy;
pub mod error;
pub mod eval;
pub mod forecast;
pub mod series;
pub mod synth;

pub use activity::Activity;
pub use error::{Error, Result};
pub use series::TimeSeries;
