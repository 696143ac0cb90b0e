//! The fitted additive model and its JSON document.

use serde::{Deserialize, Serialize};

use super::events::EventTerm;
use super::seasonality::SeasonalityParams;
use super::trend::TrendParams;
use crate::error::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// `y(t) = g(t) + Σ s_i(t) + h(t) + ε`, with `ε ~ N(0, noise_sigma²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDocument", into = "ModelDocument")]
pub struct ForecastModel {
    pub(crate) trend: TrendParams,
    pub(crate) seasonalities: Vec<SeasonalityParams>,
    pub(crate) events: EventTerm,
    pub(crate) noise_sigma: f64,
    pub(crate) delta_scale: f64,
    pub(crate) train_span: (f64, f64),
    pub(crate) time_step: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    schema_version: u32,
    trend: TrendParams,
    seasonalities: Vec<SeasonalityParams>,
    events: EventTerm,
    noise_sigma: f64,
    delta_scale: f64,
    train_span: [f64; 2],
    time_step: f64,
}

impl From<ForecastModel> for ModelDocument {
    fn from(m: ForecastModel) -> Self {
        ModelDocument {
            schema_version: MODEL_SCHEMA_VERSION,
            trend: m.trend,
            seasonalities: m.seasonalities,
            events: m.events,
            noise_sigma: m.noise_sigma,
            delta_scale: m.delta_scale,
            train_span: [m.train_span.0, m.train_span.1],
            time_step: m.time_step,
        }
    }
}

impl TryFrom<ModelDocument> for ForecastModel {
    type Error = Error;
    fn try_from(d: ModelDocument) -> Result<Self> {
        if d.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model schema version {}",
                d.schema_version
            )));
        }
        ForecastModel::new(
            d.trend,
            d.seasonalities,
            d.events,
            d.noise_sigma,
            d.delta_scale,
            (d.train_span[0], d.train_span[1]),
            d.time_step,
        )
    }
}

/// Per-component values at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Components {
    pub trend: f64,
    pub seasonal: f64,
    pub events: f64,
}

impl ForecastModel {
    pub fn new(
        trend: TrendParams,
        seasonalities: Vec<SeasonalityParams>,
        events: EventTerm,
        noise_sigma: f64,
        delta_scale: f64,
        train_span: (f64, f64),
        time_step: f64,
    ) -> Result<Self> {
        if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
            return Err(Error::Schema(format!("noise_sigma must be >= 0, got {noise_sigma}")));
        }
        if !(delta_scale.is_finite() && delta_scale >= 0.0) {
            return Err(Error::Schema(format!("delta_scale must be >= 0, got {delta_scale}")));
        }
        let (lo, hi) = train_span;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Schema(format!("invalid training span ({lo}, {hi})")));
        }
        if !(time_step.is_finite() && time_step > 0.0) {
            return Err(Error::Schema(format!("time_step must be > 0, got {time_step}")));
        }
        if trend.changepoints().iter().any(|&s| s < lo || s > hi) {
            return Err(Error::Schema("changepoint outside the training span".into()));
        }
        Ok(Self {
            trend,
            seasonalities,
            events,
            noise_sigma,
            delta_scale,
            train_span,
            time_step,
        })
    }

    pub fn trend(&self) -> &TrendParams {
        &self.trend
    }

    pub fn seasonalities(&self) -> &[SeasonalityParams] {
        &self.seasonalities
    }

    pub fn events(&self) -> &EventTerm {
        &self.events
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn delta_scale(&self) -> f64 {
        self.delta_scale
    }

    pub fn train_span(&self) -> (f64, f64) {
        self.train_span
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    /// Historical changepoint density (changepoints per unit of `t`).
    pub fn changepoint_density(&self) -> f64 {
        let (lo, hi) = self.train_span;
        self.trend.changepoints().len() as f64 / (hi - lo)
    }

    /// Adds the non-trend components to a trend value.
    ///
    /// Summation order is fixed: trend, then each seasonality in order, then
    /// events. [`ForecastModel::eval`] and the simulated paths in `predict`
    /// both go through here.
    pub fn assemble(&self, trend: f64, t: f64) -> f64 {
        let mut y = trend;
        for s in &self.seasonalities {
            y += s.eval(t);
        }
        y + self.events.eval(t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.assemble(self.trend.eval(t), t)
    }

    pub fn components(&self, t: f64) -> Components {
        Components {
            trend: self.trend.eval(t),
            seasonal: self.seasonalities.iter().map(|s| s.eval(t)).sum(),
            events: self.events.eval(t),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
