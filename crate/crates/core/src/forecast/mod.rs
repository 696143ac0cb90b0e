//! Additive trend + seasonality + event forecaster.

pub mod events;
pub mod fit;
pub mod model;
pub mod period;
pub mod predict;
pub mod seasonality;
pub mod trend;

pub use events::{eval_events, EventTerm, EventWindow};
pub use fit::{fit, FitConfig, SeasonalitySpec};
pub use model::{Components, ForecastModel, MODEL_SCHEMA_VERSION};
pub use period::{estimate_common_period, estimate_period, PeriodEstimate};
pub use predict::{predict, predict_at, PredictionBand};
pub use seasonality::{eval_seasonality, SeasonalityParams};
pub use trend::{continuity_gammas, eval_linear_trend, eval_logistic_trend, TrendKind, TrendParams};
