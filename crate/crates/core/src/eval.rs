//! Forecast error metrics and rolling-origin cross-validation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{CvSplit, Recording, ZScore};
use crate::error::{Error, Result};
use crate::forecast::{estimate_common_period, fit, predict_at, FitConfig, PredictionBand, SeasonalitySpec};
use crate::series::TimeSeries;

pub const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    /// Fraction of truth values inside `[lower, upper]`.
    pub coverage: f64,
    pub n: usize,
}

/// Pooled metrics plus the per-block breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub coverage: f64,
    pub blocks: Vec<Metrics>,
}

impl MetricReport {
    pub fn from_blocks(blocks: Vec<Metrics>) -> Self {
        let n: usize = blocks.iter().map(|m| m.n).sum();
        let w = |f: fn(&Metrics) -> f64| {
            if n == 0 {
                0.0
            } else {
                blocks.iter().map(|m| f(m) * m.n as f64).sum::<f64>() / n as f64
            }
        };
        let mse = w(|m| m.mse);
        MetricReport {
            mse,
            rmse: mse.sqrt(),
            mae: w(|m| m.mae),
            coverage: if n == 0 { 1.0 } else { w(|m| m.coverage) },
            blocks,
        }
    }
}

pub fn metrics(truth: &TimeSeries, band: &PredictionBand) -> Result<Metrics> {
    metrics_values(truth.y(), band)
}

pub fn metrics_values(truth: &[f64], band: &PredictionBand) -> Result<Metrics> {
    if truth.len() != band.len() {
        return Err(Error::LengthMismatch(format!(
            "{} truth values for a band of {}",
            truth.len(),
            band.len()
        )));
    }
    let n = truth.len();
    if n == 0 {
        return Ok(Metrics {
            mse: 0.0,
            rmse: 0.0,
            mae: 0.0,
            coverage: 1.0,
            n: 0,
        });
    }
    let mut se = 0.0;
    let mut ae = 0.0;
    let mut inside = 0usize;
    for (i, &y) in truth.iter().enumerate() {
        let e = y - band.yhat[i];
        se += e * e;
        ae += e.abs();
        if band.contains(i, y) {
            inside += 1;
        }
    }
    let mse = se / n as f64;
    Ok(Metrics {
        mse,
        rmse: mse.sqrt(),
        mae: ae / n as f64,
        coverage: inside as f64 / n as f64,
        n,
    })
}

/// Settings for [`run_cv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    /// Base fit settings. With no seasonalities, one is added per fold from
    /// the estimated period.
    pub fit: FitConfig,
    pub level: f64,
    pub n_sims: usize,
    pub seed: u64,
    /// Z-score each fold with its own training statistics.
    pub normalize: bool,
    pub min_period: f64,
    /// Seasonal order cap; the order used is `min(max_order, floor(P / 2.5))`.
    pub max_order: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            fit: FitConfig::default(),
            level: 0.8,
            n_sims: 1000,
            seed: 0,
            normalize: true,
            min_period: 4.0,
            max_order: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub block: usize,
    pub axis: usize,
    pub period: Option<f64>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub rows: Vec<CvRow>,
    pub axes: Vec<MetricReport>,
}

impl CvResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("block,axis,mse,rmse,mae,coverage\n");
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.block + 1,
                AXIS_NAMES[r.axis],
                m.mse,
                m.rmse,
                m.mae,
                m.coverage
            );
        }
        s
    }

    pub fn max_axis_mse(&self) -> f64 {
        self.axes.iter().map(|a| a.mse).fold(0.0, f64::max)
    }
}

/// Seasonality for a training series: the dominant period in
/// `[min_period, len / 5]`, so at least five cycles are observed.
pub fn auto_seasonality(
    train: &TimeSeries,
    min_period: f64,
    max_order: usize,
) -> Result<Option<SeasonalitySpec>> {
    shared_seasonality(std::slice::from_ref(train), min_period, max_order)
}

/// One seasonality for several aligned axes, searched in `[min_period, len / 5]`.
pub fn shared_seasonality(
    axes: &[TimeSeries],
    min_period: f64,
    max_order: usize,
) -> Result<Option<SeasonalitySpec>> {
    let Some(first) = axes.first() else {
        return Ok(None);
    };
    let step = first.median_step();
    let p_min = min_period.max(2.0 * step);
    let p_max = first.len() as f64 * step / 5.0;
    if first.len() < 4 || p_max < p_min {
        return Ok(None);
    }
    Ok(estimate_common_period(axes, p_min, p_max)?
        .and_then(|est| SeasonalitySpec::for_period(est.period, step, max_order)))
}

fn fold_seed(seed: u64, block: usize, axis: usize) -> u64 {
    seed.wrapping_add(1 + (block * 3 + axis) as u64)
}

/// Rolling-origin evaluation: block `j` is forecast from everything before it.
pub fn run_cv(rec: &Recording, split: &CvSplit, config: &CvConfig) -> Result<CvResult> {
    config.fit.validate()?;
    if split.end() > rec.len() || split.train.start != 0 {
        return Err(Error::InsufficientData {
            needed: split.end(),
            available: rec.len(),
        });
    }
    let mut rows = Vec::new();
    for (j, block) in split.blocks.iter().enumerate() {
        let origin = block.start;
        let z = if config.normalize {
            Some(ZScore::fit(rec, 0..origin)?)
        } else {
            None
        };
        let mut trains = Vec::with_capacity(3);
        let mut truths = Vec::with_capacity(3);
        for axis in 0..3 {
            let mut train = rec.axis_series(axis, 0..origin)?;
            let mut truth = rec.axis_series(axis, block.clone())?;
            if let Some(z) = &z {
                train = z.apply_series(axis, &train)?;
                truth = z.apply_series(axis, &truth)?;
            }
            trains.push(train);
            truths.push(truth);
        }
        let mut cfg = config.fit.clone();
        let mut period = None;
        if cfg.seasonalities.is_empty() {
            if let Some(s) = shared_seasonality(&trains, config.min_period, config.max_order)
                .map_err(|e| Error::Numerical(format!("block {}: {e}", j + 1)))?
            {
                period = Some(s.period);
                cfg.seasonalities.push(s);
            }
        }
        for axis in 0..3 {
            let wrap = |e: Error| {
                Error::Numerical(format!("block {} axis {}: {e}", j + 1, AXIS_NAMES[axis]))
            };
            let (train, truth) = (&trains[axis], &truths[axis]);
            let model = fit(train, &cfg).map_err(wrap)?;
            let band = predict_at(
                &model,
                truth.t(),
                config.level,
                config.n_sims,
                fold_seed(config.seed, j, axis),
            )
            .map_err(wrap)?;
            rows.push(CvRow {
                block: j,
                axis,
                period,
                metrics: metrics(truth, &band)?,
            });
        }
    }
    let axes = (0..3)
        .map(|a| {
            MetricReport::from_blocks(rows.iter().filter(|r| r.axis == a).map(|r| r.metrics).collect())
        })
        .collect();
    Ok(CvResult { rows, axes })
}
