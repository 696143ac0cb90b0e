//! Monte Carlo prediction bands.
//!
//! Each simulated path draws future changepoints at the historical density
//! (one Bernoulli trial per future step), with Laplace-distributed rate
//! changes of scale `delta_scale`, and adds Gaussian noise of scale
//! `noise_sigma`. Bounds are empirical quantiles of the paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::model::ForecastModel;
use super::trend::TrendKind;
use crate::error::{Error, Result};

pub const MIN_SIMULATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionBand {
    pub t: Vec<f64>,
    pub yhat: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
}

impl PredictionBand {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn contains(&self, i: usize, value: f64) -> bool {
        self.lower[i] <= value && value <= self.upper[i]
    }
}

/// Forecast `horizon` steps past the end of the training span.
pub fn predict(
    model: &ForecastModel,
    horizon: usize,
    level: f64,
    n_sims: usize,
    seed: u64,
) -> Result<PredictionBand> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    let (_, end) = model.train_span();
    let step = model.time_step();
    let times: Vec<f64> = (1..=horizon).map(|i| end + step * i as f64).collect();
    predict_at(model, &times, level, n_sims, seed)
}

/// Prediction band at arbitrary, strictly increasing times.
pub fn predict_at(
    model: &ForecastModel,
    times: &[f64],
    level: f64,
    n_sims: usize,
    seed: u64,
) -> Result<PredictionBand> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level must be in (0, 1), got {level}")));
    }
    if n_sims < MIN_SIMULATIONS {
        return Err(Error::InsufficientSimulations(n_sims));
    }
    if times.is_empty() {
        return Err(Error::InvalidArgument("no prediction times".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "prediction times must be finite and strictly increasing".into(),
        ));
    }

    let trend = model.trend();
    let base_trend: Vec<f64> = times.iter().map(|&t| trend.eval(t)).collect();
    let yhat: Vec<f64> = times
        .iter()
        .zip(&base_trend)
        .map(|(&t, &g)| model.assemble(g, t))
        .collect();

    let (_, end) = model.train_span();
    let density = model.changepoint_density();
    let scale = model.delta_scale();
    let sigma = model.noise_sigma();
    let simulate_trend = density > 0.0 && scale > 0.0;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = times.len();
    // samples[i * n_sims + s]
    let mut samples = vec![0.0; h * n_sims];
    let mut new_s: Vec<f64> = Vec::new();
    let mut new_d: Vec<f64> = Vec::new();
    let mut path = base_trend.clone();

    for s in 0..n_sims {
        new_s.clear();
        new_d.clear();
        if simulate_trend {
            let mut prev = end;
            for &t in times.iter().filter(|&&t| t > end) {
                let p = (density * (t - prev)).min(1.0);
                prev = t;
                if rng.random::<f64>() < p {
                    new_s.push(t);
                    new_d.push(laplace(&mut rng, scale));
                }
            }
        }
        trend_path(model, times, &base_trend, &new_s, &new_d, &mut path);
        for i in 0..h {
            let noise: f64 = rng.sample(StandardNormal);
            samples[i * n_sims + s] = model.assemble(path[i], times[i]) + sigma * noise;
        }
    }

    let lo_q = 0.5 * (1.0 - level);
    let hi_q = 0.5 * (1.0 + level);
    let mut lower = Vec::with_capacity(h);
    let mut upper = Vec::with_capacity(h);
    for i in 0..h {
        let column = &mut samples[i * n_sims..(i + 1) * n_sims];
        column.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(column, lo_q).min(yhat[i]));
        upper.push(quantile_sorted(column, hi_q).max(yhat[i]));
    }

    Ok(PredictionBand {
        t: times.to_vec(),
        yhat,
        lower,
        upper,
        level,
    })
}

fn trend_path(
    model: &ForecastModel,
    times: &[f64],
    base: &[f64],
    new_s: &[f64],
    new_d: &[f64],
    out: &mut [f64],
) {
    out.copy_from_slice(base);
    if new_s.is_empty() {
        return;
    }
    match model.trend().kind() {
        TrendKind::Linear => {
            // each extra changepoint adds δ (t - s) for t >= s
            for (i, &t) in times.iter().enumerate() {
                for (&s, &d) in new_s.iter().zip(new_d) {
                    if t >= s {
                        out[i] += d * (t - s);
                    }
                }
            }
        }
        TrendKind::Logistic => {
            // a draw that would zero the rate leaves the path unchanged
            if let Ok(extended) = model.trend().with_appended(new_s, new_d) {
                for (o, &t) in out.iter_mut().zip(times) {
                    *o = extended.eval(t);
                }
            }
        }
    }
}

fn laplace<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}
