//! Dominant-period estimation from the Fourier power spectrum.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    /// Estimated period in units of `t`.
    pub period: f64,
    /// Peak bin power over total power of the bins in `[p_min, p_max]`.
    pub score: f64,
    /// Lag (in units of `t`) of the strongest autocorrelation peak in the band.
    pub acf_period: Option<f64>,
    /// Multiple applied to the spectral peak after the autocorrelation check
    /// (1 when the spectral peak is the fundamental).
    pub harmonic: u32,
}

/// Sub-harmonic promotion needs the autocorrelation at the longer lag to beat
/// the spectral peak's lag by this much.
const ACF_MARGIN: f64 = 0.1;

/// Period in `[p_min, p_max]` with maximal spectral power.
///
/// The series is linearly detrended. Power is evaluated on the DFT grid
/// `f_k = k / (n Δt)` using the actual sample times (gaps are tolerated),
/// then the peak frequency is refined by golden-section search between its
/// neighbouring bins. If the autocorrelation at an integer multiple of the
/// spectral period is clearly stronger than at the period itself (a dominant
/// harmonic), that multiple is reported instead.
pub fn estimate_period(ts: &TimeSeries, p_min: f64, p_max: f64) -> Result<PeriodEstimate> {
    let n = ts.len();
    let step = ts.median_step();
    if n < 4 {
        return Err(Error::TooShort { len: n, min: 4 });
    }
    if !(p_min >= 2.0 * step - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "p_min {p_min} is below two samples ({})",
            2.0 * step
        )));
    }
    let duration = n as f64 * step;
    if !(p_max <= duration / 2.0 + 1e-12) || p_max < p_min {
        return Err(Error::InvalidArgument(format!(
            "p_max {p_max} must be in [p_min, {}]",
            duration / 2.0
        )));
    }

    let mut resid = detrend(ts);
    let level = ts.y().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if resid.iter().all(|r| r.abs() <= 1e-12 * level) {
        resid.iter_mut().for_each(|r| *r = 0.0);
    }
    let t = ts.t();
    let power = |f: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (&ti, &r) in t.iter().zip(&resid) {
            let (s, c) = (TAU * f * ti).sin_cos();
            re += r * c;
            im -= r * s;
        }
        re * re + im * im
    };

    let k_lo = (duration / p_max - 1e-9).ceil().max(1.0) as usize;
    let k_hi = (duration / p_min + 1e-9).floor() as usize;
    let k_hi = k_hi.max(k_lo);
    let bins: Vec<(usize, f64)> = (k_lo..=k_hi).map(|k| (k, power(k as f64 / duration))).collect();
    let total: f64 = bins.iter().map(|b| b.1).sum();
    let (k_peak, p_peak) = bins
        .iter()
        .copied()
        .fold((k_lo, f64::NEG_INFINITY), |best, b| if b.1 > best.1 { b } else { best });
    let score = if total > 0.0 { p_peak / total } else { 0.0 };

    let f_min = 1.0 / p_max;
    let f_max = 1.0 / p_min;
    let lo = ((k_peak as f64 - 1.0) / duration).max(f_min);
    let hi = ((k_peak as f64 + 1.0) / duration).min(f_max);
    let f_best = if total > 0.0 && hi > lo {
        golden_max(&power, lo, hi, k_peak as f64 / duration)
    } else {
        k_peak as f64 / duration
    };
    let spectral = (1.0 / f_best).clamp(p_min, p_max);

    let acf = autocorrelation(&resid);
    let acf_at = |period: f64| -> Option<f64> {
        let lag = (period / step).round() as usize;
        (lag >= 1 && lag < acf.len()).then(|| acf[lag])
    };
    let lag_lo = (p_min / step).ceil() as usize;
    let lag_hi = ((p_max / step).floor() as usize).min(acf.len().saturating_sub(1));
    let acf_period = (lag_lo.max(1)..=lag_hi)
        .filter(|&l| l + 1 < acf.len() && acf[l] >= acf[l - 1] && acf[l] >= acf[l + 1])
        .max_by(|&a, &b| acf[a].total_cmp(&acf[b]).then(b.cmp(&a)))
        .map(|l| l as f64 * step);

    let mut harmonic = 1u32;
    if let Some(base) = acf_at(spectral) {
        let mut best = base;
        let mut m = 2u32;
        while spectral * m as f64 <= p_max + 1e-9 {
            if let Some(v) = acf_at(spectral * m as f64) {
                if v > best + ACF_MARGIN {
                    best = v;
                    harmonic = m;
                }
            }
            m += 1;
        }
    }

    let mut period = spectral * harmonic as f64;
    if score > 0.0 {
        period = refine_period(ts, period, period * period / duration, step).clamp(p_min, p_max);
    }

    Ok(PeriodEstimate {
        period,
        score,
        acf_period,
        harmonic,
    })
}

/// One period for several aligned series (for example the axes of a sensor).
///
/// The best-scoring per-series estimate is taken unless another series
/// confidently (score at least 0.1) reports an integer multiple of it: a
/// signal whose two half-cycles look alike reports half its true period.
/// Returns `None` when every series is flat.
pub fn estimate_common_period(
    series: &[TimeSeries],
    p_min: f64,
    p_max: f64,
) -> Result<Option<PeriodEstimate>> {
    let mut estimates = Vec::with_capacity(series.len());
    for ts in series {
        let est = estimate_period(ts, p_min, p_max)?;
        if est.score > 0.0 {
            estimates.push(est);
        }
    }
    let Some(best) = estimates.iter().max_by(|a, b| a.score.total_cmp(&b.score)) else {
        return Ok(None);
    };
    let mut chosen = best;
    for e in &estimates {
        let ratio = e.period / best.period;
        let k = ratio.round();
        if k >= 2.0 && (ratio - k).abs() < 0.03 * k && e.score >= 0.1 && e.period > chosen.period {
            chosen = e;
        }
    }
    Ok(Some(*chosen))
}

/// Harmonics used when refining a period by least squares.
const REFINE_HARMONICS: usize = 5;

/// Period in `[p - half_width, p + half_width]` whose harmonic regression
/// (intercept, slope and up to five Fourier pairs) leaves the smallest
/// residual sum of squares. Exact for noiseless periodic input.
fn refine_period(ts: &TimeSeries, p: f64, half_width: f64, step: f64) -> f64 {
    let h = ((p / (2.5 * step)).floor() as usize).clamp(1, REFINE_HARMONICS);
    let t = ts.t();
    let y = ts.y();
    let tm = t.iter().sum::<f64>() / t.len() as f64;
    let cols = 2 + 2 * h;
    let yty: f64 = y.iter().map(|v| v * v).sum();
    let explained = |period: f64| -> f64 {
        let mut xtx = DMatrix::<f64>::zeros(cols, cols);
        let mut xty = DVector::<f64>::zeros(cols);
        let mut row = vec![0.0; cols];
        for (&ti, &yi) in t.iter().zip(y) {
            row[0] = 1.0;
            row[1] = ti - tm;
            for k in 1..=h {
                let (s, c) = (TAU * k as f64 * ti / period).sin_cos();
                row[2 * k] = c;
                row[2 * k + 1] = s;
            }
            for a in 0..cols {
                xty[a] += row[a] * yi;
                for b in 0..=a {
                    xtx[(a, b)] += row[a] * row[b];
                }
            }
        }
        for a in 0..cols {
            for b in 0..a {
                xtx[(b, a)] = xtx[(a, b)];
            }
        }
        match xtx.cholesky() {
            Some(ch) => {
                let beta = ch.solve(&xty);
                (beta.dot(&xty)).min(yty)
            }
            None => f64::NEG_INFINITY,
        }
    };
    let lo = (p - half_width).max(2.0 * step);
    let hi = p + half_width;
    if !(hi > lo) {
        return p;
    }
    golden_max(&explained, lo, hi, p)
}

fn detrend(ts: &TimeSeries) -> Vec<f64> {
    let t = ts.t();
    let y = ts.y();
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|v| (v - tm).powi(2)).sum();
    let sty: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    t.iter().zip(y).map(|(a, b)| b - ym - slope * (a - tm)).collect()
}

/// Biased sample autocorrelation by index lag.
fn autocorrelation(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let c0: f64 = x.iter().map(|v| v * v).sum();
    if c0 <= 0.0 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|lag| x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect()
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, seed: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    if f(x) >= f(seed) {
        x
    } else {
        seed
    }
}
