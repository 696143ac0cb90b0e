//! Penalized least-squares fitting of the additive model.
//!
//! The objective, on internally rescaled data (`t` mapped onto `[0, 1]`, `y`
//! divided by `max|y|`), is
//!
//! ```text
//! Σ_t (y_t - g(t) - s(t) - h(t))² + ‖β‖² / σ² + ‖κ‖² / σ_h² + ‖δ‖₁ / τ
//! ```
//!
//! Seasonal (`β`) and event (`κ`) coefficients enter linearly and are
//! eliminated in closed form. The changepoint adjustments `δ` are solved by
//! coordinate descent with soft-thresholding on the reduced quadratic. A
//! linear trend is handled exactly in one pass; a logistic trend is
//! linearized around the current `(k, m, δ)` and iterated with
//! Levenberg-Marquardt damping, accepting only steps that lower the full
//! objective.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::events::{EventTerm, EventWindow};
use super::model::ForecastModel;
use super::seasonality::{fourier_features, SeasonalityParams};
use super::trend::{TrendKind, TrendParams};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeasonalitySpec {
    pub period: f64,
    pub order: usize,
    pub prior_scale: f64,
}

impl Default for SeasonalitySpec {
    fn default() -> Self {
        Self {
            period: 50.0,
            order: 10,
            prior_scale: 10.0,
        }
    }
}

impl SeasonalitySpec {
    pub fn new(period: f64, order: usize) -> Self {
        Self {
            period,
            order,
            ..Self::default()
        }
    }

    /// Order `min(max_order, floor(period / (2.5 * step)))`, or `None` when
    /// the period is too short to carry a single harmonic.
    pub fn for_period(period: f64, step: f64, max_order: usize) -> Option<Self> {
        let order = ((period / (2.5 * step)).floor() as usize).min(max_order);
        (order > 0).then(|| Self::new(period, order))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub trend: TrendKind,
    /// Logistic capacity; defaults to `1.1 * max|y|` of the training data.
    pub capacity: Option<f64>,
    pub n_changepoints: usize,
    /// Fraction of the training span that receives default changepoints.
    pub changepoint_range: f64,
    /// Explicit changepoint times, overriding `n_changepoints`.
    pub changepoints: Option<Vec<f64>>,
    /// `τ` of the L1 penalty `‖δ‖₁ / τ`.
    pub changepoint_prior_scale: f64,
    pub seasonalities: Vec<SeasonalitySpec>,
    pub event_prior_scale: f64,
    /// Residuals beyond this many robust standard deviations become
    /// singularity events; `None` disables detection.
    pub singularity_threshold: Option<f64>,
    pub max_singularity_fraction: f64,
    pub max_iterations: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            trend: TrendKind::Linear,
            capacity: None,
            n_changepoints: 10,
            changepoint_range: 0.8,
            changepoints: None,
            changepoint_prior_scale: 0.05,
            seasonalities: Vec::new(),
            event_prior_scale: 10.0,
            singularity_threshold: Some(3.0),
            max_singularity_fraction: 0.05,
            max_iterations: 200,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("changepoint_prior_scale", self.changepoint_prior_scale)?;
        positive("event_prior_scale", self.event_prior_scale)?;
        if !(self.changepoint_range > 0.0 && self.changepoint_range <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "changepoint_range must be in (0, 1], got {}",
                self.changepoint_range
            )));
        }
        if let Some(c) = self.capacity {
            positive("capacity", c)?;
        }
        if let Some(thr) = self.singularity_threshold {
            positive("singularity_threshold", thr)?;
        }
        if !(0.0..=1.0).contains(&self.max_singularity_fraction) {
            return Err(Error::InvalidArgument(
                "max_singularity_fraction must be in [0, 1]".into(),
            ));
        }
        for s in &self.seasonalities {
            positive("seasonality period", s.period)?;
            positive("seasonality prior_scale", s.prior_scale)?;
            if s.order == 0 {
                return Err(Error::InvalidArgument("seasonality order must be >= 1".into()));
            }
        }
        Ok(())
    }

    fn resolve_changepoints(&self, t0: f64, t1: f64) -> Result<Vec<f64>> {
        if let Some(cps) = &self.changepoints {
            if cps.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidArgument(
                    "changepoints must be strictly increasing".into(),
                ));
            }
            if cps.iter().any(|&s| !(s >= t0 && s <= t1)) {
                return Err(Error::InvalidArgument(
                    "changepoints must lie inside the training span".into(),
                ));
            }
            return Ok(cps.clone());
        }
        let n = self.n_changepoints;
        let reach = self.changepoint_range * (t1 - t0);
        Ok((1..=n).map(|j| t0 + j as f64 * reach / n as f64).collect())
    }

    fn coefficient_count(&self) -> usize {
        self.seasonalities.iter().map(|s| 2 * s.order).sum()
    }
}

/// Fit the additive model to `ts`.
pub fn fit(ts: &TimeSeries, config: &FitConfig) -> Result<ForecastModel> {
    config.validate()?;
    let (t0, t1) = match ts.span() {
        Some(span) if ts.len() >= 2 => span,
        _ => {
            return Err(Error::Underdetermined {
                samples: ts.len(),
                required: 2,
            })
        }
    };
    let changepoints = config.resolve_changepoints(t0, t1)?;
    let required = 2 * (config.coefficient_count() + changepoints.len() + 2);
    if ts.len() < required {
        return Err(Error::Underdetermined {
            samples: ts.len(),
            required,
        });
    }

    let problem = Problem::new(ts, config, changepoints)?;
    let mut solution = problem.solve(&[], None)?;
    if let Some(threshold) = config.singularity_threshold {
        let windows = problem.detect_singularities(&solution, threshold, config.max_singularity_fraction);
        if !windows.is_empty() {
            solution = problem.solve(&windows, Some(&solution))?;
        }
    }
    problem.into_model(solution)
}

struct Problem {
    t: Vec<f64>,
    tau: Vec<f64>,
    y: DVector<f64>,
    t0: f64,
    span: f64,
    y_scale: f64,
    kind: TrendKind,
    capacity: f64,
    changepoints: Vec<f64>,
    scaled_changepoints: Vec<f64>,
    lambda: f64,
    seasonal: DMatrix<f64>,
    seasonal_penalty: Vec<f64>,
    specs: Vec<SeasonalitySpec>,
    event_penalty: f64,
    max_iterations: usize,
    time_step: f64,
}

#[derive(Debug, Clone)]
struct Solution {
    rate: f64,
    offset: f64,
    deltas: Vec<f64>,
    beta: Vec<f64>,
    events: Vec<(f64, f64)>,
    kappa: Vec<f64>,
    fitted: DVector<f64>,
}

impl Problem {
    fn new(ts: &TimeSeries, config: &FitConfig, changepoints: Vec<f64>) -> Result<Self> {
        let (t0, t1) = ts.span().expect("checked non-empty");
        let span = t1 - t0;
        let max_abs = ts.y().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let y_scale = if max_abs > 0.0 { max_abs } else { 1.0 };
        let capacity = match config.trend {
            TrendKind::Logistic => {
                let c = config.capacity.unwrap_or(1.1 * max_abs);
                if !(c > 0.0) {
                    return Err(Error::InvalidArgument(
                        "logistic trend needs a positive capacity".into(),
                    ));
                }
                c / y_scale
            }
            TrendKind::Linear => 1.0,
        };
        let tau: Vec<f64> = ts.t().iter().map(|&t| (t - t0) / span).collect();
        let scaled_changepoints = changepoints.iter().map(|&s| (s - t0) / span).collect();

        let width = config.coefficient_count();
        let mut seasonal = DMatrix::zeros(ts.len(), width);
        let mut row = Vec::with_capacity(width);
        for (i, &t) in ts.t().iter().enumerate() {
            row.clear();
            for s in &config.seasonalities {
                fourier_features(s.period, s.order, t, &mut row);
            }
            for (j, v) in row.iter().enumerate() {
                seasonal[(i, j)] = *v;
            }
        }
        let seasonal_penalty = config
            .seasonalities
            .iter()
            .flat_map(|s| std::iter::repeat_n(1.0 / (s.prior_scale * s.prior_scale), 2 * s.order))
            .collect();

        Ok(Self {
            t: ts.t().to_vec(),
            tau,
            y: DVector::from_iterator(ts.len(), ts.y().iter().map(|v| v / y_scale)),
            t0,
            span,
            y_scale,
            kind: config.trend,
            capacity,
            changepoints,
            scaled_changepoints,
            lambda: 1.0 / config.changepoint_prior_scale,
            seasonal,
            seasonal_penalty,
            specs: config.seasonalities.clone(),
            event_penalty: 1.0 / (config.event_prior_scale * config.event_prior_scale),
            max_iterations: config.max_iterations.max(1),
            time_step: ts.median_step(),
        })
    }

    fn n(&self) -> usize {
        self.t.len()
    }

    /// Seasonal columns followed by one indicator column per event window.
    fn linear_block(&self, events: &[(f64, f64)]) -> (DMatrix<f64>, Vec<f64>) {
        let n = self.n();
        let s = self.seasonal.ncols();
        let mut x = DMatrix::zeros(n, s + events.len());
        x.columns_mut(0, s).copy_from(&self.seasonal);
        for (e, &(start, end)) in events.iter().enumerate() {
            for (i, &t) in self.t.iter().enumerate() {
                if start <= t && t <= end {
                    x[(i, s + e)] = 1.0;
                }
            }
        }
        let mut d = self.seasonal_penalty.clone();
        d.extend(std::iter::repeat_n(self.event_penalty, events.len()));
        (x, d)
    }

    fn solve(&self, events: &[(f64, f64)], warm: Option<&Solution>) -> Result<Solution> {
        match self.kind {
            TrendKind::Linear => self.solve_linear(events),
            TrendKind::Logistic => self.solve_logistic(events, warm),
        }
    }

    fn solve_linear(&self, events: &[(f64, f64)]) -> Result<Solution> {
        let n = self.n();
        let (block, block_penalty) = self.linear_block(events);
        let mut x = DMatrix::zeros(n, 2 + block.ncols());
        for i in 0..n {
            x[(i, 0)] = self.tau[i];
            x[(i, 1)] = 1.0;
        }
        x.columns_mut(2, block.ncols()).copy_from(&block);
        let mut d = vec![0.0, 0.0];
        d.extend(block_penalty);

        let cps = &self.scaled_changepoints;
        let a = DMatrix::from_fn(n, cps.len(), |i, j| (self.tau[i] - cps[j]).max(0.0));
        let zeros = vec![0.0; cps.len()];
        let kernel = Penalized {
            x: &x,
            d: &d,
            a: &a,
            damping: 0.0,
            center: &zeros,
            lambda: self.lambda,
        };
        let (theta, u) = kernel.solve(&self.y)?;
        let fitted = &x * &theta + &a * &u;
        let s = self.seasonal.ncols();
        Ok(Solution {
            rate: theta[0],
            offset: theta[1],
            deltas: u.iter().copied().collect(),
            beta: theta.rows(2, s).iter().copied().collect(),
            events: events.to_vec(),
            kappa: theta.rows(2 + s, events.len()).iter().copied().collect(),
            fitted,
        })
    }

    fn logistic_trend(&self, p: &[f64]) -> Result<Vec<f64>> {
        let trend = TrendParams::logistic(
            self.capacity,
            p[0],
            p[1],
            self.scaled_changepoints.clone(),
            p[2..].to_vec(),
        )?;
        Ok(self.tau.iter().map(|&x| trend.eval(x)).collect())
    }

    /// Objective with `β, κ` eliminated, plus the eliminated coefficients.
    fn profiled(
        &self,
        p: &[f64],
        block: &DMatrix<f64>,
        penalty: &[f64],
    ) -> Option<(f64, DVector<f64>, DVector<f64>)> {
        let g = DVector::from_vec(self.logistic_trend(p).ok()?);
        let r = &self.y - &g;
        let empty = DMatrix::zeros(self.n(), 0);
        let kernel = Penalized {
            x: block,
            d: penalty,
            a: &empty,
            damping: 0.0,
            center: &[],
            lambda: 0.0,
        };
        let (theta, _) = kernel.solve(&r).ok()?;
        let resid = &r - block * &theta;
        let ridge: f64 = theta.iter().zip(penalty).map(|(c, w)| w * c * c).sum();
        let l1: f64 = p[2..].iter().map(|d| d.abs()).sum();
        let obj = resid.norm_squared() + ridge + self.lambda * l1;
        obj.is_finite().then(|| (obj, theta, g))
    }

    fn logistic_start(&self) -> Vec<f64> {
        let n = self.n();
        let edge = (n / 20).max(1);
        let ratio = |slice: &[f64]| {
            let mean = slice.iter().sum::<f64>() / slice.len() as f64;
            (mean / self.capacity).clamp(0.01, 0.99)
        };
        let ys = self.y.as_slice();
        let r0 = ratio(&ys[..edge]);
        let r1 = ratio(&ys[n - edge..]);
        let logit = |r: f64| (r / (1.0 - r)).ln();
        let (l0, l1) = (logit(r0), logit(r1));
        let mut k = l1 - l0;
        if k.abs() < 1e-2 {
            k = if k < 0.0 { -1e-2 } else { 1e-2 };
        }
        let m = (-l0 / k).clamp(-1e3, 1e3);
        let mut p = vec![k, m];
        p.extend(std::iter::repeat_n(0.0, self.scaled_changepoints.len()));
        p
    }

    fn solve_logistic(&self, events: &[(f64, f64)], warm: Option<&Solution>) -> Result<Solution> {
        const BOUND: f64 = 1e3;
        let n = self.n();
        let (block, penalty) = self.linear_block(events);
        let n_cp = self.scaled_changepoints.len();

        let mut p = match warm {
            Some(w) => {
                let mut p = vec![w.rate, w.offset];
                p.extend(&w.deltas);
                p
            }
            None => self.logistic_start(),
        };
        let (mut obj, mut theta, _) = self
            .profiled(&p, &block, &penalty)
            .ok_or_else(|| Error::Numerical("logistic start point is not evaluable".into()))?;

        let mut mu = 1e-3;
        for _ in 0..self.max_iterations {
            let g0 = DVector::from_vec(self.logistic_trend(&p)?);
            let jac = self.logistic_jacobian(&p, &g0)?;

            // Subproblem over (Δk, Δm, β, κ) with δ' = δ + Δδ carried as `u`.
            let mut x = DMatrix::zeros(n, 2 + block.ncols());
            x.columns_mut(0, 2).copy_from(&jac.columns(0, 2));
            x.columns_mut(2, block.ncols()).copy_from(&block);
            let mut d = vec![mu, mu];
            d.extend_from_slice(&penalty);
            let a = jac.columns(2, n_cp).into_owned();
            let center = &p[2..];
            let target = &self.y - &g0 + &a * DVector::from_column_slice(center);
            let kernel = Penalized {
                x: &x,
                d: &d,
                a: &a,
                damping: mu,
                center,
                lambda: self.lambda,
            };
            let Ok((step, u)) = kernel.solve(&target) else {
                mu *= 4.0;
                continue;
            };
            let mut candidate = vec![
                (p[0] + step[0]).clamp(-BOUND, BOUND),
                (p[1] + step[1]).clamp(-BOUND, BOUND),
            ];
            candidate.extend(u.iter());

            match self.profiled(&candidate, &block, &penalty) {
                Some((new_obj, new_theta, _)) if new_obj < obj => {
                    let gain = (obj - new_obj) / obj.max(f64::MIN_POSITIVE);
                    p = candidate;
                    obj = new_obj;
                    theta = new_theta;
                    mu = (mu / 3.0).max(1e-12);
                    if gain < 1e-12 {
                        break;
                    }
                }
                _ => {
                    mu *= 4.0;
                    if mu > 1e12 {
                        break;
                    }
                }
            }
        }

        let g = DVector::from_vec(self.logistic_trend(&p)?);
        let fitted = &g + &block * &theta;
        let s = self.seasonal.ncols();
        Ok(Solution {
            rate: p[0],
            offset: p[1],
            deltas: p[2..].to_vec(),
            beta: theta.rows(0, s).iter().copied().collect(),
            events: events.to_vec(),
            kappa: theta.rows(s, events.len()).iter().copied().collect(),
            fitted,
        })
    }

    fn logistic_jacobian(&self, p: &[f64], g0: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.n();
        let mut jac = DMatrix::zeros(n, p.len());
        let mut probe = p.to_vec();
        for j in 0..p.len() {
            let h = 1e-6 * p[j].abs().max(1.0);
            probe[j] = p[j] + h;
            let plus = self.logistic_trend(&probe).ok();
            probe[j] = p[j] - h;
            let minus = self.logistic_trend(&probe).ok();
            probe[j] = p[j];
            match (plus, minus) {
                (Some(a), Some(b)) => {
                    for i in 0..n {
                        jac[(i, j)] = (a[i] - b[i]) / (2.0 * h);
                    }
                }
                (Some(a), None) => {
                    for i in 0..n {
                        jac[(i, j)] = (a[i] - g0[i]) / h;
                    }
                }
                (None, Some(b)) => {
                    for i in 0..n {
                        jac[(i, j)] = (g0[i] - b[i]) / h;
                    }
                }
                (None, None) => {
                    return Err(Error::Numerical(format!(
                        "trend not evaluable around parameter {j}"
                    )))
                }
            }
        }
        Ok(jac)
    }

    /// Runs of samples whose residual exceeds `threshold` robust deviations.
    fn detect_singularities(&self, sol: &Solution, threshold: f64, max_fraction: f64) -> Vec<(f64, f64)> {
        let resid: Vec<f64> = (&self.y - &sol.fitted).iter().copied().collect();
        let center = median(&resid);
        let dev: Vec<f64> = resid.iter().map(|r| (r - center).abs()).collect();
        let sigma = 1.4826 * median(&dev);
        if !(sigma > 1e-9) {
            return Vec::new();
        }
        let mut flagged: Vec<usize> = (0..dev.len()).filter(|&i| dev[i] > threshold * sigma).collect();
        let cap = (max_fraction * dev.len() as f64).floor() as usize;
        if flagged.len() > cap {
            flagged.sort_by(|&a, &b| dev[b].total_cmp(&dev[a]).then(a.cmp(&b)));
            flagged.truncate(cap);
            flagged.sort_unstable();
        }
        let mut windows: Vec<(usize, usize)> = Vec::new();
        for i in flagged {
            match windows.last_mut() {
                Some((_, end)) if *end + 1 == i => *end = i,
                _ => windows.push((i, i)),
            }
        }
        windows.into_iter().map(|(a, b)| (self.t[a], self.t[b])).collect()
    }

    fn into_model(self, sol: Solution) -> Result<ForecastModel> {
        let ys = self.y_scale;
        let trend = match self.kind {
            TrendKind::Linear => {
                let rate = ys * sol.rate / self.span;
                TrendParams::linear(
                    rate,
                    ys * sol.offset - rate * self.t0,
                    self.changepoints.clone(),
                    sol.deltas.iter().map(|d| ys * d / self.span).collect(),
                )?
            }
            TrendKind::Logistic => TrendParams::logistic(
                self.capacity * ys,
                sol.rate / self.span,
                self.t0 + self.span * sol.offset,
                self.changepoints.clone(),
                sol.deltas.iter().map(|d| d / self.span).collect(),
            )?,
        };

        let mut seasonalities = Vec::with_capacity(self.specs.len());
        let mut at = 0;
        for spec in &self.specs {
            let width = 2 * spec.order;
            let coeffs = sol.beta[at..at + width].iter().map(|b| ys * b).collect();
            seasonalities.push(SeasonalityParams::new(spec.period, spec.order, coeffs, spec.prior_scale)?);
            at += width;
        }

        let events = EventTerm::new(
            sol.events
                .iter()
                .zip(&sol.kappa)
                .map(|(&(start, end), &k)| EventWindow {
                    start,
                    end,
                    effect: ys * k,
                })
                .collect(),
        )?;

        let resid: Vec<f64> = (&self.y - &sol.fitted).iter().map(|r| ys * r).collect();
        let mean = resid.iter().sum::<f64>() / resid.len() as f64;
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / resid.len() as f64;
        let delta_scale = if trend.deltas().is_empty() {
            0.0
        } else {
            trend.deltas().iter().map(|d| d.abs()).sum::<f64>() / trend.deltas().len() as f64
        };

        ForecastModel::new(
            trend,
            seasonalities,
            events,
            var.sqrt(),
            delta_scale,
            (self.t0, self.t0 + self.span),
            self.time_step,
        )
    }
}

/// `min_{θ,u} ‖r - Xθ - Au‖² + θᵀ diag(d) θ + μ‖u - u₀‖² + λ‖u‖₁`.
///
/// `θ` is eliminated through the Cholesky factor of `XᵀX + diag(d)`; the
/// remaining problem in `u` is a small lasso solved by cyclic coordinate
/// descent.
struct Penalized<'a> {
    x: &'a DMatrix<f64>,
    d: &'a [f64],
    a: &'a DMatrix<f64>,
    damping: f64,
    center: &'a [f64],
    lambda: f64,
}

impl Penalized<'_> {
    fn solve(&self, r: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let p = self.x.ncols();
        let xt = self.x.transpose();
        let mut gram = &xt * self.x;
        let scale = (0..p).map(|i| gram[(i, i)]).fold(1.0f64, f64::max);
        for i in 0..p {
            gram[(i, i)] += self.d[i] + 1e-12 * scale;
        }
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Numerical("normal equations are not positive definite".into()))?;
        let v = chol.solve(&(&xt * r));

        let j = self.a.ncols();
        if j == 0 {
            return Ok((v, DVector::zeros(0)));
        }
        let xta = &xt * self.a;
        let w = chol.solve(&xta);
        let at = self.a.transpose();
        let mut q = &at * self.a - xta.transpose() * &w;
        let mut b = &at * r - xta.transpose() * &v;
        for i in 0..j {
            q[(i, i)] += self.damping;
            b[i] += self.damping * self.center[i];
        }

        let half = 0.5 * self.lambda;
        let mut u = DVector::from_column_slice(self.center);
        for _ in 0..100_000 {
            let mut max_change = 0.0f64;
            let mut max_abs = 0.0f64;
            for i in 0..j {
                let qii = q[(i, i)];
                let next = if qii <= 1e-14 {
                    0.0
                } else {
                    let mut rho = b[i];
                    for l in 0..j {
                        if l != i {
                            rho -= q[(i, l)] * u[l];
                        }
                    }
                    soft_threshold(rho, half) / qii
                };
                max_change = max_change.max((next - u[i]).abs());
                u[i] = next;
                max_abs = max_abs.max(next.abs());
            }
            if max_change <= 1e-14 * (1.0 + max_abs) {
                break;
            }
        }
        let theta = v - w * &u;
        Ok((theta, u))
    }
}

fn soft_threshold(x: f64, level: f64) -> f64 {
    if x > level {
        x - level
    } else if x < -level {
        x + level
    } else {
        0.0
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn no_singularities() -> FitConfig {
        FitConfig {
            singularity_threshold: None,
            ..FitConfig::default()
        }
    }

    #[test]
    fn constant_series() {
        let ts = TimeSeries::from_values(vec![3.0; 60]).unwrap();
        let model = fit(&ts, &FitConfig::default()).unwrap();
        assert!(model.trend().rate().abs() < 1e-6);
        assert!((model.trend().offset() - 3.0).abs() < 1e-6);
        assert!(model.noise_sigma() < 1e-6);
        assert_eq!(model.delta_scale(), 0.0);
    }

    #[test]
    fn line_plus_sine_is_recovered() {
        let y: Vec<f64> = (0..200)
            .map(|i| {
                let t = i as f64;
                2.0 * t + 1.0 + (TAU * t / 20.0).sin()
            })
            .collect();
        let ts = TimeSeries::from_values(y).unwrap();
        let config = FitConfig {
            seasonalities: vec![SeasonalitySpec::new(20.0, 1)],
            ..FitConfig::default()
        };
        let model = fit(&ts, &config).unwrap();
        let k = model.trend().rate();
        assert!((k - 2.0).abs() < 0.02, "slope {k}");
        let c = model.seasonalities()[0].coeffs();
        assert!(c[0].abs() < 0.05, "a1 {}", c[0]);
        assert!((c[1] - 1.0).abs() < 0.05, "b1 {}", c[1]);
    }

    #[test]
    fn underdetermined_fit_is_rejected() {
        let ts = TimeSeries::from_values((0..10).map(|i| i as f64).collect()).unwrap();
        let err = fit(&ts, &FitConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Underdetermined { samples: 10, required: 24 }));
    }

    #[test]
    fn changepoints_follow_default_placement() {
        let ts = TimeSeries::from_values((0..101).map(|i| (i as f64).sqrt()).collect()).unwrap();
        let model = fit(&ts, &no_singularities()).unwrap();
        let cps = model.trend().changepoints();
        assert_eq!(cps.len(), 10);
        assert!((cps[0] - 8.0).abs() < 1e-12);
        assert!((cps[9] - 80.0).abs() < 1e-12);
    }

    #[test]
    fn kinked_line_activates_a_changepoint() {
        let y: Vec<f64> = (0..200)
            .map(|i| {
                let t = i as f64;
                if t < 80.0 { t } else { 80.0 + 3.0 * (t - 80.0) }
            })
            .collect();
        let ts = TimeSeries::from_values(y).unwrap();
        let config = FitConfig {
            changepoints: Some(vec![40.0, 80.0, 120.0]),
            changepoint_prior_scale: 1000.0,
            ..no_singularities()
        };
        let model = fit(&ts, &config).unwrap();
        let d = model.trend().deltas();
        assert!((d[1] - 2.0).abs() < 0.1, "{d:?}");
        assert!(d[0].abs() < 0.1 && d[2].abs() < 0.1, "{d:?}");
    }

    #[test]
    fn default_l1_strength_keeps_small_kinks_flat() {
        let y: Vec<f64> = (0..200)
            .map(|i| {
                let t = i as f64;
                if t < 80.0 { t } else { 80.0 + 1.2 * (t - 80.0) }
            })
            .collect();
        let ts = TimeSeries::from_values(y).unwrap();
        let model = fit(&ts, &no_singularities()).unwrap();
        assert_eq!(model.delta_scale(), 0.0);
    }

    #[test]
    fn logistic_curve_is_recovered() {
        let truth = TrendParams::logistic(10.0, 0.08, 60.0, vec![], vec![]).unwrap();
        let y: Vec<f64> = (0..150).map(|i| truth.eval(i as f64)).collect();
        let ts = TimeSeries::from_values(y.clone()).unwrap();
        let config = FitConfig {
            trend: TrendKind::Logistic,
            capacity: Some(10.0),
            n_changepoints: 0,
            ..no_singularities()
        };
        let model = fit(&ts, &config).unwrap();
        let rmse = (y
            .iter()
            .enumerate()
            .map(|(i, v)| (model.eval(i as f64) - v).powi(2))
            .sum::<f64>()
            / y.len() as f64)
            .sqrt();
        assert!(rmse < 1e-3, "rmse {rmse}");
        assert!((model.trend().rate() - 0.08).abs() < 1e-3);
        assert!((model.trend().offset() - 60.0).abs() < 0.1);
    }

    #[test]
    fn spike_becomes_a_singularity_event() {
        let mut y: Vec<f64> = (0..300).map(|i| (TAU * i as f64 / 25.0).sin()).collect();
        // small deterministic jitter so the robust scale is non-zero
        for (i, v) in y.iter_mut().enumerate() {
            *v += 0.01 * ((i * 7919 % 13) as f64 - 6.0) / 6.0;
        }
        y[150] += 8.0;
        let ts = TimeSeries::from_values(y).unwrap();
        let config = FitConfig {
            seasonalities: vec![SeasonalitySpec::new(25.0, 2)],
            ..FitConfig::default()
        };
        let model = fit(&ts, &config).unwrap();
        let w = model.events().windows();
        assert!(w.iter().any(|w| w.contains(150.0)), "{w:?}");
        assert!(model.noise_sigma() < 0.05);
    }

    #[test]
    fn fitting_is_deterministic() {
        let y: Vec<f64> = (0..120).map(|i| ((i * 37 % 11) as f64).sin()).collect();
        let ts = TimeSeries::from_values(y).unwrap();
        let config = FitConfig {
            seasonalities: vec![SeasonalitySpec::new(11.0, 3)],
            ..FitConfig::default()
        };
        let a = fit(&ts, &config).unwrap();
        let b = fit(&ts, &config).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}
