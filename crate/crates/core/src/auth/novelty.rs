use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::features::{extract_features, idx, ActivityWindow, FEATURES_PER_AXIS};
use crate::activity::Activity;
use crate::error::{Error, Result};

pub const MIN_TRAINING_WINDOWS: usize = 5;
const RIDGE: f64 = 1e-6;
/// Per-feature standard deviations are floored at this fraction of the
/// feature's natural scale.
const FLOOR_FRACTION: f64 = 0.15;
const THRESHOLD_QUANTILE: f64 = 0.05;
/// The threshold is never tighter than the 0.99 quantile of the chi-square
/// distribution with one degree of freedom per feature.
/// Standard-normal 0.99 quantile.
const Z_CHI2_LEVEL: f64 = 2.326_347_874_040_841;

/// Wilson-Hilferty approximation of the 0.99 chi-square quantile.
fn chi2_quantile(dof: usize) -> f64 {
    let k = dof as f64;
    let a = 2.0 / (9.0 * k);
    k * (1.0 - a + Z_CHI2_LEVEL * a.sqrt()).powi(3)
}

/// One-class Mahalanobis scorer over window features.
///
/// The score is `-d²`, so larger is more owner-like; a window passes when its
/// score is at least `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyModel {
    label: Option<Activity>,
    centroid: Vec<f64>,
    /// Row-major inverse of the regularized covariance.
    precision: Vec<f64>,
    threshold: f64,
    n_train: usize,
}

struct Fitted {
    centroid: DVector<f64>,
    precision: DMatrix<f64>,
}

impl Fitted {
    fn score(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.centroid;
        -(d.dot(&(&self.precision * &d)))
    }
}

/// Natural scale of each feature: average spread for the amplitude-like
/// features, average value for period and slope. With `noise`, each axis's
/// amplitude features also get at least that residual sd of slack, and its
/// slope at least sd per `step`.
fn floors(rows: &[Vec<f64>], noise: Option<(&[f64], f64)>) -> Vec<f64> {
    let p = rows[0].len();
    let n = rows.len() as f64;
    let mean_of = |j: usize| rows.iter().map(|r| r[j]).sum::<f64>() / n;
    let mut out = vec![0.0; p];
    for a in 0..p / FEATURES_PER_AXIS {
        let base = a * FEATURES_PER_AXIS;
        let level = mean_of(base + idx::MEAN).abs().max(1.0);
        let amp = mean_of(base + idx::STD).max(1e-3 * level);
        let period = mean_of(base + idx::PERIOD).abs().max(1e-3);
        let slope = mean_of(base + idx::SLOPE).max(1e-3 * level);
        let (sd, step) = noise.map_or((0.0, 1.0), |(sd, step)| (sd[a], step));
        for k in 0..FEATURES_PER_AXIS {
            let scale = match k {
                idx::PERIOD => period,
                idx::SLOPE => (FLOOR_FRACTION * slope).max(sd / step) / FLOOR_FRACTION,
                _ => (FLOOR_FRACTION * amp).max(sd) / FLOOR_FRACTION,
            };
            out[base + k] = (FLOOR_FRACTION * scale).powi(2);
        }
    }
    out
}

fn fit_rows(rows: &[&Vec<f64>], floor: &[f64]) -> Result<Fitted> {
    let n = rows.len();
    let p = floor.len();
    let mut mu = DVector::zeros(p);
    for r in rows {
        mu += DVector::from_column_slice(r);
    }
    mu /= n as f64;
    let mut cov = DMatrix::zeros(p, p);
    for r in rows {
        let d = DVector::from_column_slice(r) - &mu;
        cov.ger(1.0, &d, &d, 1.0);
    }
    cov /= n as f64;
    for j in 0..p {
        cov[(j, j)] = cov[(j, j)].max(floor[j]);
    }
    // shrink toward the diagonal; fully diagonal when there are fewer
    // windows than features
    let alpha = (p as f64 / n as f64).min(1.0);
    let mut s = cov.scale(1.0 - alpha);
    for j in 0..p {
        s[(j, j)] = cov[(j, j)] + RIDGE;
    }
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::Numerical("novelty covariance is not positive definite".into()))?;
    Ok(Fitted {
        centroid: mu,
        precision: chol.inverse(),
    })
}

/// Value at the lower `q` order statistic; at least `1 - q` of the values are `>=` it.
fn lower_order_statistic(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    v[(q * v.len() as f64).floor() as usize]
}

impl NoveltyModel {
    pub fn train(windows: &[ActivityWindow]) -> Result<Self> {
        if windows.len() < MIN_TRAINING_WINDOWS {
            return Err(Error::TrainingContract(format!(
                "{} windows, at least {MIN_TRAINING_WINDOWS} required",
                windows.len()
            )));
        }
        let label = windows[0].label();
        if windows.iter().any(|w| w.label() != label) {
            return Err(Error::TrainingContract("windows carry more than one label".into()));
        }
        let rows = windows
            .iter()
            .map(extract_features)
            .collect::<Result<Vec<_>>>()?;
        Self::from_features(label, &rows)
    }

    /// Train from precomputed feature rows of a single class.
    pub fn from_features(label: Option<Activity>, rows: &[Vec<f64>]) -> Result<Self> {
        Self::fit(label, rows, None)
    }

    /// Like [`from_features`](Self::from_features), with the per-axis residual
    /// sd of the owner's forecast models and the sample step widening the
    /// variance floors.
    pub fn from_features_with_noise(
        label: Option<Activity>,
        rows: &[Vec<f64>],
        noise_sd: &[f64],
        step: f64,
    ) -> Result<Self> {
        if rows.first().is_some_and(|r| r.len() != noise_sd.len() * FEATURES_PER_AXIS) {
            return Err(Error::LengthMismatch(format!(
                "{} noise scales for {} features",
                noise_sd.len(),
                rows[0].len()
            )));
        }
        if !(step > 0.0 && step.is_finite()) || noise_sd.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("noise scales and step must be finite and non-negative".into()));
        }
        Self::fit(label, rows, Some((noise_sd, step)))
    }

    fn fit(label: Option<Activity>, rows: &[Vec<f64>], noise: Option<(&[f64], f64)>) -> Result<Self> {
        if rows.len() < MIN_TRAINING_WINDOWS {
            return Err(Error::TrainingContract(format!(
                "{} windows, at least {MIN_TRAINING_WINDOWS} required",
                rows.len()
            )));
        }
        let p = rows[0].len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::LengthMismatch("feature rows differ in length".into()));
        }
        let floor = floors(rows, noise);
        let all: Vec<&Vec<f64>> = rows.iter().collect();
        let fitted = fit_rows(&all, &floor)?;
        let in_sample: Vec<f64> = rows
            .iter()
            .map(|r| fitted.score(&DVector::from_column_slice(r)))
            .collect();
        let mut held_out = Vec::with_capacity(rows.len());
        for i in 0..rows.len() {
            let rest: Vec<&Vec<f64>> = rows
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, r)| r)
                .collect();
            let f = fit_rows(&rest, &floor)?;
            held_out.push(f.score(&DVector::from_column_slice(&rows[i])));
        }
        let threshold = lower_order_statistic(in_sample, THRESHOLD_QUANTILE)
            .min(lower_order_statistic(held_out, THRESHOLD_QUANTILE))
            .min(-chi2_quantile(p));
        Ok(NoveltyModel {
            label,
            centroid: fitted.centroid.as_slice().to_vec(),
            precision: fitted.precision.transpose().as_slice().to_vec(),
            threshold,
            n_train: rows.len(),
        })
    }

    pub fn label(&self) -> Option<Activity> {
        self.label
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn centroid(&self) -> &[f64] {
        &self.centroid
    }

    pub fn score_features(&self, x: &[f64]) -> Result<f64> {
        let p = self.centroid.len();
        if x.len() != p || self.precision.len() != p * p {
            return Err(Error::LengthMismatch(format!(
                "{} features for a model of {p}",
                x.len()
            )));
        }
        let d: Vec<f64> = x.iter().zip(&self.centroid).map(|(a, b)| a - b).collect();
        let mut q = 0.0;
        for i in 0..p {
            let row = &self.precision[i * p..(i + 1) * p];
            q += d[i] * row.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(-q)
    }

    pub fn score(&self, w: &ActivityWindow) -> Result<f64> {
        self.score_features(&extract_features(w)?)
    }

    pub fn passes(&self, score: f64) -> bool {
        score >= self.threshold
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::TimeSeries;
    use crate::synth::activity_signal;

    fn windows_from(sig: &crate::synth::ActivitySignal, label: Activity, n: usize, seed: u64) -> Vec<ActivityWindow> {
        let [x, y, z] = sig.sample(100 + 10 * (n - 1), seed);
        (0..n)
            .map(|k| {
                let s = k * 10;
                let axis = |v: &Vec<f64>| {
                    TimeSeries::new((s..s + 100).map(|i| i as f64).collect(), v[s..s + 100].to_vec()).unwrap()
                };
                ActivityWindow::new(Some(label), axis(&x), axis(&y), axis(&z)).unwrap()
            })
            .collect()
    }

    #[test]
    fn chi2_quantile_matches_tables() {
        // 0.99 quantiles: 21 dof 38.932, 7 dof 18.475
        assert!((chi2_quantile(21) - 38.932).abs() < 0.1);
        assert!((chi2_quantile(7) - 18.475).abs() < 0.1);
    }

    #[test]
    fn identical_windows_all_pass() {
        let w = windows_from(&activity_signal(Activity::Jumping, 1), Activity::Jumping, 1, 1);
        let set = vec![w[0].clone(); 5];
        let m = NoveltyModel::train(&set).unwrap();
        for w in &set {
            assert!(m.passes(m.score(w).unwrap()));
        }
    }

    #[test]
    fn training_windows_mostly_pass() {
        let ws = windows_from(&activity_signal(Activity::Walking, 2), Activity::Walking, 40, 2);
        let m = NoveltyModel::train(&ws).unwrap();
        let pass = ws.iter().filter(|w| m.passes(m.score(w).unwrap())).count();
        assert!(pass as f64 >= 0.95 * ws.len() as f64, "{pass}");
    }

    #[test]
    fn separates_scaled_activity() {
        let jump = activity_signal(Activity::Jumping, 3);
        let m = NoveltyModel::train(&windows_from(&jump, Activity::Jumping, 30, 3)).unwrap();
        let run = activity_signal(Activity::Running, 3).scaled(3.0);
        for w in windows_from(&run, Activity::Running, 10, 4) {
            assert!(!m.passes(m.score(&w).unwrap()));
        }
        for w in windows_from(&jump.scaled(3.0), Activity::Jumping, 10, 5) {
            assert!(!m.passes(m.score(&w).unwrap()));
        }
    }

    #[test]
    fn contract_errors() {
        let mut ws = windows_from(&activity_signal(Activity::Jumping, 1), Activity::Jumping, 6, 1);
        assert!(matches!(NoveltyModel::train(&ws[..4]), Err(Error::TrainingContract(_))));
        ws[2] = ws[2].clone().with_label(Some(Activity::Running));
        assert!(matches!(NoveltyModel::train(&ws), Err(Error::TrainingContract(_))));
    }

    #[test]
    fn time_offset_does_not_change_score() {
        let ws = windows_from(&activity_signal(Activity::Jumping, 1), Activity::Jumping, 12, 1);
        let m = NoveltyModel::train(&ws).unwrap();
        let w = &ws[3];
        let shifted = ActivityWindow::from_axes(
            w.label(),
            [0, 1, 2].map(|k| {
                TimeSeries::new(w.t().iter().map(|t| t + 5000.0).collect(), w.axis(k).y().to_vec()).unwrap()
            }),
        )
        .unwrap();
        let (a, b) = (m.score(w).unwrap(), m.score(&shifted).unwrap());
        assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn serde_round_trip() {
        let ws = windows_from(&activity_signal(Activity::Running, 1), Activity::Running, 8, 1);
        let m = NoveltyModel::train(&ws).unwrap();
        let back: NoveltyModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
