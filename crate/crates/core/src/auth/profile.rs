use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::features::{extract_features, ActivityWindow};
use super::novelty::{NoveltyModel, MIN_TRAINING_WINDOWS};
use super::{AuthConfig, AuthDecision, Verdict};
use crate::activity::Activity;
use crate::data::sliding_windows;
use crate::error::{Error, Result};
use crate::forecast::{estimate_common_period, fit, EventTerm, ForecastModel, SeasonalitySpec};
use crate::series::TimeSeries;

pub const PROFILE_SCHEMA_VERSION: u32 = 1;

/// Accumulated raw samples of one activity, sorted by time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBuffer", into = "RawBuffer")]
pub struct SampleBuffer {
    t: Vec<f64>,
    axes: [Vec<f64>; 3],
}

#[derive(Serialize, Deserialize)]
struct RawBuffer {
    t: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl TryFrom<RawBuffer> for SampleBuffer {
    type Error = Error;
    fn try_from(r: RawBuffer) -> Result<Self> {
        // reuse the series checks: equal lengths, finite, increasing
        TimeSeries::new(r.t.clone(), r.x.clone())?;
        TimeSeries::new(r.t.clone(), r.y.clone())?;
        TimeSeries::new(r.t.clone(), r.z.clone())?;
        Ok(SampleBuffer {
            t: r.t,
            axes: [r.x, r.y, r.z],
        })
    }
}

impl From<SampleBuffer> for RawBuffer {
    fn from(b: SampleBuffer) -> Self {
        let [x, y, z] = b.axes;
        RawBuffer { t: b.t, x, y, z }
    }
}

impl SampleBuffer {
    pub fn empty() -> Self {
        SampleBuffer {
            t: Vec::new(),
            axes: [Vec::new(), Vec::new(), Vec::new()],
        }
    }

    pub fn from_window(w: &ActivityWindow) -> Self {
        SampleBuffer {
            t: w.t().to_vec(),
            axes: [0, 1, 2].map(|a| w.axis(a).y().to_vec()),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn axis(&self, a: usize) -> &[f64] {
        &self.axes[a]
    }

    pub fn window(&self, label: Option<Activity>) -> Result<ActivityWindow> {
        ActivityWindow::from_axes(label, self.series()?)
    }

    pub fn series(&self) -> Result<[TimeSeries; 3]> {
        Ok([
            TimeSeries::new(self.t.clone(), self.axes[0].clone())?,
            TimeSeries::new(self.t.clone(), self.axes[1].clone())?,
            TimeSeries::new(self.t.clone(), self.axes[2].clone())?,
        ])
    }

    /// Union by time; samples of `other` replace samples at the same time.
    /// Only the `cap` most recent samples are kept.
    pub fn merged(&self, other: &SampleBuffer, cap: usize) -> SampleBuffer {
        let mut out = SampleBuffer::empty();
        let push = |out: &mut SampleBuffer, src: &SampleBuffer, i: usize| {
            out.t.push(src.t[i]);
            for a in 0..3 {
                out.axes[a].push(src.axes[a][i]);
            }
        };
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let ord = match (self.t.get(i), other.t.get(j)) {
                (Some(a), Some(b)) => a.total_cmp(b),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    push(&mut out, self, i);
                    i += 1;
                }
                Ordering::Greater => {
                    push(&mut out, other, j);
                    j += 1;
                }
                Ordering::Equal => {
                    push(&mut out, other, j);
                    i += 1;
                    j += 1;
                }
            }
        }
        let drop = out.len().saturating_sub(cap);
        if drop > 0 {
            out.t.drain(..drop);
            for a in &mut out.axes {
                a.drain(..drop);
            }
        }
        out
    }
}

/// Everything known about one activity of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    activity: Activity,
    period: f64,
    observation_count: u64,
    axis_models: [ForecastModel; 3],
    novelty: NoveltyModel,
    buffer: SampleBuffer,
}

impl ProfileEntry {
    pub fn activity(&self) -> Activity {
        self.activity
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn observation_count(&self) -> u64 {
        self.observation_count
    }

    pub fn axis_models(&self) -> &[ForecastModel; 3] {
        &self.axis_models
    }

    pub fn novelty(&self) -> &NoveltyModel {
        &self.novelty
    }

    pub fn buffer(&self) -> &SampleBuffer {
        &self.buffer
    }

    /// Sensor singularities found while fitting each axis.
    pub fn singularities(&self) -> [&EventTerm; 3] {
        [0, 1, 2].map(|a| self.axis_models[a].events())
    }
}

/// Per-user bundle of activity entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileDocument", into = "ProfileDocument")]
pub struct ActivityProfile {
    user_id: String,
    entries: BTreeMap<Activity, ProfileEntry>,
}

#[derive(Serialize, Deserialize)]
struct ProfileDocument {
    schema_version: u32,
    user_id: String,
    entries: Vec<ProfileEntry>,
}

impl TryFrom<ProfileDocument> for ActivityProfile {
    type Error = Error;
    fn try_from(d: ProfileDocument) -> Result<Self> {
        if d.schema_version != PROFILE_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "profile schema version {} is not supported (expected {PROFILE_SCHEMA_VERSION})",
                d.schema_version
            )));
        }
        let mut entries = BTreeMap::new();
        for e in d.entries {
            if entries.insert(e.activity, e).is_some() {
                return Err(Error::Schema("duplicate activity entry".into()));
            }
        }
        Ok(ActivityProfile {
            user_id: d.user_id,
            entries,
        })
    }
}

impl From<ActivityProfile> for ProfileDocument {
    fn from(p: ActivityProfile) -> Self {
        ProfileDocument {
            schema_version: PROFILE_SCHEMA_VERSION,
            user_id: p.user_id,
            entries: p.entries.into_values().collect(),
        }
    }
}

impl ActivityProfile {
    pub fn new(user_id: impl Into<String>) -> Self {
        ActivityProfile {
            user_id: user_id.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn entry(&self, activity: Activity) -> Option<&ProfileEntry> {
        self.entries.get(&activity)
    }

    pub fn entries(&self) -> impl Iterator<Item = &ProfileEntry> {
        self.entries.values()
    }

    pub fn activities(&self) -> impl Iterator<Item = Activity> + '_ {
        self.entries.keys().copied()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    fn with_entry(&self, entry: ProfileEntry) -> ActivityProfile {
        let mut p = self.clone();
        p.entries.insert(entry.activity, entry);
        p
    }
}

/// Cycles of length `period` in `duration`, counting a cycle that is at least
/// `1 - tolerance` complete.
pub fn complete_cycles(duration: f64, period: f64, tolerance: f64) -> usize {
    if !(period > 0.0) {
        return 0;
    }
    (duration / period + tolerance).floor().max(0.0) as usize
}

fn fit_axes(series: &[TimeSeries; 3], spec: &SeasonalitySpec, config: &AuthConfig) -> Result<[ForecastModel; 3]> {
    let mut cfg = config.fit.clone();
    cfg.seasonalities = vec![spec.clone()];
    let cfg = &cfg;
    let results: Vec<Result<ForecastModel>> = std::thread::scope(|s| {
        let handles: Vec<_> = series.iter().map(|ts| s.spawn(move || fit(ts, cfg))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Numerical("axis fit panicked".into()))))
            .collect()
    });
    let mut it = results.into_iter();
    Ok([it.next().unwrap()?, it.next().unwrap()?, it.next().unwrap()?])
}

fn train_novelty(
    activity: Activity,
    buffer: &SampleBuffer,
    models: &[ForecastModel; 3],
    config: &AuthConfig,
) -> Result<NoveltyModel> {
    let n = buffer.len();
    let cold = |reason: String| Error::ColdStart {
        activity: activity.to_string(),
        reason,
    };
    if n < config.window_len + MIN_TRAINING_WINDOWS - 1 {
        return Err(cold(format!(
            "{n} samples cannot hold {MIN_TRAINING_WINDOWS} windows of {}",
            config.window_len
        )));
    }
    let mut stride = config.window_stride;
    if sliding_windows(n, config.window_len, stride).len() < MIN_TRAINING_WINDOWS {
        stride = ((n - config.window_len) / (MIN_TRAINING_WINDOWS - 1)).max(1);
    }
    let full = buffer.window(Some(activity))?;
    let rows = sliding_windows(n, config.window_len, stride)
        .into_iter()
        .map(|r| extract_features(&full.slice(r.start, r.end)))
        .collect::<Result<Vec<_>>>()?;
    let noise = models.each_ref().map(|m| m.noise_sigma());
    NoveltyModel::from_features_with_noise(Some(activity), &rows, &noise, full.axis(0).median_step())
}

fn build_entry(
    activity: Activity,
    buffer: SampleBuffer,
    observation_count: Option<u64>,
    config: &AuthConfig,
) -> Result<ProfileEntry> {
    let cold = |reason: String| Error::ColdStart {
        activity: activity.to_string(),
        reason,
    };
    let series = buffer.series()?;
    let n = buffer.len();
    if n < 4 {
        return Err(cold(format!("only {n} samples")));
    }
    let step = series[0].median_step();
    let p_min = config.min_period.max(2.0 * step);
    let p_max = n as f64 * step / 2.0;
    if p_max < p_min {
        return Err(cold(format!("only {n} samples")));
    }
    let est = estimate_common_period(&series, p_min, p_max)?
        .ok_or_else(|| cold("no periodic structure".into()))?;
    let cycles = complete_cycles(n as f64 * step, est.period, config.cycle_tolerance);
    if cycles < config.min_cycles {
        return Err(cold(format!(
            "{cycles} complete cycles of period {:.2}, {} required",
            est.period, config.min_cycles
        )));
    }
    let spec = SeasonalitySpec::for_period(est.period, step, config.max_order)
        .ok_or_else(|| cold(format!("period {:.2} is too short", est.period)))?;
    let axis_models = fit_axes(&series, &spec, config)?;
    let novelty = train_novelty(activity, &buffer, &axis_models, config)?;
    Ok(ProfileEntry {
        activity,
        period: est.period,
        observation_count: observation_count.unwrap_or(cycles as u64),
        axis_models,
        novelty,
        buffer,
    })
}

/// Create the entry for the window's activity from accumulated samples.
///
/// Fails with a cold-start error unless the samples hold at least
/// `min_cycles` complete cycles of a detectable period.
pub fn enroll(profile: &ActivityProfile, data: &ActivityWindow, config: &AuthConfig) -> Result<ActivityProfile> {
    config.validate()?;
    let activity = data
        .label()
        .ok_or_else(|| Error::InvalidArgument("enrollment data must be labelled".into()))?;
    if profile.entry(activity).is_some() {
        return Err(Error::ContractViolation(format!(
            "{activity} is already enrolled; extend it with accept_and_update"
        )));
    }
    let buffer = SampleBuffer::empty().merged(&SampleBuffer::from_window(data), config.buffer_cap);
    Ok(profile.with_entry(build_entry(activity, buffer, None, config)?))
}

/// Fold an accepted window into its activity entry and refit.
pub fn accept_and_update(
    w: &ActivityWindow,
    profile: &ActivityProfile,
    decision: &AuthDecision,
    config: &AuthConfig,
) -> Result<ActivityProfile> {
    config.validate()?;
    if decision.verdict != Verdict::Accept {
        return Err(Error::ContractViolation(format!(
            "update requires an accept decision, got {}",
            decision.verdict
        )));
    }
    let activity = decision.activity;
    if w.label().is_some_and(|l| l != activity) {
        return Err(Error::ContractViolation(format!(
            "window labelled {} but accepted as {activity}",
            w.label().unwrap()
        )));
    }
    let entry = profile.entry(activity).ok_or_else(|| Error::ColdStart {
        activity: activity.to_string(),
        reason: "no profile entry".into(),
    })?;
    let buffer = entry.buffer.merged(&SampleBuffer::from_window(w), config.buffer_cap);
    let updated = build_entry(activity, buffer, Some(entry.observation_count + 1), config)?;
    Ok(profile.with_entry(updated))
}

/// Window drawn from an entry's own axis models.
///
/// Each axis is the model mean at `start + i * step` plus Gaussian noise of
/// `noise_scale` times the axis noise sigma; deviations from the window mean
/// are then multiplied by `amplitude`.
pub fn resample_window(
    entry: &ProfileEntry,
    start: f64,
    len: usize,
    noise_scale: f64,
    amplitude: f64,
    seed: u64,
) -> Result<ActivityWindow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = entry.axis_models[0].time_step();
    let t: Vec<f64> = (0..len).map(|i| start + step * i as f64).collect();
    let axes = [0, 1, 2].map(|a| {
        let m = &entry.axis_models[a];
        let sigma = noise_scale * m.noise_sigma();
        let mut y: Vec<f64> = t
            .iter()
            .map(|&s| {
                let e: f64 = StandardNormal.sample(&mut rng);
                m.eval(s) + sigma * e
            })
            .collect();
        if amplitude != 1.0 && !y.is_empty() {
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            for v in &mut y {
                *v = mean + amplitude * (*v - mean);
            }
        }
        y
    });
    let [x, y, z] = axes;
    ActivityWindow::new(
        Some(entry.activity),
        TimeSeries::new(t.clone(), x)?,
        TimeSeries::new(t.clone(), y)?,
        TimeSeries::new(t, z)?,
    )
}
