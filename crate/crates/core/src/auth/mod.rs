//! Continuous authentication from per-activity forecast models.
//!
//! A profile holds, for each enrolled activity, three axis models, a one-class
//! novelty scorer and the raw training buffer. A new window is judged by the
//! fraction of its samples that fall inside each axis model's prediction band
//! (the tolerable error), gated by the novelty scorer. Accepted windows can be
//! folded back into the profile.

mod features;
mod novelty;
mod profile;

use serde::{Deserialize, Serialize};

pub use features::{extract_features, idx, ActivityWindow, FEATURES_PER_AXIS, FEATURE_COUNT, MIN_WINDOW};
pub use novelty::{NoveltyModel, MIN_TRAINING_WINDOWS};
pub use profile::{
    accept_and_update, complete_cycles, enroll, resample_window, ActivityProfile, ProfileEntry,
    SampleBuffer, PROFILE_SCHEMA_VERSION,
};

use crate::activity::Activity;
use crate::error::{Error, Result};
use crate::forecast::{predict_at, FitConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Escalate,
    Reject,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Accept => "accept",
            Verdict::Escalate => "escalate",
            Verdict::Reject => "reject",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthDecision {
    pub verdict: Verdict,
    /// Activity whose models judged the window.
    pub activity: Activity,
    /// Minimum per-axis coverage.
    pub coverage_ratio: f64,
    pub te_threshold: f64,
    pub escalation_floor: f64,
    /// Per-axis coverage, x, y, z.
    pub evidence: [f64; 3],
    pub novelty_score: f64,
    pub novelty_threshold: f64,
    pub novelty_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuthConfig {
    /// Tolerable error: minimum per-axis coverage for acceptance.
    pub te_threshold: f64,
    /// Coverage below this on any axis rejects.
    pub escalation_floor: f64,
    /// Nominal level of the prediction band.
    pub level: f64,
    pub n_sims: usize,
    pub seed: u64,
    /// Novelty training windows: length and stride in samples.
    pub window_len: usize,
    pub window_stride: usize,
    /// Complete cycles required before an activity can be enrolled.
    pub min_cycles: usize,
    /// A cycle counts as complete when at least `1 - cycle_tolerance` of it was observed.
    pub cycle_tolerance: f64,
    pub buffer_cap: usize,
    pub min_period: f64,
    pub max_order: usize,
    /// Base fit settings; the seasonality is set from the estimated period.
    pub fit: FitConfig,
}

impl Default for AuthConfig {
    fn default() -> Self {
        AuthConfig {
            te_threshold: 0.70,
            escalation_floor: 0.40,
            level: 0.80,
            n_sims: 1000,
            seed: 0,
            window_len: 100,
            window_stride: 10,
            min_cycles: 5,
            cycle_tolerance: 0.25,
            buffer_cap: 5000,
            min_period: 4.0,
            max_order: 10,
            fit: FitConfig::default(),
        }
    }
}

impl AuthConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be in [0, 1], got {v}")))
            }
        };
        unit("te_threshold", self.te_threshold)?;
        unit("escalation_floor", self.escalation_floor)?;
        unit("cycle_tolerance", self.cycle_tolerance)?;
        if self.escalation_floor > self.te_threshold {
            return Err(Error::InvalidArgument(
                "escalation_floor must not exceed te_threshold".into(),
            ));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level must be in (0, 1), got {}", self.level)));
        }
        if self.window_len < MIN_WINDOW || self.window_stride == 0 {
            return Err(Error::InvalidArgument("window length or stride too small".into()));
        }
        if self.min_cycles == 0 || self.buffer_cap < self.window_len {
            return Err(Error::InvalidArgument("min_cycles or buffer_cap too small".into()));
        }
        self.fit.validate()
    }
}

fn coverage(entry: &ProfileEntry, w: &ActivityWindow, config: &AuthConfig) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (axis, c) in out.iter_mut().enumerate() {
        let band = predict_at(
            &entry.axis_models()[axis],
            w.t(),
            config.level,
            config.n_sims,
            config.seed.wrapping_add(axis as u64),
        )?;
        let y = w.axis(axis).y();
        let inside = (0..y.len()).filter(|&i| band.contains(i, y[i])).count();
        *c = inside as f64 / y.len() as f64;
    }
    Ok(out)
}

/// Judge a window against the profile. Pure: the profile is not modified.
///
/// A labelled window is judged by that activity's entry. An unlabelled one
/// uses the entry whose novelty scorer likes it most (largest score minus
/// threshold).
pub fn authenticate(w: &ActivityWindow, profile: &ActivityProfile, config: &AuthConfig) -> Result<AuthDecision> {
    config.validate()?;
    let features = extract_features(w)?;
    let (entry, score) = match w.label() {
        Some(label) => {
            let entry = profile.entry(label).ok_or_else(|| Error::ColdStart {
                activity: label.to_string(),
                reason: "no profile entry; collect more cycles".into(),
            })?;
            (entry, entry.novelty().score_features(&features)?)
        }
        None => {
            let mut best: Option<(&ProfileEntry, f64)> = None;
            for e in profile.entries() {
                let s = e.novelty().score_features(&features)?;
                let margin = s - e.novelty().threshold();
                if best.is_none_or(|(b, bs)| margin > bs - b.novelty().threshold()) {
                    best = Some((e, s));
                }
            }
            best.ok_or_else(|| Error::ColdStart {
                activity: "unknown".into(),
                reason: "profile has no entries".into(),
            })?
        }
    };
    if w.duration() < entry.period() {
        return Err(Error::TooShort {
            len: w.len(),
            min: (entry.period() / w.axis(0).median_step()).ceil() as usize,
        });
    }
    let evidence = coverage(entry, w, config)?;
    let min_cov = evidence.iter().copied().fold(f64::INFINITY, f64::min);
    let novelty_pass = entry.novelty().passes(score);
    let verdict = if !novelty_pass || min_cov < config.escalation_floor {
        Verdict::Reject
    } else if min_cov >= config.te_threshold {
        Verdict::Accept
    } else {
        Verdict::Escalate
    };
    Ok(AuthDecision {
        verdict,
        activity: entry.activity(),
        coverage_ratio: min_cov,
        te_threshold: config.te_threshold,
        escalation_floor: config.escalation_floor,
        evidence,
        novelty_score: score,
        novelty_threshold: entry.novelty().threshold(),
        novelty_pass,
    })
}
