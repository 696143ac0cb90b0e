//! Scenario replay: each step authenticates a synthetic window (or idles),
//! moves the risk level and prices the next frame's schedule.

use periodauth::auth::{authenticate, resample_window, ActivityProfile, AuthConfig, Verdict};
use periodauth::energy::{estimate_energy, next_risk, PolicyConfig, RiskLevel, SensorPowerProfile};
use periodauth::Activity;
use serde::{Deserialize, Serialize};

use crate::CliError;

const DEFAULT_IMPOSTOR_SCALE: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Owner,
    Impostor,
    Idle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioStep {
    /// Seconds since the end of the profile's training data.
    pub timestamp: f64,
    pub kind: StepKind,
    /// Enrolled activity to sample; the profile's first entry when absent.
    #[serde(default)]
    pub activity: Option<Activity>,
    /// Amplitude factor about the window mean: 1 for owners, 2.5 for impostors by default.
    #[serde(default)]
    pub scale: Option<f64>,
    /// Noise in units of each axis model's residual sd; 1 by default.
    #[serde(default)]
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub timestamp: f64,
    pub kind: StepKind,
    pub activity: Option<Activity>,
    pub verdict: Option<Verdict>,
    pub coverage: Option<f64>,
    pub novelty_pass: Option<bool>,
    pub risk_before: RiskLevel,
    pub risk_after: RiskLevel,
    pub duty: f64,
    pub average_ua: f64,
    pub charge_uas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub steps: usize,
    pub authenticated: usize,
    pub accepted: usize,
    pub escalated: usize,
    pub rejected: usize,
    pub accept_rate: f64,
    pub average_ua: f64,
    pub charge_uas: f64,
    /// First step that ended in lockdown.
    pub lockdown_step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replay {
    pub sensor: String,
    pub start_risk: RiskLevel,
    pub steps: Vec<StepLog>,
    pub totals: Totals,
}

pub fn parse_scenario(text: &str) -> Result<Vec<ScenarioStep>, CliError> {
    let steps: Vec<ScenarioStep> =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("scenario: {e}")))?;
    let mut last = 0.0;
    for (i, s) in steps.iter().enumerate() {
        if !(s.timestamp.is_finite() && s.timestamp >= last) {
            return Err(CliError::Input(format!(
                "scenario step {i}: timestamps must be finite, non-negative and non-decreasing"
            )));
        }
        last = s.timestamp;
        for (name, v) in [("scale", s.scale), ("noise", s.noise)] {
            if v.is_some_and(|v| !(v.is_finite() && v >= 0.0)) {
                return Err(CliError::Input(format!("scenario step {i}: {name} must be finite and >= 0")));
            }
        }
    }
    Ok(steps)
}

/// Replay `steps` from `start_risk`. Window `i` is sampled with seed
/// `auth.seed + i`, deterministic in the inputs.
pub fn replay(
    profile: &ActivityProfile,
    steps: &[ScenarioStep],
    auth: &AuthConfig,
    policy: &PolicyConfig,
    sensor: &SensorPowerProfile,
    sample_rate_hz: f64,
    start_risk: RiskLevel,
) -> Result<Replay, CliError> {
    let mut risk = start_risk;
    let mut logs = Vec::with_capacity(steps.len());
    for (i, s) in steps.iter().enumerate() {
        let seed = auth.seed.wrapping_add(i as u64);
        let (decision, activity) = match s.kind {
            StepKind::Idle => (None, None),
            StepKind::Owner | StepKind::Impostor => {
                let entry = match s.activity {
                    Some(a) => profile.entry(a),
                    None => profile.entries().next(),
                }
                .ok_or_else(|| {
                    CliError::Input(format!(
                        "scenario step {i}: profile has no entry for {}",
                        s.activity.map_or("any activity".to_string(), |a| a.to_string())
                    ))
                })?;
                let default_scale = if s.kind == StepKind::Owner { 1.0 } else { DEFAULT_IMPOSTOR_SCALE };
                let start = entry.buffer().t().last().copied().unwrap_or(0.0) + 1.0 + (s.timestamp * sample_rate_hz).round();
                let w = resample_window(
                    entry,
                    start,
                    auth.window_len,
                    s.noise.unwrap_or(1.0),
                    s.scale.unwrap_or(default_scale),
                    seed,
                )?;
                let d = authenticate(&w, profile, &AuthConfig { seed, ..auth.clone() })?;
                (Some(d), Some(entry.activity()))
            }
        };
        let idle = s.kind == StepKind::Idle;
        let next = next_risk(risk, decision.as_ref().map(|d| d.verdict));
        let sch = policy.schedule_at(next, idle, i as u64)?;
        let e = estimate_energy(&sch, sensor)?;
        logs.push(StepLog {
            step: i,
            timestamp: s.timestamp,
            kind: s.kind,
            activity,
            verdict: decision.as_ref().map(|d| d.verdict),
            coverage: decision.as_ref().map(|d| d.coverage_ratio),
            novelty_pass: decision.as_ref().map(|d| d.novelty_pass),
            risk_before: risk,
            risk_after: next,
            duty: sch.normal_fraction(),
            average_ua: e.average_ua,
            charge_uas: e.charge_uas,
        });
        risk = next;
    }
    let count = |v: Verdict| logs.iter().filter(|l| l.verdict == Some(v)).count();
    let authenticated = logs.iter().filter(|l| l.verdict.is_some()).count();
    let accepted = count(Verdict::Accept);
    let charge: f64 = logs.iter().map(|l| l.charge_uas).sum();
    let totals = Totals {
        steps: logs.len(),
        authenticated,
        accepted,
        escalated: count(Verdict::Escalate),
        rejected: count(Verdict::Reject),
        accept_rate: if authenticated == 0 { 0.0 } else { accepted as f64 / authenticated as f64 },
        average_ua: if logs.is_empty() {
            0.0
        } else {
            logs.iter().map(|l| l.average_ua).sum::<f64>() / logs.len() as f64
        },
        charge_uas: charge,
        lockdown_step: logs.iter().find(|l| l.risk_after == RiskLevel::Lockdown).map(|l| l.step),
    };
    Ok(Replay {
        sensor: sensor.name.clone(),
        start_risk,
        steps: logs,
        totals,
    })
}
