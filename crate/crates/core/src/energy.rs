//! Sensor supply currents, duty-cycle schedules and the risk-driven scanning
//! policy.
//!
//! Currents are in microamperes, durations in seconds, charge in µA·s.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auth::Verdict;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    Normal,
    LowPower,
    Suspend,
}

impl PowerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PowerMode::Normal => "normal",
            PowerMode::LowPower => "low_power",
            PowerMode::Suspend => "suspend",
        }
    }
}

impl fmt::Display for PowerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One current figure, optionally tied to an output data rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_hz: Option<f64>,
    pub current_ua: f64,
}

impl CurrentEntry {
    pub const fn flat(current_ua: f64) -> Self {
        CurrentEntry {
            rate_hz: None,
            current_ua,
        }
    }

    pub const fn at(rate_hz: f64, current_ua: f64) -> Self {
        CurrentEntry {
            rate_hz: Some(rate_hz),
            current_ua,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorPowerProfile {
    pub name: String,
    #[serde(default)]
    pub normal: Vec<CurrentEntry>,
    #[serde(default)]
    pub low_power: Vec<CurrentEntry>,
    #[serde(default)]
    pub suspend: Vec<CurrentEntry>,
}

impl SensorPowerProfile {
    pub fn new(
        name: impl Into<String>,
        normal: Vec<CurrentEntry>,
        low_power: Vec<CurrentEntry>,
        suspend: Vec<CurrentEntry>,
    ) -> Result<Self> {
        let p = SensorPowerProfile {
            name: name.into(),
            normal,
            low_power,
            suspend,
        };
        p.validate()?;
        Ok(p)
    }

    /// Positive currents, and suspend ≤ low power ≤ normal.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ProfileMismatch(format!("{}: {msg}", self.name)));
        if self.normal.is_empty() {
            return bad("no normal-mode current".into());
        }
        for mode in [PowerMode::Normal, PowerMode::LowPower, PowerMode::Suspend] {
            for e in self.entries(mode) {
                if !(e.current_ua.is_finite() && e.current_ua > 0.0) {
                    return bad(format!("{mode} current {} must be positive", e.current_ua));
                }
                if let Some(r) = e.rate_hz {
                    if !(r.is_finite() && r > 0.0) {
                        return bad(format!("{mode} rate {r} must be positive"));
                    }
                }
            }
        }
        let max = |es: &[CurrentEntry]| es.iter().map(|e| e.current_ua).fold(f64::NEG_INFINITY, f64::max);
        let min = |es: &[CurrentEntry]| es.iter().map(|e| e.current_ua).fold(f64::INFINITY, f64::min);
        let min_active = min(&self.normal).min(min(&self.low_power));
        if max(&self.suspend) > min_active {
            return bad("suspend current exceeds an active-mode current".into());
        }
        if max(&self.low_power) > min(&self.normal) {
            return bad("low-power current exceeds normal current".into());
        }
        Ok(())
    }

    pub fn entries(&self, mode: PowerMode) -> &[CurrentEntry] {
        match mode {
            PowerMode::Normal => &self.normal,
            PowerMode::LowPower => &self.low_power,
            PowerMode::Suspend => &self.suspend,
        }
    }

    /// Current for `mode`. Without a rate, the first entry of the mode is used.
    pub fn current(&self, mode: PowerMode, rate_hz: Option<f64>) -> Result<f64> {
        let entries = self.entries(mode);
        let entry = match rate_hz {
            None => entries.first(),
            Some(r) => entries.iter().find(|e| e.rate_hz == Some(r)),
        };
        entry.map(|e| e.current_ua).ok_or_else(|| {
            Error::ProfileMismatch(match rate_hz {
                None => format!("{} has no {mode} mode", self.name),
                Some(r) => format!("{} has no {mode} entry at {r} Hz", self.name),
            })
        })
    }
}

/// Supply currents of common smartphone and wearable accelerometers.
pub fn default_profiles() -> Vec<SensorPowerProfile> {
    use CurrentEntry as C;
    let mpu_low = vec![C::at(1.25, 10.0), C::at(5.0, 20.0), C::at(20.0, 60.0), C::at(40.0, 110.0)];
    vec![
        SensorPowerProfile {
            name: "BMA220".into(),
            normal: vec![C::flat(250.0)],
            low_power: vec![C::flat(10.0)],
            suspend: vec![C::flat(1.0)],
        },
        SensorPowerProfile {
            name: "MPU6050".into(),
            normal: vec![C::flat(500.0)],
            low_power: mpu_low.clone(),
            suspend: vec![],
        },
        SensorPowerProfile {
            name: "MPU-6500".into(),
            normal: vec![C::flat(500.0)],
            low_power: mpu_low,
            suspend: vec![],
        },
        SensorPowerProfile {
            name: "BMA280".into(),
            normal: vec![C::flat(130.0)],
            low_power: vec![C::flat(6.5)],
            suspend: vec![],
        },
        SensorPowerProfile {
            name: "BMA253".into(),
            normal: vec![C::flat(14.5)],
            low_power: vec![C::flat(6.5)],
            suspend: vec![],
        },
        SensorPowerProfile {
            name: "ADXL362".into(),
            normal: vec![C::at(100.0, 1.8), C::at(400.0, 3.0)],
            low_power: vec![],
            suspend: vec![C::flat(0.01)],
        },
    ]
}

pub fn default_profile(name: &str) -> Option<SensorPowerProfile> {
    default_profiles().into_iter().find(|p| p.name == name)
}

/// Parse a JSON array of profiles, validating each.
pub fn profiles_from_json(s: &str) -> Result<Vec<SensorPowerProfile>> {
    let ps: Vec<SensorPowerProfile> = serde_json::from_str(s)?;
    for p in &ps {
        p.validate()?;
    }
    Ok(ps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub mode: PowerMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_hz: Option<f64>,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyCycleSchedule {
    frame_length: f64,
    segments: Vec<Segment>,
}

impl DutyCycleSchedule {
    pub fn new(frame_length: f64, segments: Vec<Segment>) -> Result<Self> {
        if !(frame_length.is_finite() && frame_length > 0.0) {
            return Err(Error::InvalidArgument(format!("frame length {frame_length}")));
        }
        if let Some(s) = segments.iter().find(|s| !(s.duration >= 0.0 && s.duration.is_finite())) {
            return Err(Error::InvalidArgument(format!("segment duration {}", s.duration)));
        }
        let total: f64 = segments.iter().map(|s| s.duration).sum();
        if (total - frame_length).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "segments sum to {total}, frame is {frame_length}"
            )));
        }
        Ok(DutyCycleSchedule {
            frame_length,
            segments,
        })
    }

    /// `fraction` of the frame in normal mode, the rest suspended.
    pub fn duty(frame_length: f64, fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidArgument(format!("duty fraction {fraction}")));
        }
        let on = frame_length * fraction;
        Self::new(
            frame_length,
            vec![
                Segment {
                    mode: PowerMode::Normal,
                    rate_hz: None,
                    duration: on,
                },
                Segment {
                    mode: PowerMode::Suspend,
                    rate_hz: None,
                    duration: frame_length - on,
                },
            ],
        )
    }

    pub fn frame_length(&self) -> f64 {
        self.frame_length
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Fraction of the frame spent in normal mode.
    pub fn normal_fraction(&self) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.mode == PowerMode::Normal)
            .map(|s| s.duration)
            .sum::<f64>()
            / self.frame_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub average_ua: f64,
    pub charge_uas: f64,
}

pub fn estimate_energy(sch: &DutyCycleSchedule, prof: &SensorPowerProfile) -> Result<EnergyEstimate> {
    let mut charge = 0.0;
    for s in &sch.segments {
        if s.duration == 0.0 {
            // a zero-length segment still has to name a real mode
            prof.current(s.mode, s.rate_hz)?;
            continue;
        }
        charge += prof.current(s.mode, s.rate_hz)? * s.duration;
    }
    Ok(EnergyEstimate {
        average_ua: charge / sch.frame_length,
        charge_uas: charge,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskLevel {
    Low,
    Regular,
    Elevated,
    Lockdown,
}

impl RiskLevel {
    pub const ALL: [RiskLevel; 4] = [
        RiskLevel::Low,
        RiskLevel::Regular,
        RiskLevel::Elevated,
        RiskLevel::Lockdown,
    ];

    pub fn lower(self) -> RiskLevel {
        match self {
            RiskLevel::Low | RiskLevel::Regular => RiskLevel::Low,
            RiskLevel::Elevated => RiskLevel::Regular,
            RiskLevel::Lockdown => RiskLevel::Elevated,
        }
    }

    pub fn raise(self) -> RiskLevel {
        match self {
            RiskLevel::Low => RiskLevel::Regular,
            RiskLevel::Regular => RiskLevel::Elevated,
            RiskLevel::Elevated | RiskLevel::Lockdown => RiskLevel::Lockdown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RiskLevel::Low => "low",
            RiskLevel::Regular => "regular",
            RiskLevel::Elevated => "elevated",
            RiskLevel::Lockdown => "lockdown",
        }
    }
}

impl fmt::Display for RiskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RiskLevel::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown risk level {s:?}")))
    }
}

/// Occasional full-rate examinations at otherwise quiet levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpotCheck {
    pub probability: f64,
    pub seed: u64,
}

impl SpotCheck {
    /// Whether frame `step` carries a spot check. Deterministic in `(seed, step)`.
    pub fn due(&self, step: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(step);
        rng.random::<f64>() < self.probability
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub frame_length: f64,
    /// Normal-mode fraction per risk level: low, regular, elevated, lockdown.
    pub duty: [f64; 4],
    /// Normal-mode fraction at low risk while the device is idle.
    pub idle_duty: f64,
    pub spot_check: Option<SpotCheck>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            frame_length: 60.0,
            duty: [0.05, 0.10, 0.50, 1.0],
            idle_duty: 0.05,
            spot_check: None,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_length.is_finite() && self.frame_length > 0.0) {
            return Err(Error::InvalidArgument(format!("frame length {}", self.frame_length)));
        }
        for &d in self.duty.iter().chain([&self.idle_duty]) {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::InvalidArgument(format!("duty fraction {d}")));
            }
        }
        if self.duty.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("duty fractions must not decrease with risk".into()));
        }
        if let Some(s) = &self.spot_check {
            if !(0.0..=1.0).contains(&s.probability) {
                return Err(Error::InvalidArgument(format!("spot-check probability {}", s.probability)));
            }
        }
        Ok(())
    }

    pub fn duty_for(&self, risk: RiskLevel, idle: bool) -> f64 {
        if idle && risk == RiskLevel::Low {
            self.idle_duty
        } else {
            self.duty[risk as usize]
        }
    }

    pub fn schedule(&self, risk: RiskLevel, idle: bool) -> Result<DutyCycleSchedule> {
        DutyCycleSchedule::duty(self.frame_length, self.duty_for(risk, idle))
    }

    /// Schedule for frame `step`; a due spot check runs the frame at the
    /// elevated duty when the level would otherwise scan less.
    pub fn schedule_at(&self, risk: RiskLevel, idle: bool, step: u64) -> Result<DutyCycleSchedule> {
        let mut d = self.duty_for(risk, idle);
        if self.spot_check.is_some_and(|s| s.due(step)) {
            d = d.max(self.duty[RiskLevel::Elevated as usize]);
        }
        DutyCycleSchedule::duty(self.frame_length, d)
    }
}

/// Risk transition for one frame.
pub fn next_risk(risk: RiskLevel, last: Option<Verdict>) -> RiskLevel {
    match last {
        None => risk,
        Some(Verdict::Accept) => risk.lower(),
        Some(Verdict::Escalate) => risk.raise(),
        Some(Verdict::Reject) => RiskLevel::Lockdown,
    }
}

/// Apply the transition table and return the next frame's schedule.
pub fn policy_step(
    risk: RiskLevel,
    last: Option<Verdict>,
    idle: bool,
    config: &PolicyConfig,
) -> Result<(DutyCycleSchedule, RiskLevel)> {
    let next = next_risk(risk, last);
    Ok((config.schedule(next, idle)?, next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bma220() -> SensorPowerProfile {
        default_profile("BMA220").unwrap()
    }

    #[test]
    fn bma220_rows() {
        let p = bma220();
        let full = estimate_energy(&DutyCycleSchedule::duty(1.0, 1.0).unwrap(), &p).unwrap();
        assert_eq!(full.average_ua, 250.0);
        let off = estimate_energy(&DutyCycleSchedule::duty(1.0, 0.0).unwrap(), &p).unwrap();
        assert_eq!(off.average_ua, 1.0);
        let split = estimate_energy(&DutyCycleSchedule::duty(10.0, 0.1).unwrap(), &p).unwrap();
        assert!((split.average_ua - 25.9).abs() < 1e-12);
        assert!((split.charge_uas - 259.0).abs() < 1e-9);
    }

    #[test]
    fn defaults_are_valid() {
        let ps = default_profiles();
        assert_eq!(ps.len(), 6);
        for p in &ps {
            p.validate().unwrap();
        }
        let mpu = default_profile("MPU6050").unwrap();
        assert_eq!(mpu.current(PowerMode::LowPower, Some(20.0)).unwrap(), 60.0);
        let adxl = default_profile("ADXL362").unwrap();
        assert_eq!(adxl.current(PowerMode::Normal, Some(400.0)).unwrap(), 3.0);
        assert_eq!(adxl.current(PowerMode::Suspend, None).unwrap(), 0.01);
        let json = serde_json::to_string(&ps).unwrap();
        assert_eq!(profiles_from_json(&json).unwrap(), ps);
    }

    #[test]
    fn unknown_mode_is_mismatch() {
        let mpu = default_profile("MPU6050").unwrap();
        let sch = DutyCycleSchedule::duty(1.0, 0.5).unwrap();
        assert!(matches!(estimate_energy(&sch, &mpu), Err(Error::ProfileMismatch(_))));
        assert!(mpu.current(PowerMode::LowPower, Some(3.0)).is_err());
    }

    #[test]
    fn schedule_must_fill_frame() {
        let seg = |d| Segment {
            mode: PowerMode::Normal,
            rate_hz: None,
            duration: d,
        };
        assert!(DutyCycleSchedule::new(1.0, vec![seg(0.5)]).is_err());
        assert!(DutyCycleSchedule::new(1.0, vec![seg(-0.5), seg(1.5)]).is_err());
        assert!(DutyCycleSchedule::new(1.0, vec![seg(0.25), seg(0.75)]).is_ok());
    }

    #[test]
    fn inverted_currents_rejected() {
        let p = SensorPowerProfile::new("x", vec![CurrentEntry::flat(5.0)], vec![], vec![CurrentEntry::flat(6.0)]);
        assert!(p.is_err());
        let p = SensorPowerProfile::new("x", vec![CurrentEntry::flat(5.0)], vec![CurrentEntry::flat(0.0)], vec![]);
        assert!(p.is_err());
    }

    #[test]
    fn table_rules() {
        let cfg = PolicyConfig::default();
        let (s, r) = policy_step(RiskLevel::Low, Some(Verdict::Accept), true, &cfg).unwrap();
        assert_eq!(r, RiskLevel::Low);
        assert!((s.normal_fraction() - 0.05).abs() < 1e-12);
        let (s, r) = policy_step(RiskLevel::Regular, Some(Verdict::Reject), false, &cfg).unwrap();
        assert_eq!(r, RiskLevel::Lockdown);
        assert_eq!(s.normal_fraction(), 1.0);
        assert_eq!(next_risk(RiskLevel::Elevated, None), RiskLevel::Elevated);
        assert_eq!(next_risk(RiskLevel::Lockdown, Some(Verdict::Escalate)), RiskLevel::Lockdown);
        assert_eq!(next_risk(RiskLevel::Lockdown, Some(Verdict::Accept)), RiskLevel::Elevated);
    }

    #[test]
    fn alternating_day_matches_replay() {
        // 1440 one-minute frames, decisions alternate accept / escalate
        let cfg = PolicyConfig::default();
        let p = bma220();
        let mut risk = RiskLevel::Regular;
        let mut charge = 0.0;
        for i in 0..1440 {
            let v = if i % 2 == 0 { Verdict::Accept } else { Verdict::Escalate };
            let (s, r) = policy_step(risk, Some(v), false, &cfg).unwrap();
            charge += estimate_energy(&s, &p).unwrap().charge_uas;
            risk = r;
        }
        // replay: regular -> low (5%) -> regular (10%) -> low -> ...
        let low = 0.05 * 250.0 + 0.95 * 1.0;
        let regular = 0.10 * 250.0 + 0.90 * 1.0;
        let expected = 720.0 * 60.0 * (low + regular);
        assert!((charge - expected).abs() < 1e-6 * expected);
        assert!((charge / (1440.0 * 60.0) - 19.675).abs() < 1e-9);
    }

    #[test]
    fn spot_checks_are_deterministic() {
        let cfg = PolicyConfig {
            spot_check: Some(SpotCheck { probability: 0.3, seed: 9 }),
            ..PolicyConfig::default()
        };
        let a: Vec<f64> = (0..200)
            .map(|i| cfg.schedule_at(RiskLevel::Low, true, i).unwrap().normal_fraction())
            .collect();
        let b: Vec<f64> = (0..200)
            .map(|i| cfg.schedule_at(RiskLevel::Low, true, i).unwrap().normal_fraction())
            .collect();
        assert_eq!(a, b);
        let checks = a.iter().filter(|&&d| d == 0.5).count();
        assert!((30..90).contains(&checks), "{checks}");
        assert!(PolicyConfig::default().schedule_at(RiskLevel::Low, true, 3).unwrap().normal_fraction() == 0.05);
    }

    fn verdict() -> impl Strategy<Value = Option<Verdict>> {
        prop_oneof![
            Just(None),
            Just(Some(Verdict::Accept)),
            Just(Some(Verdict::Escalate)),
            Just(Some(Verdict::Reject)),
        ]
    }

    proptest! {
        #[test]
        fn higher_risk_never_lower_output(a in 0usize..4, b in 0usize..4, v in verdict()) {
            let (lo, hi) = (RiskLevel::ALL[a.min(b)], RiskLevel::ALL[a.max(b)]);
            prop_assert!(next_risk(lo, v) <= next_risk(hi, v));
        }

        #[test]
        fn lockdown_only_left_by_accept(v in verdict()) {
            let r = next_risk(RiskLevel::Lockdown, v);
            prop_assert_eq!(r < RiskLevel::Lockdown, v == Some(Verdict::Accept));
        }

        #[test]
        fn more_normal_time_never_cheaper(f1 in 0.0f64..1.0, df in 0.0f64..1.0, k in 0usize..6) {
            let p = &default_profiles()[k];
            let f2 = (f1 + df).min(1.0);
            // profiles without a suspend row fall back to their lowest active current
            let idle = if p.suspend.is_empty() { PowerMode::LowPower } else { PowerMode::Suspend };
            let sch = |f: f64| DutyCycleSchedule::new(1.0, vec![
                Segment { mode: PowerMode::Normal, rate_hz: None, duration: f },
                Segment { mode: idle, rate_hz: None, duration: 1.0 - f },
            ]).unwrap();
            let e1 = estimate_energy(&sch(f1), p).unwrap().average_ua;
            let e2 = estimate_energy(&sch(f2), p).unwrap().average_ua;
            prop_assert!(e2 >= e1 - 1e-12);
        }
    }
}
