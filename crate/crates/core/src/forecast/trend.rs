//! Piecewise growth models with rate changepoints.
//!
//! Both kinds share the same changepoint bookkeeping: `a_j(t) = 1` iff
//! `t >= s_j`, the active rate is `k + Σ a_j(t) δ_j` and the active offset is
//! `m + Σ a_j(t) γ_j`. The offsets `γ` are never free parameters; they are
//! recomputed from `(k, m, s, δ)` so the curve is continuous at every `s_j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Beyond this exponent the logistic curve is saturated to `0` or `C`.
pub const EXP_SATURATION: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendKind {
    Linear,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrend", into = "RawTrend")]
pub struct TrendParams {
    kind: TrendKind,
    capacity: Option<f64>,
    rate: f64,
    offset: f64,
    changepoints: Vec<f64>,
    deltas: Vec<f64>,
    gammas: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTrend {
    kind: TrendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacity: Option<f64>,
    rate: f64,
    offset: f64,
    changepoints: Vec<f64>,
    deltas: Vec<f64>,
    gammas: Vec<f64>,
}

impl From<TrendParams> for RawTrend {
    fn from(p: TrendParams) -> Self {
        RawTrend {
            kind: p.kind,
            capacity: p.capacity,
            rate: p.rate,
            offset: p.offset,
            changepoints: p.changepoints,
            deltas: p.deltas,
            gammas: p.gammas,
        }
    }
}

impl TryFrom<RawTrend> for TrendParams {
    type Error = Error;

    fn try_from(raw: RawTrend) -> Result<Self> {
        let rebuilt = TrendParams::new(
            raw.kind,
            raw.capacity,
            raw.rate,
            raw.offset,
            raw.changepoints,
            raw.deltas,
        )?;
        if raw.gammas.len() != rebuilt.gammas.len() {
            return Err(Error::Schema("gammas length differs from changepoints".into()));
        }
        for (j, (stored, derived)) in raw.gammas.iter().zip(&rebuilt.gammas).enumerate() {
            if (stored - derived).abs() > 1e-9 * (1.0 + derived.abs()) {
                return Err(Error::Schema(format!(
                    "gamma[{j}] = {stored} is not the continuity correction {derived}"
                )));
            }
        }
        // keep the stored bits so serialize -> parse -> serialize is stable
        Ok(TrendParams {
            gammas: raw.gammas,
            ..rebuilt
        })
    }
}

impl TrendParams {
    pub fn new(
        kind: TrendKind,
        capacity: Option<f64>,
        rate: f64,
        offset: f64,
        changepoints: Vec<f64>,
        deltas: Vec<f64>,
    ) -> Result<Self> {
        if changepoints.len() != deltas.len() {
            return Err(Error::InvalidArgument(format!(
                "{} changepoints but {} rate adjustments",
                changepoints.len(),
                deltas.len()
            )));
        }
        if changepoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "changepoints must be strictly increasing".into(),
            ));
        }
        let all = [rate, offset]
            .into_iter()
            .chain(changepoints.iter().copied())
            .chain(deltas.iter().copied())
            .chain(capacity);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("trend parameters must be finite".into()));
        }
        let capacity = match kind {
            TrendKind::Logistic => match capacity {
                Some(c) if c > 0.0 => Some(c),
                _ => {
                    return Err(Error::InvalidArgument(
                        "logistic trend requires capacity > 0".into(),
                    ))
                }
            },
            TrendKind::Linear => None,
        };
        let gammas = continuity_gammas(kind, rate, offset, &changepoints, &deltas)?;
        Ok(Self {
            kind,
            capacity,
            rate,
            offset,
            changepoints,
            deltas,
            gammas,
        })
    }

    pub fn linear(rate: f64, offset: f64, changepoints: Vec<f64>, deltas: Vec<f64>) -> Result<Self> {
        Self::new(TrendKind::Linear, None, rate, offset, changepoints, deltas)
    }

    pub fn logistic(
        capacity: f64,
        rate: f64,
        offset: f64,
        changepoints: Vec<f64>,
        deltas: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            TrendKind::Logistic,
            Some(capacity),
            rate,
            offset,
            changepoints,
            deltas,
        )
    }

    pub fn kind(&self) -> TrendKind {
        self.kind
    }

    pub fn capacity(&self) -> Option<f64> {
        self.capacity
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn changepoints(&self) -> &[f64] {
        &self.changepoints
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// Copy with extra changepoints appended after the existing ones.
    pub fn with_appended(&self, changepoints: &[f64], deltas: &[f64]) -> Result<Self> {
        let mut s = self.changepoints.clone();
        s.extend_from_slice(changepoints);
        let mut d = self.deltas.clone();
        d.extend_from_slice(deltas);
        Self::new(self.kind, self.capacity, self.rate, self.offset, s, d)
    }

    /// Rate and offset of segment `segment` (0 = before the first changepoint).
    pub fn segment(&self, segment: usize) -> (f64, f64) {
        let mut rate = self.rate;
        let mut offset = self.offset;
        for j in 0..segment.min(self.changepoints.len()) {
            rate += self.deltas[j];
            offset += self.gammas[j];
        }
        (rate, offset)
    }

    /// Number of changepoints at or before `t`.
    pub fn active_segment(&self, t: f64) -> usize {
        self.changepoints.partition_point(|&s| s <= t)
    }

    /// Evaluate the closed form of a given segment at an arbitrary `t`.
    pub fn eval_segment(&self, segment: usize, t: f64) -> f64 {
        let (rate, offset) = self.segment(segment);
        match self.kind {
            TrendKind::Linear => rate * t + offset,
            TrendKind::Logistic => logistic(self.capacity.unwrap_or(1.0), rate, offset, t),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut rate = self.rate;
        let mut offset = self.offset;
        for ((&s, &d), &g) in self.changepoints.iter().zip(&self.deltas).zip(&self.gammas) {
            if t < s {
                break;
            }
            rate += d;
            offset += g;
        }
        match self.kind {
            TrendKind::Linear => rate * t + offset,
            TrendKind::Logistic => logistic(self.capacity.unwrap_or(1.0), rate, offset, t),
        }
    }
}

fn logistic(capacity: f64, rate: f64, offset: f64, t: f64) -> f64 {
    let arg = -(rate * (t - offset));
    if arg > EXP_SATURATION {
        0.0
    } else if arg < -EXP_SATURATION {
        capacity
    } else {
        capacity / (1.0 + arg.exp())
    }
}

/// Offset corrections that make the trend continuous at every changepoint.
///
/// Linear: `γ_j = -s_j δ_j`. Logistic:
/// `γ_j = (s_j - m - Σ_{l<j} γ_l) (1 - (k + Σ_{l<j} δ_l) / (k + Σ_{l<=j} δ_l))`.
pub fn continuity_gammas(
    kind: TrendKind,
    rate: f64,
    offset: f64,
    changepoints: &[f64],
    deltas: &[f64],
) -> Result<Vec<f64>> {
    if changepoints.len() != deltas.len() {
        return Err(Error::InvalidArgument(
            "changepoints and deltas differ in length".into(),
        ));
    }
    match kind {
        TrendKind::Linear => Ok(changepoints
            .iter()
            .zip(deltas)
            .map(|(s, d)| -s * d)
            .collect()),
        TrendKind::Logistic => {
            let mut gammas = Vec::with_capacity(deltas.len());
            let mut prev_rate = rate;
            let mut shifted = offset;
            for (j, (&s, &d)) in changepoints.iter().zip(deltas).enumerate() {
                let next_rate = prev_rate + d;
                if next_rate == 0.0 {
                    return Err(Error::DegenerateRate { index: j });
                }
                let g = (s - shifted) * (1.0 - prev_rate / next_rate);
                if !g.is_finite() {
                    return Err(Error::DegenerateRate { index: j });
                }
                gammas.push(g);
                shifted += g;
                prev_rate = next_rate;
            }
            Ok(gammas)
        }
    }
}

/// Logistic trend value; `p` must be of logistic kind.
pub fn eval_logistic_trend(p: &TrendParams, t: f64) -> Result<f64> {
    match p.kind {
        TrendKind::Logistic => Ok(p.eval(t)),
        TrendKind::Linear => Err(Error::InvalidArgument("expected a logistic trend".into())),
    }
}

/// Linear trend value; `p` must be of linear kind.
pub fn eval_linear_trend(p: &TrendParams, t: f64) -> Result<f64> {
    match p.kind {
        TrendKind::Linear => Ok(p.eval(t)),
        TrendKind::Logistic => Err(Error::InvalidArgument("expected a linear trend".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Scalar evaluation of 10 / (1 + exp(-(0.5 + 0.3)(6 - (2 + 0.75)))) at
    // 40 digits; 0.75 itself came from root-finding the offset that closes
    // the gap at s = 4.
    const LOGISTIC_GOLDEN_T6: f64 = 9.308_615_796_566_532;

    #[test]
    fn logistic_midpoint() {
        let p = TrendParams::logistic(1.0, 1.0, 0.0, vec![], vec![]).unwrap();
        assert_eq!(eval_logistic_trend(&p, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn zero_rate_is_constant() {
        let p = TrendParams::logistic(1.0, 0.0, 0.0, vec![], vec![]).unwrap();
        for t in [-100.0, -1.0, 0.0, 3.5, 1e6] {
            assert_eq!(p.eval(t), 0.5);
        }
    }

    #[test]
    fn logistic_golden_value() {
        let p = TrendParams::logistic(10.0, 0.5, 2.0, vec![4.0], vec![0.3]).unwrap();
        assert!((p.gammas()[0] - 0.75).abs() < 1e-15);
        let v = eval_logistic_trend(&p, 6.0).unwrap();
        assert!((v - LOGISTIC_GOLDEN_T6).abs() < 1e-12, "{v}");
    }

    #[test]
    fn linear_examples() {
        let p = TrendParams::linear(2.0, 1.0, vec![], vec![]).unwrap();
        assert_eq!(eval_linear_trend(&p, 3.0).unwrap(), 7.0);

        let p = TrendParams::linear(1.0, 0.0, vec![5.0], vec![1.0]).unwrap();
        assert_eq!(p.eval(5.0), 5.0);
        assert_eq!(p.eval_segment(0, 5.0), 5.0);
        assert_eq!(p.eval(7.0), 9.0);
        // slope 1 up to 5 then slope 2: 5 + 2 * 2
        assert_eq!(5.0 + 2.0 * (7.0 - 5.0), 9.0);
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let lin = TrendParams::linear(1.0, 0.0, vec![], vec![]).unwrap();
        assert!(eval_logistic_trend(&lin, 0.0).is_err());
        let log = TrendParams::logistic(1.0, 1.0, 0.0, vec![], vec![]).unwrap();
        assert!(eval_linear_trend(&log, 0.0).is_err());
    }

    #[test]
    fn gamma_definitions() {
        let g = continuity_gammas(TrendKind::Linear, 1.0, 0.0, &[5.0], &[1.0]).unwrap();
        assert_eq!(g, vec![-5.0]);
        for kind in [TrendKind::Linear, TrendKind::Logistic] {
            let g = continuity_gammas(kind, 0.7, 1.3, &[2.0, 3.0, 9.0], &[0.0; 3]).unwrap();
            assert!(g.iter().all(|&v| v == 0.0));
        }
    }

    /// Offset shift restoring continuity, found by bisection on the gap
    /// between the left segment and the candidate right segment.
    fn bisect_offset_shift(c: f64, left: (f64, f64), right_rate: f64, s: f64) -> f64 {
        let f = |t: f64, r: f64, m: f64| c / (1.0 + (-(r * (t - m))).exp());
        let target = f(s, left.0, left.1);
        let gap = |g: f64| f(s, right_rate, left.1 + g) - target;
        let (mut lo, mut hi) = (-100.0, 100.0);
        assert!(gap(lo) * gap(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(lo) * gap(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn logistic_gammas_match_numeric_continuity() {
        let s = [4.0, 8.0];
        let d = [0.3, -0.2];
        let g = continuity_gammas(TrendKind::Logistic, 0.5, 2.0, &s, &d).unwrap();
        // frozen from a 40-digit root-find: [0.75, -1.75]
        assert!((g[0] - 0.75).abs() < 1e-12);
        assert!((g[1] + 1.75).abs() < 1e-12);

        let mut left = (0.5, 2.0);
        for j in 0..2 {
            let shift = bisect_offset_shift(10.0, left, left.0 + d[j], s[j]);
            assert!((shift - g[j]).abs() < 1e-9, "j={j}: {shift} vs {}", g[j]);
            left = (left.0 + d[j], left.1 + shift);
        }
    }

    #[test]
    fn degenerate_rate_is_an_error() {
        let err = continuity_gammas(TrendKind::Logistic, 0.5, 0.0, &[1.0], &[-0.5]).unwrap_err();
        assert!(matches!(err, Error::DegenerateRate { index: 0 }));
    }

    #[test]
    fn logistic_saturates_instead_of_overflowing() {
        let p = TrendParams::logistic(3.0, 10.0, 0.0, vec![], vec![]).unwrap();
        assert_eq!(p.eval(-1000.0), 0.0);
        assert_eq!(p.eval(1000.0), 3.0);
    }

    #[test]
    fn gamma_tampering_is_rejected_on_parse() {
        let p = TrendParams::linear(1.0, 0.0, vec![5.0], vec![1.0]).unwrap();
        let mut v = serde_json::to_value(&p).unwrap();
        v["gammas"] = serde_json::json!([-4.0]);
        assert!(serde_json::from_value::<TrendParams>(v).is_err());
    }

    proptest! {
        #[test]
        fn no_changepoints_matches_plain_logistic(
            c in 0.1f64..50.0, k in -3.0f64..3.0, m in -20.0f64..20.0, t in -50.0f64..50.0
        ) {
            let p = TrendParams::logistic(c, k, m, vec![], vec![]).unwrap();
            let plain = c / (1.0 + (-k * (t - m)).exp());
            prop_assert_eq!(p.eval(t).to_bits(), plain.to_bits());
        }

        #[test]
        fn segments_meet_at_changepoints(
            k in -2.0f64..2.0,
            m in -5.0f64..5.0,
            raw in proptest::collection::vec((0.5f64..5.0, -1.0f64..1.0), 1..6),
            logistic in any::<bool>(),
        ) {
            let mut s = Vec::new();
            let mut acc = 0.0;
            for (gap, _) in &raw {
                acc += gap;
                s.push(acc);
            }
            let d: Vec<f64> = raw.iter().map(|r| r.1).collect();
            let p = if logistic {
                match TrendParams::logistic(5.0, k, m, s.clone(), d) {
                    Ok(p) => p,
                    Err(_) => return Ok(()),
                }
            } else {
                TrendParams::linear(k, m, s.clone(), d).unwrap()
            };
            for (j, &sj) in s.iter().enumerate() {
                let jump = p.eval_segment(j + 1, sj) - p.eval_segment(j, sj);
                prop_assert!(jump.abs() < 1e-9 * (1.0 + p.eval(sj).abs()), "jump {}", jump);
            }
        }
    }
}
