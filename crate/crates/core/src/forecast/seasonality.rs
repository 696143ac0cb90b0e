//! Truncated Fourier series for periodic components.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `s(t) = Σ_{n=1..N} a_n cos(2πnt/P) + b_n sin(2πnt/P)`.
///
/// `coeffs` is interleaved `[a_1, b_1, a_2, b_2, ...]`. The equivalent complex
/// coefficients are `c_n = (a_n - i b_n) / 2` with `c_{-n} = conj(c_n)`, so the
/// two-sided sum `Σ_{n=-N..N, n≠0} c_n exp(i 2πnt/P)` is real and equals `s(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeasonality", into = "RawSeasonality")]
pub struct SeasonalityParams {
    period: f64,
    order: usize,
    coeffs: Vec<f64>,
    prior_scale: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSeasonality {
    period: f64,
    order: usize,
    coeffs: Vec<f64>,
    prior_scale: f64,
}

impl TryFrom<RawSeasonality> for SeasonalityParams {
    type Error = Error;
    fn try_from(r: RawSeasonality) -> Result<Self> {
        SeasonalityParams::new(r.period, r.order, r.coeffs, r.prior_scale)
    }
}

impl From<SeasonalityParams> for RawSeasonality {
    fn from(s: SeasonalityParams) -> Self {
        RawSeasonality {
            period: s.period,
            order: s.order,
            coeffs: s.coeffs,
            prior_scale: s.prior_scale,
        }
    }
}

impl SeasonalityParams {
    pub fn new(period: f64, order: usize, coeffs: Vec<f64>, prior_scale: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidArgument(format!("period must be > 0, got {period}")));
        }
        if order == 0 {
            return Err(Error::InvalidArgument("seasonality order must be >= 1".into()));
        }
        if coeffs.len() != 2 * order {
            return Err(Error::InvalidArgument(format!(
                "order {order} needs {} coefficients, got {}",
                2 * order,
                coeffs.len()
            )));
        }
        if !(prior_scale.is_finite() && prior_scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "prior scale must be > 0, got {prior_scale}"
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Fourier coefficient".into()));
        }
        Ok(Self {
            period,
            order,
            coeffs,
            prior_scale,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn prior_scale(&self) -> f64 {
        self.prior_scale
    }

    /// `(a_n, b_n)` for `n = 1..=N`.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.coeffs.chunks_exact(2).map(|c| (c[0], c[1]))
    }

    /// `c_n = (a_n - i b_n) / 2` as `(re, im)` for `n = 1..=N`.
    pub fn complex_coefficients(&self) -> Vec<(f64, f64)> {
        self.pairs().map(|(a, b)| (0.5 * a, -0.5 * b)).collect()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (n, (a, b)) in self.pairs().enumerate() {
            let x = TAU * (n + 1) as f64 * t / self.period;
            acc += a * x.cos() + b * x.sin();
        }
        acc
    }

    /// Real part of the two-sided complex sum.
    pub fn eval_complex(&self, t: f64) -> f64 {
        let mut re = 0.0;
        for (n, (cr, ci)) in self.complex_coefficients().into_iter().enumerate() {
            let x = TAU * (n + 1) as f64 * t / self.period;
            let (s, c) = x.sin_cos();
            // c_n e^{ix} + conj(c_n) e^{-ix} = 2 Re(c_n e^{ix})
            re += 2.0 * (cr * c - ci * s);
        }
        re
    }
}

/// Fourier design row `[cos(2πt/P), sin(2πt/P), ..., cos(2πNt/P), sin(2πNt/P)]`.
pub fn fourier_features(period: f64, order: usize, t: f64, out: &mut Vec<f64>) {
    for n in 1..=order {
        let x = TAU * n as f64 * t / period;
        out.push(x.cos());
        out.push(x.sin());
    }
}

/// Seasonal value from any `(period, order, coeffs)` description.
pub fn eval_seasonality(sp: &SeasonalityParams, t: f64) -> f64 {
    sp.eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Term-by-term at 40 digits:
    // 0.5 cos(2π13/50) + 1.2 sin(2π13/50) - 0.3 cos(4π13/50) + 0.7 sin(4π13/50)
    const SEASONAL_GOLDEN: f64 = 1.376_137_961_248_599_6;

    #[test]
    fn zero_coefficients_vanish() {
        let sp = SeasonalityParams::new(7.0, 3, vec![0.0; 6], 10.0).unwrap();
        for t in [0.0, 1.3, 100.0, -4.0] {
            assert_eq!(sp.eval(t), 0.0);
        }
    }

    #[test]
    fn cosine_at_origin() {
        let sp = SeasonalityParams::new(10.0, 1, vec![1.0, 0.0], 10.0).unwrap();
        assert_eq!(eval_seasonality(&sp, 0.0), 1.0);
    }

    #[test]
    fn two_harmonic_golden_value() {
        let sp = SeasonalityParams::new(50.0, 2, vec![0.5, 1.2, -0.3, 0.7], 10.0).unwrap();
        assert!((sp.eval(13.0) - SEASONAL_GOLDEN).abs() < 1e-13);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(SeasonalityParams::new(0.0, 1, vec![0.0; 2], 1.0).is_err());
        assert!(SeasonalityParams::new(5.0, 0, vec![], 1.0).is_err());
        assert!(SeasonalityParams::new(5.0, 2, vec![0.0; 3], 1.0).is_err());
        assert!(SeasonalityParams::new(5.0, 1, vec![0.0; 2], 0.0).is_err());
    }

    #[test]
    fn features_match_eval() {
        let sp = SeasonalityParams::new(12.5, 3, vec![0.2, -1.0, 0.4, 0.1, -0.7, 0.3], 1.0).unwrap();
        let mut row = Vec::new();
        fourier_features(12.5, 3, 4.2, &mut row);
        let dot: f64 = row.iter().zip(sp.coeffs()).map(|(x, c)| x * c).sum();
        assert!((dot - sp.eval(4.2)).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn complex_form_agrees(
            coeffs in proptest::collection::vec(-5.0f64..5.0, 2..=12),
            period in 1.0f64..200.0,
            t in -500.0f64..500.0,
        ) {
            let order = coeffs.len() / 2;
            let sp = SeasonalityParams::new(period, order, coeffs[..2 * order].to_vec(), 1.0).unwrap();
            prop_assert!((sp.eval(t) - sp.eval_complex(t)).abs() < 1e-12);
        }
    }
}
