//! Ordered `(t, y)` samples for a single signal axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A univariate series with strictly increasing times and finite values.
///
/// Gaps in `t` are allowed. Missing samples are expressed by omission; use
/// [`TimeSeries::from_masked`] to drop `NaN` markers from raw input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries", into = "RawSeries")]
pub struct TimeSeries {
    t: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSeries {
    t: Vec<f64>,
    y: Vec<f64>,
}

impl TryFrom<RawSeries> for TimeSeries {
    type Error = Error;
    fn try_from(raw: RawSeries) -> Result<Self> {
        TimeSeries::new(raw.t, raw.y)
    }
}

impl From<TimeSeries> for RawSeries {
    fn from(ts: TimeSeries) -> Self {
        RawSeries { t: ts.t, y: ts.y }
    }
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if t.len() != y.len() {
            return Err(Error::InvalidSeries(format!(
                "{} times but {} values",
                t.len(),
                y.len()
            )));
        }
        if let Some(i) = t.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite time at index {i}")));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite value at index {i}")));
        }
        if let Some(i) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSeries(format!(
                "times not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self { t, y })
    }

    /// Series sampled at `0, 1, 2, ...`.
    pub fn from_values(y: Vec<f64>) -> Result<Self> {
        let t = (0..y.len()).map(|i| i as f64).collect();
        Self::new(t, y)
    }

    /// Build a series from raw values where `NaN` marks a missing sample.
    pub fn from_masked(t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if t.len() != y.len() {
            return Err(Error::InvalidSeries(format!(
                "{} times but {} values",
                t.len(),
                y.len()
            )));
        }
        let (t, y) = t.into_iter().zip(y).filter(|(_, v)| !v.is_nan()).unzip();
        Self::new(t, y)
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.y.iter().copied())
    }

    /// `(t_min, t_max)`, or `None` for an empty series.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((*self.t.first()?, *self.t.last()?))
    }

    /// Median spacing between consecutive samples (1.0 for fewer than two samples).
    pub fn median_step(&self) -> f64 {
        if self.t.len() < 2 {
            return 1.0;
        }
        let mut d: Vec<f64> = self.t.windows(2).map(|w| w[1] - w[0]).collect();
        d.sort_by(f64::total_cmp);
        let n = d.len();
        if n % 2 == 1 {
            d[n / 2]
        } else {
            0.5 * (d[n / 2 - 1] + d[n / 2])
        }
    }

    /// Contiguous index slice `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> TimeSeries {
        TimeSeries {
            t: self.t[start..end].to_vec(),
            y: self.y[start..end].to_vec(),
        }
    }

    /// Keep samples whose index satisfies `keep`.
    pub fn filter_index(&self, mut keep: impl FnMut(usize) -> bool) -> TimeSeries {
        let (t, y) = self
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, p)| p)
            .unzip();
        TimeSeries { t, y }
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<TimeSeries> {
        TimeSeries::new(self.t.clone(), self.y.iter().map(|&v| f(v)).collect())
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.t, self.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_increasing_times() {
        assert!(TimeSeries::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(TimeSeries::new(vec![0.0, 2.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn rejects_non_finite_values() {
        assert!(TimeSeries::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(TimeSeries::new(vec![0.0, 1.0], vec![f64::INFINITY, 1.0]).is_err());
    }

    #[test]
    fn masked_values_are_dropped() {
        let ts = TimeSeries::from_masked(vec![0.0, 1.0, 2.0], vec![1.0, f64::NAN, 3.0]).unwrap();
        assert_eq!(ts.t(), &[0.0, 2.0]);
        assert_eq!(ts.y(), &[1.0, 3.0]);
    }

    #[test]
    fn median_step_ignores_gaps() {
        let ts = TimeSeries::new(vec![0.0, 1.0, 2.0, 10.0, 11.0], vec![0.0; 5]).unwrap();
        assert_eq!(ts.median_step(), 1.0);
    }

    #[test]
    fn deserialization_validates() {
        let bad = r#"{"t":[0.0,0.0],"y":[1.0,2.0]}"#;
        assert!(serde_json::from_str::<TimeSeries>(bad).is_err());
    }
}
