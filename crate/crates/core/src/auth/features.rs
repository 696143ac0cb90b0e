use serde::{Deserialize, Serialize};

use crate::activity::Activity;
use crate::error::{Error, Result};
use crate::forecast::estimate_period;
use crate::series::TimeSeries;

pub const FEATURES_PER_AXIS: usize = 7;
pub const FEATURE_COUNT: usize = 3 * FEATURES_PER_AXIS;
pub const MIN_WINDOW: usize = 4;

/// Index of each per-axis feature inside its block of [`FEATURES_PER_AXIS`].
pub mod idx {
    pub const MEAN: usize = 0;
    pub const STD: usize = 1;
    pub const MIN: usize = 2;
    pub const MAX: usize = 3;
    pub const PERIOD: usize = 4;
    pub const PEAK_TO_PEAK: usize = 5;
    pub const SLOPE: usize = 6;
}

/// Three aligned accelerometer axes, optionally labelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWindow", into = "RawWindow")]
pub struct ActivityWindow {
    label: Option<Activity>,
    axes: [TimeSeries; 3],
}

#[derive(Serialize, Deserialize)]
struct RawWindow {
    label: Option<Activity>,
    x: TimeSeries,
    y: TimeSeries,
    z: TimeSeries,
}

impl TryFrom<RawWindow> for ActivityWindow {
    type Error = Error;
    fn try_from(r: RawWindow) -> Result<Self> {
        ActivityWindow::new(r.label, r.x, r.y, r.z)
    }
}

impl From<ActivityWindow> for RawWindow {
    fn from(w: ActivityWindow) -> Self {
        let [x, y, z] = w.axes;
        RawWindow {
            label: w.label,
            x,
            y,
            z,
        }
    }
}

impl ActivityWindow {
    pub fn new(label: Option<Activity>, x: TimeSeries, y: TimeSeries, z: TimeSeries) -> Result<Self> {
        if x.t() != y.t() || x.t() != z.t() {
            return Err(Error::LengthMismatch("window axes are not aligned".into()));
        }
        Ok(ActivityWindow {
            label,
            axes: [x, y, z],
        })
    }

    pub fn from_axes(label: Option<Activity>, axes: [TimeSeries; 3]) -> Result<Self> {
        let [x, y, z] = axes;
        Self::new(label, x, y, z)
    }

    pub fn label(&self) -> Option<Activity> {
        self.label
    }

    pub fn with_label(mut self, label: Option<Activity>) -> Self {
        self.label = label;
        self
    }

    pub fn axes(&self) -> &[TimeSeries; 3] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &TimeSeries {
        &self.axes[i]
    }

    pub fn t(&self) -> &[f64] {
        self.axes[0].t()
    }

    pub fn len(&self) -> usize {
        self.axes[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes[0].is_empty()
    }

    /// Time covered by the window, counting each sample as one step.
    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.axes[0].median_step()
    }

    /// Contiguous sub-window `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> ActivityWindow {
        ActivityWindow {
            label: self.label,
            axes: [
                self.axes[0].slice(start, end),
                self.axes[1].slice(start, end),
                self.axes[2].slice(start, end),
            ],
        }
    }
}

/// Mean, std, min, max, dominant period, peak-to-peak and mean |slope| of
/// each axis, concatenated x, y, z.
pub fn extract_features(w: &ActivityWindow) -> Result<Vec<f64>> {
    if w.len() < MIN_WINDOW {
        return Err(Error::TooShort {
            len: w.len(),
            min: MIN_WINDOW,
        });
    }
    let mut out = Vec::with_capacity(FEATURE_COUNT);
    for ts in w.axes() {
        axis_features(ts, &mut out)?;
    }
    Ok(out)
}

fn axis_features(ts: &TimeSeries, out: &mut Vec<f64>) -> Result<()> {
    let y = ts.y();
    let t = ts.t();
    let n = y.len() as f64;
    // shifted by the first sample so a constant axis has exactly zero spread
    let y0 = y[0];
    let shift = y.iter().map(|v| v - y0).sum::<f64>() / n;
    let mean = y0 + shift;
    let std = (y.iter().map(|v| (v - y0 - shift).powi(2)).sum::<f64>() / n).sqrt();
    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let step = ts.median_step();
    let period = estimate_period(ts, 2.0 * step, n * step / 2.0)?.period;
    let slope = y
        .windows(2)
        .zip(t.windows(2))
        .map(|(v, s)| ((v[1] - v[0]) / (s[1] - s[0])).abs())
        .sum::<f64>()
        / (n - 1.0);
    out.extend_from_slice(&[mean, std, min, max, period, max - min, slope]);
    Ok(())
}
