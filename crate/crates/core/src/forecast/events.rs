//! Indicator-window event effects (`h(t) = Σ κ_i 1[start_i <= t <= end_i]`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventWindow {
    pub start: f64,
    pub end: f64,
    pub effect: f64,
}

impl EventWindow {
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

/// Sorted, non-overlapping event windows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEvents", into = "RawEvents")]
pub struct EventTerm {
    windows: Vec<EventWindow>,
}

#[derive(Serialize, Deserialize)]
struct RawEvents {
    windows: Vec<EventWindow>,
}

impl TryFrom<RawEvents> for EventTerm {
    type Error = Error;
    fn try_from(r: RawEvents) -> Result<Self> {
        EventTerm::new(r.windows)
    }
}

impl From<EventTerm> for RawEvents {
    fn from(e: EventTerm) -> Self {
        RawEvents { windows: e.windows }
    }
}

impl EventTerm {
    pub fn new(mut windows: Vec<EventWindow>) -> Result<Self> {
        for w in &windows {
            if !(w.start.is_finite() && w.end.is_finite() && w.effect.is_finite()) {
                return Err(Error::InvalidArgument("non-finite event window".into()));
            }
            if w.start > w.end {
                return Err(Error::InvalidArgument(format!(
                    "event window starts at {} after it ends at {}",
                    w.start, w.end
                )));
            }
        }
        windows.sort_by(|a, b| a.start.total_cmp(&b.start));
        if windows.windows(2).any(|p| p[1].start <= p[0].end) {
            return Err(Error::InvalidArgument("event windows overlap".into()));
        }
        Ok(Self { windows })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn windows(&self) -> &[EventWindow] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.windows
            .iter()
            .filter(|w| w.contains(t))
            .map(|w| w.effect)
            .sum()
    }
}

pub fn eval_events(e: &EventTerm, t: f64) -> f64 {
    e.eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(start: f64, end: f64, effect: f64) -> EventWindow {
        EventWindow { start, end, effect }
    }

    #[test]
    fn indicator_examples() {
        assert_eq!(eval_events(&EventTerm::empty(), 3.0), 0.0);
        let one = EventTerm::new(vec![w(10.0, 20.0, 3.0)]).unwrap();
        assert_eq!(one.eval(15.0), 3.0);
        let two = EventTerm::new(vec![w(0.0, 5.0, 1.0), w(10.0, 20.0, 3.0)]).unwrap();
        assert_eq!(two.eval(7.0), 0.0);
        assert_eq!(two.eval(5.0), 1.0);
    }

    #[test]
    fn overlapping_or_inverted_windows_are_rejected() {
        assert!(EventTerm::new(vec![w(0.0, 5.0, 1.0), w(5.0, 6.0, 1.0)]).is_err());
        assert!(EventTerm::new(vec![w(3.0, 2.0, 1.0)]).is_err());
    }
}
