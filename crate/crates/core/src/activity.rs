use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The six periodic reference activities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Walking,
    Running,
    StandingUp,
    SittingDown,
    LyingDown,
    Jumping,
}

impl Activity {
    pub const ALL: [Activity; 6] = [
        Activity::Walking,
        Activity::Running,
        Activity::StandingUp,
        Activity::SittingDown,
        Activity::LyingDown,
        Activity::Jumping,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::Walking => "walking",
            Activity::Running => "running",
            Activity::StandingUp => "standing_up",
            Activity::SittingDown => "sitting_down",
            Activity::LyingDown => "lying_down",
            Activity::Jumping => "jumping",
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Activity::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown activity label {s:?}")))
    }
}
