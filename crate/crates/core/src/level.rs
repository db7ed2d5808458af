use std::fmt;

use serde::{Deserialize, Serialize};

/// Integer difficulty level on the closed scale `1..=10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct Level(u8);

impl Level {
    pub const MIN: Level = Level(1);
    pub const MAX: Level = Level(10);

    pub fn new(value: i64) -> Option<Level> {
        (1..=10).contains(&value).then_some(Level(value as u8))
    }

    /// Clamp an arbitrary integer onto the level scale.
    pub fn clamped(value: i64) -> Level {
        Level(value.clamp(1, 10) as u8)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn offset(self, delta: i64) -> Level {
        Level::clamped(self.0 as i64 + delta)
    }

    pub fn all() -> impl DoubleEndedIterator<Item = Level> {
        (1..=10u8).map(Level)
    }
}

impl TryFrom<i64> for Level {
    type Error = String;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Level::new(value).ok_or_else(|| format!("level {value} outside 1..=10"))
    }
}

impl From<Level> for u8 {
    fn from(level: Level) -> u8 {
        level.0
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
