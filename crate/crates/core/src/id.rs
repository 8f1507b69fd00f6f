use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// An arXiv submission identifier in the `YYMM.XXXXX` scheme.
///
/// Ordering follows (year, month, serial), which coincides with the
/// lexicographic order of the rendered form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubmissionId {
    year: u8,
    month: u8,
    serial: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid submission id {0:?}")]
pub struct InvalidId(pub String);

impl SubmissionId {
    pub fn new(year: u8, month: u8, serial: u32) -> Result<Self, InvalidId> {
        if year > 99 || !(1..=12).contains(&month) || serial > 99_999 {
            return Err(InvalidId(format!("{year:02}{month:02}.{serial:05}")));
        }
        Ok(Self { year, month, serial })
    }

    pub fn year(&self) -> u8 {
        self.year
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    pub fn serial(&self) -> u32 {
        self.serial
    }

    pub fn year_month(&self) -> YearMonth {
        YearMonth {
            year: self.year,
            month: self.month,
        }
    }

    /// Parses the ID at the start of a corpus filename such as
    /// `2501.00001.gz`, returning the ID and the remaining extension
    /// (without the leading dot; empty when absent).
    pub fn split_filename(name: &str) -> Option<(Self, &str)> {
        let head = name.get(..10)?;
        let id = head.parse().ok()?;
        match &name[10..] {
            "" => Some((id, "")),
            rest => rest.strip_prefix('.').map(|ext| (id, ext)),
        }
    }
}

impl FromStr for SubmissionId {
    type Err = InvalidId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InvalidId(s.to_string());
        let b = s.as_bytes();
        if b.len() != 10 || b[4] != b'.' {
            return Err(bad());
        }
        if !b[..4].iter().chain(&b[5..]).all(u8::is_ascii_digit) {
            return Err(bad());
        }
        let year = s[0..2].parse().map_err(|_| bad())?;
        let month = s[2..4].parse().map_err(|_| bad())?;
        let serial = s[5..].parse().map_err(|_| bad())?;
        Self::new(year, month, serial).map_err(|_| bad())
    }
}

impl fmt::Display for SubmissionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}{:02}.{:05}", self.year, self.month, self.serial)
    }
}

impl Serialize for SubmissionId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SubmissionId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The `YYMM` prefix of a submission ID, used as the rollup key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: u8,
    pub month: u8,
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}{:02}", self.year, self.month)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let parsed = (s.len() == 4 && s.bytes().all(|b| b.is_ascii_digit()))
            .then(|| (s[..2].parse::<u8>(), s[2..].parse::<u8>()));
        match parsed {
            Some((Ok(year), Ok(month))) if (1..=12).contains(&month) => Ok(YearMonth { year, month }),
            _ => Err(serde::de::Error::custom(format!("invalid year-month {s:?}"))),
        }
    }
}
