//! Retention periods and the seven time-bar segments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::TaxonomyError;

const SECOND_MS: u64 = 1_000;
const MINUTE_MS: u64 = 60 * SECOND_MS;
const HOUR_MS: u64 = 60 * MINUTE_MS;
const DAY_MS: u64 = 24 * HOUR_MS;

// Calendar units have no fixed length; these are the lengths the bucket
// table is defined against.
const WEEK_MS: u64 = 7 * DAY_MS;
const MONTH_MS: u64 = 30 * DAY_MS;
const YEAR_MS: u64 = 365 * DAY_MS;

/// A segment of the time-bar. Ordered from shortest to longest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetentionBucket {
    SessionOnly,
    UpToDay,
    UpToWeek,
    UpToMonth,
    UpToYear,
    Longer,
    Indefinite,
}

impl RetentionBucket {
    pub const ALL: &'static [RetentionBucket] = &[
        RetentionBucket::SessionOnly,
        RetentionBucket::UpToDay,
        RetentionBucket::UpToWeek,
        RetentionBucket::UpToMonth,
        RetentionBucket::UpToYear,
        RetentionBucket::Longer,
        RetentionBucket::Indefinite,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            RetentionBucket::SessionOnly => "session_only",
            RetentionBucket::UpToDay => "up_to_day",
            RetentionBucket::UpToWeek => "up_to_week",
            RetentionBucket::UpToMonth => "up_to_month",
            RetentionBucket::UpToYear => "up_to_year",
            RetentionBucket::Longer => "longer",
            RetentionBucket::Indefinite => "indefinite",
        }
    }
}

impl fmt::Display for RetentionBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How long a device keeps collected data, at millisecond resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Retention {
    Finite { millis: u64 },
    Indefinite,
}

impl Retention {
    pub const fn from_millis(millis: u64) -> Self {
        Retention::Finite { millis }
    }

    pub fn from_signed_millis(millis: i64) -> Result<Self, TaxonomyError> {
        u64::try_from(millis)
            .map(Retention::from_millis)
            .map_err(|_| TaxonomyError::NegativeDuration)
    }

    pub const fn from_hours(hours: u64) -> Self {
        Retention::Finite {
            millis: hours * HOUR_MS,
        }
    }

    /// Parses an ISO-8601 duration (`P1D`, `PT36H`, `P1Y2M`, `PT0.5S`) or the
    /// literal `indefinite`. Years count as 365 days, months as 30 days.
    pub fn parse(text: &str) -> Result<Self, TaxonomyError> {
        if text == "indefinite" {
            return Ok(Retention::Indefinite);
        }
        parse_iso_duration(text).map(Retention::from_millis)
    }

    pub fn bucket(self) -> RetentionBucket {
        bucket_retention(self)
    }
}

/// Maps a retention period to its time-bar segment. Each upper bound is
/// inclusive: exactly 24h is still [`RetentionBucket::UpToDay`].
pub fn bucket_retention(retention: Retention) -> RetentionBucket {
    let millis = match retention {
        Retention::Indefinite => return RetentionBucket::Indefinite,
        Retention::Finite { millis } => millis,
    };
    match millis {
        0 => RetentionBucket::SessionOnly,
        m if m <= DAY_MS => RetentionBucket::UpToDay,
        m if m <= WEEK_MS => RetentionBucket::UpToWeek,
        m if m <= MONTH_MS => RetentionBucket::UpToMonth,
        m if m <= YEAR_MS => RetentionBucket::UpToYear,
        _ => RetentionBucket::Longer,
    }
}

/// Canonical rendering: days plus a time part, e.g. `P1DT2H0.5S`; zero is `PT0S`.
impl fmt::Display for Retention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let millis = match *self {
            Retention::Indefinite => return f.write_str("indefinite"),
            Retention::Finite { millis } => millis,
        };
        if millis == 0 {
            return f.write_str("PT0S");
        }
        let days = millis / DAY_MS;
        let hours = millis % DAY_MS / HOUR_MS;
        let minutes = millis % HOUR_MS / MINUTE_MS;
        let seconds = millis % MINUTE_MS / SECOND_MS;
        let frac = millis % SECOND_MS;

        f.write_str("P")?;
        if days > 0 {
            write!(f, "{days}D")?;
        }
        if hours + minutes + seconds + frac > 0 {
            f.write_str("T")?;
            if hours > 0 {
                write!(f, "{hours}H")?;
            }
            if minutes > 0 {
                write!(f, "{minutes}M")?;
            }
            if frac > 0 {
                let digits = format!("{frac:03}");
                write!(f, "{seconds}.{}S", digits.trim_end_matches('0'))?;
            } else if seconds > 0 {
                write!(f, "{seconds}S")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Retention {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Retention::parse(s)
    }
}

impl Serialize for Retention {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Retention {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Retention::parse(&s).map_err(serde::de::Error::custom)
    }
}

fn parse_iso_duration(text: &str) -> Result<u64, TaxonomyError> {
    let invalid = || TaxonomyError::InvalidDuration(text.to_owned());
    if text.starts_with('-') {
        return Err(TaxonomyError::NegativeDuration);
    }
    let body = text.strip_prefix('P').ok_or_else(invalid)?;
    let (date_part, time_part) = match body.split_once('T') {
        Some((_, "")) => return Err(invalid()),
        Some((d, t)) => (d, Some(t)),
        None => (body, None),
    };
    if date_part.is_empty() && time_part.is_none() {
        return Err(invalid());
    }

    let mut total: u64 = 0;
    let mut add = |value: u64, unit: u64| -> Result<(), TaxonomyError> {
        total = value
            .checked_mul(unit)
            .and_then(|v| total.checked_add(v))
            .ok_or_else(invalid)?;
        Ok(())
    };

    // designators must appear in this order, each at most once
    let mut order = ['Y', 'M', 'W', 'D'].iter();
    for (number, designator) in components(date_part).ok_or_else(invalid)? {
        if !order.any(|d| *d == designator) {
            return Err(invalid());
        }
        let unit = match designator {
            'Y' => YEAR_MS,
            'M' => MONTH_MS,
            'W' => WEEK_MS,
            _ => DAY_MS,
        };
        add(parse_integer(number).ok_or_else(invalid)?, unit)?;
    }

    if let Some(time_part) = time_part {
        let mut order = ['H', 'M', 'S'].iter();
        for (number, designator) in components(time_part).ok_or_else(invalid)? {
            if !order.any(|d| *d == designator) {
                return Err(invalid());
            }
            match designator {
                'H' => add(parse_integer(number).ok_or_else(invalid)?, HOUR_MS)?,
                'M' => add(parse_integer(number).ok_or_else(invalid)?, MINUTE_MS)?,
                _ => add(parse_seconds_as_millis(number).ok_or_else(invalid)?, 1)?,
            }
        }
    }
    Ok(total)
}

/// Splits `1Y2M` into `[("1", 'Y'), ("2", 'M')]`.
fn components(part: &str) -> Option<Vec<(&str, char)>> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in part.char_indices() {
        if c.is_ascii_alphabetic() {
            if i == start {
                return None;
            }
            out.push((&part[start..i], c));
            start = i + 1;
        }
    }
    (start == part.len()).then_some(out)
}

fn parse_integer(digits: &str) -> Option<u64> {
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn parse_seconds_as_millis(number: &str) -> Option<u64> {
    let (whole, frac) = match number.split_once(['.', ',']) {
        Some((w, f)) => (w, f),
        None => (number, ""),
    };
    let whole = parse_integer(whole)?;
    if frac.len() > 3 || (!frac.is_empty() && parse_integer(frac).is_none()) {
        return None;
    }
    let frac_millis = if frac.is_empty() {
        0
    } else {
        format!("{frac:0<3}").parse::<u64>().ok()?
    };
    whole.checked_mul(SECOND_MS)?.checked_add(frac_millis)
}
