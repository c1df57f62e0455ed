//! Retention periods: an ISO-8601 duration or an explicit expiry date.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Months, NaiveDate, TimeDelta, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed retention period {input:?}: {reason}")]
pub struct RetentionParseError {
    pub input: String,
    pub reason: &'static str,
}

/// An ISO-8601 duration with integer components (`P5Y`, `P1Y6M`, `P2W`, `PT12H`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct IsoDuration {
    pub years: u32,
    pub months: u32,
    pub weeks: u32,
    pub days: u32,
    pub hours: u32,
    pub minutes: u32,
    pub seconds: u32,
}

impl IsoDuration {
    /// Adds this duration to `start`; `None` on calendar overflow.
    pub fn add_to(&self, start: DateTime<Utc>) -> Option<DateTime<Utc>> {
        let months = self.years.checked_mul(12)?.checked_add(self.months)?;
        let t = start.checked_add_months(Months::new(months))?;
        let secs = i64::from(self.weeks) * 7 * 86_400
            + i64::from(self.days) * 86_400
            + i64::from(self.hours) * 3_600
            + i64::from(self.minutes) * 60
            + i64::from(self.seconds);
        t.checked_add_signed(TimeDelta::try_seconds(secs)?)
    }
}

impl fmt::Display for IsoDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("P")?;
        let date = [
            (self.years, 'Y'),
            (self.months, 'M'),
            (self.weeks, 'W'),
            (self.days, 'D'),
        ];
        let time = [(self.hours, 'H'), (self.minutes, 'M'), (self.seconds, 'S')];
        let mut wrote = false;
        for (v, unit) in date {
            if v > 0 {
                write!(f, "{v}{unit}")?;
                wrote = true;
            }
        }
        if time.iter().any(|(v, _)| *v > 0) {
            f.write_str("T")?;
            for (v, unit) in time {
                if v > 0 {
                    write!(f, "{v}{unit}")?;
                }
            }
            wrote = true;
        }
        if !wrote {
            f.write_str("0D")?;
        }
        Ok(())
    }
}

impl FromStr for IsoDuration {
    type Err = RetentionParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| RetentionParseError {
            input: s.to_string(),
            reason,
        };
        let body = s.strip_prefix('P').ok_or_else(|| err("duration must start with 'P'"))?;
        if body.is_empty() {
            return Err(err("empty duration"));
        }
        let (date_part, time_part) = match body.split_once('T') {
            Some((_, "")) => return Err(err("'T' without time components")),
            Some((d, t)) => (d, Some(t)),
            None => (body, None),
        };
        let mut out = IsoDuration::default();
        parse_components(date_part, &['Y', 'M', 'W', 'D'], |unit, v| match unit {
            'Y' => out.years = v,
            'M' => out.months = v,
            'W' => out.weeks = v,
            _ => out.days = v,
        })
        .map_err(err)?;
        if let Some(t) = time_part {
            parse_components(t, &['H', 'M', 'S'], |unit, v| match unit {
                'H' => out.hours = v,
                'M' => out.minutes = v,
                _ => out.seconds = v,
            })
            .map_err(err)?;
        }
        Ok(out)
    }
}

/// Parses `<digits><unit>` runs whose units appear in `order`, each at most once, in order.
fn parse_components(text: &str, order: &[char], mut set: impl FnMut(char, u32)) -> Result<(), &'static str> {
    let mut next_allowed = 0;
    let mut digits = String::new();
    for c in text.chars() {
        if c.is_ascii_digit() {
            digits.push(c);
            continue;
        }
        let pos = order[next_allowed..]
            .iter()
            .position(|u| *u == c)
            .ok_or("unexpected or out-of-order designator")?;
        if digits.is_empty() {
            return Err("designator without a number");
        }
        let value = digits.parse::<u32>().map_err(|_| "component out of range")?;
        set(c, value);
        digits.clear();
        next_allowed += pos + 1;
    }
    if !digits.is_empty() {
        return Err("trailing number without designator");
    }
    Ok(())
}

/// How long a dataset may retain an asset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RetentionPeriod {
    Duration(IsoDuration),
    Until(NaiveDate),
}

impl RetentionPeriod {
    /// Instant at which retention ends, relative to when the entry was added.
    pub fn expires_at(&self, added_at: DateTime<Utc>) -> Option<DateTime<Utc>> {
        match self {
            RetentionPeriod::Duration(d) => d.add_to(added_at),
            RetentionPeriod::Until(date) => date.and_hms_opt(0, 0, 0).map(|t| t.and_utc()),
        }
    }
}

impl fmt::Display for RetentionPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RetentionPeriod::Duration(d) => d.fmt(f),
            RetentionPeriod::Until(date) => write!(f, "{:04}-{:02}-{:02}", date.year(), date.month(), date.day()),
        }
    }
}

impl FromStr for RetentionPeriod {
    type Err = RetentionParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.starts_with('P') {
            return s.parse().map(RetentionPeriod::Duration);
        }
        if let Ok(date) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            if s.len() == 10 {
                return Ok(RetentionPeriod::Until(date));
            }
        }
        if let Ok(t) = DateTime::parse_from_rfc3339(s) {
            return Ok(RetentionPeriod::Until(t.with_timezone(&Utc).date_naive()));
        }
        Err(RetentionParseError {
            input: s.to_string(),
            reason: "expected an ISO-8601 duration or an RFC 3339 date",
        })
    }
}

impl Serialize for RetentionPeriod {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RetentionPeriod {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
