//! Letter score: start at G and move up one letter per satisfied criterion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{ContractError, CriterionId, CriterionResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl Letter {
    pub const ALL: [Letter; 7] = [
        Letter::A,
        Letter::B,
        Letter::C,
        Letter::D,
        Letter::E,
        Letter::F,
        Letter::G,
    ];

    /// Position on the scale, A = 0 through G = 6.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_satisfied(count: usize) -> Option<Letter> {
        (count <= 6).then(|| Letter::ALL[6 - count])
    }

    pub fn as_char(self) -> char {
        (b'A' + self as u8) as char
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Letter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Letter::ALL
            .into_iter()
            .find(|l| l.to_string() == s.trim())
            .ok_or_else(|| format!("invalid score letter {s:?} (expected A..G)"))
    }
}

impl Serialize for Letter {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Letter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrsScore {
    pub letter: Letter,
    pub satisfied_count: u8,
}

/// Scores exactly six results, one per criterion. Needs-review is not satisfied.
pub fn compute_score(per_criterion: &[CriterionResult]) -> Result<CrsScore, ContractError> {
    if per_criterion.len() != 6 {
        return Err(ContractError(format!(
            "expected 6 criterion results, got {}",
            per_criterion.len()
        )));
    }
    let mut seen = [false; 6];
    for r in per_criterion {
        let slot = &mut seen[r.criterion.index()];
        if *slot {
            return Err(ContractError(format!("duplicate result for {}", r.criterion)));
        }
        *slot = true;
    }
    if let Some(missing) = CriterionId::ALL.iter().find(|c| !seen[c.index()]) {
        return Err(ContractError(format!("missing result for {missing}")));
    }
    let satisfied = per_criterion.iter().filter(|r| r.is_satisfied()).count();
    Ok(CrsScore {
        letter: Letter::from_satisfied(satisfied).expect("at most six results"),
        satisfied_count: satisfied as u8,
    })
}
