//! License and use vocabulary, dataset policies, and the compatibility rule list.
//!
//! Rules are evaluated in priority order and the first one that fires decides
//! the verdict. Every verdict cites its rule number.
//!
//! 1. Consent denied while the dataset intends AI training: incompatible.
//! 2. A consulted field is unspecified: inconclusive. Consent counts as
//!    consulted only when the policy requires explicit consent. A custom
//!    license is uninterpretable unless the declared allowed uses cover every
//!    intended use.
//! 3. All rights reserved: incompatible unless the declared allowed uses
//!    cover every intended use.
//! 4. Non-commercial license with commercial intended use: incompatible.
//! 5. No-derivatives license while the dataset performs derivatives: incompatible.
//! 6. Share-alike license while the dataset redistributes under any other
//!    license: incompatible.
//! 7. Declared allowed uses, when present, must cover every intended use;
//!    otherwise compatible.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::provenance::Consent;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LicenseId {
    Cc0,
    CcBy4,
    CcBySa4,
    CcByNc4,
    CcByNd4,
    AllRightsReserved,
    /// Any other identifier; never empty and never one of the names above.
    Custom(String),
    Unspecified,
}

impl LicenseId {
    pub const KNOWN: [LicenseId; 7] = [
        LicenseId::Cc0,
        LicenseId::CcBy4,
        LicenseId::CcBySa4,
        LicenseId::CcByNc4,
        LicenseId::CcByNd4,
        LicenseId::AllRightsReserved,
        LicenseId::Unspecified,
    ];

    pub fn as_str(&self) -> &str {
        match self {
            LicenseId::Cc0 => "CC0-1.0",
            LicenseId::CcBy4 => "CC-BY-4.0",
            LicenseId::CcBySa4 => "CC-BY-SA-4.0",
            LicenseId::CcByNc4 => "CC-BY-NC-4.0",
            LicenseId::CcByNd4 => "CC-BY-ND-4.0",
            LicenseId::AllRightsReserved => "ALL-RIGHTS-RESERVED",
            LicenseId::Custom(id) => id,
            LicenseId::Unspecified => "UNSPECIFIED",
        }
    }
}

impl fmt::Display for LicenseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("license identifier must not be empty")]
pub struct EmptyLicense;

impl FromStr for LicenseId {
    type Err = EmptyLicense;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(known) = Self::KNOWN.iter().find(|k| k.as_str() == s) {
            return Ok(known.clone());
        }
        if s.trim().is_empty() {
            return Err(EmptyLicense);
        }
        Ok(LicenseId::Custom(s.to_string()))
    }
}

impl Serialize for LicenseId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for LicenseId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Closed vocabulary of uses; unknown tags fail to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UseTag {
    AiTraining,
    Redistribution,
    Commercial,
    DerivativeWorks,
    ResearchOnly,
}

impl UseTag {
    pub const ALL: [UseTag; 5] = [
        UseTag::AiTraining,
        UseTag::Redistribution,
        UseTag::Commercial,
        UseTag::DerivativeWorks,
        UseTag::ResearchOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UseTag::AiTraining => "ai-training",
            UseTag::Redistribution => "redistribution",
            UseTag::Commercial => "commercial",
            UseTag::DerivativeWorks => "derivative-works",
            UseTag::ResearchOnly => "research-only",
        }
    }
}

impl fmt::Display for UseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The terms a dataset is built under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPolicy {
    pub dataset_license: LicenseId,
    pub intended_uses: Vec<UseTag>,
    pub requires_explicit_consent: bool,
    pub performs_derivatives: bool,
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("cannot read policy {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("policy parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid policy: {0}")]
    Invalid(&'static str),
}

impl DatasetPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.intended_uses.is_empty() {
            return Err(PolicyError::Invalid("intended_uses must not be empty"));
        }
        if self.dataset_license == LicenseId::Unspecified {
            return Err(PolicyError::Invalid("a dataset policy must declare a license"));
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, PolicyError> {
        let policy: DatasetPolicy = serde_json::from_slice(bytes)?;
        policy.validate()?;
        Ok(policy)
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let bytes = std::fs::read(path).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&bytes)
    }

    pub fn intends(&self, tag: UseTag) -> bool {
        self.intended_uses.contains(&tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompatValue {
    Compatible,
    Incompatible,
    Inconclusive,
}

/// Verdict of the rule list, with the deciding rule and a reason sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Compatibility {
    pub value: CompatValue,
    pub rule: u8,
    pub reason: String,
}

impl Compatibility {
    fn new(value: CompatValue, rule: u8, reason: impl Into<String>) -> Self {
        Self {
            value,
            rule,
            reason: format!("rule {rule}: {}", reason.into()),
        }
    }
}

/// First intended use not covered by `allowed`; `None` when all are covered.
fn uncovered_use(allowed: Option<&[UseTag]>, policy: &DatasetPolicy) -> Option<Option<UseTag>> {
    match allowed {
        None => Some(None),
        Some(list) => policy
            .intended_uses
            .iter()
            .find(|u| !list.contains(u))
            .map(|u| Some(*u)),
    }
}

fn describe_gap(gap: Option<UseTag>) -> String {
    match gap {
        None => "no allowed uses are declared".into(),
        Some(tag) => format!("declared allowed uses do not include {tag}"),
    }
}

pub fn check_license_compat(
    license: &LicenseId,
    consent: Consent,
    allowed_uses: Option<&[UseTag]>,
    policy: &DatasetPolicy,
) -> Compatibility {
    use CompatValue::*;

    if consent == Consent::Denied && policy.intends(UseTag::AiTraining) {
        return Compatibility::new(Incompatible, 1, "AI-training consent denied");
    }

    if *license == LicenseId::Unspecified {
        return Compatibility::new(Inconclusive, 2, "license unspecified");
    }
    if consent == Consent::Unspecified && policy.requires_explicit_consent {
        return Compatibility::new(
            Inconclusive,
            2,
            "AI-training consent unspecified while the dataset requires explicit consent",
        );
    }
    let gap = uncovered_use(allowed_uses, policy);
    if let LicenseId::Custom(id) = license {
        if let Some(g) = gap {
            return Compatibility::new(
                Inconclusive,
                2,
                format!("custom license {id:?} cannot be interpreted and {}", describe_gap(g)),
            );
        }
    }

    if *license == LicenseId::AllRightsReserved {
        if let Some(g) = gap {
            return Compatibility::new(Incompatible, 3, format!("all rights reserved and {}", describe_gap(g)));
        }
    }

    if *license == LicenseId::CcByNc4 && policy.intends(UseTag::Commercial) {
        return Compatibility::new(
            Incompatible,
            4,
            "non-commercial license but the dataset intends commercial use",
        );
    }

    if *license == LicenseId::CcByNd4 && policy.performs_derivatives {
        return Compatibility::new(
            Incompatible,
            5,
            "no-derivatives license but the dataset performs derivatives",
        );
    }

    if *license == LicenseId::CcBySa4
        && policy.dataset_license != LicenseId::CcBySa4
        && policy.intends(UseTag::Redistribution)
    {
        return Compatibility::new(
            Incompatible,
            6,
            format!(
                "share-alike license but the dataset is redistributed under {}",
                policy.dataset_license
            ),
        );
    }

    match (allowed_uses, gap) {
        (Some(_), Some(Some(tag))) => {
            Compatibility::new(Incompatible, 7, format!("declared allowed uses do not include {tag}"))
        }
        _ => Compatibility::new(Compatible, 7, format!("{license} permits every intended use")),
    }
}
