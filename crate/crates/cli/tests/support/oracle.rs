//! Brute-force license oracle, kept independent of the engine: plain strings in,
//! an ordered list of guard rules, first match wins.

#[derive(Debug, Clone)]
pub struct Case {
    pub license: &'static str,
    pub consent: &'static str,
    pub allowed: Option<Vec<&'static str>>,
    pub uses: Vec<&'static str>,
    pub explicit_consent: bool,
    pub derivatives: bool,
    pub dataset_license: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Deny,
    Unknown,
}

impl Case {
    fn intends(&self, u: &str) -> bool {
        self.uses.contains(&u)
    }

    fn covered(&self) -> bool {
        match &self.allowed {
            None => false,
            Some(a) => self.uses.iter().all(|u| a.contains(u)),
        }
    }

    fn custom(&self) -> bool {
        !matches!(
            self.license,
            "CC0-1.0"
                | "CC-BY-4.0"
                | "CC-BY-SA-4.0"
                | "CC-BY-NC-4.0"
                | "CC-BY-ND-4.0"
                | "ALL-RIGHTS-RESERVED"
                | "UNSPECIFIED"
        )
    }
}

type Rule = (u8, fn(&Case) -> bool, Verdict);

const RULES: [Rule; 9] = [
    (1, |c| c.consent == "denied" && c.intends("ai-training"), Verdict::Deny),
    (2, |c| c.license == "UNSPECIFIED", Verdict::Unknown),
    (
        2,
        |c| c.consent == "unspecified" && c.explicit_consent,
        Verdict::Unknown,
    ),
    (2, |c| c.custom() && !c.covered(), Verdict::Unknown),
    (3, |c| c.license == "ALL-RIGHTS-RESERVED" && !c.covered(), Verdict::Deny),
    (
        4,
        |c| c.license == "CC-BY-NC-4.0" && c.intends("commercial"),
        Verdict::Deny,
    ),
    (5, |c| c.license == "CC-BY-ND-4.0" && c.derivatives, Verdict::Deny),
    (
        6,
        |c| c.license == "CC-BY-SA-4.0" && c.dataset_license != "CC-BY-SA-4.0" && c.intends("redistribution"),
        Verdict::Deny,
    ),
    (7, |c| c.allowed.is_some() && !c.covered(), Verdict::Deny),
];

pub fn decide(case: &Case) -> (Verdict, u8) {
    RULES
        .iter()
        .find(|(_, guard, _)| guard(case))
        .map(|(n, _, v)| (*v, *n))
        .unwrap_or((Verdict::Ok, 7))
}

pub const LICENSES: [&str; 8] = [
    "CC0-1.0",
    "CC-BY-4.0",
    "CC-BY-SA-4.0",
    "CC-BY-NC-4.0",
    "CC-BY-ND-4.0",
    "ALL-RIGHTS-RESERVED",
    "UNSPECIFIED",
    "LicenseRef-custom",
];
pub const CONSENTS: [&str; 3] = ["granted", "denied", "unspecified"];

/// Every combination the matrix tests walk through.
pub fn all_cases() -> Vec<Case> {
    let allowed: [Option<Vec<&'static str>>; 3] = [
        None,
        Some(vec![
            "ai-training",
            "redistribution",
            "commercial",
            "derivative-works",
            "research-only",
        ]),
        Some(vec!["research-only"]),
    ];
    let use_sets: [Vec<&'static str>; 4] = [
        vec!["ai-training"],
        vec!["ai-training", "commercial"],
        vec!["ai-training", "redistribution"],
        vec!["research-only"],
    ];
    let mut out = Vec::new();
    for license in LICENSES {
        for consent in CONSENTS {
            for a in &allowed {
                for uses in &use_sets {
                    for explicit_consent in [false, true] {
                        for derivatives in [false, true] {
                            for dataset_license in ["CC-BY-4.0", "CC-BY-SA-4.0"] {
                                out.push(Case {
                                    license,
                                    consent,
                                    allowed: a.clone(),
                                    uses: uses.clone(),
                                    explicit_consent,
                                    derivatives,
                                    dataset_license,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}
