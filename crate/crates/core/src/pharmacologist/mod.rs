//! ADMET acquisition, rule-based verdicts and the translation of rejection
//! categories into optimizer penalties.

mod admet;
mod penalty;
mod rules;

pub use admet::{stub_admet, AdmetFixture, AdmetRecord, AdmetSource};
pub use penalty::{
    feedback_to_penalties, penalties_for, Descriptor, Hinge, HingeDirection, PenaltySpec,
};
pub use rules::{evaluate, AdmetField, Comparison, PharmacologyConfig, Rule};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pbpk::{
    derive_params, pk_metrics, simulate, AdmetProfile, DoseRegimen, PbpkError, PkMetrics, Route,
    DEFAULT_BW,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PharmError {
    #[error("no ADMET record for {0}")]
    FixtureMiss(String),
    #[error("ADMET fixture line {line}: {reason}")]
    FixtureParse { line: usize, reason: String },
    #[error("an approved verdict carries no feedback")]
    EmptyVerdict,
    #[error("invalid SMILES {smiles}: {reason}")]
    InvalidSmiles { smiles: String, reason: String },
    #[error("config: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Clearance,
    Permeability,
    Toxicity,
    Solubility,
    Stability,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Clearance,
        Category::Permeability,
        Category::Toxicity,
        Category::Solubility,
        Category::Stability,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Clearance => "clearance",
            Category::Permeability => "permeability",
            Category::Toxicity => "toxicity",
            Category::Solubility => "solubility",
            Category::Stability => "stability",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Approved,
    Rejected,
}

/// PK readout for one route.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutePk {
    pub route: Route,
    pub dose_mg: f64,
    pub metrics: PkMetrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: Decision,
    /// Distinct categories in rule order. Empty iff approved.
    pub categories: Vec<Category>,
    pub feedback: Vec<String>,
    pub admet: AdmetProfile,
    pub pk: Vec<RoutePk>,
}

impl Verdict {
    pub fn is_approved(&self) -> bool {
        self.decision == Decision::Approved
    }

    pub fn category_set(&self) -> BTreeSet<Category> {
        self.categories.iter().copied().collect()
    }
}

/// Result of the full pharmacologist step for one molecule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub canonical_smiles: String,
    pub admet: AdmetProfile,
    /// Why PBPK was not run, when it was not.
    pub pk_error: Option<String>,
    pub verdict: Verdict,
}

/// Standard simulation set: oral and IV bolus single doses and a 1 h infusion.
pub const STANDARD_DOSE_MG: f64 = 200.0;
pub const STANDARD_HORIZON_H: f64 = 24.0;

pub fn standard_regimens(dose_mg: f64) -> [DoseRegimen; 3] {
    [
        DoseRegimen::single(Route::Oral, dose_mg),
        DoseRegimen::single(Route::IvBolus, dose_mg),
        DoseRegimen::infusion(dose_mg, 1.0),
    ]
}

/// Runs the standard PBPK set for an ADMET profile.
pub fn simulate_standard(admet: &AdmetProfile, bw: f64) -> Result<Vec<RoutePk>, PbpkError> {
    let params = derive_params(admet, bw)?;
    params.validate()?;
    standard_regimens(STANDARD_DOSE_MG)
        .iter()
        .map(|r| {
            let profile = simulate(&params, r, STANDARD_HORIZON_H)?;
            Ok(RoutePk {
                route: r.route,
                dose_mg: r.dose_mg,
                metrics: pk_metrics(&profile)?,
            })
        })
        .collect()
}

/// ADMET lookup, PBPK (when the parameters are physical) and verdict.
pub fn assess(
    smiles: &str,
    source: &AdmetSource,
    config: &PharmacologyConfig,
) -> Result<Assessment, PharmError> {
    let (canonical, admet) = source.predict(smiles)?;
    let (pk, pk_error) = match simulate_standard(&admet, DEFAULT_BW) {
        Ok(pk) => (pk, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let verdict = evaluate(&admet, &pk, config);
    Ok(Assessment {
        canonical_smiles: canonical,
        admet,
        pk_error,
        verdict,
    })
}
