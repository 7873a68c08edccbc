use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Category, Decision, Hinge, PharmError, RoutePk, Verdict};
use crate::pbpk::AdmetProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmetField {
    THalf,
    ClSys,
    ClRenal,
    ClHepatic,
    ClMicrosomal,
    Caco2,
    Logp,
    Qed,
    Bioavailability,
    Dili,
    Herg,
    Carcinogenicity,
    Ppb,
    Vss,
}

impl AdmetField {
    pub fn get(self, a: &AdmetProfile) -> Option<f64> {
        match self {
            AdmetField::THalf => Some(a.t_half),
            AdmetField::ClSys => a.cl_sys,
            AdmetField::ClRenal => a.cl_renal,
            AdmetField::ClHepatic => a.cl_hepatic,
            AdmetField::ClMicrosomal => a.cl_microsomal,
            AdmetField::Caco2 => a.caco2,
            AdmetField::Logp => a.logp,
            AdmetField::Qed => a.qed,
            AdmetField::Bioavailability => a.bioavailability,
            AdmetField::Dili => a.dili,
            AdmetField::Herg => a.herg,
            AdmetField::Carcinogenicity => a.carcinogenicity,
            AdmetField::Ppb => Some(a.ppb),
            AdmetField::Vss => Some(a.vss),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparison {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Lt => value < threshold,
            Comparison::Le => value <= threshold,
            Comparison::Gt => value > threshold,
            Comparison::Ge => value >= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub category: Category,
    pub field: AdmetField,
    pub op: Comparison,
    pub threshold: f64,
    pub message: String,
}

impl Rule {
    /// The feedback sentence when the rule fires, `None` otherwise. A
    /// missing field never fires.
    pub fn fire(&self, a: &AdmetProfile) -> Option<String> {
        let v = self.field.get(a)?;
        if !self.op.holds(v, self.threshold) {
            return None;
        }
        Some(
            self.message
                .replace("{value}", &format!("{v:.4}"))
                .replace("{threshold}", &self.threshold.to_string()),
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTable {
    #[serde(default)]
    pub clearance: Vec<Hinge>,
    #[serde(default)]
    pub permeability: Vec<Hinge>,
    #[serde(default)]
    pub toxicity: Vec<Hinge>,
    #[serde(default)]
    pub solubility: Vec<Hinge>,
    #[serde(default)]
    pub stability: Vec<Hinge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PharmacologyConfig {
    pub rules: Vec<Rule>,
    pub penalties: PenaltyTable,
}

const DEFAULT_CONFIG: &str = include_str!("../../data/pharmacology.toml");

impl Default for PharmacologyConfig {
    fn default() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("bundled pharmacology config parses")
    }
}

impl PharmacologyConfig {
    pub fn parse(text: &str) -> Result<Self, PharmError> {
        let cfg: PharmacologyConfig =
            toml::from_str(text).map_err(|e| PharmError::Config(e.to_string()))?;
        let all = [
            &cfg.penalties.clearance,
            &cfg.penalties.permeability,
            &cfg.penalties.toxicity,
            &cfg.penalties.solubility,
            &cfg.penalties.stability,
        ];
        if let Some(h) = all
            .iter()
            .flat_map(|r| r.iter())
            .find(|h| !(h.weight >= 0.0 && h.threshold.is_finite()))
        {
            return Err(PharmError::Config(format!("invalid penalty term {h:?}")));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PharmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PharmError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn penalty_row(&self, c: Category) -> &[Hinge] {
        match c {
            Category::Clearance => &self.penalties.clearance,
            Category::Permeability => &self.penalties.permeability,
            Category::Toxicity => &self.penalties.toxicity,
            Category::Solubility => &self.penalties.solubility,
            Category::Stability => &self.penalties.stability,
        }
    }
}

/// Applies the rule table in order. Any fired rule rejects.
pub fn evaluate(admet: &AdmetProfile, pk: &[RoutePk], config: &PharmacologyConfig) -> Verdict {
    let mut categories = Vec::new();
    let mut feedback = Vec::new();
    for rule in &config.rules {
        if let Some(msg) = rule.fire(admet) {
            if !categories.contains(&rule.category) {
                categories.push(rule.category);
            }
            feedback.push(msg);
        }
    }
    let decision = if categories.is_empty() {
        feedback.push("All ADMET checks passed.".into());
        Decision::Approved
    } else {
        Decision::Rejected
    };
    Verdict {
        decision,
        categories,
        feedback,
        admet: admet.clone(),
        pk: pk.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> AdmetProfile {
        AdmetProfile {
            ppb: 0.2,
            vss: 40.0,
            t_half: 6.0,
            caco2: Some(-4.8),
            dili: Some(0.1),
            herg: Some(0.05),
            ..Default::default()
        }
    }

    #[test]
    fn default_config_loads() {
        let cfg = PharmacologyConfig::default();
        assert_eq!(cfg.rules.len(), 8);
        assert_eq!(cfg.penalties.clearance.len(), 2);
    }

    #[test]
    fn approve_and_reject() {
        let cfg = PharmacologyConfig::default();
        let v = evaluate(&base(), &[], &cfg);
        assert!(v.is_approved() && v.categories.is_empty());
        let mut a = base();
        a.t_half = -5.8;
        a.caco2 = Some(-5.14);
        let v = evaluate(&a, &[], &cfg);
        assert_eq!(v.decision, Decision::Rejected);
        assert_eq!(v.categories, [Category::Clearance, Category::Permeability]);
        assert_eq!(v.feedback.len(), 2);
        assert!(v.feedback[0].contains("-5.8000"));
    }

    #[test]
    fn bad_config() {
        assert!(PharmacologyConfig::parse("rules = 3").is_err());
        let neg = DEFAULT_CONFIG.replace("weight = 0.5", "weight = -0.5");
        assert!(PharmacologyConfig::parse(&neg).is_err());
    }
}
