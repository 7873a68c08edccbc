use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Category, PharmError, PharmacologyConfig, Verdict};
use crate::molgraph::DescriptorSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Descriptor {
    Logp,
    QedLike,
    Hbd,
    Hba,
    Mw,
}

impl Descriptor {
    pub fn value(self, d: &DescriptorSet) -> f64 {
        match self {
            Descriptor::Logp => d.logp,
            Descriptor::QedLike => d.qed_like,
            Descriptor::Hbd => d.hbd as f64,
            Descriptor::Hba => d.hba as f64,
            Descriptor::Mw => d.mw,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HingeDirection {
    Above,
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hinge {
    pub descriptor: Descriptor,
    pub threshold: f64,
    pub direction: HingeDirection,
    pub weight: f64,
}

impl Hinge {
    pub fn apply(&self, d: &DescriptorSet) -> f64 {
        let x = self.descriptor.value(d);
        let excess = match self.direction {
            HingeDirection::Above => x - self.threshold,
            HingeDirection::Below => self.threshold - x,
        };
        self.weight * excess.max(0.0)
    }

    fn key(&self) -> (Descriptor, HingeDirection, u64, u64) {
        (
            self.descriptor,
            self.direction,
            self.threshold.to_bits(),
            self.weight.to_bits(),
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub terms: Vec<Hinge>,
}

impl PenaltySpec {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of all hinge terms; never negative.
    pub fn apply(&self, d: &DescriptorSet) -> f64 {
        self.terms.iter().map(|h| h.apply(d)).sum()
    }
}

/// Union of the penalty rows of `categories`. Identical hinges appearing in
/// several rows are kept once; order follows the category order.
pub fn penalties_for(categories: &BTreeSet<Category>, config: &PharmacologyConfig) -> PenaltySpec {
    let mut seen = BTreeSet::new();
    let mut terms = Vec::new();
    for c in categories {
        for h in config.penalty_row(*c) {
            if seen.insert(h.key()) {
                terms.push(*h);
            }
        }
    }
    PenaltySpec { terms }
}

pub fn feedback_to_penalties(
    verdict: &Verdict,
    config: &PharmacologyConfig,
) -> Result<PenaltySpec, PharmError> {
    if verdict.is_approved() {
        return Err(PharmError::EmptyVerdict);
    }
    Ok(penalties_for(&verdict.category_set(), config))
}
