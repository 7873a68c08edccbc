use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PharmError;
use crate::molgraph::{canonical_form, descriptors, parse_smiles, DescriptorSet};
use crate::pbpk::AdmetProfile;

/// One fixture line. ADMET endpoint names follow the predictor's output;
/// PK quantities carry their unit in the key.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdmetRecord {
    pub smiles: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub molecular_weight: Option<f64>,
    #[serde(rename = "logP", skip_serializing_if = "Option::is_none")]
    pub logp: Option<f64>,
    #[serde(rename = "Lipinski", skip_serializing_if = "Option::is_none")]
    pub lipinski: Option<f64>,
    #[serde(rename = "QED", skip_serializing_if = "Option::is_none")]
    pub qed: Option<f64>,
    #[serde(
        rename = "Carcinogens_Lagunin",
        skip_serializing_if = "Option::is_none"
    )]
    pub carcinogens: Option<f64>,
    #[serde(rename = "DILI", skip_serializing_if = "Option::is_none")]
    pub dili: Option<f64>,
    #[serde(rename = "Bioavailability_Ma", skip_serializing_if = "Option::is_none")]
    pub bioavailability: Option<f64>,
    #[serde(rename = "hERG", skip_serializing_if = "Option::is_none")]
    pub herg: Option<f64>,
    #[serde(rename = "Caco2_Wang", skip_serializing_if = "Option::is_none")]
    pub caco2: Option<f64>,
    pub ppb: f64,
    pub vss_l: f64,
    pub half_life_h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cl_sys_l_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cl_renal_l_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cl_hepatic_l_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cl_microsomal_l_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ka_per_h: Option<f64>,
}

impl AdmetRecord {
    pub fn profile(&self) -> AdmetProfile {
        AdmetProfile {
            ppb: self.ppb,
            vss: self.vss_l,
            t_half: self.half_life_h,
            cl_sys: self.cl_sys_l_h,
            cl_renal: self.cl_renal_l_h,
            cl_hepatic: self.cl_hepatic_l_h,
            cl_microsomal: self.cl_microsomal_l_h,
            caco2: self.caco2,
            logp: self.logp,
            qed: self.qed,
            bioavailability: self.bioavailability,
            dili: self.dili,
            herg: self.herg,
            carcinogenicity: self.carcinogens,
            ka: self.ka_per_h,
        }
    }
}

/// Fixture records keyed by canonical SMILES, so any spelling of a molecule
/// finds its record.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdmetFixture {
    records: BTreeMap<String, AdmetRecord>,
}

fn canonicalize(smiles: &str) -> Result<String, PharmError> {
    parse_smiles(smiles)
        .map(|m| canonical_form(&m))
        .map_err(|e| PharmError::InvalidSmiles {
            smiles: smiles.to_string(),
            reason: e.to_string(),
        })
}

impl AdmetFixture {
    /// One JSON object per line; blank lines and `#` comments are skipped.
    pub fn parse_jsonl(text: &str) -> Result<AdmetFixture, PharmError> {
        let mut records = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let err = |reason: String| PharmError::FixtureParse {
                line: i + 1,
                reason,
            };
            let rec: AdmetRecord = serde_json::from_str(t).map_err(|e| err(e.to_string()))?;
            let key = canonicalize(&rec.smiles).map_err(|e| err(e.to_string()))?;
            if records.insert(key, rec).is_some() {
                return Err(err("duplicate molecule".into()));
            }
        }
        Ok(AdmetFixture { records })
    }

    pub fn load(path: &Path) -> Result<AdmetFixture, PharmError> {
        let text = std::fs::read_to_string(path).map_err(|e| PharmError::FixtureParse {
            line: 0,
            reason: format!("{}: {e}", path.display()),
        })?;
        Self::parse_jsonl(&text)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, canonical: &str) -> Option<&AdmetRecord> {
        self.records.get(canonical)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Deterministic descriptor-based stand-in for an ADMET predictor.
///
/// ```text
/// ppb     = clamp(0.4 + 0.1 logP, 0.05, 0.99)
/// t_half  = 2 + 0.4 HAC                     (h)
/// vss     = 5 + 0.5 HAC                     (L)
/// caco2   = clamp(-4.6 + 0.15 logP - 0.12 HBD, -7, -3.5)
/// herg    = sigmoid(1.2 (logP - 4))
/// dili    = sigmoid((MW - 500) / 80)
/// carc    = sigmoid(0.5 aromatic rings - 3)
/// bioav   = sigmoid(2.5 - 1.5 Lipinski violations)
/// ```
pub fn stub_admet(d: &DescriptorSet) -> AdmetProfile {
    let hac = d.heavy_atoms as f64;
    AdmetProfile {
        ppb: (0.4 + 0.1 * d.logp).clamp(0.05, 0.99),
        vss: 5.0 + 0.5 * hac,
        t_half: 2.0 + 0.4 * hac,
        caco2: Some((-4.6 + 0.15 * d.logp - 0.12 * d.hbd as f64).clamp(-7.0, -3.5)),
        logp: Some(d.logp),
        qed: Some(d.qed_like),
        bioavailability: Some(sigmoid(
            2.5 - 1.5 * (4 - d.lipinski_pass_count as i32) as f64,
        )),
        dili: Some(sigmoid((d.mw - 500.0) / 80.0)),
        herg: Some(sigmoid(1.2 * (d.logp - 4.0))),
        carcinogenicity: Some(sigmoid(0.5 * d.aromatic_rings as f64 - 3.0)),
        ..AdmetProfile::default()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AdmetSource {
    /// Fixture only; unknown molecules are an error.
    Fixture(AdmetFixture),
    /// Descriptor stub for everything.
    Stub,
    /// Fixture first, stub for the rest.
    FixtureOrStub(AdmetFixture),
}

impl AdmetSource {
    /// Returns the canonical SMILES and the profile.
    pub fn predict(&self, smiles: &str) -> Result<(String, AdmetProfile), PharmError> {
        let m = parse_smiles(smiles).map_err(|e| PharmError::InvalidSmiles {
            smiles: smiles.to_string(),
            reason: e.to_string(),
        })?;
        let canonical = canonical_form(&m);
        let fixture = match self {
            AdmetSource::Fixture(f) | AdmetSource::FixtureOrStub(f) => f.get(&canonical),
            AdmetSource::Stub => None,
        };
        let profile = match (fixture, self) {
            (Some(rec), _) => rec.profile(),
            (None, AdmetSource::Fixture(_)) => return Err(PharmError::FixtureMiss(canonical)),
            (None, _) => stub_admet(&descriptors(&m)),
        };
        Ok((canonical, profile))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"smiles":"COC1CC(O)(c2ccncc2)CON1CC(=O)O","QED":0.791361382936169,"Bioavailability_Ma":0.9254873156547546,"ppb":0.2,"vss_l":40.0,"half_life_h":6.0}"#;

    #[test]
    fn fixture_lookup_any_spelling() {
        let f = AdmetFixture::parse_jsonl(LINE).unwrap();
        let src = AdmetSource::Fixture(f);
        let (_, p) = src.predict("OC(=O)CN1OCC(O)(c2ccncc2)CC1OC").unwrap();
        assert_eq!(p.qed, Some(0.791361382936169));
        assert_eq!(p.bioavailability, Some(0.9254873156547546));
        assert!(matches!(
            src.predict("CCO"),
            Err(PharmError::FixtureMiss(_))
        ));
    }

    #[test]
    fn stub_is_deterministic() {
        let (c1, a) = AdmetSource::Stub.predict("CCO").unwrap();
        let (c2, b) = AdmetSource::Stub.predict("OCC").unwrap();
        assert_eq!((c1, a.clone()), (c2, b));
        assert!(a.vss > 2.7 && a.t_half > 0.0);
        for p in [a.dili, a.herg, a.bioavailability, a.carcinogenicity] {
            assert!((0.0..=1.0).contains(&p.unwrap()));
        }
    }

    #[test]
    fn fixture_errors() {
        assert!(matches!(
            AdmetFixture::parse_jsonl("{not json}"),
            Err(PharmError::FixtureParse { line: 1, .. })
        ));
        assert!(AdmetFixture::parse_jsonl(&format!("{LINE}\n{LINE}")).is_err());
    }
}
