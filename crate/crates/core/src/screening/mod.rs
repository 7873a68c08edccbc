//! Deterministic surrogate docking score, library screening and screening
//! analytics.

mod adapter;
mod analytics;
mod pocket;

pub use adapter::ExternalCommandOracle;
pub use analytics::{
    enrichment_analysis, enrichment_csv, ligand_efficiency, novelty_report, EnrichmentPoint,
    NoveltyEntry, SCAFFOLD_HOP_THRESHOLD,
};
pub use pocket::{parse_pockets, Pocket};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::hashing::{unit_interval, Fnv1a};
use crate::molgraph::{
    canonical_form, descriptors, parse_smiles, DescriptorSet, FingerprintError, Molecule,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScreeningError {
    #[error("no active compounds in the library")]
    NoActives,
    #[error("reference set is empty")]
    EmptyReference,
    #[error("heavy atom count is zero")]
    ZeroAtoms,
    #[error("fraction {0} outside (0, 1]")]
    InvalidFraction(f64),
    #[error("library is empty")]
    EmptyLibrary,
    #[error("pocket line {line}: {reason}")]
    PocketParse { line: usize, reason: String },
    #[error("library line {line}: {reason}")]
    LibraryParse { line: usize, reason: String },
    #[error("external scorer: {0}")]
    Adapter(String),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Active,
    Inactive,
}

impl Label {
    pub fn parse(s: &str) -> Option<Label> {
        match s.to_ascii_lowercase().as_str() {
            "active" | "1" => Some(Label::Active),
            "inactive" | "0" => Some(Label::Inactive),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Active => "active",
            Label::Inactive => "inactive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub canonical_smiles: String,
    /// Lower is better.
    pub score: f64,
    pub label: Option<Label>,
    pub descriptors: DescriptorSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub smiles: String,
    pub label: Option<Label>,
}

impl LibraryEntry {
    pub fn new(smiles: impl Into<String>) -> LibraryEntry {
        LibraryEntry {
            smiles: smiles.into(),
            label: None,
        }
    }
}

/// Parses a library file: one `smiles [label]` per line, whitespace or comma
/// separated, `#` comments.
pub fn parse_library(text: &str) -> Result<Vec<LibraryEntry>, ScreeningError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|c| !c.is_empty());
        let smiles = cols.next().unwrap_or_default().to_string();
        let label = match cols.next() {
            None => None,
            Some(l) => Some(Label::parse(l).ok_or_else(|| ScreeningError::LibraryParse {
                line: i + 1,
                reason: format!("unknown label '{l}'"),
            })?),
        };
        out.push(LibraryEntry { smiles, label });
    }
    Ok(out)
}

/// Scores molecules against a pocket. Implementations must be pure.
pub trait AffinityOracle: Send + Sync {
    fn score(&self, m: &Molecule, canonical: &str, pocket: &Pocket) -> Result<f64, ScreeningError>;
}

/// The built-in surrogate; see [`surrogate_affinity`].
#[derive(Clone, Copy, Debug, Default)]
pub struct Surrogate;

impl AffinityOracle for Surrogate {
    fn score(&self, m: &Molecule, canonical: &str, pocket: &Pocket) -> Result<f64, ScreeningError> {
        Ok(surrogate_score(&descriptors(m), canonical, pocket))
    }
}

/// Jitter in `[-1, 1)` from the hash of `(canonical smiles, pocket seed)`.
pub fn jitter(canonical: &str, seed: u64) -> f64 {
    2.0 * unit_interval(Fnv1a::new().str(canonical).u64(seed).finish()) - 1.0
}

/// Surrogate docking score (kcal/mol-like, lower is better). The pocket
/// centre does not enter the formula.
pub fn surrogate_affinity(m: &Molecule, pocket: &Pocket) -> f64 {
    surrogate_score(&descriptors(m), &canonical_form(m), pocket)
}

pub fn surrogate_score(d: &DescriptorSet, canonical: &str, pocket: &Pocket) -> f64 {
    let hac = d.heavy_atoms as f64;
    let polar = d.hbd.min(pocket.polar_sites as usize) as f64;
    let acceptors = d.hba.min(pocket.acceptor_sites as usize) as f64;
    let reward =
        0.35 * hac.min(35.0) + 1.2 * polar + 1.0 * acceptors + 0.8 * d.aromatic_rings as f64;
    -reward + 0.08 * (hac - 35.0).max(0.0) + 0.25 * jitter(canonical, pocket.seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub index: usize,
    pub smiles: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub ranked: Vec<ScoredCandidate>,
    pub skipped: Vec<SkipRecord>,
}

/// Scores every entry and ranks ascending by score, ties by canonical SMILES.
/// Unparseable or unscorable entries are skipped and reported.
pub fn screen_library(
    entries: &[LibraryEntry],
    pocket: &Pocket,
    oracle: &dyn AffinityOracle,
    exec: Execution,
) -> Result<ScreenReport, ScreeningError> {
    if entries.is_empty() {
        return Err(ScreeningError::EmptyLibrary);
    }
    let results = exec.map(entries, |e| -> Result<ScoredCandidate, String> {
        let m = parse_smiles(&e.smiles).map_err(|err| err.to_string())?;
        let canonical = canonical_form(&m);
        let score = oracle
            .score(&m, &canonical, pocket)
            .map_err(|err| err.to_string())?;
        if !score.is_finite() {
            return Err(format!("non-finite score {score}"));
        }
        Ok(ScoredCandidate {
            canonical_smiles: canonical,
            score,
            label: e.label,
            descriptors: descriptors(&m),
        })
    });
    let mut ranked = Vec::new();
    let mut skipped = Vec::new();
    for (index, (entry, r)) in entries.iter().zip(results).enumerate() {
        match r {
            Ok(c) => ranked.push(c),
            Err(reason) => skipped.push(SkipRecord {
                index,
                smiles: entry.smiles.clone(),
                reason,
            }),
        }
    }
    ranked.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then_with(|| a.canonical_smiles.cmp(&b.canonical_smiles))
    });
    Ok(ScreenReport { ranked, skipped })
}

/// `rank,canonical_smiles,score,label` with 1-based ranks.
pub fn ranked_csv(ranked: &[ScoredCandidate]) -> String {
    let mut out = String::from("rank,canonical_smiles,score,label\n");
    for (i, c) in ranked.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            i + 1,
            c.canonical_smiles,
            c.score,
            c.label.map(Label::as_str).unwrap_or("")
        ));
    }
    out
}
