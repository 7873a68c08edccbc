use serde::{Deserialize, Serialize};

use super::ScreeningError;
use crate::exec::Execution;
use crate::molgraph::{tanimoto, Fingerprint};

/// Molecules whose nearest reference is below this similarity are in the
/// scaffold-hopping zone.
pub const SCAFFOLD_HOP_THRESHOLD: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentPoint {
    pub fraction: f64,
    /// Number of top-ranked compounds examined, `⌈fraction·N⌉`.
    pub top_n: usize,
    pub recovery: f64,
    pub ef: f64,
}

/// Number of compounds in the top `fraction` of `n`. Products that land
/// within 1e-9 of an integer are taken as that integer, so 1% of 200 is 2,
/// not 3.
fn top_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let r = x.round();
    let k = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (k as usize).clamp(1, n)
}

/// Recovery and enrichment factor at each fraction, given activity flags in
/// ranked order.
pub fn enrichment_analysis(
    ranked_actives: &[bool],
    fractions: &[f64],
) -> Result<Vec<EnrichmentPoint>, ScreeningError> {
    let n = ranked_actives.len();
    let total = ranked_actives.iter().filter(|&&a| a).count();
    if total == 0 {
        return Err(ScreeningError::NoActives);
    }
    fractions
        .iter()
        .map(|&f| {
            if !(f > 0.0 && f <= 1.0) {
                return Err(ScreeningError::InvalidFraction(f));
            }
            let top_n = top_count(f, n);
            let found = ranked_actives[..top_n].iter().filter(|&&a| a).count();
            let recovery = found as f64 / total as f64;
            Ok(EnrichmentPoint {
                fraction: f,
                top_n,
                recovery,
                ef: recovery / f,
            })
        })
        .collect()
}

/// `fraction,recovery,ef`
pub fn enrichment_csv(points: &[EnrichmentPoint]) -> String {
    let mut out = String::from("fraction,recovery,ef\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.fraction, p.recovery, p.ef));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoveltyEntry {
    pub max_similarity: f64,
    /// Index of the most similar reference (first one on ties).
    pub nearest: usize,
    pub scaffold_hopping: bool,
}

/// Maximum Tanimoto similarity of every generated fingerprint to the
/// reference set.
pub fn novelty_report(
    generated: &[Fingerprint],
    reference: &[Fingerprint],
    exec: Execution,
) -> Result<Vec<NoveltyEntry>, ScreeningError> {
    if reference.is_empty() {
        return Err(ScreeningError::EmptyReference);
    }
    exec.map(generated, |g| {
        let mut best = NoveltyEntry {
            max_similarity: -1.0,
            nearest: 0,
            scaffold_hopping: false,
        };
        for (i, r) in reference.iter().enumerate() {
            let s = tanimoto(g, r)?;
            if s > best.max_similarity {
                best.max_similarity = s;
                best.nearest = i;
            }
        }
        best.scaffold_hopping = best.max_similarity < SCAFFOLD_HOP_THRESHOLD;
        Ok(best)
    })
    .into_iter()
    .collect()
}

/// Binding score magnitude per heavy atom: `−score / heavy_atoms`.
pub fn ligand_efficiency(score: f64, heavy_atoms: usize) -> Result<f64, ScreeningError> {
    if heavy_atoms == 0 {
        return Err(ScreeningError::ZeroAtoms);
    }
    Ok(-score / heavy_atoms as f64 + 0.0)
}
