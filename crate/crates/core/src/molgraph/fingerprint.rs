//! Morgan/ECFP-style circular fingerprints.
//!
//! Radius-0 identifiers hash `(atomic number, heavy degree, total H, charge,
//! aromatic, in ring)`. Each iteration hashes `(iteration, own id, sorted
//! (bond code, neighbour id) pairs)`. An environment is only emitted when its
//! covered bond set is new; an atom whose bond set stops growing drops out.
//! Identifiers are folded modulo the bit width.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{canonical_form, Molecule};
use crate::hashing::Fnv1a;

pub const DEFAULT_FP_BITS: usize = 2048;
pub const DEFAULT_FP_RADIUS: usize = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FingerprintError {
    #[error("fingerprint widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    nbits: usize,
    words: Vec<u64>,
    popcount: u32,
}

impl Fingerprint {
    pub fn empty(nbits: usize) -> Fingerprint {
        Fingerprint {
            nbits,
            words: vec![0; nbits.div_ceil(64)],
            popcount: 0,
        }
    }

    /// Fingerprint with exactly the given positions set (taken modulo `nbits`).
    pub fn from_bits(nbits: usize, bits: impl IntoIterator<Item = usize>) -> Fingerprint {
        let mut fp = Fingerprint::empty(nbits);
        for b in bits {
            fp.set(b % nbits);
        }
        fp
    }

    fn set(&mut self, bit: usize) {
        let (w, m) = (bit / 64, 1u64 << (bit % 64));
        if self.words[w] & m == 0 {
            self.words[w] |= m;
            self.popcount += 1;
        }
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn popcount(&self) -> u32 {
        self.popcount
    }

    pub fn is_set(&self, bit: usize) -> bool {
        bit < self.nbits && self.words[bit / 64] & (1 << (bit % 64)) != 0
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nbits).filter(|&b| self.is_set(b))
    }

    /// Lowercase hex of the bit vector as bytes; bit `i` lives in byte
    /// `i / 8` at position `i % 8` (least significant first).
    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(self.nbits / 4);
        for byte in 0..self.nbits.div_ceil(8) {
            let word = self.words[byte / 8];
            let b = (word >> ((byte % 8) * 8)) as u8;
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    pub fn intersection_count(&self, other: &Fingerprint) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }
}

pub fn morgan_fingerprint(m: &Molecule, radius: usize, nbits: usize) -> Fingerprint {
    let mut fp = Fingerprint::empty(nbits);
    for id in environment_ids(m, radius) {
        fp.set((id % nbits as u64) as usize);
    }
    fp
}

/// Unfolded environment identifiers (deduplicated, sorted).
pub(crate) fn environment_ids(m: &Molecule, radius: usize) -> Vec<u64> {
    let n = m.atom_count();
    let words = m.bonds().len().div_ceil(64).max(1);
    let mut ids: Vec<u64> = (0..n)
        .map(|i| {
            let a = &m.atoms()[i];
            Fnv1a::new()
                .u64(u64::from(a.element.atomic_number()))
                .u64(m.degree(i) as u64)
                .u64(u64::from(a.implicit_h))
                .i64(i64::from(a.charge))
                .u64(u64::from(a.aromatic))
                .u64(u64::from(m.ring_membership(i) > 0))
                .finish()
        })
        .collect();
    let mut features: Vec<u64> = ids.clone();
    let mut envs: Vec<Vec<u64>> = vec![vec![0; words]; n];
    let mut alive = vec![true; n];
    let mut seen: HashSet<Vec<u64>> = HashSet::new();

    for iteration in 1..=radius {
        let mut round: Vec<(Vec<u64>, u64, usize)> = Vec::new();
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let mut env = envs[i].clone();
            let mut pairs: Vec<(u8, u64)> = Vec::new();
            for &(nb, b) in m.neighbors(i) {
                env[b / 64] |= 1 << (b % 64);
                for (w, o) in env.iter_mut().zip(&envs[nb]) {
                    *w |= o;
                }
                pairs.push((m.bonds()[b].order.code(), ids[nb]));
            }
            pairs.sort_unstable();
            let mut h = Fnv1a::new().u64(iteration as u64).u64(ids[i]);
            for (code, id) in pairs {
                h = h.u64(u64::from(code)).u64(id);
            }
            if env == envs[i] {
                alive[i] = false;
                continue;
            }
            round.push((env, h.finish(), i));
        }
        round.sort();
        for (env, id, atom) in round {
            if seen.insert(env.clone()) {
                features.push(id);
            }
            ids[atom] = id;
            envs[atom] = env;
        }
    }
    features.sort_unstable();
    features.dedup();
    features
}

/// `|a ∧ b| / |a ∨ b|`, and 1.0 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.nbits != b.nbits {
        return Err(FingerprintError::WidthMismatch(a.nbits, b.nbits));
    }
    let inter = a.intersection_count(b);
    let union = a.popcount + b.popcount - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(f64::from(inter) / f64::from(union))
}

/// One `canonical_smiles,hex_bits` export row with the default settings.
pub fn fingerprint_csv_row(m: &Molecule) -> String {
    let fp = morgan_fingerprint(m, DEFAULT_FP_RADIUS, DEFAULT_FP_BITS);
    format!("{},{}", canonical_form(m), fp.to_hex())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn fp(s: &str) -> Fingerprint {
        morgan_fingerprint(&parse_smiles(s).unwrap(), 2, 2048)
    }

    #[test]
    fn spelling_invariance() {
        assert_eq!(fp("CCO"), fp("OCC"));
        assert_eq!(fp("c1ccccc1O"), fp("Oc1ccccc1"));
        assert_ne!(fp("CCO"), fp("CCC"));
    }

    #[test]
    fn methane_has_one_environment() {
        assert_eq!(fp("C").popcount(), 1);
        assert_eq!(fp("C").nbits(), 2048);
    }

    #[test]
    fn tanimoto_definitions() {
        let a = Fingerprint::from_bits(2048, [1, 2, 3]);
        let b = Fingerprint::from_bits(2048, [2, 3, 4]);
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.5);
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        let c = Fingerprint::from_bits(2048, [100]);
        assert_eq!(tanimoto(&a, &c).unwrap(), 0.0);
        let z = Fingerprint::empty(2048);
        assert_eq!(tanimoto(&z, &z).unwrap(), 1.0);
        assert_eq!(
            tanimoto(&a, &Fingerprint::empty(1024)),
            Err(FingerprintError::WidthMismatch(2048, 1024))
        );
    }

    #[test]
    fn hex_layout() {
        let f = Fingerprint::from_bits(16, [0, 9]);
        assert_eq!(f.to_hex(), "0102");
        assert_eq!(fp("C").to_hex().len(), 512);
    }
}
