//! Molecular graphs from SMILES: parsing, canonical SMILES, descriptors,
//! Morgan-style fingerprints and Tanimoto similarity.
//!
//! Aromaticity is taken from the input (lowercase atoms); there is no
//! perception step. For valence bookkeeping an aromatic bond counts 1.5 for
//! carbon-like atoms and 1 for aromatic chalcogens (the furan/thiophene
//! heteroatom donates a lone pair instead of a double bond).

mod canon;
mod descriptors;
mod element;
mod fingerprint;
mod rings;
mod smiles;

pub use canon::{canonical_form, canonical_ranks, write_smiles};
pub use descriptors::{
    descriptors, descriptors_with, qed_like, DescriptorSet, LogpTable, LogpTableError,
};
pub use element::{Element, HYDROGEN_WEIGHT};
pub use fingerprint::{
    fingerprint_csv_row, morgan_fingerprint, tanimoto, Fingerprint, FingerprintError,
    DEFAULT_FP_BITS, DEFAULT_FP_RADIUS,
};
pub use smiles::{parse_smiles, SmilesError};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Small integer code used in hashes and canonical ranking.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

/// Stereo marks are recorded as parsed and otherwise ignored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chirality {
    CounterClockwise,
    Clockwise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BondStereo {
    Up,
    Down,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub charge: i8,
    /// Hydrogens carried by this atom (implicit for organic-subset atoms,
    /// explicit for bracket atoms).
    pub implicit_h: u8,
    pub isotope: Option<u16>,
    pub chirality: Option<Chirality>,
    /// Written in brackets; its hydrogen count is fixed rather than derived.
    pub bracket: bool,
}

impl Atom {
    pub fn organic(element: Element, aromatic: bool) -> Atom {
        Atom {
            element,
            aromatic,
            charge: 0,
            implicit_h: 0,
            isotope: None,
            chirality: None,
            bracket: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub stereo: Option<BondStereo>,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// A connected, valence-checked molecular graph. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    rings: Vec<Vec<usize>>,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Molecule {
    /// Builds a molecule from atoms and bonds. Hydrogen counts of non-bracket
    /// atoms are recomputed from the valence model; bracket atoms keep theirs
    /// and are only checked.
    pub fn from_parts(mut atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Molecule, SmilesError> {
        if atoms.is_empty() {
            return Err(SmilesError::Empty);
        }
        let mut adjacency = vec![Vec::new(); atoms.len()];
        let mut seen = std::collections::HashSet::new();
        for (i, bond) in bonds.iter().enumerate() {
            if bond.a == bond.b || bond.a >= atoms.len() || bond.b >= atoms.len() {
                return Err(SmilesError::InvalidBond {
                    a: bond.a,
                    b: bond.b,
                });
            }
            let key = (bond.a.min(bond.b), bond.a.max(bond.b));
            if !seen.insert(key) {
                return Err(SmilesError::InvalidBond {
                    a: bond.a,
                    b: bond.b,
                });
            }
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }
        if !is_connected(&adjacency) {
            return Err(SmilesError::MultipleFragments);
        }
        for (idx, atom) in atoms.iter_mut().enumerate() {
            let orders: Vec<BondOrder> = adjacency[idx]
                .iter()
                .map(|&(_, b)| bonds[b].order)
                .collect();
            if atom.bracket {
                if !valence_fits(atom, &orders, atom.implicit_h) {
                    return Err(SmilesError::ValenceViolation {
                        atom: idx,
                        element: atom.element.symbol().to_string(),
                    });
                }
            } else {
                atom.implicit_h = default_hydrogens(atom, &orders).ok_or_else(|| {
                    SmilesError::ValenceViolation {
                        atom: idx,
                        element: atom.element.symbol().to_string(),
                    }
                })?;
            }
        }
        let rings = rings::smallest_ring_set(atoms.len(), &bonds, &adjacency);
        Ok(Molecule {
            atoms,
            bonds,
            rings,
            adjacency,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Smallest set of smallest rings, each as an ordered atom cycle.
    pub fn rings(&self) -> &[Vec<usize>] {
        &self.rings
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// `(neighbour, bond index)` pairs.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    /// Number of non-hydrogen atoms.
    pub fn heavy_atom_count(&self) -> usize {
        self.atoms
            .iter()
            .filter(|a| a.element != Element::H)
            .count()
    }

    /// Number of rings from [`Molecule::rings`] an atom belongs to.
    pub fn ring_membership(&self, atom: usize) -> usize {
        self.rings.iter().filter(|r| r.contains(&atom)).count()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, bi)| &self.bonds[bi])
    }

    pub(crate) fn bond_orders(&self, atom: usize) -> Vec<BondOrder> {
        self.adjacency[atom]
            .iter()
            .map(|&(_, b)| self.bonds[b].order)
            .collect()
    }

    /// Hydrogen count the valence model would assign to an unbracketed atom
    /// in this position.
    pub(crate) fn default_h_for(&self, atom: usize) -> Option<u8> {
        default_hydrogens(&self.atoms[atom], &self.bond_orders(atom))
    }
}

impl Molecule {
    /// Rebuilds the adjacency after deserialization.
    pub fn reindex(mut self) -> Molecule {
        let mut adjacency = vec![Vec::new(); self.atoms.len()];
        for (i, bond) in self.bonds.iter().enumerate() {
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }
        self.adjacency = adjacency;
        self
    }
}

fn is_connected(adjacency: &[Vec<(usize, usize)>]) -> bool {
    let mut seen = vec![false; adjacency.len()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &(v, _) in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == adjacency.len()
}

/// Candidate bond-valence sums for an atom, most preferred first.
fn valence_sums(atom: &Atom, orders: &[BondOrder]) -> Vec<u32> {
    let mut rest = 0u32;
    let mut aromatic = 0u32;
    for o in orders {
        match o {
            BondOrder::Single => rest += 1,
            BondOrder::Double => rest += 2,
            BondOrder::Triple => rest += 3,
            BondOrder::Aromatic => aromatic += 1,
        }
    }
    if aromatic == 0 {
        vec![rest]
    } else if atom.element.is_chalcogen() {
        vec![rest + aromatic]
    } else {
        vec![rest + (3 * aromatic) / 2, rest + aromatic]
    }
}

fn default_hydrogens(atom: &Atom, orders: &[BondOrder]) -> Option<u8> {
    let allowed = atom.element.allowed_valences(atom.charge);
    for sum in valence_sums(atom, orders) {
        if let Some(&v) = allowed.iter().find(|&&v| u32::from(v) >= sum) {
            return Some((u32::from(v) - sum) as u8);
        }
    }
    None
}

fn valence_fits(atom: &Atom, orders: &[BondOrder], hydrogens: u8) -> bool {
    let max = atom
        .element
        .allowed_valences(atom.charge)
        .into_iter()
        .max()
        .unwrap_or(0);
    valence_sums(atom, orders)
        .into_iter()
        .any(|s| s + u32::from(hydrogens) <= u32::from(max))
}
