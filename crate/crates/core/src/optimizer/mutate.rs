//! Fragment-based mutation operators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::OptimizerError;
use crate::hashing::derive_seed;
use crate::molgraph::{canonical_form, parse_smiles, Atom, Bond, BondOrder, Element, Molecule};

/// Attempts per mutant slot before the slot is given up.
pub const MAX_ATTEMPTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fragment {
    Hydroxyl,
    Methoxy,
    Amino,
    Fluoro,
    Carboxyl,
    Phenyl,
    Pyridyl,
}

impl Fragment {
    pub const ALL: [Fragment; 7] = [
        Fragment::Hydroxyl,
        Fragment::Methoxy,
        Fragment::Amino,
        Fragment::Fluoro,
        Fragment::Carboxyl,
        Fragment::Phenyl,
        Fragment::Pyridyl,
    ];

    /// Atoms and internal bonds; atom 0 is the attachment point.
    fn parts(self) -> (Vec<Atom>, Vec<(usize, usize, BondOrder)>) {
        use BondOrder::*;
        use Element::*;
        let ali = |e| Atom::organic(e, false);
        let aro = |e| Atom::organic(e, true);
        let ring = |n: usize| {
            (0..n)
                .map(move |i| (i, (i + 1) % n, Aromatic))
                .collect::<Vec<_>>()
        };
        match self {
            Fragment::Hydroxyl => (vec![ali(O)], vec![]),
            Fragment::Methoxy => (vec![ali(O), ali(C)], vec![(0, 1, Single)]),
            Fragment::Amino => (vec![ali(N)], vec![]),
            Fragment::Fluoro => (vec![ali(F)], vec![]),
            Fragment::Carboxyl => (
                vec![ali(C), ali(O), ali(O)],
                vec![(0, 1, Double), (0, 2, Single)],
            ),
            Fragment::Phenyl => (vec![aro(C); 6], ring(6)),
            // para position: c1ccncc1
            Fragment::Pyridyl => (
                vec![aro(C), aro(C), aro(C), aro(N), aro(C), aro(C)],
                ring(6),
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum Mutation {
    Attach { site: usize, fragment: Fragment },
    DeleteTerminal { atom: usize },
    SwapCarbonOxygen { atom: usize },
    SwapCarbonNitrogen { atom: usize },
}

fn single_bonds_only(m: &Molecule, i: usize) -> bool {
    m.neighbors(i)
        .iter()
        .all(|&(_, b)| m.bonds()[b].order == BondOrder::Single)
}

fn order_sum(m: &Molecule, i: usize) -> u32 {
    m.neighbors(i)
        .iter()
        .map(|&(_, b)| match m.bonds()[b].order {
            BondOrder::Single => 2,
            BondOrder::Double => 4,
            BondOrder::Triple => 6,
            BondOrder::Aromatic => 3,
        })
        .sum::<u32>()
}

/// Structurally admissible edits, grouped by operator. Groups may be empty.
pub fn candidate_edits(m: &Molecule) -> [Vec<Mutation>; 4] {
    let mut attach = Vec::new();
    let mut delete = Vec::new();
    let mut swap_o = Vec::new();
    let mut swap_n = Vec::new();
    for (i, a) in m.atoms().iter().enumerate() {
        if a.bracket || a.charge != 0 {
            continue;
        }
        let deg = m.degree(i);
        let in_ring = m.ring_membership(i) > 0;
        if a.element == Element::C && a.implicit_h > 0 {
            attach.extend(
                Fragment::ALL
                    .iter()
                    .map(|&fragment| Mutation::Attach { site: i, fragment }),
            );
        }
        if deg == 1 && m.atom_count() > 1 {
            delete.push(Mutation::DeleteTerminal { atom: i });
        }
        if in_ring
            && !a.aromatic
            && deg == 2
            && single_bonds_only(m, i)
            && matches!(a.element, Element::C | Element::O)
        {
            swap_o.push(Mutation::SwapCarbonOxygen { atom: i });
        }
        let swap_cn = match (a.element, a.aromatic) {
            // half-units: at most three single-bond equivalents for N
            (Element::C, false) => order_sum(m, i) <= 6,
            (Element::C, true) | (Element::N, true) => deg == 2,
            (Element::N, false) => true,
            _ => false,
        };
        if swap_cn {
            swap_n.push(Mutation::SwapCarbonNitrogen { atom: i });
        }
    }
    [attach, delete, swap_o, swap_n]
}

/// Applies an edit. The result is rebuilt from atoms and bonds and then
/// re-parsed from its own SMILES; any failure is `None`.
pub fn apply_mutation(m: &Molecule, edit: Mutation) -> Option<Molecule> {
    let mut atoms: Vec<Atom> = m.atoms().to_vec();
    let mut bonds: Vec<Bond> = m.bonds().to_vec();
    let bond = |a, b, order| Bond {
        a,
        b,
        order,
        stereo: None,
    };
    match edit {
        Mutation::Attach { site, fragment } => {
            let base = atoms.len();
            let (frag_atoms, frag_bonds) = fragment.parts();
            atoms.extend(frag_atoms);
            bonds.extend(
                frag_bonds
                    .into_iter()
                    .map(|(a, b, o)| bond(base + a, base + b, o)),
            );
            bonds.push(bond(site, base, BondOrder::Single));
        }
        Mutation::DeleteTerminal { atom } => {
            atoms.remove(atom);
            bonds.retain(|b| b.a != atom && b.b != atom);
            for b in &mut bonds {
                b.a -= usize::from(b.a > atom);
                b.b -= usize::from(b.b > atom);
            }
        }
        Mutation::SwapCarbonOxygen { atom } => {
            let a = &mut atoms[atom];
            a.element = if a.element == Element::C {
                Element::O
            } else {
                Element::C
            };
        }
        Mutation::SwapCarbonNitrogen { atom } => {
            let a = &mut atoms[atom];
            a.element = if a.element == Element::C {
                Element::N
            } else {
                Element::C
            };
        }
    }
    let rebuilt = Molecule::from_parts(atoms, bonds).ok()?;
    parse_smiles(&canonical_form(&rebuilt)).ok()
}

/// Draws `n` mutants of `parent`. Each slot picks an operator uniformly among
/// those with admissible sites, then a site (and fragment) uniformly, and
/// retries up to [`MAX_ATTEMPTS`] times when the edit fails validation or
/// reproduces the parent.
pub fn mutate_parent(parent: &Molecule, n: usize, rng: &mut ChaCha8Rng) -> Vec<Molecule> {
    let parent_canonical = canonical_form(parent);
    let groups: Vec<Vec<Mutation>> = candidate_edits(parent)
        .into_iter()
        .filter(|g| !g.is_empty())
        .collect();
    let mut out = Vec::with_capacity(n);
    if groups.is_empty() {
        return out;
    }
    for _ in 0..n {
        for _ in 0..MAX_ATTEMPTS {
            let group = &groups[rng.gen_range(0..groups.len())];
            let edit = *group.choose(rng).expect("groups are non-empty");
            if let Some(child) = apply_mutation(parent, edit) {
                if canonical_form(&child) != parent_canonical {
                    out.push(child);
                    break;
                }
            }
        }
    }
    out
}

/// Stream for one parent in one generation.
pub fn parent_rng(seed: u64, generation: usize, parent_canonical: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parent_canonical, generation as u64))
}

/// Mutants of every parent, in parent order.
pub fn generate_mutants(
    parents: &[Molecule],
    n_per_parent: usize,
    seed: u64,
    generation: usize,
) -> Result<Vec<Molecule>, OptimizerError> {
    if n_per_parent == 0 {
        return Err(OptimizerError::InvalidConfig(
            "n_per_parent must be at least 1".into(),
        ));
    }
    let mut out = Vec::new();
    for p in parents {
        let mut rng = parent_rng(seed, generation, &canonical_form(p));
        out.extend(mutate_parent(p, n_per_parent, &mut rng));
    }
    if out.is_empty() {
        return Err(OptimizerError::NoValidMutants);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canon(s: &str) -> String {
        canonical_form(&parse_smiles(s).unwrap())
    }

    #[test]
    fn ring_oxygen_swap_reaches_trace_mutant() {
        let m = parse_smiles("O=C(O)CN1CCC(O)CC1").unwrap();
        let target = canon("O=C(O)CN1CCC(O)CO1");
        let [_, _, swaps, _] = candidate_edits(&m);
        let hit = swaps
            .iter()
            .filter_map(|&e| apply_mutation(&m, e))
            .any(|c| canonical_form(&c) == target);
        assert!(hit);
    }

    #[test]
    fn every_operator_produces_valid_molecules() {
        let m = parse_smiles("COC1CC(O)(c2ccncc2)CON1CC(=O)O").unwrap();
        for group in candidate_edits(&m) {
            assert!(!group.is_empty());
            for e in group {
                if let Some(c) = apply_mutation(&m, e) {
                    assert!(parse_smiles(&canonical_form(&c)).is_ok());
                }
            }
        }
    }

    #[test]
    fn pyridyl_attachment() {
        let m = parse_smiles("C").unwrap();
        let c = apply_mutation(
            &m,
            Mutation::Attach {
                site: 0,
                fragment: Fragment::Pyridyl,
            },
        )
        .unwrap();
        assert_eq!(canonical_form(&c), canon("Cc1ccncc1"));
    }

    #[test]
    fn seeded_determinism() {
        let p = vec![parse_smiles("O=C(O)CN1CCC(O)CC1").unwrap()];
        let a: Vec<String> = generate_mutants(&p, 5, 42, 1)
            .unwrap()
            .iter()
            .map(canonical_form)
            .collect();
        let b: Vec<String> = generate_mutants(&p, 5, 42, 1)
            .unwrap()
            .iter()
            .map(canonical_form)
            .collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(generate_mutants(&p, 0, 42, 1).is_err());
    }
}
