//! Canonical atom ranking (iterative neighbourhood refinement with
//! deterministic tie breaking) and the SMILES writer.

use std::collections::BTreeMap;

use super::{Atom, BondOrder, Element, Molecule};

/// Canonical rank of each atom; ranks are a permutation of `0..n`.
pub fn canonical_ranks(m: &Molecule) -> Vec<usize> {
    let n = m.atom_count();
    let keys: Vec<(u8, bool, i8, u8, usize, u16)> = m
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            (
                a.element.atomic_number(),
                a.aromatic,
                a.charge,
                a.implicit_h,
                m.degree(i),
                a.isotope.unwrap_or(0),
            )
        })
        .collect();
    let mut ranks = dense_ranks(&keys);
    loop {
        ranks = refine(m, ranks);
        if count_classes(&ranks) == n {
            return ranks;
        }
        // Break the first tie: the lowest-index atom of the smallest tied class wins.
        let mut sizes = BTreeMap::new();
        for &r in &ranks {
            *sizes.entry(r).or_insert(0usize) += 1;
        }
        let tied = *sizes.iter().find(|(_, &c)| c > 1).expect("a tied class").0;
        let chosen = ranks.iter().position(|&r| r == tied).expect("member");
        ranks = ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                if i == chosen || r != tied {
                    2 * r
                } else {
                    2 * r + 1
                }
            })
            .collect();
        ranks = dense_ranks(&ranks);
    }
}

fn refine(m: &Molecule, mut ranks: Vec<usize>) -> Vec<usize> {
    let mut classes = count_classes(&ranks);
    loop {
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..m.atom_count())
            .map(|i| {
                let mut nbrs: Vec<(usize, u8)> = m
                    .neighbors(i)
                    .iter()
                    .map(|&(n, b)| (ranks[n], m.bonds()[b].order.code()))
                    .collect();
                nbrs.sort_unstable();
                (ranks[i], nbrs)
            })
            .collect();
        ranks = dense_ranks(&keys);
        let next = count_classes(&ranks);
        if next == classes {
            return ranks;
        }
        classes = next;
    }
}

fn dense_ranks<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<&K> = keys.iter().collect();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(&k).expect("present"))
        .collect()
}

fn count_classes(ranks: &[usize]) -> usize {
    let mut r = ranks.to_vec();
    r.sort_unstable();
    r.dedup();
    r.len()
}

/// Canonical SMILES. Stereo marks are not written.
pub fn canonical_form(m: &Molecule) -> String {
    write_smiles(m, &canonical_ranks(m))
}

/// Writes a SMILES string visiting atoms by ascending `priority`, starting
/// from the atom with the lowest priority. Any priority vector yields a valid
/// spelling of the same molecule; the canonical ranks yield the canonical one.
pub fn write_smiles(m: &Molecule, priority: &[usize]) -> String {
    let n = m.atom_count();
    let start = (0..n).min_by_key(|&i| (priority[i], i)).unwrap_or(0);

    // Pass 1: DFS tree and ring-closure bonds.
    let mut visited = vec![false; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut closures: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut closure_bonds = std::collections::HashSet::new();
    let mut order_stack: Vec<(usize, usize, Vec<usize>, usize)> = Vec::new();
    visited[start] = true;
    order_stack.push((start, usize::MAX, sorted_neighbors(m, start, priority), 0));
    while let Some((atom, parent, nbrs, idx)) = order_stack.last_mut() {
        if *idx >= nbrs.len() {
            order_stack.pop();
            continue;
        }
        let next = nbrs[*idx];
        *idx += 1;
        let (atom, parent) = (*atom, *parent);
        if next == parent {
            continue;
        }
        if visited[next] {
            let key = (atom.min(next), atom.max(next));
            if closure_bonds.insert(key) {
                closures[next].push(atom);
                closures[atom].push(next);
            }
        } else {
            visited[next] = true;
            children[atom].push(next);
            order_stack.push((next, atom, sorted_neighbors(m, next, priority), 0));
        }
    }

    // Pass 2: emit.
    let mut out = String::new();
    let mut open_digits: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut free: Vec<bool> = vec![true; 100];
    free[0] = false;
    emit(
        m,
        start,
        None,
        &children,
        &closures,
        priority,
        &mut open_digits,
        &mut free,
        &mut out,
    );
    out
}

fn sorted_neighbors(m: &Molecule, atom: usize, priority: &[usize]) -> Vec<usize> {
    let mut nbrs: Vec<usize> = m.neighbors(atom).iter().map(|&(n, _)| n).collect();
    nbrs.sort_by_key(|&n| (priority[n], n));
    nbrs
}

#[allow(clippy::too_many_arguments)]
fn emit(
    m: &Molecule,
    atom: usize,
    from: Option<usize>,
    children: &[Vec<usize>],
    closures: &[Vec<usize>],
    priority: &[usize],
    open_digits: &mut BTreeMap<(usize, usize), u32>,
    free: &mut [bool],
    out: &mut String,
) {
    if let Some(p) = from {
        out.push_str(bond_symbol(m, p, atom));
    }
    write_atom(m, atom, out);

    let mut partners = closures[atom].clone();
    partners.sort_by_key(|&n| (priority[n], n));
    let mut to_free = Vec::new();
    for partner in partners {
        let key = (atom.min(partner), atom.max(partner));
        if let Some(d) = open_digits.remove(&key) {
            push_digit(d, out);
            to_free.push(d);
        } else {
            let d = free
                .iter()
                .position(|&f| f)
                .expect("fewer than 100 open rings") as u32;
            free[d as usize] = false;
            open_digits.insert(key, d);
            out.push_str(bond_symbol(m, atom, partner));
            push_digit(d, out);
        }
    }
    for d in to_free {
        free[d as usize] = true;
    }

    let kids = &children[atom];
    for (i, &child) in kids.iter().enumerate() {
        let last = i + 1 == kids.len();
        if !last {
            out.push('(');
        }
        emit(
            m,
            child,
            Some(atom),
            children,
            closures,
            priority,
            open_digits,
            free,
            out,
        );
        if !last {
            out.push(')');
        }
    }
}

fn push_digit(d: u32, out: &mut String) {
    if d < 10 {
        out.push(char::from_digit(d, 10).expect("digit"));
    } else {
        out.push_str(&format!("%{d:02}"));
    }
}

fn bond_symbol(m: &Molecule, a: usize, b: usize) -> &'static str {
    let bond = m.bond_between(a, b).expect("bonded");
    let both_aromatic = m.atoms()[a].aromatic && m.atoms()[b].aromatic;
    match bond.order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
    }
}

fn write_atom(m: &Molecule, idx: usize, out: &mut String) {
    let atom: &Atom = &m.atoms()[idx];
    let organic_aromatic = atom.aromatic && !matches!(atom.element, Element::Se);
    let default_h = m.default_h_for(idx);
    let plain = atom.element.is_organic_subset()
        && (organic_aromatic || !atom.aromatic)
        && atom.charge == 0
        && atom.isotope.is_none()
        && default_h == Some(atom.implicit_h);
    let symbol = if atom.aromatic {
        atom.element.symbol().to_ascii_lowercase()
    } else {
        atom.element.symbol().to_string()
    };
    if plain {
        out.push_str(&symbol);
        return;
    }
    out.push('[');
    if let Some(iso) = atom.isotope {
        out.push_str(&iso.to_string());
    }
    out.push_str(&symbol);
    match atom.implicit_h {
        0 => {}
        1 => out.push('H'),
        h => out.push_str(&format!("H{h}")),
    }
    match atom.charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => out.push_str(&format!("+{c}")),
        c => out.push_str(&format!("-{}", -c)),
    }
    out.push(']');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn canon(s: &str) -> String {
        canonical_form(&parse_smiles(s).unwrap())
    }

    #[test]
    fn same_graph_same_string() {
        assert_eq!(canon("CCO"), canon("OCC"));
        assert_eq!(canon("C"), "C");
        assert_eq!(canon("c1ccccc1O"), canon("Oc1ccccc1"));
        assert_eq!(canon("O=C(O)CN1CCC(O)CC1"), canon("OC1CCN(CC(=O)O)CC1"));
        assert_ne!(canon("CCO"), canon("COC"));
    }

    #[test]
    fn brackets_only_when_needed() {
        assert_eq!(canon("[CH4]"), "C");
        assert_eq!(canon("[NH4+]"), "[NH4+]");
        assert!(canon("c1cc[nH]c1").contains("[nH]"));
        assert!(canon("N[C@@H](C)C(=O)O").chars().all(|c| c != '@'));
    }

    #[test]
    fn output_reparses_to_same_canonical() {
        for s in [
            "COC1CC(O)(c2ccncc2)CON1CC(=O)O",
            "c1ccc2ccccc2c1",
            "C12C3C4C1C5C2C3C45",
            "CC(=O)Oc1ccccc1C(=O)O",
            "Cn1cnc2c1c(=O)n(C)c(=O)n2C",
            "c1ccc(-c2ccccc2)cc1",
        ] {
            let c = canon(s);
            assert_eq!(canon(&c), c, "{s}");
        }
    }
}
