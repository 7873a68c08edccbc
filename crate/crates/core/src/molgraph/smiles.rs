use std::collections::BTreeMap;

use thiserror::Error;

use super::{Atom, Bond, BondOrder, BondStereo, Chirality, Element, Molecule};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmilesError {
    #[error("empty SMILES")]
    Empty,
    #[error("ring bond {digit} opened but never closed")]
    UnclosedRing { digit: u16 },
    #[error("unbalanced parenthesis at position {pos}")]
    UnbalancedParen { pos: usize },
    #[error("unknown atom '{symbol}' at position {pos}")]
    UnknownAtom { symbol: String, pos: usize },
    #[error("valence violation on atom {atom} ({element})")]
    ValenceViolation { atom: usize, element: String },
    #[error("stereo marker outside brackets at position {pos}")]
    StrayStereo { pos: usize },
    #[error("bond symbol at position {pos} is not followed by an atom")]
    DanglingBond { pos: usize },
    #[error("unclosed bracket atom starting at position {pos}")]
    UnclosedBracket { pos: usize },
    #[error("conflicting bond symbols on ring closure {digit}")]
    RingBondMismatch { digit: u16 },
    #[error("unexpected character '{ch}' at position {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("multi-fragment SMILES is not supported")]
    MultipleFragments,
    #[error("invalid bond between atoms {a} and {b}")]
    InvalidBond { a: usize, b: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct BondSpec {
    order: BondOrder,
    stereo: Option<BondStereo>,
    pos: usize,
}

struct RingOpen {
    atom: usize,
    bond: Option<BondSpec>,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    prev: Option<usize>,
    branches: Vec<(usize, usize)>,
    pending: Option<BondSpec>,
    rings: BTreeMap<u16, RingOpen>,
}

/// Parses a single-fragment SMILES string into a valence-checked [`Molecule`].
pub fn parse_smiles(text: &str) -> Result<Molecule, SmilesError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(SmilesError::Empty);
    }
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        branches: Vec::new(),
        pending: None,
        rings: BTreeMap::new(),
    };
    p.run()?;
    Molecule::from_parts(p.atoms, p.bonds)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    let prev = self
                        .prev
                        .ok_or(SmilesError::UnbalancedParen { pos: start })?;
                    if let Some(b) = self.pending {
                        return Err(SmilesError::DanglingBond { pos: b.pos });
                    }
                    self.branches.push((prev, start));
                    self.pos += 1;
                }
                b')' => {
                    if let Some(b) = self.pending {
                        return Err(SmilesError::DanglingBond { pos: b.pos });
                    }
                    let (atom, _) = self
                        .branches
                        .pop()
                        .ok_or(SmilesError::UnbalancedParen { pos: start })?;
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.pending.is_some() || self.prev.is_none() {
                        return Err(SmilesError::DanglingBond { pos: start });
                    }
                    let (order, stereo) = match c {
                        b'-' => (BondOrder::Single, None),
                        b'=' => (BondOrder::Double, None),
                        b'#' => (BondOrder::Triple, None),
                        b':' => (BondOrder::Aromatic, None),
                        b'/' => (BondOrder::Single, Some(BondStereo::Up)),
                        _ => (BondOrder::Single, Some(BondStereo::Down)),
                    };
                    self.pending = Some(BondSpec {
                        order,
                        stereo,
                        pos: start,
                    });
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom);
                }
                b'@' => return Err(SmilesError::StrayStereo { pos: start }),
                b'.' => return Err(SmilesError::MultipleFragments),
                c if c.is_ascii_alphabetic() || c == b'*' => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom);
                }
                _ => {
                    return Err(SmilesError::UnexpectedChar {
                        ch: char::from(c),
                        pos: start,
                    })
                }
            }
        }
        if let Some(b) = self.pending {
            return Err(SmilesError::DanglingBond { pos: b.pos });
        }
        if let Some(&(_, pos)) = self.branches.last() {
            return Err(SmilesError::UnbalancedParen { pos });
        }
        if let Some((&digit, _)) = self.rings.iter().next() {
            return Err(SmilesError::UnclosedRing { digit });
        }
        if self.atoms.is_empty() {
            return Err(SmilesError::Empty);
        }
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom) {
        let idx = self.atoms.len();
        let aromatic = atom.aromatic;
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let spec = self.pending.take();
            let order = default_order(spec, self.atoms[prev].aromatic && aromatic);
            self.bonds.push(Bond {
                a: prev,
                b: idx,
                order,
                stereo: spec.and_then(|s| s.stereo),
            });
        }
        self.prev = Some(idx);
    }

    fn ring_closure(&mut self) -> Result<(), SmilesError> {
        let start = self.pos;
        let digit = if self.text[self.pos] == b'%' {
            let d = self
                .text
                .get(self.pos + 1..self.pos + 3)
                .filter(|d| d.iter().all(u8::is_ascii_digit));
            let d = d.ok_or(SmilesError::UnexpectedChar {
                ch: '%',
                pos: start,
            })?;
            self.pos += 3;
            u16::from(d[0] - b'0') * 10 + u16::from(d[1] - b'0')
        } else {
            self.pos += 1;
            u16::from(self.text[start] - b'0')
        };
        let atom = self.prev.ok_or(SmilesError::UnexpectedChar {
            ch: char::from(self.text[start]),
            pos: start,
        })?;
        let spec = self.pending.take();
        match self.rings.remove(&digit) {
            None => {
                self.rings.insert(digit, RingOpen { atom, bond: spec });
            }
            Some(open) => {
                let chosen = match (open.bond, spec) {
                    (Some(a), Some(b)) if a.order != b.order => {
                        return Err(SmilesError::RingBondMismatch { digit })
                    }
                    (Some(a), _) => Some(a),
                    (None, b) => b,
                };
                let both_aromatic = self.atoms[open.atom].aromatic && self.atoms[atom].aromatic;
                self.bonds.push(Bond {
                    a: open.atom,
                    b: atom,
                    order: default_order(chosen, both_aromatic),
                    stereo: chosen.and_then(|s| s.stereo),
                });
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let start = self.pos;
        let c = self.text[self.pos];
        let next = self.text.get(self.pos + 1).copied();
        let (symbol, len) = match (c, next) {
            (b'C', Some(b'l')) => ("Cl", 2),
            (b'B', Some(b'r')) => ("Br", 2),
            (b'B', _) => ("B", 1),
            (b'C', _) => ("C", 1),
            (b'N', _) => ("N", 1),
            (b'O', _) => ("O", 1),
            (b'P', _) => ("P", 1),
            (b'S', _) => ("S", 1),
            (b'F', _) => ("F", 1),
            (b'I', _) => ("I", 1),
            (b'b', _) => ("b", 1),
            (b'c', _) => ("c", 1),
            (b'n', _) => ("n", 1),
            (b'o', _) => ("o", 1),
            (b'p', _) => ("p", 1),
            (b's', _) => ("s", 1),
            _ => {
                let mut symbol = char::from(c).to_string();
                if let Some(n) = next.filter(u8::is_ascii_lowercase) {
                    symbol.push(char::from(n));
                }
                return Err(SmilesError::UnknownAtom { symbol, pos: start });
            }
        };
        self.pos += len;
        let aromatic = symbol
            .chars()
            .next()
            .is_some_and(|ch| ch.is_ascii_lowercase());
        let element = Element::from_symbol(&capitalize(symbol)).expect("organic subset symbol");
        Ok(Atom::organic(element, aromatic))
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        let unclosed = SmilesError::UnclosedBracket { pos: open };

        let isotope = self.number().map(|n| n as u16);

        let sym_start = self.pos;
        let first = self.peek().ok_or(unclosed.clone())?;
        if !first.is_ascii_alphabetic() {
            return Err(SmilesError::UnknownAtom {
                symbol: char::from(first).to_string(),
                pos: sym_start,
            });
        }
        let (element, aromatic) = if first.is_ascii_lowercase() {
            // aromatic: "se" or a single letter
            if first == b's' && self.text.get(self.pos + 1) == Some(&b'e') {
                self.pos += 2;
                (Element::Se, true)
            } else {
                self.pos += 1;
                let sym = capitalize(&char::from(first).to_string());
                match Element::from_symbol(&sym).filter(|e| e.can_be_aromatic()) {
                    Some(e) => (e, true),
                    None => {
                        return Err(SmilesError::UnknownAtom {
                            symbol: char::from(first).to_string(),
                            pos: sym_start,
                        })
                    }
                }
            }
        } else {
            let second = self
                .text
                .get(self.pos + 1)
                .copied()
                .filter(u8::is_ascii_lowercase);
            let two = second.map(|s| format!("{}{}", char::from(first), char::from(s)));
            match two.as_deref().and_then(Element::from_symbol) {
                Some(e) => {
                    self.pos += 2;
                    (e, false)
                }
                None => match Element::from_symbol(&char::from(first).to_string()) {
                    Some(e) => {
                        self.pos += 1;
                        (e, false)
                    }
                    None => {
                        return Err(SmilesError::UnknownAtom {
                            symbol: two.unwrap_or_else(|| char::from(first).to_string()),
                            pos: sym_start,
                        })
                    }
                },
            }
        };

        let mut chirality = None;
        if self.peek() == Some(b'@') {
            self.pos += 1;
            chirality = Some(Chirality::CounterClockwise);
            if self.peek() == Some(b'@') {
                self.pos += 1;
                chirality = Some(Chirality::Clockwise);
            }
        }

        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = self.number().unwrap_or(1).min(8) as u8;
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.number() {
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            self.number();
        }

        match self.peek() {
            Some(b']') => self.pos += 1,
            None => return Err(unclosed),
            Some(c) => {
                return Err(SmilesError::UnexpectedChar {
                    ch: char::from(c),
                    pos: self.pos,
                })
            }
        }

        Ok(Atom {
            element,
            aromatic,
            charge: charge.clamp(-8, 8) as i8,
            implicit_h: hydrogens,
            isotope,
            chirality,
            bracket: true,
        })
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) && self.pos - start < 4 {
            self.pos += 1;
        }
        if self.pos == start {
            None
        } else {
            std::str::from_utf8(&self.text[start..self.pos])
                .ok()?
                .parse()
                .ok()
        }
    }
}

fn default_order(spec: Option<BondSpec>, both_aromatic: bool) -> BondOrder {
    match spec {
        Some(s) => s.order,
        None if both_aromatic => BondOrder::Aromatic,
        None => BondOrder::Single,
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + chars.as_str(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h_counts(smiles: &str) -> Vec<u8> {
        parse_smiles(smiles)
            .unwrap()
            .atoms()
            .iter()
            .map(|a| a.implicit_h)
            .collect()
    }

    #[test]
    fn piperidine_acid() {
        let m = parse_smiles("O=C(O)CN1CCC(O)CC1").unwrap();
        assert_eq!(m.heavy_atom_count(), 11);
        assert_eq!(m.rings().len(), 1);
        assert_eq!(m.rings()[0].len(), 6);
    }

    #[test]
    fn implicit_hydrogens() {
        assert_eq!(h_counts("C"), vec![4]);
        assert_eq!(h_counts("CC=O"), vec![3, 1, 0]);
        assert_eq!(h_counts("C#N"), vec![1, 0]);
        assert_eq!(h_counts("c1ccccc1"), vec![1; 6]);
        assert_eq!(h_counts("c1ccncc1"), vec![1, 1, 1, 0, 1, 1]);
        assert_eq!(h_counts("c1cc[nH]c1"), vec![1, 1, 1, 1, 1]);
        assert_eq!(h_counts("c1ccoc1"), vec![1, 1, 1, 0, 1]);
        assert_eq!(h_counts("Cn1ccnc1"), vec![3, 0, 1, 1, 0, 1]);
        assert_eq!(h_counts("CS(=O)(=O)C"), vec![3, 0, 0, 0, 3]);
        assert_eq!(h_counts("C[N+](C)(C)C"), vec![3, 0, 3, 3, 3]);
        assert_eq!(h_counts("CC(=O)[O-]"), vec![3, 0, 0, 0]);
        assert_eq!(h_counts("O=c1cc[nH]cc1"), vec![0, 0, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn fused_aromatics() {
        let m = parse_smiles("c1ccc2ccccc2c1").unwrap();
        assert_eq!(m.rings().len(), 2);
        let hs: u32 = m.atoms().iter().map(|a| u32::from(a.implicit_h)).sum();
        assert_eq!(hs, 8);
    }

    #[test]
    fn error_cases() {
        assert!(matches!(
            parse_smiles("C=CC@H(CNC(=O)c1ccccc1)N"),
            Err(SmilesError::StrayStereo { pos: 4 })
        ));
        assert_eq!(
            parse_smiles("C1CC"),
            Err(SmilesError::UnclosedRing { digit: 1 })
        );
        assert!(matches!(
            parse_smiles("CC(C"),
            Err(SmilesError::UnbalancedParen { .. })
        ));
        assert!(matches!(
            parse_smiles("CC)C"),
            Err(SmilesError::UnbalancedParen { .. })
        ));
        assert!(matches!(
            parse_smiles("CXC"),
            Err(SmilesError::UnknownAtom { .. })
        ));
        assert!(matches!(
            parse_smiles("C[Xx]C"),
            Err(SmilesError::UnknownAtom { .. })
        ));
        assert!(matches!(
            parse_smiles("C(C)(C)(C)(C)C"),
            Err(SmilesError::ValenceViolation { .. })
        ));
        assert!(matches!(
            parse_smiles("O=O=O"),
            Err(SmilesError::ValenceViolation { .. })
        ));
        assert!(matches!(
            parse_smiles("CC="),
            Err(SmilesError::DanglingBond { .. })
        ));
        assert!(matches!(
            parse_smiles("C[CH3"),
            Err(SmilesError::UnclosedBracket { .. })
        ));
        assert_eq!(parse_smiles("CC.O"), Err(SmilesError::MultipleFragments));
        assert_eq!(parse_smiles(""), Err(SmilesError::Empty));
        assert!(matches!(
            parse_smiles("C=1CC-1"),
            Err(SmilesError::RingBondMismatch { digit: 1 })
        ));
    }

    #[test]
    fn stereo_is_recorded() {
        let m = parse_smiles("N[C@@H](C)C(=O)O").unwrap();
        assert_eq!(m.atoms()[1].chirality, Some(Chirality::Clockwise));
        assert_eq!(m.atoms()[1].implicit_h, 1);
        let m = parse_smiles("F/C=C/F").unwrap();
        assert_eq!(m.bonds()[0].stereo, Some(BondStereo::Up));
        assert_eq!(m.bonds()[0].order, BondOrder::Single);
    }

    #[test]
    fn ring_bond_forms() {
        let m = parse_smiles("C%10CCCC%10").unwrap();
        assert_eq!(m.rings().len(), 1);
        let m = parse_smiles("C=1CCCC1").unwrap();
        assert_eq!(m.bonds().last().unwrap().order, BondOrder::Double);
        let m = parse_smiles("[13CH4]").unwrap();
        assert_eq!(m.atoms()[0].isotope, Some(13));
        let m = parse_smiles("[NH4+]").unwrap();
        assert_eq!(m.atoms()[0].charge, 1);
        let m = parse_smiles("c1cc[se]c1").unwrap();
        assert_eq!(m.atoms()[3].element, Element::Se);
    }
}
