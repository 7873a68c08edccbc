use serde::{Deserialize, Serialize};

/// Elements accepted by the SMILES reader.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    H,
    Li,
    B,
    C,
    N,
    O,
    F,
    Na,
    Mg,
    Si,
    P,
    S,
    Cl,
    K,
    Ca,
    Zn,
    Se,
    Br,
    I,
}

/// Standard atomic weight of hydrogen, used for implicit hydrogens.
pub const HYDROGEN_WEIGHT: f64 = 1.008;

impl Element {
    pub fn from_symbol(sym: &str) -> Option<Element> {
        use Element::*;
        Some(match sym {
            "H" => H,
            "Li" => Li,
            "B" => B,
            "C" => C,
            "N" => N,
            "O" => O,
            "F" => F,
            "Na" => Na,
            "Mg" => Mg,
            "Si" => Si,
            "P" => P,
            "S" => S,
            "Cl" => Cl,
            "K" => K,
            "Ca" => Ca,
            "Zn" => Zn,
            "Se" => Se,
            "Br" => Br,
            "I" => I,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        use Element::*;
        match self {
            H => "H",
            Li => "Li",
            B => "B",
            C => "C",
            N => "N",
            O => "O",
            F => "F",
            Na => "Na",
            Mg => "Mg",
            Si => "Si",
            P => "P",
            S => "S",
            Cl => "Cl",
            K => "K",
            Ca => "Ca",
            Zn => "Zn",
            Se => "Se",
            Br => "Br",
            I => "I",
        }
    }

    pub fn atomic_number(self) -> u8 {
        use Element::*;
        match self {
            H => 1,
            Li => 3,
            B => 5,
            C => 6,
            N => 7,
            O => 8,
            F => 9,
            Na => 11,
            Mg => 12,
            Si => 14,
            P => 15,
            S => 16,
            Cl => 17,
            K => 19,
            Ca => 20,
            Zn => 30,
            Se => 34,
            Br => 35,
            I => 53,
        }
    }

    /// IUPAC conventional standard atomic weight (g/mol).
    pub fn atomic_weight(self) -> f64 {
        use Element::*;
        match self {
            H => HYDROGEN_WEIGHT,
            Li => 6.94,
            B => 10.81,
            C => 12.011,
            N => 14.007,
            O => 15.999,
            F => 18.998,
            Na => 22.990,
            Mg => 24.305,
            Si => 28.085,
            P => 30.974,
            S => 32.06,
            Cl => 35.45,
            K => 39.098,
            Ca => 40.078,
            Zn => 65.38,
            Se => 78.971,
            Br => 79.904,
            I => 126.904,
        }
    }

    /// Atoms that may be written without brackets.
    pub fn is_organic_subset(self) -> bool {
        use Element::*;
        matches!(self, B | C | N | O | P | S | F | Cl | Br | I)
    }

    /// Elements that have a lowercase aromatic spelling.
    pub fn can_be_aromatic(self) -> bool {
        use Element::*;
        matches!(self, B | C | N | O | P | S | Se)
    }

    pub fn is_chalcogen(self) -> bool {
        matches!(self, Element::O | Element::S | Element::Se)
    }

    fn is_metal(self) -> bool {
        use Element::*;
        matches!(self, Li | Na | K | Mg | Ca | Zn)
    }

    fn valence_electrons(self) -> i32 {
        use Element::*;
        match self {
            H | Li | Na | K => 1,
            Mg | Ca | Zn => 2,
            B => 3,
            C | Si => 4,
            N | P => 5,
            O | S | Se => 6,
            F | Cl | Br | I => 7,
        }
    }

    fn second_row(self) -> bool {
        use Element::*;
        matches!(self, B | C | N | O | F)
    }

    /// Allowed total valences (bond orders + hydrogens) for this element with
    /// the given formal charge, ascending. Charged atoms take the valences of
    /// their isoelectronic neighbour (N+ like C, O- like F, ...).
    pub fn allowed_valences(self, charge: i8) -> Vec<u8> {
        if self == Element::H {
            return if charge == 0 { vec![1] } else { vec![0] };
        }
        let effective = self.valence_electrons() - i32::from(charge);
        if self.is_metal() {
            return vec![effective.max(0) as u8];
        }
        let heavy = !self.second_row();
        match effective {
            i32::MIN..=0 => vec![0],
            1 | 2 => vec![effective as u8],
            3 => vec![3],
            4 => vec![4],
            5 if heavy => vec![3, 5],
            5 => vec![3],
            6 if heavy => vec![2, 4, 6],
            6 => vec![2],
            7 => vec![1],
            _ => vec![0],
        }
    }
}
