use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Element, Molecule, HYDROGEN_WEIGHT};

const DEFAULT_LOGP_TABLE: &str = include_str!("../../data/logp_contributions.tsv");

#[derive(Debug, Error)]
pub enum LogpTableError {
    #[error("logP table line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("reading logP table: {0}")]
    Io(#[from] std::io::Error),
}

/// Additive per-heavy-atom logP contributions keyed by atom class
/// (element symbol, lowercase for aromatic).
#[derive(Clone, Debug, PartialEq)]
pub struct LogpTable {
    contributions: HashMap<String, f64>,
}

impl Default for LogpTable {
    fn default() -> Self {
        LogpTable::parse(DEFAULT_LOGP_TABLE).expect("bundled logP table is valid")
    }
}

impl LogpTable {
    pub fn parse(text: &str) -> Result<LogpTable, LogpTableError> {
        let mut contributions = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(class), Some(value), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(LogpTableError::Malformed {
                    line: i + 1,
                    reason: "expected two tab-separated columns".into(),
                });
            };
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| LogpTableError::Malformed {
                    line: i + 1,
                    reason: format!("bad contribution '{value}'"),
                })?;
            contributions.insert(class.trim().to_string(), value);
        }
        Ok(LogpTable { contributions })
    }

    pub fn load(path: &Path) -> Result<LogpTable, LogpTableError> {
        LogpTable::parse(&std::fs::read_to_string(path)?)
    }

    pub fn contribution(&self, element: Element, aromatic: bool) -> f64 {
        let symbol = element.symbol();
        if aromatic {
            if let Some(v) = self.contributions.get(&symbol.to_ascii_lowercase()) {
                return *v;
            }
        }
        self.contributions.get(symbol).copied().unwrap_or(0.0)
    }

    pub fn logp(&self, m: &Molecule) -> f64 {
        m.atoms()
            .iter()
            .filter(|a| a.element != Element::H)
            .map(|a| self.contribution(a.element, a.aromatic))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSet {
    pub mw: f64,
    pub logp: f64,
    pub hbd: usize,
    pub hba: usize,
    pub heavy_atoms: usize,
    pub aromatic_rings: usize,
    pub lipinski_pass_count: u8,
    pub qed_like: f64,
}

/// Descriptors with the bundled logP table.
pub fn descriptors(m: &Molecule) -> DescriptorSet {
    static TABLE: OnceLock<LogpTable> = OnceLock::new();
    descriptors_with(m, TABLE.get_or_init(LogpTable::default))
}

pub fn descriptors_with(m: &Molecule, table: &LogpTable) -> DescriptorSet {
    let mw = m
        .atoms()
        .iter()
        .map(|a| a.element.atomic_weight() + f64::from(a.implicit_h) * HYDROGEN_WEIGHT)
        .sum();
    let polar = |e: Element| matches!(e, Element::N | Element::O);
    let hbd = m
        .atoms()
        .iter()
        .filter(|a| polar(a.element) && a.implicit_h > 0)
        .count();
    let hba = m.atoms().iter().filter(|a| polar(a.element)).count();
    let aromatic_rings = m
        .rings()
        .iter()
        .filter(|r| r.iter().all(|&i| m.atoms()[i].aromatic))
        .count();
    let logp = table.logp(m);
    let lipinski_pass_count = [mw <= 500.0, logp <= 5.0, hbd <= 5, hba <= 10]
        .iter()
        .filter(|&&ok| ok)
        .count() as u8;
    DescriptorSet {
        mw,
        logp,
        hbd,
        hba,
        heavy_atoms: m.heavy_atom_count(),
        aromatic_rings,
        lipinski_pass_count,
        qed_like: qed_like(mw, logp, hbd, hba),
    }
}

fn gaussian(x: f64, mu: f64, sigma: f64) -> f64 {
    (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp()
}

fn falloff(x: usize, full: f64, zero: f64) -> f64 {
    ((zero - x as f64) / (zero - full)).clamp(0.0, 1.0)
}

/// Geometric mean of four desirability terms in [0, 1].
pub fn qed_like(mw: f64, logp: f64, hbd: usize, hba: usize) -> f64 {
    let terms = [
        gaussian(mw, 300.0, 100.0),
        gaussian(logp, 2.5, 2.0),
        falloff(hbd, 5.0, 10.0),
        falloff(hba, 10.0, 15.0),
    ];
    terms.iter().product::<f64>().powf(0.25).clamp(0.0, 1.0)
}
