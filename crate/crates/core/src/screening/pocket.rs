use serde::{Deserialize, Serialize};

use super::ScreeningError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pocket {
    /// Pocket centre (Å). Carried for external scorers; the surrogate ignores it.
    pub center: [f64; 3],
    pub polar_sites: u32,
    pub acceptor_sites: u32,
    pub seed: u64,
}

/// Parses `x y z polar_sites acceptor_sites seed` lines; `#` starts a comment.
pub fn parse_pockets(text: &str) -> Result<Vec<Pocket>, ScreeningError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| ScreeningError::PocketParse {
            line: i + 1,
            reason,
        };
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", cols.len())));
        }
        let mut center = [0.0; 3];
        for (k, c) in center.iter_mut().enumerate() {
            *c = cols[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad coordinate '{}'", cols[k])))?;
        }
        let count = |s: &str| {
            s.parse::<u32>()
                .map_err(|_| err(format!("bad site count '{s}'")))
        };
        out.push(Pocket {
            center,
            polar_sites: count(cols[3])?,
            acceptor_sites: count(cols[4])?,
            seed: cols[5]
                .parse()
                .map_err(|_| err(format!("bad seed '{}'", cols[5])))?,
        });
    }
    Ok(out)
}
