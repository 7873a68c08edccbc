use serde::{Deserialize, Serialize};

use super::{ConcProfile, PbpkError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PkMetrics {
    /// Peak central concentration (µg/mL).
    pub cmax: f64,
    /// Time of the first grid sample at the peak (h).
    pub tmax: f64,
    /// Trapezoidal area under the central curve (µg·h/mL).
    pub auc: f64,
}

/// Cmax/Tmax/AUC of the central compartment.
pub fn pk_metrics(profile: &ConcProfile) -> Result<PkMetrics, PbpkError> {
    pk_metrics_from(&profile.time_h, &profile.central)
}

/// Cmax/Tmax (first occurrence of the maximum) and trapezoid AUC of one
/// sampled curve.
pub fn pk_metrics_from(time_h: &[f64], conc: &[f64]) -> Result<PkMetrics, PbpkError> {
    if time_h.len() < 2 || time_h.len() != conc.len() {
        return Err(PbpkError::EmptyProfile);
    }
    let mut imax = 0;
    for (i, &c) in conc.iter().enumerate() {
        if c > conc[imax] {
            imax = i;
        }
    }
    let auc = time_h
        .windows(2)
        .zip(conc.windows(2))
        .map(|(t, c)| 0.5 * (t[1] - t[0]) * (c[0] + c[1]))
        .sum();
    Ok(PkMetrics {
        cmax: conc[imax],
        tmax: time_h[imax],
        auc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle() {
        let m = pk_metrics_from(&[0.0, 1.0, 2.0], &[0.0, 2.0, 0.0]).unwrap();
        assert_eq!((m.cmax, m.tmax, m.auc), (2.0, 1.0, 2.0));
    }

    #[test]
    fn constant_profile() {
        let t: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let m = pk_metrics_from(&t, &[3.0; 11]).unwrap();
        assert_eq!((m.cmax, m.tmax), (3.0, 0.0));
        assert!((m.auc - 15.0).abs() < 1e-12);
    }

    #[test]
    fn too_short() {
        assert_eq!(
            pk_metrics_from(&[0.0], &[1.0]),
            Err(PbpkError::EmptyProfile)
        );
    }
}
