//! Gaussian-process surrogate over fingerprints and LCB selection.

use std::collections::BTreeSet;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::OptimizerError;
use crate::hashing::hash_str;
use crate::molgraph::{tanimoto, Fingerprint};

pub const LENGTH_SCALE: f64 = 0.5;
pub const NOISE_VARIANCE: f64 = 1e-6;
pub const SIGNAL_VARIANCE_FLOOR: f64 = 1e-3;
const MAX_JITTER: f64 = 1e-4;

/// Matérn 5/2 correlation at distance `d`.
pub fn matern52(d: f64, length_scale: f64) -> f64 {
    let r = 5f64.sqrt() * d / length_scale;
    (1.0 + r + r * r / 3.0) * (-r).exp()
}

/// Jaccard distance `1 - tanimoto`.
pub fn jaccard_distance(a: &Fingerprint, b: &Fingerprint) -> f64 {
    1.0 - tanimoto(a, b).expect("fingerprints share a width")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub canonical_smiles: String,
    #[serde(skip)]
    pub fingerprint: Option<Fingerprint>,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct GpModel {
    train: Vec<Fingerprint>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    pub prior_mean: f64,
    pub signal_variance: f64,
    pub length_scale: f64,
    /// Noise plus whatever jitter the factorisation needed.
    pub noise: f64,
}

impl GpModel {
    fn kernel(&self, a: &Fingerprint, b: &Fingerprint) -> f64 {
        self.signal_variance * matern52(jaccard_distance(a, b), self.length_scale)
    }

    /// Posterior mean and variance at `x`.
    pub fn predict(&self, x: &Fingerprint) -> (f64, f64) {
        let k = DVector::from_iterator(
            self.train.len(),
            self.train.iter().map(|t| self.kernel(t, x)),
        );
        let mean = self.prior_mean + k.dot(&self.alpha);
        let v = self.chol.solve(&k);
        let var = (self.signal_variance - k.dot(&v)).max(0.0);
        (mean, var)
    }
}

/// Exact GP fit with fixed hyperparameters: prior mean is the sample mean,
/// signal variance the sample variance (floored), noise 1e-6. Jitter is
/// escalated by decades up to 1e-4 if the Cholesky factorisation fails.
pub fn gp_fit(train: &[(String, Fingerprint, f64)]) -> Result<GpModel, OptimizerError> {
    gp_fit_with(train, LENGTH_SCALE)
}

pub fn gp_fit_with(
    train: &[(String, Fingerprint, f64)],
    length_scale: f64,
) -> Result<GpModel, OptimizerError> {
    if train.is_empty() {
        return Err(OptimizerError::EmptyTraining);
    }
    let mut seen = BTreeSet::new();
    if let Some((dup, _, _)) = train.iter().find(|(s, _, _)| !seen.insert(s.as_str())) {
        return Err(OptimizerError::DuplicateInput(dup.clone()));
    }
    let n = train.len();
    let y = DVector::from_iterator(n, train.iter().map(|t| t.2));
    let mean = y.mean();
    let var =
        (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).max(SIGNAL_VARIANCE_FLOOR);
    let fps: Vec<Fingerprint> = train.iter().map(|t| t.1.clone()).collect();
    let base = DMatrix::from_fn(n, n, |i, j| {
        var * matern52(jaccard_distance(&fps[i], &fps[j]), length_scale)
    });
    let mut noise = NOISE_VARIANCE;
    let chol = loop {
        let k = &base + DMatrix::identity(n, n) * noise;
        if let Some(c) = Cholesky::new(k) {
            break c;
        }
        if noise >= MAX_JITTER {
            return Err(OptimizerError::SingularKernel);
        }
        noise = (noise * 10.0).min(MAX_JITTER);
    };
    let centered = y.add_scalar(-mean);
    let alpha = chol.solve(&centered);
    Ok(GpModel {
        train: fps,
        chol,
        alpha,
        prior_mean: mean,
        signal_variance: var,
        length_scale,
        noise,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Acquisition {
    pub canonical_smiles: String,
    pub mean: f64,
    pub std: f64,
    pub lcb: f64,
}

/// Lower confidence bound `mean - kappa * std` for every candidate, then the
/// `k` smallest. Ties are broken by the FNV hash of the SMILES, then the
/// SMILES itself.
pub fn lcb_select(
    model: &GpModel,
    candidates: &[(String, Fingerprint)],
    k: usize,
    kappa: f64,
) -> Vec<Acquisition> {
    let mut scored: Vec<Acquisition> = candidates
        .iter()
        .map(|(s, fp)| {
            let (mean, var) = model.predict(fp);
            let std = var.sqrt();
            Acquisition {
                canonical_smiles: s.clone(),
                mean,
                std,
                lcb: mean - kappa * std,
            }
        })
        .collect();
    scored.sort_by(|a, b| {
        a.lcb
            .total_cmp(&b.lcb)
            .then_with(|| hash_str(&a.canonical_smiles).cmp(&hash_str(&b.canonical_smiles)))
            .then_with(|| a.canonical_smiles.cmp(&b.canonical_smiles))
    });
    scored.truncate(k);
    scored
}
