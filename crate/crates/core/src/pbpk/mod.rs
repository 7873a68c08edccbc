//! ADMET to PBPK parameter derivation, five-compartment simulation and PK
//! metrics.

mod metrics;
mod model;
pub mod ode;
mod params;
mod regimen;

pub use metrics::{pk_metrics, pk_metrics_from, PkMetrics};
pub use model::{
    disposition_matrix, simulate, simulate_batch, simulate_sampled, terminal_half_life,
    ConcProfile, PROFILE_CSV_HEADER, SAMPLE_INTERVAL_H,
};
pub use params::{
    derive_params, intrinsic_clearance, well_stirred_clearance, AdmetProfile, PbpkParams,
    DEFAULT_BW, DEFAULT_KA, GFR, QH, QK, QP, VC_PER_KG, VK_PER_KG, VL_PER_KG, VP_PER_KG,
};
pub use regimen::{DoseRegimen, Route};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PbpkError {
    #[error("{name} must lie in [0, 1), got {value}")]
    InvalidFraction { name: &'static str, value: f64 },
    #[error("nonphysical clearance (half-life {t_half} h, CL_sys {cl_sys:?} L/h)")]
    NonphysicalClearance { t_half: f64, cl_sys: Option<f64> },
    #[error("systemic clearance {cl_sys} L/h reaches hepatic blood flow {qh} L/h")]
    FlowLimitExceeded { cl_sys: f64, qh: f64 },
    #[error("Vss {vss} L is below the central volume {vc} L")]
    VssTooSmall { vss: f64, vc: f64 },
    #[error("nonphysical parameter: {0}")]
    NonphysicalParams(String),
    #[error("invalid regimen: {0}")]
    InvalidRegimen(String),
    #[error("integration failed: {0}")]
    IntegrationFailure(String),
    #[error("profile needs at least two samples")]
    EmptyProfile,
}
