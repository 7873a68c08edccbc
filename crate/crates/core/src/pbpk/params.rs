use serde::{Deserialize, Serialize};

use super::PbpkError;

/// Hepatic blood flow (L/h).
pub const QH: f64 = 90.0;
/// Renal blood flow (L/h).
pub const QK: f64 = 66.0;
/// Non-eliminating tissue blood flow (L/h).
pub const QP: f64 = 50.0;
/// Glomerular filtration rate (L/h).
pub const GFR: f64 = 7.2;
pub const VC_PER_KG: f64 = 0.045;
pub const VL_PER_KG: f64 = 0.025;
pub const VK_PER_KG: f64 = 0.004;
pub const VP_PER_KG: f64 = 0.25;
pub const DEFAULT_BW: f64 = 60.0;
/// Absorption rate constant used when the ADMET source gives none (1/h).
pub const DEFAULT_KA: f64 = 1.0;

/// Predicted ADMET quantities. Half-life and clearances may be negative
/// (that is what the upstream predictor produced); derivation rejects them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdmetProfile {
    /// Plasma protein binding fraction.
    pub ppb: f64,
    /// Steady-state volume of distribution (L).
    pub vss: f64,
    /// Half-life (h).
    pub t_half: f64,
    /// Systemic clearance (L/h), if predicted directly.
    pub cl_sys: Option<f64>,
    /// Renal clearance (L/h), if predicted directly.
    pub cl_renal: Option<f64>,
    /// Other reported clearances (L/h); only their sign is used downstream.
    pub cl_hepatic: Option<f64>,
    pub cl_microsomal: Option<f64>,
    /// Caco-2 permeability (log cm/s).
    pub caco2: Option<f64>,
    pub logp: Option<f64>,
    pub qed: Option<f64>,
    pub bioavailability: Option<f64>,
    pub dili: Option<f64>,
    pub herg: Option<f64>,
    pub carcinogenicity: Option<f64>,
    /// Absorption rate constant (1/h).
    pub ka: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PbpkParams {
    pub fu: f64,
    pub cl_sys: f64,
    pub cl_int: f64,
    pub cl_h: f64,
    pub cl_r: f64,
    pub kp: f64,
    pub kpk: f64,
    pub ka: f64,
    pub bw: f64,
    pub vc: f64,
    pub vl: f64,
    pub vk: f64,
    pub vp: f64,
    pub qh: f64,
    pub qk: f64,
    pub qp: f64,
    pub gfr: f64,
}

/// Back-calculates intrinsic clearance from systemic clearance under the
/// well-stirred liver model.
pub fn intrinsic_clearance(cl_sys: f64, fu: f64, qh: f64) -> f64 {
    cl_sys * qh / (fu * (qh - cl_sys))
}

/// Well-stirred hepatic clearance.
pub fn well_stirred_clearance(cl_int: f64, fu: f64, qh: f64) -> f64 {
    qh * fu * cl_int / (qh + fu * cl_int)
}

/// Derives PBPK parameters from an ADMET profile for body weight `bw` (kg).
pub fn derive_params(admet: &AdmetProfile, bw: f64) -> Result<PbpkParams, PbpkError> {
    if !(bw.is_finite() && bw > 0.0) {
        return Err(PbpkError::NonphysicalParams(format!("body weight {bw}")));
    }
    if !(0.0..1.0).contains(&admet.ppb) {
        return Err(PbpkError::InvalidFraction {
            name: "ppb",
            value: admet.ppb,
        });
    }
    let fu = 1.0 - admet.ppb;
    let vc = VC_PER_KG * bw;
    let vp = VP_PER_KG * bw;
    if !admet.t_half.is_finite() || admet.t_half <= 0.0 || admet.cl_sys.is_some_and(|c| !(c > 0.0))
    {
        return Err(PbpkError::NonphysicalClearance {
            t_half: admet.t_half,
            cl_sys: admet.cl_sys,
        });
    }
    if !admet.vss.is_finite() || admet.vss < vc * (1.0 - 1e-9) {
        return Err(PbpkError::VssTooSmall { vss: admet.vss, vc });
    }
    let cl_sys = admet
        .cl_sys
        .unwrap_or(std::f64::consts::LN_2 / admet.t_half * admet.vss);
    if !(cl_sys > 0.0) {
        return Err(PbpkError::NonphysicalClearance {
            t_half: admet.t_half,
            cl_sys: Some(cl_sys),
        });
    }
    if cl_sys >= QH {
        return Err(PbpkError::FlowLimitExceeded { cl_sys, qh: QH });
    }
    let cl_int = intrinsic_clearance(cl_sys, fu, QH);
    // vss equal to vc up to rounding is the zero-partition boundary
    let kp = if (admet.vss - vc).abs() <= 1e-9 * vc {
        0.0
    } else {
        (admet.vss - vc) / vp
    };
    Ok(PbpkParams {
        fu,
        cl_sys,
        cl_int,
        cl_h: well_stirred_clearance(cl_int, fu, QH),
        cl_r: admet.cl_renal.unwrap_or(fu * GFR),
        kp,
        kpk: kp,
        ka: admet.ka.unwrap_or(DEFAULT_KA),
        bw,
        vc,
        vl: VL_PER_KG * bw,
        vk: VK_PER_KG * bw,
        vp,
        qh: QH,
        qk: QK,
        qp: QP,
        gfr: GFR,
    })
}

impl PbpkParams {
    /// Checks the invariants the simulator relies on.
    pub fn validate(&self) -> Result<(), PbpkError> {
        let positive = [
            ("vc", self.vc),
            ("vl", self.vl),
            ("vk", self.vk),
            ("vp", self.vp),
            ("qh", self.qh),
            ("qk", self.qk),
            ("qp", self.qp),
            ("kp", self.kp),
            ("kpk", self.kpk),
            ("ka", self.ka),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(PbpkError::NonphysicalParams(format!("{name} = {v}")));
            }
        }
        if !(self.fu > 0.0 && self.fu <= 1.0) {
            return Err(PbpkError::NonphysicalParams(format!("fu = {}", self.fu)));
        }
        for (name, v) in [("cl_int", self.cl_int), ("cl_r", self.cl_r)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(PbpkError::NonphysicalParams(format!("{name} = {v}")));
            }
        }
        Ok(())
    }

    /// Clearance that relates an IV dose to the central AUC:
    /// `CL_h + Qk·CL_r / (Qk + CL_r)`.
    pub fn effective_clearance(&self) -> f64 {
        self.cl_h + self.qk * self.cl_r / (self.qk + self.cl_r)
    }
}
