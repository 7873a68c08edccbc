//! Five-compartment flow-limited model: gut, liver, kidney, non-eliminating
//! tissue and central plasma.
//!
//! Tissue outflow is at venous equilibrium (`C_tissue / Kp`). Hepatic
//! elimination acts on the unbound liver outflow, `fu·CL_int·C_l/Kp`, so the
//! steady-state hepatic extraction equals the well-stirred `CL_h`. Oral doses
//! are absorbed first-order from the gut into the liver (first pass); IV
//! doses enter the central compartment. `Kp` is used for both liver and
//! non-eliminating tissue, `Kpk` for kidney.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::ode::Dopri5;
use super::{DoseRegimen, PbpkError, PbpkParams, Route};
use crate::exec::Execution;

/// Output sampling interval (h): 5 minutes.
pub const SAMPLE_INTERVAL_H: f64 = 5.0 / 60.0;
pub const RTOL: f64 = 1e-8;
pub const ATOL: f64 = 1e-10;

const GUT: usize = 0;
const LIVER: usize = 1;
const KIDNEY: usize = 2;
const PERIPH: usize = 3;
const CENTRAL: usize = 4;
const ELIM_HEP: usize = 5;
const ELIM_REN: usize = 6;
const AUC: usize = 7;
const NSTATE: usize = 8;

const TIME_EPS: f64 = 1e-9;
// Undershoot below zero up to a few multiples of the absolute tolerance is
// solver noise on a decayed compartment, not a modelling error.
const CLAMP_TOL: f64 = 10.0 * ATOL;

/// Time-sampled simulation output. Concentrations in mg/L (= µg/mL),
/// amounts in mg.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcProfile {
    pub route: Route,
    pub time_h: Vec<f64>,
    pub central: Vec<f64>,
    pub liver: Vec<f64>,
    pub kidney: Vec<f64>,
    pub periph: Vec<f64>,
    pub gut: Vec<f64>,
    pub elim_hep: Vec<f64>,
    pub elim_ren: Vec<f64>,
    /// Integral of the central concentration from 0, carried as an ODE
    /// state (exact up to solver tolerance, unlike the grid trapezoid).
    pub auc_central: Vec<f64>,
    /// Dose administered up to each sample (mg).
    pub administered: Vec<f64>,
}

pub const PROFILE_CSV_HEADER: &str =
    "time_h,central_ugml,liver_ugml,kidney_ugml,periph_ugml,gut_mg,elim_hep_mg,elim_ren_mg";

impl ConcProfile {
    pub fn len(&self) -> usize {
        self.time_h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_h.is_empty()
    }

    /// Total drug in the body, eliminated, and still in the gut at sample `i`.
    pub fn accounted_amount(&self, p: &PbpkParams, i: usize) -> f64 {
        self.gut[i]
            + p.vl * self.liver[i]
            + p.vk * self.kidney[i]
            + p.vp * self.periph[i]
            + p.vc * self.central[i]
            + self.elim_hep[i]
            + self.elim_ren[i]
    }

    /// Largest `|accounted − administered| / total administered` over samples.
    pub fn mass_balance_error(&self, p: &PbpkParams) -> f64 {
        let total = self.administered.last().copied().unwrap_or(0.0);
        if total <= 0.0 {
            return 0.0;
        }
        (0..self.len())
            .map(|i| (self.accounted_amount(p, i) - self.administered[i]).abs() / total)
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(PROFILE_CSV_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.time_h[i],
                self.central[i],
                self.liver[i],
                self.kidney[i],
                self.periph[i],
                self.gut[i],
                self.elim_hep[i],
                self.elim_ren[i]
            ));
        }
        out
    }
}

/// Right-hand side of the unit system with a constant infusion rate.
fn rhs(p: &PbpkParams, infusion_rate: f64) -> impl Fn(f64, &[f64; NSTATE]) -> [f64; NSTATE] + '_ {
    let qc = p.qh + p.qk + p.qp;
    move |_t, y| {
        let absorbed = p.ka * y[GUT];
        let liver_out = y[LIVER] / p.kp;
        let kidney_out = y[KIDNEY] / p.kpk;
        let periph_out = y[PERIPH] / p.kp;
        let hep = p.fu * p.cl_int * liver_out;
        let ren = p.cl_r * kidney_out;
        let mut d = [0.0; NSTATE];
        d[GUT] = -absorbed;
        d[LIVER] = (p.qh * y[CENTRAL] + absorbed - p.qh * liver_out - hep) / p.vl;
        d[KIDNEY] = (p.qk * y[CENTRAL] - p.qk * kidney_out - ren) / p.vk;
        d[PERIPH] = (p.qp * y[CENTRAL] - p.qp * periph_out) / p.vp;
        d[CENTRAL] = (p.qh * liver_out + p.qk * kidney_out + p.qp * periph_out - qc * y[CENTRAL]
            + infusion_rate)
            / p.vc;
        d[ELIM_HEP] = hep;
        d[ELIM_REN] = ren;
        d[AUC] = y[CENTRAL];
        d
    }
}

/// Simulates `regimen` over `[0, horizon_h]`, sampled every 5 minutes.
///
/// The system is linear in the dose, so it is integrated for a unit dose and
/// scaled; doubling the dose therefore doubles every sample exactly.
pub fn simulate(
    p: &PbpkParams,
    regimen: &DoseRegimen,
    horizon_h: f64,
) -> Result<ConcProfile, PbpkError> {
    simulate_sampled(p, regimen, horizon_h, SAMPLE_INTERVAL_H)
}

pub fn simulate_sampled(
    p: &PbpkParams,
    regimen: &DoseRegimen,
    horizon_h: f64,
    dt_h: f64,
) -> Result<ConcProfile, PbpkError> {
    p.validate()?;
    regimen.validate()?;
    if !(horizon_h.is_finite() && horizon_h > 0.0) {
        return Err(PbpkError::InvalidRegimen(format!(
            "horizon must be > 0, got {horizon_h}"
        )));
    }
    if !(dt_h.is_finite() && dt_h > 0.0) {
        return Err(PbpkError::InvalidRegimen(format!(
            "sample interval must be > 0, got {dt_h}"
        )));
    }
    let n_samples = (horizon_h / dt_h + TIME_EPS).floor() as usize + 1;
    let grid: Vec<f64> = (0..n_samples).map(|k| k as f64 * dt_h).collect();

    let duration = regimen.infusion_h.unwrap_or(0.0);
    let doses: Vec<f64> = regimen
        .times_h
        .iter()
        .copied()
        .filter(|&t| t <= horizon_h + TIME_EPS)
        .collect();
    let mut breaks: Vec<f64> = doses.clone();
    if regimen.route == Route::IvInfusion {
        breaks.extend(
            doses
                .iter()
                .map(|t| t + duration)
                .filter(|&t| t < horizon_h),
        );
    }
    let mut stops: Vec<(f64, bool)> = grid.iter().map(|&t| (t, true)).collect();
    for b in breaks {
        if !stops.iter().any(|(t, _)| (t - b).abs() < TIME_EPS) {
            stops.push((b, false));
        }
    }
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));

    let infusion_rate_at = |t: f64| -> f64 {
        doses
            .iter()
            .filter(|&&d| d <= t + TIME_EPS && t < d + duration - TIME_EPS)
            .count() as f64
            / duration
    };
    let administered_at = |t: f64| -> f64 {
        doses
            .iter()
            .map(|&d| match regimen.route {
                Route::IvInfusion => ((t - d) / duration).clamp(0.0, 1.0),
                _ => {
                    if d <= t + TIME_EPS {
                        1.0
                    } else {
                        0.0
                    }
                }
            })
            .sum()
    };

    let mut solver = Dopri5::new(RTOL, ATOL);
    let mut y = [0.0; NSTATE];
    let mut t = 0.0;
    let mut samples: Vec<(f64, [f64; NSTATE], f64)> = Vec::with_capacity(n_samples);
    for (stop, is_sample) in stops {
        if stop > t {
            let rate = if regimen.route == Route::IvInfusion {
                infusion_rate_at(0.5 * (t + stop))
            } else {
                0.0
            };
            solver
                .integrate(&rhs(p, rate), t, stop, &mut y)
                .map_err(|e| PbpkError::IntegrationFailure(e.to_string()))?;
            t = stop;
        }
        let impulses = doses
            .iter()
            .filter(|&&d| (d - stop).abs() < TIME_EPS)
            .count() as f64;
        match regimen.route {
            Route::Oral => y[GUT] += impulses,
            Route::IvBolus => y[CENTRAL] += impulses / p.vc,
            Route::IvInfusion => {}
        }
        if is_sample {
            samples.push((stop, y, administered_at(stop)));
        }
    }

    let scale = regimen.dose_mg;
    let clean = |v: f64| {
        if (-CLAMP_TOL..0.0).contains(&v) {
            0.0
        } else {
            v * scale
        }
    };
    let column = |idx: usize| {
        samples
            .iter()
            .map(|(_, s, _)| clean(s[idx]))
            .collect::<Vec<_>>()
    };
    Ok(ConcProfile {
        route: regimen.route,
        time_h: samples.iter().map(|(t, _, _)| *t).collect(),
        central: column(CENTRAL),
        liver: column(LIVER),
        kidney: column(KIDNEY),
        periph: column(PERIPH),
        gut: column(GUT),
        elim_hep: column(ELIM_HEP),
        elim_ren: column(ELIM_REN),
        auc_central: column(AUC),
        administered: samples.iter().map(|(_, _, a)| a * scale).collect(),
    })
}

/// Simulates one regimen for many parameter sets.
pub fn simulate_batch(
    params: &[PbpkParams],
    regimen: &DoseRegimen,
    horizon_h: f64,
    exec: Execution,
) -> Vec<Result<ConcProfile, PbpkError>> {
    exec.map(params, |p| simulate(p, regimen, horizon_h))
}

/// Linear disposition system on `(C_l, C_k, C_p, C_c)` without input.
pub fn disposition_matrix(p: &PbpkParams) -> Matrix4<f64> {
    let qc = p.qh + p.qk + p.qp;
    Matrix4::new(
        -(p.qh + p.fu * p.cl_int) / (p.vl * p.kp),
        0.0,
        0.0,
        p.qh / p.vl,
        0.0,
        -(p.qk + p.cl_r) / (p.vk * p.kpk),
        0.0,
        p.qk / p.vk,
        0.0,
        0.0,
        -p.qp / (p.vp * p.kp),
        p.qp / p.vp,
        p.qh / (p.vc * p.kp),
        p.qk / (p.vc * p.kpk),
        p.qp / (p.vc * p.kp),
        -qc / p.vc,
    )
}

/// Terminal elimination half-life (h) from the slowest disposition mode.
pub fn terminal_half_life(p: &PbpkParams) -> f64 {
    let slowest = disposition_matrix(p)
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re.abs())
        .fold(f64::INFINITY, f64::min);
    std::f64::consts::LN_2 / slowest
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pbpk::{derive_params, AdmetProfile};
    use approx::assert_relative_eq;

    fn params() -> PbpkParams {
        derive_params(
            &AdmetProfile {
                ppb: 0.2,
                vss: 40.0,
                t_half: 6.0,
                ..Default::default()
            },
            60.0,
        )
        .unwrap()
    }

    #[test]
    fn bolus_peak_is_dose_over_vc() {
        let prof = simulate(&params(), &DoseRegimen::single(Route::IvBolus, 200.0), 24.0).unwrap();
        assert_relative_eq!(prof.central[0], 200.0 / 2.7, max_relative = 1e-12);
        assert_eq!(prof.time_h[0], 0.0);
        assert_eq!(prof.len(), 24 * 12 + 1);
    }

    #[test]
    fn infusion_peaks_at_end() {
        let prof = simulate(&params(), &DoseRegimen::infusion(200.0, 1.0), 24.0).unwrap();
        let imax = (0..prof.len())
            .max_by(|&a, &b| prof.central[a].total_cmp(&prof.central[b]))
            .unwrap();
        assert!((prof.time_h[imax] - 1.0).abs() < 1e-9);
        assert_relative_eq!(*prof.administered.last().unwrap(), 200.0);
    }

    #[test]
    fn oral_gut_depletes() {
        let prof = simulate(&params(), &DoseRegimen::single(Route::Oral, 200.0), 12.0).unwrap();
        assert_eq!(prof.central[0], 0.0);
        assert!(prof.gut.windows(2).all(|w| w[1] < w[0]));
        assert!(prof.mass_balance_error(&params()) < 1e-9);
    }

    #[test]
    fn half_life_is_positive() {
        let t = terminal_half_life(&params());
        assert!(t > 0.0 && t.is_finite());
    }
}
