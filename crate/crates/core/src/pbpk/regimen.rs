use serde::{Deserialize, Serialize};

use super::PbpkError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Oral,
    IvBolus,
    IvInfusion,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Oral => "oral",
            Route::IvBolus => "iv_bolus",
            Route::IvInfusion => "iv_infusion",
        }
    }

    pub fn parse(s: &str) -> Option<Route> {
        match s {
            "oral" => Some(Route::Oral),
            "iv_bolus" => Some(Route::IvBolus),
            "iv_infusion" => Some(Route::IvInfusion),
            _ => None,
        }
    }
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A dosing schedule: the same dose given by one route at each listed time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoseRegimen {
    pub route: Route,
    /// Dose per administration (mg).
    pub dose_mg: f64,
    /// Infusion duration (h); infusion route only.
    pub infusion_h: Option<f64>,
    /// Administration times (h), ascending.
    pub times_h: Vec<f64>,
}

/// On-disk regimen description (TOML key-value pairs). Give either
/// `times_h` or `every_h` + `count`; neither means a single dose at t = 0.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegimenFile {
    route: String,
    dose_mg: f64,
    infusion_h: Option<f64>,
    times_h: Option<Vec<f64>>,
    every_h: Option<f64>,
    count: Option<usize>,
}

impl DoseRegimen {
    pub fn single(route: Route, dose_mg: f64) -> DoseRegimen {
        DoseRegimen {
            route,
            dose_mg,
            infusion_h: None,
            times_h: vec![0.0],
        }
    }

    pub fn infusion(dose_mg: f64, duration_h: f64) -> DoseRegimen {
        DoseRegimen {
            route: Route::IvInfusion,
            dose_mg,
            infusion_h: Some(duration_h),
            times_h: vec![0.0],
        }
    }

    /// `count` doses every `every_h` hours starting at 0.
    pub fn repeated(route: Route, dose_mg: f64, every_h: f64, count: usize) -> DoseRegimen {
        DoseRegimen {
            route,
            dose_mg,
            infusion_h: None,
            times_h: (0..count).map(|i| i as f64 * every_h).collect(),
        }
    }

    pub fn with_infusion(mut self, duration_h: f64) -> DoseRegimen {
        self.infusion_h = Some(duration_h);
        self
    }

    pub fn total_dose(&self) -> f64 {
        self.dose_mg * self.times_h.len() as f64
    }

    pub fn validate(&self) -> Result<(), PbpkError> {
        if !(self.dose_mg.is_finite() && self.dose_mg > 0.0) {
            return Err(PbpkError::InvalidRegimen(format!(
                "dose must be > 0, got {}",
                self.dose_mg
            )));
        }
        if self.times_h.is_empty() {
            return Err(PbpkError::InvalidRegimen("no administration times".into()));
        }
        if self.times_h.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(PbpkError::InvalidRegimen(
                "administration times must be >= 0".into(),
            ));
        }
        if self.times_h.windows(2).any(|w| w[1] < w[0]) {
            return Err(PbpkError::InvalidRegimen(
                "administration times must be ascending".into(),
            ));
        }
        match (self.route, self.infusion_h) {
            (Route::IvInfusion, Some(d)) if d.is_finite() && d > 0.0 => Ok(()),
            (Route::IvInfusion, _) => Err(PbpkError::InvalidRegimen(
                "infusion needs a duration > 0".into(),
            )),
            (_, Some(_)) => Err(PbpkError::InvalidRegimen(
                "infusion_h only applies to iv_infusion".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn parse(text: &str) -> Result<DoseRegimen, PbpkError> {
        let file: RegimenFile =
            toml::from_str(text).map_err(|e| PbpkError::InvalidRegimen(e.to_string()))?;
        let route = Route::parse(&file.route)
            .ok_or_else(|| PbpkError::InvalidRegimen(format!("unknown route '{}'", file.route)))?;
        let times_h = match (file.times_h, file.every_h, file.count) {
            (Some(t), None, None) => t,
            (None, Some(every), Some(count)) => (0..count).map(|i| i as f64 * every).collect(),
            (None, None, None) => vec![0.0],
            _ => {
                return Err(PbpkError::InvalidRegimen(
                    "give either times_h or every_h together with count".into(),
                ))
            }
        };
        let regimen = DoseRegimen {
            route,
            dose_mg: file.dose_mg,
            infusion_h: file.infusion_h,
            times_h,
        };
        regimen.validate()?;
        Ok(regimen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_schedules() {
        let r = DoseRegimen::parse("route = \"oral\"\ndose_mg = 200\nevery_h = 12\ncount = 5\n")
            .unwrap();
        assert_eq!(r.times_h, vec![0.0, 12.0, 24.0, 36.0, 48.0]);
        assert_eq!(r.total_dose(), 1000.0);
        let r = DoseRegimen::parse("route = \"iv_infusion\"\ndose_mg = 100\ninfusion_h = 1.0\n")
            .unwrap();
        assert_eq!(r.times_h, vec![0.0]);
        assert_eq!(r.infusion_h, Some(1.0));
    }

    #[test]
    fn rejects_bad_regimens() {
        assert!(DoseRegimen::parse("route = \"nasal\"\ndose_mg = 1\n").is_err());
        assert!(DoseRegimen::parse("route = \"oral\"\ndose_mg = 0\n").is_err());
        assert!(DoseRegimen::parse("route = \"iv_infusion\"\ndose_mg = 5\n").is_err());
        assert!(
            DoseRegimen::parse("route = \"oral\"\ndose_mg = 5\ntimes_h = [0, 1]\ncount = 2\n")
                .is_err()
        );
        assert!(DoseRegimen::parse("route = \"oral\"\ndose_mg = 5\ntimes_h = [4, 1]\n").is_err());
    }
}
