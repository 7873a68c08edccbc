use std::process::Command;

use super::{AffinityOracle, Pocket, ScreeningError};
use crate::molgraph::Molecule;

/// Scores by running an external program once per molecule.
///
/// Each argument is a template; `{smiles}`, `{cx}`, `{cy}`, `{cz}`,
/// `{polar}`, `{acceptors}` and `{seed}` are substituted. The score is the
/// first token of the last non-empty stdout line, parsed as a float. A
/// non-zero exit status is an error.
#[derive(Clone, Debug, PartialEq)]
pub struct ExternalCommandOracle {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalCommandOracle {
    pub fn new(
        program: impl Into<String>,
        args: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        ExternalCommandOracle {
            program: program.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    fn render(&self, template: &str, smiles: &str, p: &Pocket) -> String {
        template
            .replace("{smiles}", smiles)
            .replace("{cx}", &p.center[0].to_string())
            .replace("{cy}", &p.center[1].to_string())
            .replace("{cz}", &p.center[2].to_string())
            .replace("{polar}", &p.polar_sites.to_string())
            .replace("{acceptors}", &p.acceptor_sites.to_string())
            .replace("{seed}", &p.seed.to_string())
    }
}

impl AffinityOracle for ExternalCommandOracle {
    fn score(
        &self,
        _m: &Molecule,
        canonical: &str,
        pocket: &Pocket,
    ) -> Result<f64, ScreeningError> {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| self.render(a, canonical, pocket))
            .collect();
        let out = Command::new(&self.program)
            .args(&args)
            .output()
            .map_err(|e| ScreeningError::Adapter(format!("spawning {}: {e}", self.program)))?;
        if !out.status.success() {
            return Err(ScreeningError::Adapter(format!(
                "{} exited with {}: {}",
                self.program,
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        let stdout = String::from_utf8_lossy(&out.stdout);
        let line = stdout
            .lines()
            .rev()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| ScreeningError::Adapter("empty output".into()))?;
        let token = line.split_whitespace().next().unwrap_or_default();
        token
            .parse::<f64>()
            .map_err(|_| ScreeningError::Adapter(format!("cannot parse score from '{line}'")))
    }
}
