//! Scenario files: the population document plus optional study settings.
//!
//! The top-level keys `p_z`, `p_d`, `strata` follow the population JSON
//! schema exactly; `mc` and `out` are optional extensions used by the `mc`
//! subcommand. Unknown keys are rejected with location information.

use std::path::{Path, PathBuf};

use ivmed_core::population::{Population, PopulationSpec, StratumSpec};
use ivmed_core::EstimatorKind;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub p_z: f64,
    pub p_d: f64,
    pub strata: Vec<StratumSpec>,
    #[serde(default)]
    pub mc: Option<McSettings>,
    #[serde(default)]
    pub out: Option<OutPaths>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutPaths {
    #[serde(default)]
    pub mc_json: Option<PathBuf>,
    #[serde(default)]
    pub mc_csv: Option<PathBuf>,
}

/// Input-side failure: reported on stderr, exit code 2, nothing on stdout.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Reads and parses a scenario, then builds and validates its population.
pub fn load(path: &Path) -> Result<(ScenarioFile, Population), InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("cannot read scenario {}: {e}", path.display())))?;
    let scenario: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| InputError(format!("scenario {}: {e}", path.display())))?;
    let spec = PopulationSpec {
        p_z: scenario.p_z,
        p_d: scenario.p_d,
        strata: scenario.strata.clone(),
    };
    let population = Population::from_spec(&spec)
        .map_err(|e| InputError(format!("scenario {}: {e}", path.display())))?;
    let report = population.validate();
    if !report.is_valid() {
        return Err(InputError(format!(
            "scenario {} describes an invalid population:\n{report}",
            path.display()
        )));
    }
    Ok((scenario, population))
}
