//! Monte Carlo experiment runner.
//!
//! Ties the sampler, the estimators, and the exact oracle together: for each
//! sample size in the grid it draws `reps` independent datasets, runs the
//! requested estimators, and reports per-effect means and spreads next to the
//! oracle's target values and IV estimands. Per-dataset seeds derive from
//! `(seed, n, rep)` through [`crate::seed::derive_seed`], so no seed is
//! reused across grid points and the full report is a pure function of the
//! configuration. Replicate failures are counted, never imputed.

use serde::Serialize;
use thiserror::Error;

use crate::estimators::{estimate_effects_iv, estimate_effects_si, EffectEstimates, EstimatorKind};
use crate::oracle::{
    iv_mediation_estimands_partial, population_theta_iv_arms, true_effect_set, EffectSet,
    IvEffectsPartial,
};
use crate::population::{Population, ValidationReport};
use crate::sampler::draw;
use crate::seed::derive_seed;

/// Share of non-reporting replicates above which a grid cell is flagged.
pub const FAILURE_FLAG_SHARE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid mc config: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid population: {0}")]
    InvalidPopulation(ValidationReport),
}

/// The four mediation-effect components tracked by a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectKind {
    Nie0,
    Nie1,
    Nde0,
    Nde1,
}

impl EffectKind {
    pub const ALL: [EffectKind; 4] = [
        EffectKind::Nie0,
        EffectKind::Nie1,
        EffectKind::Nde0,
        EffectKind::Nde1,
    ];

    fn pick(self, e: &EffectEstimates) -> Option<f64> {
        match self {
            EffectKind::Nie0 => e.nie0,
            EffectKind::Nie1 => e.nie1,
            EffectKind::Nde0 => e.nde0,
            EffectKind::Nde1 => e.nde1,
        }
    }

    fn target(self, e: &EffectSet) -> f64 {
        match self {
            EffectKind::Nie0 => e.nie0,
            EffectKind::Nie1 => e.nie1,
            EffectKind::Nde0 => e.nde0,
            EffectKind::Nde1 => e.nde1,
        }
    }

    fn estimand(self, e: &IvEffectsPartial) -> Option<f64> {
        match self {
            EffectKind::Nie0 => e.nie0_iv,
            EffectKind::Nie1 => e.nie1_iv,
            EffectKind::Nde0 => e.nde0_iv,
            EffectKind::Nde1 => e.nde1_iv,
        }
    }
}

impl std::fmt::Display for EffectKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EffectKind::Nie0 => write!(f, "nie0"),
            EffectKind::Nie1 => write!(f, "nie1"),
            EffectKind::Nde0 => write!(f, "nde0"),
            EffectKind::Nde1 => write!(f, "nde1"),
        }
    }
}

/// Study configuration.
#[derive(Debug, Clone)]
pub struct McConfig<'a> {
    pub population: &'a Population,
    /// Sample sizes, strictly ascending.
    pub n_grid: Vec<usize>,
    /// Replicates per sample size; at least 2 so spreads are defined.
    pub reps: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
}

/// One `(n, estimator, effect)` cell of the study report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCell {
    pub n: usize,
    pub estimator: EstimatorKind,
    pub effect: EffectKind,
    /// Mean estimate over reporting replicates; absent when none reported.
    pub mean: Option<f64>,
    /// Sample standard deviation over reporting replicates; absent below two.
    pub sd: Option<f64>,
    /// Exact target value from the oracle.
    pub target: f64,
    /// Exact IV estimand from the oracle, when identified.
    pub iv_estimand: Option<f64>,
    /// Signed discrepancy `target - mean`, matching the gap convention.
    pub bias_to_target: Option<f64>,
    /// Signed discrepancy `iv_estimand - mean`.
    pub bias_to_estimand: Option<f64>,
    pub reps: usize,
    /// Replicates where the estimator returned an error.
    pub failures: usize,
    /// Replicates that succeeded but did not produce this component.
    pub missing: usize,
    /// True when more than [`FAILURE_FLAG_SHARE`] of replicates produced no
    /// value for this cell.
    pub flagged: bool,
}

/// Full study output: one row per `n x estimator x effect`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub seed: u64,
    pub reps: usize,
    pub cells: Vec<McCell>,
}

impl McReport {
    pub fn cell(&self, n: usize, estimator: EstimatorKind, effect: EffectKind) -> &McCell {
        self.cells
            .iter()
            .find(|c| c.n == n && c.estimator == estimator && c.effect == effect)
            .expect("requested cell exists in report")
    }

    /// Flat CSV: one row per cell, floats with 17 significant digits, absent
    /// values as empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,estimator,effect,mean,sd,target,iv_estimand,bias_to_target,bias_to_estimand,reps,failures,missing,flagged\n",
        );
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{:.16e},{},{},{},{},{},{},{}\n",
                c.n,
                c.estimator,
                c.effect,
                fmt(c.mean),
                fmt(c.sd),
                c.target,
                fmt(c.iv_estimand),
                fmt(c.bias_to_target),
                fmt(c.bias_to_estimand),
                c.reps,
                c.failures,
                c.missing,
                c.flagged,
            ));
        }
        out
    }
}

/// Kahan-compensated accumulator; aggregation drift stays below 1e-12.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    fn total(&self) -> f64 {
        self.sum
    }
}

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let mut acc = Kahan::default();
    for &v in values {
        acc.add(v);
    }
    let mean = acc.total() / values.len() as f64;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let mut sq = Kahan::default();
    for &v in values {
        sq.add((v - mean) * (v - mean));
    }
    let sd = (sq.total() / (values.len() - 1) as f64).sqrt();
    (Some(mean), Some(sd))
}

/// Runs the study. Deterministic for a fixed configuration.
pub fn run_mc(cfg: &McConfig<'_>) -> Result<McReport, HarnessError> {
    if cfg.n_grid.is_empty() {
        return Err(HarnessError::InvalidConfig("n_grid must be nonempty"));
    }
    if !cfg.n_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(HarnessError::InvalidConfig(
            "n_grid must be strictly ascending",
        ));
    }
    if cfg.n_grid[0] == 0 {
        return Err(HarnessError::InvalidConfig(
            "n_grid entries must be positive",
        ));
    }
    if cfg.reps < 2 {
        return Err(HarnessError::InvalidConfig("reps must be at least 2"));
    }
    if cfg.estimators.is_empty() {
        return Err(HarnessError::InvalidConfig(
            "at least one estimator required",
        ));
    }
    if cfg.estimators.len() > 1 && cfg.estimators[0] == cfg.estimators[1]
        || cfg.estimators.len() > 2
    {
        return Err(HarnessError::InvalidConfig(
            "estimators must be a subset of {iv, si}",
        ));
    }
    let report = cfg.population.validate();
    if !report.is_valid() {
        return Err(HarnessError::InvalidPopulation(report));
    }

    let pop = cfg.population;
    let target = true_effect_set(pop);
    let estimand = iv_mediation_estimands_partial(&population_theta_iv_arms(pop), pop.p_z);

    let mut cells = Vec::new();
    for &n in &cfg.n_grid {
        // values[estimator][effect] over replicates; failures per estimator.
        let mut values: Vec<[Vec<f64>; 4]> =
            cfg.estimators.iter().map(|_| Default::default()).collect();
        let mut failures = vec![0usize; cfg.estimators.len()];

        for rep in 0..cfg.reps {
            let ds = draw(pop, n, derive_seed(cfg.seed, n as u64, rep as u64))
                .expect("validated population, positive n");
            for (e_idx, kind) in cfg.estimators.iter().enumerate() {
                let estimates = match kind {
                    EstimatorKind::Iv => estimate_effects_iv(&ds).map(|set| set.effects).ok(),
                    EstimatorKind::Si => estimate_effects_si(&ds)
                        .map(|fit| EffectEstimates {
                            nie0: Some(fit.effects.nie0),
                            nie1: Some(fit.effects.nie1),
                            nde0: Some(fit.effects.nde0),
                            nde1: Some(fit.effects.nde1),
                        })
                        .ok(),
                };
                match estimates {
                    Some(e) => {
                        for (slot, kind) in EffectKind::ALL.iter().enumerate() {
                            if let Some(v) = kind.pick(&e) {
                                values[e_idx][slot].push(v);
                            }
                        }
                    }
                    None => failures[e_idx] += 1,
                }
            }
        }

        for (e_idx, kind) in cfg.estimators.iter().enumerate() {
            for (slot, effect) in EffectKind::ALL.iter().enumerate() {
                let bucket = &values[e_idx][slot];
                let (mean, sd) = mean_sd(bucket);
                let missing = cfg.reps - failures[e_idx] - bucket.len();
                let cell_target = effect.target(&target);
                let cell_estimand = effect.estimand(&estimand);
                let no_value = failures[e_idx] + missing;
                cells.push(McCell {
                    n,
                    estimator: *kind,
                    effect: *effect,
                    mean,
                    sd,
                    target: cell_target,
                    iv_estimand: cell_estimand,
                    bias_to_target: mean.map(|m| cell_target - m),
                    bias_to_estimand: mean.and_then(|m| cell_estimand.map(|e| e - m)),
                    reps: cfg.reps,
                    failures: failures[e_idx],
                    missing,
                    flagged: no_value as f64 > FAILURE_FLAG_SHARE * cfg.reps as f64,
                });
            }
        }
    }

    Ok(McReport {
        seed: cfg.seed,
        reps: cfg.reps,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{MediatorResponse, OutcomeProfile, Stratum};

    fn pop_a() -> Population {
        Population::new(
            vec![
                Stratum::new(
                    0.5,
                    MediatorResponse::new([[0, 1], [1, 1]]).unwrap(),
                    OutcomeProfile::new([[0.0, 2.0], [1.0, 4.0]]),
                    0.0,
                ),
                Stratum::new(
                    0.5,
                    MediatorResponse::new([[0, 0], [0, 1]]).unwrap(),
                    OutcomeProfile::new([[1.0, 1.0], [1.0, 3.0]]),
                    0.0,
                ),
            ],
            0.5,
            0.5,
        )
    }

    fn config<'a>(pop: &'a Population, estimators: Vec<EstimatorKind>) -> McConfig<'a> {
        McConfig {
            population: pop,
            n_grid: vec![500, 2000],
            reps: 50,
            seed: 11,
            estimators,
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let pop = pop_a();
        let mut cfg = config(&pop, vec![EstimatorKind::Iv]);
        cfg.n_grid = vec![];
        assert!(matches!(run_mc(&cfg), Err(HarnessError::InvalidConfig(_))));
        cfg.n_grid = vec![2000, 500];
        assert!(matches!(run_mc(&cfg), Err(HarnessError::InvalidConfig(_))));
        cfg.n_grid = vec![500];
        cfg.reps = 1;
        assert!(matches!(run_mc(&cfg), Err(HarnessError::InvalidConfig(_))));
        cfg.reps = 10;
        cfg.estimators = vec![];
        assert!(matches!(run_mc(&cfg), Err(HarnessError::InvalidConfig(_))));
        cfg.estimators = vec![EstimatorKind::Iv, EstimatorKind::Iv];
        assert!(matches!(run_mc(&cfg), Err(HarnessError::InvalidConfig(_))));
    }

    #[test]
    fn rejects_invalid_population() {
        let mut pop = pop_a();
        pop.p_z = 0.0;
        let cfg = config(&pop, vec![EstimatorKind::Iv]);
        assert!(matches!(
            run_mc(&cfg),
            Err(HarnessError::InvalidPopulation(_))
        ));
    }

    #[test]
    fn report_is_deterministic() {
        let pop = pop_a();
        let cfg = config(&pop, vec![EstimatorKind::Iv, EstimatorKind::Si]);
        let a = run_mc(&cfg).unwrap();
        let b = run_mc(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn cell_accounting_is_exact() {
        let pop = pop_a();
        let cfg = config(&pop, vec![EstimatorKind::Iv, EstimatorKind::Si]);
        let report = run_mc(&cfg).unwrap();
        assert_eq!(report.cells.len(), 2 * 2 * 4);
        for cell in &report.cells {
            assert_eq!(cell.reps, 50);
            assert!(cell.failures + cell.missing <= cell.reps);
            // Oracle columns carry the exact POP-A values.
            assert_eq!(cell.iv_estimand, Some(1.0));
        }
        let nie0 = report.cell(2000, EstimatorKind::Iv, EffectKind::Nie0);
        assert_eq!(nie0.target, 0.5);
        assert!(nie0.mean.is_some());
        assert!(!nie0.flagged);
    }

    #[test]
    fn counterexample_cells_flag_unidentified_components() {
        let pop = Population::cancellation_counterexample(1.0).unwrap();
        let cfg = McConfig {
            population: &pop,
            n_grid: vec![2000],
            reps: 40,
            seed: 9,
            estimators: vec![EstimatorKind::Iv],
        };
        let report = run_mc(&cfg).unwrap();
        let nie0 = report.cell(2000, EstimatorKind::Iv, EffectKind::Nie0);
        assert!((nie0.target - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(nie0.iv_estimand, Some(0.0));
        assert!(nie0.mean.unwrap().abs() < 0.1);
        assert!(!nie0.flagged);
        // The treated arm never responds to the instrument, so components
        // needing it report nothing and get flagged.
        let nie1 = report.cell(2000, EstimatorKind::Iv, EffectKind::Nie1);
        assert_eq!(nie1.mean, None);
        assert_eq!(nie1.missing, 40);
        assert!(nie1.flagged);
        assert_eq!(nie1.iv_estimand, None);
    }

    #[test]
    fn csv_has_one_row_per_cell_plus_header() {
        let pop = pop_a();
        let cfg = config(&pop, vec![EstimatorKind::Iv]);
        let report = run_mc(&cfg).unwrap();
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 1 + report.cells.len());
        assert!(csv.starts_with("n,estimator,effect,"));
    }
}
