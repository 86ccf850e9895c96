//! Principal-strata populations: domain types, construction, validation.
//!
//! A [`Stratum`] pins down one compliance/response type: the full table of
//! potential mediators `M(d, z)` together with the mean potential outcomes
//! `Y(d, m)`. A [`Population`] is a weighted mixture of strata plus the
//! assignment probabilities `Pr(Z=1)` and `Pr(D=1)`; treatment and instrument
//! are assigned independently of the stratum by construction, so instrument
//! randomization and treatment exogeneity hold for every population that can
//! be represented here. The outcome table carries no `z` index, which
//! structurally enforces the exclusion restriction.
//!
//! Construction is deliberately permissive: all 16 binary mediator tables are
//! allowed, weights are not renormalized, and monotonicity is a diagnostic
//! (see [`crate::oracle::assumption_report`]), not a constructor constraint.
//! [`Population::validate`] reports every invariant violation as data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for "stratum weights sum to one".
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Errors raised by constructors in this module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PopulationError {
    #[error("mediator table entry m[{d}][{z}] = {value} is not binary (must be 0 or 1)")]
    NonBinaryMediator { d: usize, z: usize, value: u8 },
    #[error("scale must be strictly positive, got {0}")]
    NonPositiveScale(f64),
    #[error("dataset must contain at least one row")]
    Empty,
}

/// Potential-mediator table `M(d, z)` for one stratum, indexed by treatment
/// arm and instrument level. Entries are guaranteed binary by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MediatorResponse {
    m: [[u8; 2]; 2],
}

impl MediatorResponse {
    /// Builds a response table from `m[d][z]` entries, rejecting anything
    /// that is not exactly 0 or 1.
    pub fn new(m: [[u8; 2]; 2]) -> Result<Self, PopulationError> {
        for (d, row) in m.iter().enumerate() {
            for (z, &value) in row.iter().enumerate() {
                if value > 1 {
                    return Err(PopulationError::NonBinaryMediator { d, z, value });
                }
            }
        }
        Ok(Self { m })
    }

    /// Mediator value under treatment `d` and instrument `z`.
    #[inline]
    pub fn level(&self, d: u8, z: u8) -> u8 {
        self.m[d as usize][z as usize]
    }

    /// Raw table, indexed `[d][z]`.
    pub fn table(&self) -> [[u8; 2]; 2] {
        self.m
    }
}

/// Mean potential outcomes `Y(d, m)` for one stratum, indexed by treatment
/// arm and mediator value. There is intentionally no instrument index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeProfile {
    y: [[f64; 2]; 2],
}

impl OutcomeProfile {
    /// Builds an outcome table from `y[d][m]` entries. Finiteness is checked
    /// by [`Population::validate`], not here.
    pub fn new(y: [[f64; 2]; 2]) -> Self {
        Self { y }
    }

    /// Mean outcome under treatment `d` with mediator fixed at `m`.
    #[inline]
    pub fn mean(&self, d: u8, m: u8) -> f64 {
        self.y[d as usize][m as usize]
    }

    /// Raw table, indexed `[d][m]`.
    pub fn table(&self) -> [[f64; 2]; 2] {
        self.y
    }
}

/// One principal stratum: a mediator response type, its outcome means, its
/// share of the population, and the scale of additive outcome noise used at
/// sampling time. The noise scale does not enter any population-level
/// quantity; target parameters are mean effects.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub weight: f64,
    pub response: MediatorResponse,
    pub outcomes: OutcomeProfile,
    pub noise_sd: f64,
}

impl Stratum {
    pub fn new(
        weight: f64,
        response: MediatorResponse,
        outcomes: OutcomeProfile,
        noise_sd: f64,
    ) -> Self {
        Self {
            weight,
            response,
            outcomes,
            noise_sd,
        }
    }
}

/// A finite mixture of principal strata with independent assignment of the
/// treatment (`Pr(D=1) = p_d`) and the instrument (`Pr(Z=1) = p_z`).
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub strata: Vec<Stratum>,
    pub p_z: f64,
    pub p_d: f64,
}

/// Machine-readable invariant violation found by [`Population::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "code", rename_all = "kebab-case")]
pub enum Violation {
    /// The population has no strata at all.
    NoStrata,
    /// Stratum weights do not sum to one within [`WEIGHT_SUM_TOLERANCE`].
    WeightSum { sum: f64 },
    /// A stratum weight lies outside `[0, 1]` (or is not a number).
    WeightRange { stratum: usize, weight: f64 },
    /// A stratum noise scale is negative (or is not a number).
    NegativeNoise { stratum: usize, noise_sd: f64 },
    /// An outcome mean is not a finite real.
    NonFiniteOutcome {
        stratum: usize,
        d: u8,
        m: u8,
        value: f64,
    },
    /// `Pr(Z=1)` is not strictly inside `(0, 1)`: the instrument never varies.
    DegenerateInstrument { p_z: f64 },
    /// `Pr(D=1)` is not strictly inside `(0, 1)`: the treatment never varies.
    DegenerateTreatment { p_d: f64 },
}

impl Violation {
    /// Stable identifier for scripting against validation output.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::NoStrata => "no-strata",
            Violation::WeightSum { .. } => "weight-sum",
            Violation::WeightRange { .. } => "weight-range",
            Violation::NegativeNoise { .. } => "negative-noise",
            Violation::NonFiniteOutcome { .. } => "non-finite-outcome",
            Violation::DegenerateInstrument { .. } => "degenerate-instrument",
            Violation::DegenerateTreatment { .. } => "degenerate-treatment",
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NoStrata => write!(f, "population has no strata"),
            Violation::WeightSum { sum } => {
                write!(f, "stratum weights sum to {sum}, expected 1")
            }
            Violation::WeightRange { stratum, weight } => {
                write!(f, "stratum {stratum} weight {weight} outside [0, 1]")
            }
            Violation::NegativeNoise { stratum, noise_sd } => {
                write!(f, "stratum {stratum} noise_sd {noise_sd} is negative")
            }
            Violation::NonFiniteOutcome {
                stratum,
                d,
                m,
                value,
            } => {
                write!(
                    f,
                    "stratum {stratum} outcome y[{d}][{m}] = {value} is not finite"
                )
            }
            Violation::DegenerateInstrument { p_z } => {
                write!(f, "p_z = {p_z} leaves one instrument arm empty")
            }
            Violation::DegenerateTreatment { p_d } => {
                write!(f, "p_d = {p_d} leaves one treatment arm empty")
            }
        }
    }
}

/// Result of [`Population::validate`]: the full list of violations, empty
/// when the population satisfies every invariant.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            return write!(f, "valid population");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "[{}] {}", v.code(), v)?;
        }
        Ok(())
    }
}

impl Population {
    pub fn new(strata: Vec<Stratum>, p_z: f64, p_d: f64) -> Self {
        Self { strata, p_z, p_d }
    }

    /// Checks every population and stratum invariant, returning violations as
    /// data. Weights are not renormalized on the caller's behalf; a weight
    /// vector that does not sum to one is reported, never repaired.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.strata.is_empty() {
            violations.push(Violation::NoStrata);
        }
        let mut sum = 0.0;
        for (i, s) in self.strata.iter().enumerate() {
            let weight_ok = s.weight.is_finite() && (0.0..=1.0).contains(&s.weight);
            if !weight_ok {
                violations.push(Violation::WeightRange {
                    stratum: i,
                    weight: s.weight,
                });
            }
            let noise_ok = !s.noise_sd.is_nan() && s.noise_sd >= 0.0;
            if !noise_ok {
                violations.push(Violation::NegativeNoise {
                    stratum: i,
                    noise_sd: s.noise_sd,
                });
            }
            for d in 0..2u8 {
                for m in 0..2u8 {
                    let value = s.outcomes.mean(d, m);
                    if !value.is_finite() {
                        violations.push(Violation::NonFiniteOutcome {
                            stratum: i,
                            d,
                            m,
                            value,
                        });
                    }
                }
            }
            sum += s.weight;
        }
        let sum_ok = (sum - 1.0).abs() <= WEIGHT_SUM_TOLERANCE;
        if !self.strata.is_empty() && !sum_ok {
            violations.push(Violation::WeightSum { sum });
        }
        if !(self.p_z > 0.0 && self.p_z < 1.0) {
            violations.push(Violation::DegenerateInstrument { p_z: self.p_z });
        }
        if !(self.p_d > 0.0 && self.p_d < 1.0) {
            violations.push(Violation::DegenerateTreatment { p_d: self.p_d });
        }
        ValidationReport { violations }
    }

    /// Probability of instrument level `z`.
    #[inline]
    pub fn pr_z(&self, z: u8) -> f64 {
        if z == 1 {
            self.p_z
        } else {
            1.0 - self.p_z
        }
    }

    /// Probability of treatment arm `d`.
    #[inline]
    pub fn pr_d(&self, d: u8) -> f64 {
        if d == 1 {
            self.p_d
        } else {
            1.0 - self.p_d
        }
    }

    /// The two-stratum cancellation construction: a 2/3 share of instrument
    /// compliers in the untreated arm with mediator effect `alpha`, against a
    /// 1/3 share of instrument defiers with mediator effect `2·alpha`. The
    /// mixture satisfies monotonicity of `M` in `D` but violates monotonicity
    /// of `M` in `Z` at `d = 0`, and the IV slope for the untreated arm is
    /// exactly zero for every `alpha`: the two positive subgroup effects
    /// cancel, while the true indirect effect `NIE_0 = 2·alpha/3` is positive.
    pub fn cancellation_counterexample(alpha: f64) -> Result<Self, PopulationError> {
        let valid_scale = alpha.is_finite() && alpha > 0.0;
        if !valid_scale {
            return Err(PopulationError::NonPositiveScale(alpha));
        }
        let complier = Stratum::new(
            2.0 / 3.0,
            MediatorResponse::new([[0, 1], [1, 1]]).expect("binary table"),
            OutcomeProfile::new([[0.0, alpha], [0.0, 0.0]]),
            0.0,
        );
        let defier = Stratum::new(
            1.0 / 3.0,
            MediatorResponse::new([[1, 0], [1, 1]]).expect("binary table"),
            OutcomeProfile::new([[0.0, 2.0 * alpha], [0.0, 0.0]]),
            0.0,
        );
        Ok(Self::new(vec![complier, defier], 0.5, 0.5))
    }

    /// Builds a population from its JSON-facing description, validating that
    /// mediator entries are binary.
    pub fn from_spec(spec: &PopulationSpec) -> Result<Self, PopulationError> {
        let strata = spec
            .strata
            .iter()
            .map(|s| {
                Ok(Stratum::new(
                    s.weight,
                    MediatorResponse::new(s.m)?,
                    OutcomeProfile::new(s.y),
                    s.noise_sd,
                ))
            })
            .collect::<Result<Vec<_>, PopulationError>>()?;
        Ok(Self::new(strata, spec.p_z, spec.p_d))
    }

    /// JSON-facing description of this population.
    pub fn to_spec(&self) -> PopulationSpec {
        PopulationSpec {
            p_z: self.p_z,
            p_d: self.p_d,
            strata: self
                .strata
                .iter()
                .map(|s| StratumSpec {
                    weight: s.weight,
                    m: s.response.table(),
                    y: s.outcomes.table(),
                    noise_sd: s.noise_sd,
                })
                .collect(),
        }
    }
}

/// Wire form of one stratum in a scenario file. `m` is indexed `[d][z]`,
/// `y` is indexed `[d][m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratumSpec {
    pub weight: f64,
    pub m: [[u8; 2]; 2],
    pub y: [[f64; 2]; 2],
    pub noise_sd: f64,
}

/// Wire form of a population: the scenario-file document consumed by the CLI.
/// Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub p_z: f64,
    pub p_d: f64,
    pub strata: Vec<StratumSpec>,
}
