//! Causal mediation analysis with a binary instrumental variable.
//!
//! Everything here works with binary treatment `D`, binary mediator `M`,
//! binary instrument `Z`, and a real-valued outcome `Y`. A population is a
//! finite mixture of principal strata, each stratum fixing the full mediator
//! response table `M(d, z)` and the mean potential outcomes `Y(d, m)`. Because
//! the mixture is finite and everything else is binary, all population-level
//! quantities — natural direct/indirect effects, IV probability limits,
//! monotonicity diagnostics — are computed exactly by enumeration rather than
//! by simulation.
//!
//! Modules:
//! - [`population`]: domain types, construction, validation.
//! - [`oracle`]: exact effects, IV probability limits, assumption diagnostics,
//!   and target-vs-estimand gap analysis.
//! - [`sampler`]: seeded, reproducible generation of observational datasets.
//! - [`estimators`]: finite-sample IV and sequential-ignorability estimators
//!   plus bootstrap intervals.
//! - [`harness`]: Monte Carlo convergence and gap studies.
//!
//! Every type is immutable after construction and every operation is a pure
//! function of its inputs, so values can be shared freely across threads.
//! Repeated-randomness surfaces (sampling, bootstrap, studies) derive one
//! child seed per work unit, making results independent of evaluation order.

pub mod estimators;
pub mod harness;
pub mod jsonfmt;
pub mod oracle;
pub mod population;
pub mod sampler;
pub mod seed;

pub use estimators::{
    bootstrap, estimate_effects_iv, estimate_effects_si, estimate_theta_iv, BootstrapReport,
    EffectEstimates, EstimateSet, EstimatorError, EstimatorKind, Interval, IntervalSet,
    IvDiagnostics, LsemEstimate, SiEffects,
};
pub use harness::{run_mc, EffectKind, HarnessError, McCell, McConfig, McReport};
pub use oracle::{
    assumption_report, gap_report, iv_mediation_estimands, population_theta_iv,
    population_theta_iv_arms, true_effect_set, AssumptionReport, EffectSet, GapReport, IvEffects,
    IvEffectsPartial, LinearArm, OracleError, ThetaIv, ThetaIvArms, ThetaIvPartial,
};
pub use population::{
    MediatorResponse, OutcomeProfile, Population, PopulationError, PopulationSpec, Stratum,
    StratumSpec, ValidationReport, Violation,
};
pub use sampler::{draw, Dataset, Row, SamplerError};
