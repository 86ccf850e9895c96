//! Exact population-level quantities by enumeration.
//!
//! For a finite stratum mixture every expectation over `(stratum, Z)` is a
//! finite sum, so true natural effects, IV probability limits, and the
//! diagnostics that decide whether those limits mean anything are all
//! computed exactly here — no simulation, no tolerance beyond float
//! arithmetic.
//!
//! Conventions. The IV coefficient vector describes two within-arm linear
//! equations: in the untreated arm `Y = beta0 + beta1·M` with first stage
//! `M = pi0 + pi1·Z`, and in the treated arm `Y = alpha0 + alpha1·M` with
//! first stage `M = tau0 + tau1·Z`. Slopes are ratios of counterfactual
//! contrasts; intercepts are evaluated at the `z = 0` cell, which is
//! algebraically identical to the textbook `E[Y_d] − slope·E[M_d]` form
//! (the fitted line passes through every mixture of its two cell points)
//! and keeps noiseless finite-sample estimates exactly equal to their
//! population limits. Mediation estimands are composed through
//! `E[M_0] = pi0 + pi1·E[Z]` and `E[M_1] = tau0 + tau1·E[Z]`, so the
//! mediator-shift factor in the indirect effects equals `E[M_1 − M_0]`.

use serde::Serialize;
use thiserror::Error;

use crate::population::Population;

/// Tolerance for the population-level relevance check: a first-stage
/// contrast below this (in exact arithmetic) means the instrument does not
/// move the mediator in that arm.
pub const RELEVANCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    /// The instrument does not shift the mediator in treatment arm `d`:
    /// the Wald denominator for that arm is zero.
    #[error("weak instrument: E[M({arm},1) - M({arm},0)] = {first_stage} in treatment arm {arm}")]
    WeakInstrument { arm: u8, first_stage: f64 },
}

/// Average total effect and its two decompositions, plus controlled direct
/// effects. All entries are exact mixture means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectSet {
    pub ate: f64,
    pub nie0: f64,
    pub nie1: f64,
    pub nde0: f64,
    pub nde1: f64,
    pub cde0: f64,
    pub cde1: f64,
}

/// The eight IV probability limits: `(beta, pi)` describe the `D = 0` arm,
/// `(alpha, tau)` the `D = 1` arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaIv {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub pi0: f64,
    pub pi1: f64,
    pub tau0: f64,
    pub tau1: f64,
}

/// Intercept/slope pair of one within-arm linear equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearArm {
    pub intercept: f64,
    pub slope: f64,
}

/// Per-arm IV limits with availability. First-stage (mediator) equations
/// never involve a division and always exist; the outcome equation of an arm
/// exists only when the instrument actually shifts the mediator there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaIvArms {
    /// `M = pi0 + pi1·Z` in the untreated arm.
    pub mediator_d0: LinearArm,
    /// `M = tau0 + tau1·Z` in the treated arm.
    pub mediator_d1: LinearArm,
    /// `Y = beta0 + beta1·M` in the untreated arm, when identified.
    pub outcome_d0: Option<LinearArm>,
    /// `Y = alpha0 + alpha1·M` in the treated arm, when identified.
    pub outcome_d1: Option<LinearArm>,
}

/// The eight IV coefficients with per-arm availability, in report shape:
/// first-stage coefficients always exist, outcome-equation coefficients are
/// absent for arms without instrument relevance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaIvPartial {
    pub alpha0: Option<f64>,
    pub alpha1: Option<f64>,
    pub beta0: Option<f64>,
    pub beta1: Option<f64>,
    pub pi0: f64,
    pub pi1: f64,
    pub tau0: f64,
    pub tau1: f64,
}

impl ThetaIvPartial {
    pub fn from_arms(arms: &ThetaIvArms) -> Self {
        Self {
            alpha0: arms.outcome_d1.map(|a| a.intercept),
            alpha1: arms.outcome_d1.map(|a| a.slope),
            beta0: arms.outcome_d0.map(|b| b.intercept),
            beta1: arms.outcome_d0.map(|b| b.slope),
            pi0: arms.mediator_d0.intercept,
            pi1: arms.mediator_d0.slope,
            tau0: arms.mediator_d1.intercept,
            tau1: arms.mediator_d1.slope,
        }
    }

    pub fn complete(&self) -> Option<ThetaIv> {
        Some(ThetaIv {
            alpha0: self.alpha0?,
            alpha1: self.alpha1?,
            beta0: self.beta0?,
            beta1: self.beta1?,
            pi0: self.pi0,
            pi1: self.pi1,
            tau0: self.tau0,
            tau1: self.tau1,
        })
    }
}

impl ThetaIvArms {
    /// Collapses to the full eight-coefficient vector, or reports the first
    /// unidentified arm.
    pub fn complete(&self) -> Result<ThetaIv, OracleError> {
        let beta = self.outcome_d0.ok_or(OracleError::WeakInstrument {
            arm: 0,
            first_stage: self.mediator_d0.slope,
        })?;
        let alpha = self.outcome_d1.ok_or(OracleError::WeakInstrument {
            arm: 1,
            first_stage: self.mediator_d1.slope,
        })?;
        Ok(ThetaIv {
            alpha0: alpha.intercept,
            alpha1: alpha.slope,
            beta0: beta.intercept,
            beta1: beta.slope,
            pi0: self.mediator_d0.intercept,
            pi1: self.mediator_d0.slope,
            tau0: self.mediator_d1.intercept,
            tau1: self.mediator_d1.slope,
        })
    }

    /// Arms that fail the relevance requirement.
    pub fn weak_arms(&self) -> Vec<u8> {
        let mut arms = Vec::new();
        if self.outcome_d0.is_none() {
            arms.push(0);
        }
        if self.outcome_d1.is_none() {
            arms.push(1);
        }
        arms
    }
}

/// Mediation estimands composed from a complete IV coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IvEffects {
    pub nie0_iv: f64,
    pub nie1_iv: f64,
    pub nde0_iv: f64,
    pub nde1_iv: f64,
}

/// Mediation estimands with per-component availability: a component is
/// absent when the outcome equation it needs is unidentified. Absent values
/// stay absent; nothing is imputed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IvEffectsPartial {
    pub nie0_iv: Option<f64>,
    pub nie1_iv: Option<f64>,
    pub nde0_iv: Option<f64>,
    pub nde1_iv: Option<f64>,
}

impl IvEffectsPartial {
    pub fn complete(&self) -> Option<IvEffects> {
        Some(IvEffects {
            nie0_iv: self.nie0_iv?,
            nie1_iv: self.nie1_iv?,
            nde0_iv: self.nde0_iv?,
            nde1_iv: self.nde1_iv?,
        })
    }

    pub fn from_full(full: IvEffects) -> Self {
        Self {
            nie0_iv: Some(full.nie0_iv),
            nie1_iv: Some(full.nie1_iv),
            nde0_iv: Some(full.nde0_iv),
            nde1_iv: Some(full.nde1_iv),
        }
    }
}

/// Monotonicity and relevance diagnostics for one population.
///
/// `q1`/`q2` are the shares of instrument compliers/defiers in the untreated
/// arm; `p1z` are the shares of treatment compliers at each instrument level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// `Pr(M(1,z) >= M(0,z)) = 1`, reported for z = 0, 1.
    pub d_monotone_given_z: [bool; 2],
    /// `Pr(M(d,1) >= M(d,0)) = 1`, reported for d = 0, 1.
    pub z_monotone_given_d: [bool; 2],
    /// First-stage contrasts `E[M(d,1) - M(d,0)]` for d = 0, 1.
    pub relevance: [f64; 2],
    /// `Pr(M(0,1) > M(0,0))`.
    pub q1: f64,
    /// `Pr(M(0,1) < M(0,0))`.
    pub q2: f64,
    /// `Pr(M(1,z) > M(0,z))` for z = 0, 1.
    pub p1z: [f64; 2],
    /// True when every pairwise outcome contrast `Y(d',m') - Y(d,m)` is the
    /// same in every stratum.
    pub constant_effect: bool,
}

/// Conditional mean of an outcome contrast within one mediator-response
/// subgroup; `None` when the subgroup has zero probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubgroupMeans {
    /// Share of the subgroup whose mediator rises with the instrument.
    pub compliers: Option<f64>,
    /// Share whose mediator falls with the instrument.
    pub defiers: Option<f64>,
}

/// Outcome contrasts among instrument compliers/defiers, per treatment arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplierMeans {
    /// `E[Y(0,1) - Y(0,0) | M(0,1) ? M(0,0)]`.
    pub d0_arm: SubgroupMeans,
    /// `E[Y(1,1) - Y(1,0) | M(1,1) ? M(1,0)]`.
    pub d1_arm: SubgroupMeans,
}

/// Targets, IV estimands, and their componentwise gaps for one population.
///
/// When both monotonicity assumptions hold, the report also carries the two
/// complier-weighted re-derivations of `NIE_0` and `NIE_0^IV`; they must
/// agree with the direct computations and exist to make the disagreement
/// between the two *quantities* unmistakable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    pub target: EffectSet,
    pub iv: IvEffectsPartial,
    /// Componentwise `target - iv`.
    pub gaps: IvEffectsPartial,
    pub complier_means: ComplierMeans,
    /// `sum_z E[Y(0,1)-Y(0,0) | M(1,z)>M(0,z)]·P(M(1,z)>M(0,z))·Pr(Z=z)`,
    /// present when monotonicity holds in both directions.
    pub nie0_complier_form: Option<f64>,
    /// `E[Y(0,1)-Y(0,0) | M(0,1)>M(0,0)]·sum_z P(M(1,z)>M(0,z))·Pr(Z=z)`,
    /// present when monotonicity holds in both directions and the untreated
    /// arm has instrument relevance.
    pub nie0_iv_complier_form: Option<f64>,
}

/// Expectation of `f(stratum)` under the stratum mixture.
fn stratum_mean(pop: &Population, mut f: impl FnMut(&crate::population::Stratum) -> f64) -> f64 {
    pop.strata.iter().map(|s| s.weight * f(s)).sum()
}

/// Expectation of `f(stratum, z)` under the joint law of (stratum, Z).
fn stratum_z_mean(
    pop: &Population,
    mut f: impl FnMut(&crate::population::Stratum, u8) -> f64,
) -> f64 {
    let mut total = 0.0;
    for z in 0..2u8 {
        let pr_z = pop.pr_z(z);
        for s in &pop.strata {
            total += s.weight * pr_z * f(s, z);
        }
    }
    total
}

/// True effects by exhaustive enumeration over strata and instrument levels.
///
/// Expects a valid population; results are meaningless otherwise.
pub fn true_effect_set(pop: &Population) -> EffectSet {
    let nie0 = stratum_z_mean(pop, |s, z| {
        s.outcomes.mean(0, s.response.level(1, z)) - s.outcomes.mean(0, s.response.level(0, z))
    });
    let nie1 = stratum_z_mean(pop, |s, z| {
        s.outcomes.mean(1, s.response.level(1, z)) - s.outcomes.mean(1, s.response.level(0, z))
    });
    let nde0 = stratum_z_mean(pop, |s, z| {
        s.outcomes.mean(1, s.response.level(0, z)) - s.outcomes.mean(0, s.response.level(0, z))
    });
    let nde1 = stratum_z_mean(pop, |s, z| {
        s.outcomes.mean(1, s.response.level(1, z)) - s.outcomes.mean(0, s.response.level(1, z))
    });
    let ate = stratum_z_mean(pop, |s, z| {
        s.outcomes.mean(1, s.response.level(1, z)) - s.outcomes.mean(0, s.response.level(0, z))
    });
    let cde0 = stratum_mean(pop, |s| s.outcomes.mean(1, 0) - s.outcomes.mean(0, 0));
    let cde1 = stratum_mean(pop, |s| s.outcomes.mean(1, 1) - s.outcomes.mean(0, 1));
    EffectSet {
        ate,
        nie0,
        nie1,
        nde0,
        nde1,
        cde0,
        cde1,
    }
}

/// Per-arm IV probability limits; arms without instrument relevance have no
/// outcome equation. Never fails on a valid population.
pub fn population_theta_iv_arms(pop: &Population) -> ThetaIvArms {
    let arm = |d: u8| -> (LinearArm, Option<LinearArm>) {
        // First stage: E[M(d,z)] at both instrument levels.
        let m_z0 = stratum_mean(pop, |s| f64::from(s.response.level(d, 0)));
        let m_z1 = stratum_mean(pop, |s| f64::from(s.response.level(d, 1)));
        let first_stage = m_z1 - m_z0;
        let mediator = LinearArm {
            intercept: m_z0,
            slope: first_stage,
        };

        let outcome = if first_stage.abs() < RELEVANCE_TOLERANCE {
            None
        } else {
            // Wald slope: contrast of Y(d, M(d,z)) across instrument levels
            // over the first-stage contrast.
            let y_z0 = stratum_mean(pop, |s| s.outcomes.mean(d, s.response.level(d, 0)));
            let y_z1 = stratum_mean(pop, |s| s.outcomes.mean(d, s.response.level(d, 1)));
            let slope = (y_z1 - y_z0) / first_stage;
            // Intercept at the z = 0 point of the fitted line.
            Some(LinearArm {
                intercept: y_z0 - slope * m_z0,
                slope,
            })
        };
        (mediator, outcome)
    };
    let (mediator_d0, outcome_d0) = arm(0);
    let (mediator_d1, outcome_d1) = arm(1);
    ThetaIvArms {
        mediator_d0,
        mediator_d1,
        outcome_d0,
        outcome_d1,
    }
}

/// Full IV probability limits; errors when either arm lacks relevance.
pub fn population_theta_iv(pop: &Population) -> Result<ThetaIv, OracleError> {
    population_theta_iv_arms(pop).complete()
}

/// Composes mediation estimands from IV coefficients and `E[Z]`.
///
/// The mediator means are reconstructed as `E[M_0] = pi0 + pi1·e_z` and
/// `E[M_1] = tau0 + tau1·e_z`; indirect effects scale the arm's outcome slope
/// by `E[M_1] - E[M_0]`, direct effects evaluate the between-arm outcome gap
/// at `E[M_d]`.
pub fn iv_mediation_estimands(theta: &ThetaIv, e_z: f64) -> IvEffects {
    let e_m0 = theta.pi0 + theta.pi1 * e_z;
    let e_m1 = theta.tau0 + theta.tau1 * e_z;
    let mediator_shift = e_m1 - e_m0;
    IvEffects {
        nie0_iv: theta.beta1 * mediator_shift,
        nie1_iv: theta.alpha1 * mediator_shift,
        nde0_iv: (theta.alpha0 - theta.beta0) + (theta.alpha1 - theta.beta1) * e_m0,
        nde1_iv: (theta.alpha0 - theta.beta0) + (theta.alpha1 - theta.beta1) * e_m1,
    }
}

/// Partial analog of [`iv_mediation_estimands`]: components requiring an
/// unidentified outcome equation are absent.
pub fn iv_mediation_estimands_partial(arms: &ThetaIvArms, e_z: f64) -> IvEffectsPartial {
    let e_m0 = arms.mediator_d0.intercept + arms.mediator_d0.slope * e_z;
    let e_m1 = arms.mediator_d1.intercept + arms.mediator_d1.slope * e_z;
    let mediator_shift = e_m1 - e_m0;
    let beta = arms.outcome_d0;
    let alpha = arms.outcome_d1;
    let direct = |at: f64| -> Option<f64> {
        let (b, a) = (beta?, alpha?);
        Some((a.intercept - b.intercept) + (a.slope - b.slope) * at)
    };
    IvEffectsPartial {
        nie0_iv: beta.map(|b| b.slope * mediator_shift),
        nie1_iv: alpha.map(|a| a.slope * mediator_shift),
        nde0_iv: direct(e_m0),
        nde1_iv: direct(e_m1),
    }
}

/// Monotonicity, relevance, and effect-homogeneity diagnostics. Zero-weight
/// strata cannot break the monotonicity booleans.
pub fn assumption_report(pop: &Population) -> AssumptionReport {
    let positive = || pop.strata.iter().filter(|s| s.weight > 0.0);
    let d_monotone_given_z =
        [0u8, 1].map(|z| positive().all(|s| s.response.level(1, z) >= s.response.level(0, z)));
    let z_monotone_given_d =
        [0u8, 1].map(|d| positive().all(|s| s.response.level(d, 1) >= s.response.level(d, 0)));
    let relevance = [0u8, 1].map(|d| {
        stratum_mean(pop, |s| {
            f64::from(s.response.level(d, 1)) - f64::from(s.response.level(d, 0))
        })
    });
    let q1 = stratum_mean(pop, |s| {
        f64::from(s.response.level(0, 1) > s.response.level(0, 0))
    });
    let q2 = stratum_mean(pop, |s| {
        f64::from(s.response.level(0, 1) < s.response.level(0, 0))
    });
    let p1z = [0u8, 1].map(|z| {
        stratum_mean(pop, |s| {
            f64::from(s.response.level(1, z) > s.response.level(0, z))
        })
    });

    let constant_effect = match pop.strata.split_first() {
        None => true,
        Some((first, rest)) => rest.iter().all(|s| {
            // Identical contrasts against cell (0,0) imply identical pairwise
            // contrasts everywhere.
            (0..2u8).all(|d| {
                (0..2u8).all(|m| {
                    let offset_s = s.outcomes.mean(d, m) - s.outcomes.mean(0, 0);
                    let offset_0 = first.outcomes.mean(d, m) - first.outcomes.mean(0, 0);
                    (offset_s - offset_0).abs() <= 1e-12
                })
            })
        }),
    };

    AssumptionReport {
        d_monotone_given_z,
        z_monotone_given_d,
        relevance,
        q1,
        q2,
        p1z,
        constant_effect,
    }
}

/// Mean of `contrast(stratum)` over strata selected by `in_group`, or `None`
/// when the selected group has zero probability.
fn conditional_mean(
    pop: &Population,
    in_group: impl Fn(&crate::population::Stratum) -> bool,
    contrast: impl Fn(&crate::population::Stratum) -> f64,
) -> Option<f64> {
    let mut mass = 0.0;
    let mut total = 0.0;
    for s in &pop.strata {
        if in_group(s) {
            mass += s.weight;
            total += s.weight * contrast(s);
        }
    }
    (mass > 0.0).then(|| total / mass)
}

/// Target effects vs IV estimands, with complier subgroup means and, under
/// joint monotonicity, the complier-weighted re-derivations of both `NIE_0`
/// quantities.
pub fn gap_report(pop: &Population) -> GapReport {
    let target = true_effect_set(pop);
    let arms = population_theta_iv_arms(pop);
    let iv = iv_mediation_estimands_partial(&arms, pop.p_z);
    let gaps = IvEffectsPartial {
        nie0_iv: iv.nie0_iv.map(|v| target.nie0 - v),
        nie1_iv: iv.nie1_iv.map(|v| target.nie1 - v),
        nde0_iv: iv.nde0_iv.map(|v| target.nde0 - v),
        nde1_iv: iv.nde1_iv.map(|v| target.nde1 - v),
    };

    let complier_means = ComplierMeans {
        d0_arm: SubgroupMeans {
            compliers: conditional_mean(
                pop,
                |s| s.response.level(0, 1) > s.response.level(0, 0),
                |s| s.outcomes.mean(0, 1) - s.outcomes.mean(0, 0),
            ),
            defiers: conditional_mean(
                pop,
                |s| s.response.level(0, 1) < s.response.level(0, 0),
                |s| s.outcomes.mean(0, 1) - s.outcomes.mean(0, 0),
            ),
        },
        d1_arm: SubgroupMeans {
            compliers: conditional_mean(
                pop,
                |s| s.response.level(1, 1) > s.response.level(1, 0),
                |s| s.outcomes.mean(1, 1) - s.outcomes.mean(1, 0),
            ),
            defiers: conditional_mean(
                pop,
                |s| s.response.level(1, 1) < s.response.level(1, 0),
                |s| s.outcomes.mean(1, 1) - s.outcomes.mean(1, 0),
            ),
        },
    };

    let assumptions = assumption_report(pop);
    let both_monotone = assumptions.d_monotone_given_z.iter().all(|&b| b)
        && assumptions.z_monotone_given_d.iter().all(|&b| b);

    let nie0_complier_form = both_monotone.then(|| {
        // Per instrument level: mean outcome contrast among treatment
        // compliers, weighted by their share and the level's probability.
        (0..2u8)
            .map(|z| {
                let share = assumptions.p1z[z as usize];
                if share == 0.0 {
                    return 0.0;
                }
                let mean = conditional_mean(
                    pop,
                    |s| s.response.level(1, z) > s.response.level(0, z),
                    |s| s.outcomes.mean(0, 1) - s.outcomes.mean(0, 0),
                )
                .expect("positive share has positive mass");
                mean * share * pop.pr_z(z)
            })
            .sum()
    });

    let nie0_iv_complier_form = if both_monotone {
        complier_means.d0_arm.compliers.map(|complier_mean| {
            let shift: f64 = (0..2u8)
                .map(|z| assumptions.p1z[z as usize] * pop.pr_z(z))
                .sum();
            complier_mean * shift
        })
    } else {
        None
    };

    GapReport {
        target,
        iv,
        gaps,
        complier_means,
        nie0_complier_form,
        nie0_iv_complier_form,
    }
}
