//! Finite-sample estimators.
//!
//! The IV path solves the just-identified moment system in closed form,
//! separately per treatment arm: the outcome slope is the Wald ratio of
//! instrument-level contrasts in cell means, the first-stage coefficients
//! are the two-point solve on the mediator, and intercepts are taken at the
//! `z = 0` cell (the fitted line passes through both cell-mean points, so
//! this equals the arm-mean form exactly in real arithmetic). Mediation
//! effects then compose the coefficient estimates with the sample mean of
//! `Z`, mirroring the population-side composition.
//!
//! The sequential-ignorability path fits the saturated interaction
//! regressions of `M` on `D` and `Y` on `(D, M, DM)` by least squares, which
//! for binary regressors reduces to `(D, M)` cell means.
//!
//! Cell means of `Y` use streaming (Welford) updates and cell means of `M`
//! and `Z` are integer-count ratios, so a noiseless dataset whose cells are
//! constant reproduces population coefficients exactly, not merely to
//! rounding.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{
    iv_mediation_estimands_partial, LinearArm, ThetaIv, ThetaIvArms, ThetaIvPartial,
};
use crate::sampler::{Dataset, Row};
use crate::seed::derive_seed;

/// Default first-stage magnitude below which an arm's Wald ratio is treated
/// as undefined.
pub const DEFAULT_WEAK_INSTRUMENT_THRESHOLD: f64 = 1e-8;

/// Domain-separation constant for bootstrap replicate seeds.
const BOOTSTRAP_SEED_CONTEXT: u64 = 0x626f_6f74;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    /// No observations in the `(D = d, Z = z)` cell.
    #[error("empty cell: no observations with D={d}, Z={z}")]
    EmptyCell { d: u8, z: u8 },
    /// First-stage contrast in arm `d` below the weak-instrument threshold.
    #[error("weak instrument in treatment arm {arm}: first stage {first_stage:e}")]
    WeakInstrument { arm: u8, first_stage: f64 },
    /// The `(D = d, M = m)` cell is empty, so the interaction regression is
    /// collinear.
    #[error("singular design: mediator value {m} never observed in treatment arm {d}")]
    SingularDesign { d: u8, m: u8 },
    /// Bootstrap called with zero replicates.
    #[error("bootstrap needs at least one replicate")]
    NoReplicates,
    /// Every bootstrap replicate failed to produce an estimate.
    #[error("all {reps} bootstrap replicates failed")]
    AllReplicatesFailed { reps: usize },
}

/// Which estimator to run where both are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Iv,
    Si,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorKind::Iv => write!(f, "iv"),
            EstimatorKind::Si => write!(f, "si"),
        }
    }
}

/// Mediation-effect estimates with per-component availability.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EffectEstimates {
    pub nie0: Option<f64>,
    pub nie1: Option<f64>,
    pub nde0: Option<f64>,
    pub nde1: Option<f64>,
}

impl EffectEstimates {
    pub fn all_present(&self) -> bool {
        self.nie0.is_some() && self.nie1.is_some() && self.nde0.is_some() && self.nde1.is_some()
    }
}

/// Observed design diagnostics: `(D, Z)` cell counts and per-arm first-stage
/// strengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IvDiagnostics {
    /// Counts indexed `[d][z]`; they sum to `n`.
    pub cell_counts: [[u64; 2]; 2],
    /// `mean(M | D=d, Z=1) - mean(M | D=d, Z=0)` for d = 0, 1.
    pub first_stage: [f64; 2],
}

/// Full IV estimation output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateSet {
    pub theta_hat: ThetaIvPartial,
    pub effects: EffectEstimates,
    pub e_z_hat: f64,
    pub diagnostics: IvDiagnostics,
}

/// Least-squares fit of the linear sequential-ignorability system with
/// treatment-mediator interaction, plus the composed effects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LsemEstimate {
    /// Mediator equation `M = a0 + a1·D`.
    pub a0: f64,
    pub a1: f64,
    /// Outcome equation `Y = b0 + b1·D + b2·M + b3·D·M`.
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub effects: SiEffects,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiEffects {
    pub nie0: f64,
    pub nie1: f64,
    pub nde0: f64,
    pub nde1: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct CellAgg {
    n: u64,
    m_ones: u64,
    y_mean: f64,
}

impl CellAgg {
    #[inline]
    fn push(&mut self, m: u8, y: f64) {
        self.n += 1;
        self.m_ones += u64::from(m);
        self.y_mean += (y - self.y_mean) / self.n as f64;
    }

    #[inline]
    fn m_mean(&self) -> f64 {
        self.m_ones as f64 / self.n as f64
    }
}

fn dz_cells(rows: &[Row]) -> [[CellAgg; 2]; 2] {
    let mut cells = [[CellAgg::default(); 2]; 2];
    for r in rows {
        cells[r.d as usize][r.z as usize].push(r.m, r.y);
    }
    cells
}

/// Per-arm closed-form solve. Errors only on empty `(D, Z)` cells; a flat
/// first stage leaves that arm's outcome equation absent.
fn theta_arms(
    rows: &[Row],
    weak_threshold: f64,
) -> Result<(ThetaIvArms, IvDiagnostics), EstimatorError> {
    let cells = dz_cells(rows);
    for d in 0..2u8 {
        for z in 0..2u8 {
            if cells[d as usize][z as usize].n == 0 {
                return Err(EstimatorError::EmptyCell { d, z });
            }
        }
    }
    let arm = |d: usize| -> (LinearArm, Option<LinearArm>) {
        let (c0, c1) = (&cells[d][0], &cells[d][1]);
        let first_stage = c1.m_mean() - c0.m_mean();
        let mediator = LinearArm {
            intercept: c0.m_mean(),
            slope: first_stage,
        };
        let outcome = (first_stage.abs() >= weak_threshold).then(|| {
            let slope = (c1.y_mean - c0.y_mean) / first_stage;
            LinearArm {
                intercept: c0.y_mean - slope * c0.m_mean(),
                slope,
            }
        });
        (mediator, outcome)
    };
    let (mediator_d0, outcome_d0) = arm(0);
    let (mediator_d1, outcome_d1) = arm(1);
    let diagnostics = IvDiagnostics {
        cell_counts: [
            [cells[0][0].n, cells[0][1].n],
            [cells[1][0].n, cells[1][1].n],
        ],
        first_stage: [mediator_d0.slope, mediator_d1.slope],
    };
    Ok((
        ThetaIvArms {
            mediator_d0,
            mediator_d1,
            outcome_d0,
            outcome_d1,
        },
        diagnostics,
    ))
}

/// Sample-analog IV coefficients. Requires every `(D, Z)` cell populated and
/// both first stages above `weak_threshold`.
pub fn estimate_theta_iv_with(
    ds: &Dataset,
    weak_threshold: f64,
) -> Result<ThetaIv, EstimatorError> {
    let (arms, diagnostics) = theta_arms(&ds.rows, weak_threshold)?;
    ThetaIvPartial::from_arms(&arms).complete().ok_or_else(|| {
        let arm = if arms.outcome_d0.is_none() { 0u8 } else { 1u8 };
        EstimatorError::WeakInstrument {
            arm,
            first_stage: diagnostics.first_stage[arm as usize],
        }
    })
}

/// [`estimate_theta_iv_with`] at the default weak-instrument threshold.
pub fn estimate_theta_iv(ds: &Dataset) -> Result<ThetaIv, EstimatorError> {
    estimate_theta_iv_with(ds, DEFAULT_WEAK_INSTRUMENT_THRESHOLD)
}

/// IV mediation-effect estimates. Empty `(D, Z)` cells are a hard error; a
/// weak arm degrades only the components that need it, which stay absent in
/// the output rather than being imputed.
pub fn estimate_effects_iv_with(
    ds: &Dataset,
    weak_threshold: f64,
) -> Result<EstimateSet, EstimatorError> {
    let (arms, diagnostics) = theta_arms(&ds.rows, weak_threshold)?;
    let z_ones: u64 = ds.rows.iter().map(|r| u64::from(r.z)).sum();
    let e_z_hat = z_ones as f64 / ds.rows.len() as f64;
    let partial = iv_mediation_estimands_partial(&arms, e_z_hat);
    Ok(EstimateSet {
        theta_hat: ThetaIvPartial::from_arms(&arms),
        effects: EffectEstimates {
            nie0: partial.nie0_iv,
            nie1: partial.nie1_iv,
            nde0: partial.nde0_iv,
            nde1: partial.nde1_iv,
        },
        e_z_hat,
        diagnostics,
    })
}

/// [`estimate_effects_iv_with`] at the default weak-instrument threshold.
pub fn estimate_effects_iv(ds: &Dataset) -> Result<EstimateSet, EstimatorError> {
    estimate_effects_iv_with(ds, DEFAULT_WEAK_INSTRUMENT_THRESHOLD)
}

/// Least-squares fit of the sequential-ignorability system. The saturated
/// outcome regression is identified exactly when every `(D, M)` cell is
/// populated; its coefficients are the usual cell-mean contrasts.
pub fn estimate_effects_si(ds: &Dataset) -> Result<LsemEstimate, EstimatorError> {
    let mut cells = [[CellAgg::default(); 2]; 2]; // indexed [d][m]
    let mut arm_n = [0u64; 2];
    let mut arm_m_ones = [0u64; 2];
    for r in &ds.rows {
        cells[r.d as usize][r.m as usize].push(r.m, r.y);
        arm_n[r.d as usize] += 1;
        arm_m_ones[r.d as usize] += u64::from(r.m);
    }
    for d in 0..2u8 {
        for m in 0..2u8 {
            if cells[d as usize][m as usize].n == 0 {
                return Err(EstimatorError::SingularDesign { d, m });
            }
        }
    }

    let m_bar = [0, 1].map(|d: usize| arm_m_ones[d] as f64 / arm_n[d] as f64);
    let a0 = m_bar[0];
    let a1 = m_bar[1] - m_bar[0];

    let y = |d: usize, m: usize| cells[d][m].y_mean;
    let b0 = y(0, 0);
    let b1 = y(1, 0) - y(0, 0);
    let b2 = y(0, 1) - y(0, 0);
    let b3 = y(1, 1) - y(1, 0) - y(0, 1) + y(0, 0);

    let effects = SiEffects {
        nie0: b2 * a1,
        nie1: (b2 + b3) * a1,
        nde0: b1 + b3 * a0,
        nde1: b1 + b3 * (a0 + a1),
    };
    Ok(LsemEstimate {
        a0,
        a1,
        b0,
        b1,
        b2,
        b3,
        effects,
    })
}

/// Percentile of pre-sorted values with linear interpolation between order
/// statistics.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = (q / 100.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = rank - lo as f64;
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// 2.5–97.5 percentile interval for one effect, with the number of
/// replicates that produced a value for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IntervalSet {
    pub nie0: Option<Interval>,
    pub nie1: Option<Interval>,
    pub nde0: Option<Interval>,
    pub nde1: Option<Interval>,
}

/// Nonparametric bootstrap output. Replicates that error out (lost cells,
/// singular designs) are counted, never silently dropped; per-effect `used`
/// counts say how many replicates informed each interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapReport {
    pub estimator: EstimatorKind,
    pub reps: usize,
    pub failed_replicates: usize,
    pub intervals: IntervalSet,
}

/// Row-resampling percentile bootstrap. Replicate `r` draws its indices from
/// a ChaCha8 generator seeded by `derive_seed(seed, r, context)`, so results
/// are reproducible and independent of evaluation order.
pub fn bootstrap(
    ds: &Dataset,
    estimator: EstimatorKind,
    reps: usize,
    seed: u64,
) -> Result<BootstrapReport, EstimatorError> {
    if reps == 0 {
        return Err(EstimatorError::NoReplicates);
    }
    let n = ds.rows.len();
    let mut values: [Vec<f64>; 4] = Default::default();
    let mut failed = 0usize;

    let mut resampled = Dataset {
        rows: Vec::with_capacity(n),
        seed: None,
    };
    for rep in 0..reps {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(seed, rep as u64, BOOTSTRAP_SEED_CONTEXT));
        resampled.rows.clear();
        resampled
            .rows
            .extend((0..n).map(|_| ds.rows[rng.gen_range(0..n)]));

        let effects = match estimator {
            EstimatorKind::Iv => estimate_effects_iv(&resampled).map(|set| set.effects),
            EstimatorKind::Si => estimate_effects_si(&resampled).map(|fit| EffectEstimates {
                nie0: Some(fit.effects.nie0),
                nie1: Some(fit.effects.nie1),
                nde0: Some(fit.effects.nde0),
                nde1: Some(fit.effects.nde1),
            }),
        };
        match effects {
            Ok(e) => {
                for (bucket, value) in values.iter_mut().zip([e.nie0, e.nie1, e.nde0, e.nde1]) {
                    if let Some(v) = value {
                        bucket.push(v);
                    }
                }
            }
            Err(_) => failed += 1,
        }
    }

    if failed == reps {
        return Err(EstimatorError::AllReplicatesFailed { reps });
    }

    let mut interval_for = |idx: usize| -> Option<Interval> {
        let bucket = &mut values[idx];
        if bucket.is_empty() {
            return None;
        }
        bucket.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite estimates"));
        Some(Interval {
            lower: percentile(bucket, 2.5),
            upper: percentile(bucket, 97.5),
            used: bucket.len(),
        })
    };
    let intervals = IntervalSet {
        nie0: interval_for(0),
        nie1: interval_for(1),
        nde0: interval_for(2),
        nde1: interval_for(3),
    };
    Ok(BootstrapReport {
        estimator,
        reps,
        failed_replicates: failed,
        intervals,
    })
}
