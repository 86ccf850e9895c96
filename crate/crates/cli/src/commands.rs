//! Subcommand implementations.
//!
//! Every command prints one JSON document to stdout (CSV where documented).
//! Input problems exit 2 without partial output; statistical degeneracies
//! exit 3 with whatever is identified still emitted.

use std::path::Path;

use ivmed_core::estimators::{
    bootstrap, estimate_effects_iv, estimate_effects_si, BootstrapReport, EstimateSet,
    EstimatorError, LsemEstimate,
};
use ivmed_core::harness::{run_mc, McConfig};
use ivmed_core::jsonfmt;
use ivmed_core::oracle::{
    assumption_report, gap_report, iv_mediation_estimands_partial, population_theta_iv_arms,
    true_effect_set, AssumptionReport, EffectSet, GapReport, IvEffectsPartial, ThetaIvPartial,
};
use ivmed_core::population::Population;
use ivmed_core::sampler::{draw, Dataset, SamplerError};
use ivmed_core::EstimatorKind;
use serde::Serialize;

use crate::scenario::{self, InputError};

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;

fn fail_input(err: impl std::fmt::Display) -> u8 {
    eprintln!("error: {err}");
    EXIT_INPUT
}

fn print_doc(doc: &impl Serialize) {
    println!("{}", jsonfmt::to_string_pretty(doc));
}

#[derive(Serialize)]
struct OracleDoc {
    true_effects: EffectSet,
    theta_iv: ThetaIvPartial,
    iv_estimands: IvEffectsPartial,
    assumptions: AssumptionReport,
    gap: GapReport,
    /// Treatment arms whose first stage is flat; nonempty means the IV side
    /// is only partially identified and the exit code is 3.
    weak_instrument_arms: Vec<u8>,
}

pub fn oracle(path: &Path) -> u8 {
    let (_, population) = match scenario::load(path) {
        Ok(loaded) => loaded,
        Err(err) => return fail_input(err),
    };
    let arms = population_theta_iv_arms(&population);
    let doc = OracleDoc {
        true_effects: true_effect_set(&population),
        theta_iv: ThetaIvPartial::from_arms(&arms),
        iv_estimands: iv_mediation_estimands_partial(&arms, population.p_z),
        assumptions: assumption_report(&population),
        gap: gap_report(&population),
        weak_instrument_arms: arms.weak_arms(),
    };
    print_doc(&doc);
    if doc.weak_instrument_arms.is_empty() {
        EXIT_OK
    } else {
        eprintln!(
            "warning: weak instrument in treatment arm(s) {:?}; IV quantities partially absent",
            doc.weak_instrument_arms
        );
        EXIT_DEGENERATE
    }
}

#[derive(Serialize)]
struct SampleSummary<'a> {
    path: &'a str,
    rows: usize,
    seed: u64,
}

pub fn sample(path: &Path, n: usize, seed: u64, out: Option<&Path>) -> u8 {
    let (_, population) = match scenario::load(path) {
        Ok(loaded) => loaded,
        Err(err) => return fail_input(err),
    };
    let dataset = match draw(&population, n, seed) {
        Ok(ds) => ds,
        Err(SamplerError::EmptyDraw) => return fail_input("--n must be at least 1"),
        Err(err) => return fail_input(err),
    };
    let csv = dataset.to_csv();
    match out {
        Some(out_path) => {
            if let Err(err) = std::fs::write(out_path, &csv) {
                return fail_input(format!("cannot write {}: {err}", out_path.display()));
            }
            print_doc(&SampleSummary {
                path: &out_path.display().to_string(),
                rows: dataset.n(),
                seed,
            });
        }
        None => print!("{csv}"),
    }
    EXIT_OK
}

/// Estimator output or the structured error that replaced it.
#[derive(Serialize)]
#[serde(untagged)]
enum Outcome<T: Serialize> {
    Ok(T),
    Err { error: String },
}

#[derive(Serialize)]
struct BootstrapDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    iv: Option<Outcome<BootstrapReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    si: Option<Outcome<BootstrapReport>>,
}

#[derive(Serialize)]
struct EstimateDoc {
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    iv: Option<Outcome<EstimateSet>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    si: Option<Outcome<LsemEstimate>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<BootstrapDoc>,
}

pub fn estimate(
    data: &Path,
    kinds: &[EstimatorKind],
    bootstrap_reps: Option<usize>,
    seed: u64,
) -> u8 {
    let text = match std::fs::read_to_string(data) {
        Ok(text) => text,
        Err(err) => return fail_input(format!("cannot read {}: {err}", data.display())),
    };
    let dataset = match Dataset::from_csv(&text) {
        Ok(ds) => ds,
        Err(err) => return fail_input(format!("{}: {err}", data.display())),
    };
    if bootstrap_reps == Some(0) {
        return fail_input("--bootstrap-reps must be at least 1");
    }

    let mut degenerate = false;
    let mut doc = EstimateDoc {
        n: dataset.n(),
        iv: None,
        si: None,
        bootstrap: None,
    };

    for kind in kinds {
        match kind {
            EstimatorKind::Iv => match estimate_effects_iv(&dataset) {
                Ok(set) => {
                    if !set.effects.all_present() {
                        degenerate = true;
                    }
                    doc.iv = Some(Outcome::Ok(set));
                }
                Err(err) => {
                    degenerate = true;
                    doc.iv = Some(Outcome::Err {
                        error: err.to_string(),
                    });
                }
            },
            EstimatorKind::Si => match estimate_effects_si(&dataset) {
                Ok(fit) => doc.si = Some(Outcome::Ok(fit)),
                Err(err) => {
                    degenerate = true;
                    doc.si = Some(Outcome::Err {
                        error: err.to_string(),
                    });
                }
            },
        }
    }

    if let Some(reps) = bootstrap_reps {
        let mut boot = BootstrapDoc { iv: None, si: None };
        for kind in kinds {
            let outcome = match bootstrap(&dataset, *kind, reps, seed) {
                Ok(report) => Outcome::Ok(report),
                Err(err @ EstimatorError::AllReplicatesFailed { .. }) => {
                    degenerate = true;
                    Outcome::Err {
                        error: err.to_string(),
                    }
                }
                Err(err) => return fail_input(err),
            };
            match kind {
                EstimatorKind::Iv => boot.iv = Some(outcome),
                EstimatorKind::Si => boot.si = Some(outcome),
            }
        }
        doc.bootstrap = Some(boot);
    }

    print_doc(&doc);
    if degenerate {
        EXIT_DEGENERATE
    } else {
        EXIT_OK
    }
}

pub fn mc(path: &Path, reps: Option<usize>, seed: Option<u64>, out: Option<&Path>) -> u8 {
    let (scenario_file, population) = match scenario::load(path) {
        Ok(loaded) => loaded,
        Err(err) => return fail_input(err),
    };
    let Some(settings) = scenario_file.mc else {
        return fail_input(InputError(format!(
            "scenario {} has no `mc` block; the mc subcommand needs one",
            path.display()
        )));
    };
    let cfg = McConfig {
        population: &population,
        n_grid: settings.n_grid,
        reps: reps.unwrap_or(settings.reps),
        seed: seed.unwrap_or(settings.seed),
        estimators: settings.estimators,
    };
    let report = match run_mc(&cfg) {
        Ok(report) => report,
        Err(err) => return fail_input(err),
    };

    let json = jsonfmt::to_string_pretty(&report);
    let csv = report.to_csv();
    let (json_path, csv_path) = match out {
        Some(prefix) => {
            let base = prefix.display().to_string();
            (
                Some(format!("{base}.json").into()),
                Some(format!("{base}.csv").into()),
            )
        }
        None => {
            let paths = scenario_file.out.unwrap_or(crate::scenario::OutPaths {
                mc_json: None,
                mc_csv: None,
            });
            (paths.mc_json, paths.mc_csv)
        }
    };
    for (target, contents) in [(json_path, &json), (csv_path, &csv)] {
        if let Some(target) = target {
            if let Err(err) = std::fs::write(&target, contents) {
                return fail_input(format!("cannot write {}: {err}", target.display()));
            }
        }
    }
    println!("{json}");
    EXIT_OK
}

#[derive(Serialize)]
struct SubgroupEffects {
    compliers: f64,
    defiers: f64,
}

#[derive(Serialize)]
struct CounterexampleDoc {
    alpha: f64,
    q1: f64,
    q2: f64,
    subgroup_effects: SubgroupEffects,
    beta1_iv: f64,
    nie0_iv: f64,
    nie0: f64,
    assumptions: AssumptionReport,
    gap: GapReport,
    verdict: String,
}

pub fn counterexample(alpha: f64) -> u8 {
    let population = match Population::cancellation_counterexample(alpha) {
        Ok(pop) => pop,
        Err(err) => return fail_input(err),
    };
    let assumptions = assumption_report(&population);
    let gap = gap_report(&population);
    let beta1_iv = population_theta_iv_arms(&population)
        .outcome_d0
        .expect("untreated arm has relevance q1 - q2 = 1/3")
        .slope;
    let compliers = gap
        .complier_means
        .d0_arm
        .compliers
        .expect("complier share 2/3");
    let defiers = gap.complier_means.d0_arm.defiers.expect("defier share 1/3");
    let nie0_iv = gap.iv.nie0_iv.expect("identified because relevance holds");
    let nie0 = gap.target.nie0;
    let verdict = format!(
        "uninformative: both subgroup effects are positive ({compliers} and {defiers}) yet \
         nie0_iv = {nie0_iv} because instrument defiers cancel compliers, while the true \
         nie0 = {nie0}"
    );
    let doc = CounterexampleDoc {
        alpha,
        q1: assumptions.q1,
        q2: assumptions.q2,
        subgroup_effects: SubgroupEffects { compliers, defiers },
        beta1_iv,
        nie0_iv,
        nie0,
        assumptions,
        gap,
        verdict,
    };
    print_doc(&doc);
    EXIT_OK
}
