//! Shared fixtures for the integration tests.
#![allow(dead_code)] // each test target compiles its own subset

use ivmed_core::population::{MediatorResponse, OutcomeProfile, Population, Stratum};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Two-stratum working example: instrument-responsive compliers with high
/// outcome gains mixed with late responders, equal weights, p_z = p_d = 1/2.
pub fn pop_a() -> Population {
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

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_table(rng: &mut ChaCha8Rng) -> MediatorResponse {
    let bits: u8 = rng.gen_range(0..16);
    MediatorResponse::new([
        [bits & 1, (bits >> 1) & 1],
        [(bits >> 2) & 1, (bits >> 3) & 1],
    ])
    .unwrap()
}

fn random_outcomes(rng: &mut ChaCha8Rng) -> OutcomeProfile {
    OutcomeProfile::new([
        [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
        [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
    ])
}

fn normalized_weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// Arbitrary valid population: 1–5 strata, any of the 16 response tables,
/// outcomes in [-5, 5], interior assignment probabilities.
pub fn random_population(rng: &mut ChaCha8Rng) -> Population {
    let k = rng.gen_range(1..=5);
    let weights = normalized_weights(rng, k);
    let strata = weights
        .into_iter()
        .map(|w| {
            Stratum::new(
                w,
                random_table(rng),
                random_outcomes(rng),
                rng.gen_range(0.0..0.5),
            )
        })
        .collect();
    Population::new(strata, rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9))
}

/// Random population with instrument relevance in both treatment arms
/// (first-stage magnitude at least 0.05), so the full IV coefficient vector
/// exists.
pub fn random_relevant_population(rng: &mut ChaCha8Rng) -> Population {
    loop {
        let pop = random_population(rng);
        let relevant = (0..2u8).all(|d| {
            let fs: f64 = pop
                .strata
                .iter()
                .map(|s| {
                    s.weight
                        * (f64::from(s.response.level(d, 1)) - f64::from(s.response.level(d, 0)))
                })
                .sum();
            fs.abs() >= 0.05
        });
        if relevant {
            return pop;
        }
    }
}

/// Random population whose response tables are monotone in both the
/// treatment and the instrument, with a guaranteed share of strict
/// instrument compliers in the untreated arm (q1 > 0).
pub fn random_monotone_population(rng: &mut ChaCha8Rng) -> Population {
    let monotone: Vec<MediatorResponse> = (0..16u8)
        .map(|bits| {
            MediatorResponse::new([
                [bits & 1, (bits >> 1) & 1],
                [(bits >> 2) & 1, (bits >> 3) & 1],
            ])
            .unwrap()
        })
        .filter(|t| {
            (0..2u8).all(|z| t.level(1, z) >= t.level(0, z))
                && (0..2u8).all(|d| t.level(d, 1) >= t.level(d, 0))
        })
        .collect();
    let compliers: Vec<&MediatorResponse> = monotone
        .iter()
        .filter(|t| t.level(0, 1) > t.level(0, 0))
        .collect();

    let k = rng.gen_range(1..=5);
    let weights = normalized_weights(rng, k);
    let strata: Vec<Stratum> = weights
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            // First stratum is always a strict complier in the untreated arm.
            let table = if i == 0 {
                *compliers[rng.gen_range(0..compliers.len())]
            } else {
                monotone[rng.gen_range(0..monotone.len())]
            };
            Stratum::new(w, table, random_outcomes(rng), rng.gen_range(0.0..0.5))
        })
        .collect();
    Population::new(strata, rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9))
}

/// Random population with constant outcome contrasts: one base profile plus
/// a per-stratum level shift, and instrument relevance in both arms.
pub fn random_constant_effect_population(rng: &mut ChaCha8Rng) -> Population {
    let base = random_outcomes(rng);
    loop {
        let k = rng.gen_range(1..=5);
        let weights = normalized_weights(rng, k);
        let strata: Vec<Stratum> = weights
            .into_iter()
            .map(|w| {
                let shift = rng.gen_range(-2.0..2.0);
                let table = base.table();
                let shifted = OutcomeProfile::new([
                    [table[0][0] + shift, table[0][1] + shift],
                    [table[1][0] + shift, table[1][1] + shift],
                ]);
                Stratum::new(w, random_table(rng), shifted, rng.gen_range(0.0..0.5))
            })
            .collect();
        let pop = Population::new(strata, rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
        let relevant = (0..2u8).all(|d| {
            let fs: f64 = pop
                .strata
                .iter()
                .map(|s| {
                    s.weight
                        * (f64::from(s.response.level(d, 1)) - f64::from(s.response.level(d, 0)))
                })
                .sum();
            fs.abs() >= 0.05
        });
        if relevant {
            return pop;
        }
    }
}
