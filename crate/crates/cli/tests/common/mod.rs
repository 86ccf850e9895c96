//! Shared fixtures for the CLI test suites: the worked example scenario,
//! population generators for the randomized acceptance criteria, and a
//! helper for invoking the built binary.
#![allow(dead_code)] // each test target compiles its own subset

use std::path::{Path, PathBuf};
use std::process::Output;

use ivmed_core::population::{MediatorResponse, OutcomeProfile, Population, Stratum};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const POP_A_JSON: &str = r#"{
  "p_z": 0.5,
  "p_d": 0.5,
  "strata": [
    {"weight": 0.5, "m": [[0, 1], [1, 1]], "y": [[0.0, 2.0], [1.0, 4.0]], "noise_sd": 0.0},
    {"weight": 0.5, "m": [[0, 0], [0, 1]], "y": [[1.0, 1.0], [1.0, 3.0]], "noise_sd": 0.0}
  ]
}"#;

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

/// Unconfounded constant-effect comparison population: strata differ only in
/// mediator response, outcomes shared, with enough noise to make sampling
/// variation visible.
pub fn unconfounded_pop() -> Population {
    let shared = OutcomeProfile::new([[1.0, 2.0], [2.5, 4.0]]);
    Population::new(
        vec![
            Stratum::new(
                0.5,
                MediatorResponse::new([[0, 1], [0, 1]]).unwrap(),
                shared,
                0.5,
            ),
            Stratum::new(
                0.5,
                MediatorResponse::new([[0, 0], [1, 1]]).unwrap(),
                shared,
                0.5,
            ),
        ],
        0.5,
        0.5,
    )
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn table_from_bits(bits: u8) -> MediatorResponse {
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

fn relevance_ok(pop: &Population) -> bool {
    (0..2u8).all(|d| {
        pop.strata
            .iter()
            .map(|s| {
                s.weight * (f64::from(s.response.level(d, 1)) - f64::from(s.response.level(d, 0)))
            })
            .sum::<f64>()
            .abs()
            >= 0.05
    })
}

/// Arbitrary valid population.
pub fn random_population(rng: &mut ChaCha8Rng) -> Population {
    let k = rng.gen_range(1..=5);
    let strata = normalized_weights(rng, k)
        .into_iter()
        .map(|w| {
            Stratum::new(
                w,
                table_from_bits(rng.gen_range(0..16)),
                random_outcomes(rng),
                rng.gen_range(0.0..0.5),
            )
        })
        .collect();
    Population::new(strata, rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9))
}

/// Constant-contrast population (shared base profile plus per-stratum level
/// shifts) with instrument relevance in both arms.
pub fn random_constant_effect_population(rng: &mut ChaCha8Rng) -> Population {
    let base = random_outcomes(rng).table();
    loop {
        let k = rng.gen_range(1..=5);
        let strata: Vec<Stratum> = normalized_weights(rng, k)
            .into_iter()
            .map(|w| {
                let shift = rng.gen_range(-2.0..2.0);
                Stratum::new(
                    w,
                    table_from_bits(rng.gen_range(0..16)),
                    OutcomeProfile::new([
                        [base[0][0] + shift, base[0][1] + shift],
                        [base[1][0] + shift, base[1][1] + shift],
                    ]),
                    rng.gen_range(0.0..0.5),
                )
            })
            .collect();
        let pop = Population::new(strata, rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
        if relevance_ok(&pop) {
            return pop;
        }
    }
}

/// Population monotone in both directions with a strict untreated-arm
/// complier stratum (q1 > 0).
pub fn random_monotone_population(rng: &mut ChaCha8Rng) -> Population {
    let monotone: Vec<u8> = (0..16u8)
        .filter(|bits| {
            let level = |d: u8, z: u8| (bits >> (2 * d + z)) & 1;
            (0..2u8).all(|z| level(1, z) >= level(0, z))
                && (0..2u8).all(|d| level(d, 1) >= level(d, 0))
        })
        .collect();
    let compliers: Vec<u8> = monotone
        .iter()
        .copied()
        .filter(|bits| (bits >> 1) & 1 > bits & 1)
        .collect();
    let k = rng.gen_range(1..=5);
    let strata: Vec<Stratum> = normalized_weights(rng, k)
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            let bits = if i == 0 {
                compliers[rng.gen_range(0..compliers.len())]
            } else {
                monotone[rng.gen_range(0..monotone.len())]
            };
            Stratum::new(w, table_from_bits(bits), random_outcomes(rng), 0.0)
        })
        .collect();
    Population::new(strata, rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9))
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ivmed")
}

pub fn run(args: &[&str]) -> Output {
    std::process::Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn write_scenario(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

pub fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ivmed-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

pub fn stdout_json(output: &Output) -> serde_json::Value {
    assert!(
        !output.stdout.is_empty(),
        "expected JSON on stdout, stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is valid JSON")
}

pub fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}
