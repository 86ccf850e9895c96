//! `ivmed`: IV mediation analysis from the command line.
//!
//! Exit codes: 0 success, 2 input error (unreadable/malformed scenario or
//! data, invalid flags), 3 statistical degeneracy (weak instrument, empty
//! design cells, singular regression). Every subcommand writes valid JSON to
//! stdout (CSV where documented) with stable key order and floats at 17
//! significant digits.

mod commands;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ivmed_core::EstimatorKind;

#[derive(Parser)]
#[command(
    name = "ivmed",
    version,
    about = "Causal mediation analysis with a binary instrument"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Iv,
    Si,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(arg: EstimatorArg) -> Self {
        match arg {
            EstimatorArg::Iv => EstimatorKind::Iv,
            EstimatorArg::Si => EstimatorKind::Si,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact population quantities for a scenario: true effects, IV
    /// probability limits, mediation estimands, assumption diagnostics, and
    /// the target-vs-estimand gap analysis.
    Oracle {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Draw a reproducible dataset from a scenario and emit it as CSV.
    Sample {
        #[arg(long)]
        scenario: PathBuf,
        /// Number of rows to draw (must be positive).
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate mediation effects from an observed CSV (`d,z,m,y`).
    Estimate {
        /// Input data CSV in the sampler's export format.
        data: PathBuf,
        /// Estimators to run; repeatable. Defaults to `iv`.
        #[arg(long = "estimator", value_enum)]
        estimators: Vec<EstimatorArg>,
        /// Number of bootstrap replicates; bootstrap runs only when given.
        #[arg(long)]
        bootstrap_reps: Option<usize>,
        /// Seed for bootstrap resampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the Monte Carlo study configured in the scenario's `mc` block.
    Mc {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's replicate count.
        #[arg(long)]
        reps: Option<usize>,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Path prefix for report files (`<out>.json`, `<out>.csv`);
        /// overrides the scenario's `out` paths.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The two-stratum cancellation demonstration: instrument defiers cancel
    /// compliers, driving the untreated-arm IV estimand to zero while the
    /// true indirect effect stays positive.
    Counterexample {
        /// Complier-subgroup effect scale (defiers get twice this).
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Oracle { scenario } => commands::oracle(&scenario),
        Command::Sample {
            scenario,
            n,
            seed,
            out,
        } => commands::sample(&scenario, n, seed, out.as_deref()),
        Command::Estimate {
            data,
            estimators,
            bootstrap_reps,
            seed,
        } => {
            let kinds: Vec<EstimatorKind> = if estimators.is_empty() {
                vec![EstimatorKind::Iv]
            } else {
                estimators.into_iter().map(EstimatorKind::from).collect()
            };
            commands::estimate(&data, &kinds, bootstrap_reps, seed)
        }
        Command::Mc {
            scenario,
            reps,
            seed,
            out,
        } => commands::mc(&scenario, reps, seed, out.as_deref()),
        Command::Counterexample { alpha } => commands::counterexample(alpha),
    };
    ExitCode::from(code)
}
