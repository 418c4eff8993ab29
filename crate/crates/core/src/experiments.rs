//! Canned experiment drivers: the q-sweep comparing the unit-battery optimum
//! against the greedy upper bound and the infinite-battery lower bound, and
//! the theory-vs-simulation validation report.

use std::io::Write;

use thiserror::Error;

use crate::analytic::{
    self, greedy_aoi, infinite_battery_benchmark, solve_optimal, ChannelModel, Regime,
    SolverError,
};
use crate::policy::PolicySpec;
use crate::simulator::{
    run_replications, run_simulation, substream_seed, BatteryCapacity, Horizon, SimConfig,
};
use crate::statistics::{mean_estimator, ratio_estimator, EstimateWithError, StatsError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid q grid: need 0 < q_min < q_max < 1 and steps >= 2 (got [{0}, {1}] with {2} steps)")]
    InvalidGrid(f64, f64, usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One grid point of the q-sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub q: f64,
    pub lambda_prime: f64,
    pub lambda_star_b1: f64,
    pub greedy_aoi: f64,
    pub b_inf_bound: f64,
    pub sim_aoi_mean: Option<f64>,
    pub sim_aoi_stderr: Option<f64>,
    pub regime: Regime,
}

/// Simulation add-on for the sweep: epoch count and replications per grid
/// point. Grid point `i` gets base seed `substream_seed(seed, i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSimOpts {
    pub epochs: u64,
    pub reps: u32,
    pub seed: u64,
}

pub fn sweep_q(
    q_min: f64,
    q_max: f64,
    steps: usize,
    sim: Option<SweepSimOpts>,
) -> Result<Vec<SweepRow>, ExperimentError> {
    if !(q_min > 0.0 && q_min < q_max && q_max < 1.0) || steps < 2 {
        return Err(ExperimentError::InvalidGrid(q_min, q_max, steps));
    }
    let mut rows = Vec::with_capacity(steps);
    for i in 0..steps {
        let q = q_min + i as f64 * (q_max - q_min) / (steps - 1) as f64;
        let channel = ChannelModel::new(q)?;
        let solved = solve_optimal(channel, analytic::DEFAULT_TOL)?;
        let (sim_aoi_mean, sim_aoi_stderr) = match sim {
            Some(opts) => {
                let cfg = SimConfig::new(
                    channel,
                    PolicySpec::threshold(solved.lambda_prime),
                    BatteryCapacity::Finite(1),
                    Horizon::Epochs(opts.epochs),
                    substream_seed(opts.seed, i as u64),
                );
                let reps = run_replications(&cfg, opts.reps);
                (Some(reps.pooled_mean), Some(reps.pooled_std_error))
            }
            None => (None, None),
        };
        rows.push(SweepRow {
            q,
            lambda_prime: solved.lambda_prime,
            lambda_star_b1: solved.lambda_star,
            greedy_aoi: greedy_aoi(channel),
            b_inf_bound: infinite_battery_benchmark(channel),
            sim_aoi_mean,
            sim_aoi_stderr,
            regime: solved.regime,
        });
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str =
    "q,lambda_prime,lambda_star_b1,greedy_aoi,b_inf_bound,sim_aoi_mean,sim_aoi_stderr,regime";

fn fmt9(x: f64) -> String {
    format!("{x:.9}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt9).unwrap_or_default()
}

/// Writes the sweep as CSV: fixed 9-decimal values, `\n` line endings, empty
/// simulation cells when not requested. Byte-stable for identical inputs.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: &mut W) -> Result<(), ExperimentError> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt9(r.q),
            fmt9(r.lambda_prime),
            fmt9(r.lambda_star_b1),
            fmt9(r.greedy_aoi),
            fmt9(r.b_inf_bound),
            fmt_opt(r.sim_aoi_mean),
            fmt_opt(r.sim_aoi_stderr),
            r.regime
        )?;
    }
    Ok(())
}

/// One compared quantity of the validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub quantity: &'static str,
    pub analytic: f64,
    pub estimate: EstimateWithError,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub q: f64,
    pub n_epochs: u64,
    pub seed: u64,
    pub lambda_prime: f64,
    pub rows: Vec<ValidationRow>,
}

impl ValidationReport {
    /// True when every quantity is within 4 standard errors of theory.
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.z.abs() <= 4.0)
    }
}

/// Simulates the optimal policy and compares the empirical mean
/// inter-attempt time, epoch length, epoch area, attempts per epoch, and
/// time-average AoI against their analytic values, each as a z-score.
pub fn validate_theory(
    q: f64,
    n_epochs: u64,
    seed: u64,
) -> Result<ValidationReport, ExperimentError> {
    let channel = ChannelModel::with_zero_boundary(q)?;
    let solved = solve_optimal(channel, analytic::DEFAULT_TOL)?;
    let cfg = SimConfig::new(
        channel,
        PolicySpec::threshold(solved.lambda_prime),
        BatteryCapacity::Finite(1),
        Horizon::Epochs(n_epochs),
        seed,
    );
    let sim = run_simulation(&cfg);

    let mut rows = Vec::new();
    let mut push = |quantity: &'static str, analytic: f64, estimate: EstimateWithError| {
        let z = estimate.z_score(analytic);
        rows.push(ValidationRow {
            quantity,
            analytic,
            estimate,
            z,
        });
    };

    // E[x] from the attempt-level sums
    let n_att = sim.n_attempts as f64;
    let mean_x = sim.sum_inter_attempt / n_att;
    let se_x = if sim.n_attempts > 1 {
        let var = (sim.sum_inter_attempt_sq - n_att * mean_x * mean_x) / (n_att - 1.0);
        (var.max(0.0) / n_att).sqrt()
    } else {
        0.0
    };
    push(
        "expected_x",
        solved.expected_x,
        EstimateWithError {
            mean: mean_x,
            std_error: se_x,
            n: sim.n_attempts as usize,
        },
    );

    let lengths = sim.epoch_lengths();
    let areas = sim.epoch_areas();
    push(
        "expected_epoch_length",
        solved.expected_epoch_length,
        mean_estimator(&lengths)?,
    );
    push(
        "expected_epoch_area",
        solved.expected_epoch_area,
        mean_estimator(&areas)?,
    );
    let attempts: Vec<f64> = sim.epochs.iter().map(|e| e.attempts as f64).collect();
    push(
        "attempts_per_epoch",
        1.0 / (1.0 - q),
        mean_estimator(&attempts)?,
    );
    push(
        "lambda_star",
        solved.lambda_star,
        ratio_estimator(&areas, &lengths)?,
    );

    Ok(ValidationReport {
        q,
        n_epochs,
        seed,
        lambda_prime: solved.lambda_prime,
        rows,
    })
}
