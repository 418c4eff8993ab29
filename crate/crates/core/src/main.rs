use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aoi_erasure::analytic::{self, solve_optimal, ChannelModel};
use aoi_erasure::experiments::{sweep_q, validate_theory, write_sweep_csv, SweepSimOpts};
use aoi_erasure::policy::PolicySpec;
use aoi_erasure::simulator::{
    run_replications, run_simulation, BatteryCapacity, Horizon, SimConfig,
};

#[derive(Parser)]
#[command(
    name = "aoi-erasure",
    about = "Optimal status updating over a feedback-free erasure channel: solver, simulator, sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the optimal policy and long-term average AoI for a given q
    Solve {
        /// Erasure probability, in [0,1) (0 is the no-erasure validation boundary)
        #[arg(long)]
        q: f64,
        /// Root tolerance on |p|
        #[arg(long, default_value_t = analytic::DEFAULT_TOL)]
        tol: f64,
    },
    /// Run the Monte Carlo simulator
    Simulate(SimulateArgs),
    /// Sweep q and emit a CSV of analytic (and optionally simulated) AoI
    Sweep(SweepArgs),
    /// Compare simulation against theory; nonzero exit if any |z| > 4
    Validate {
        #[arg(long)]
        q: f64,
        /// Number of successful updates to simulate
        #[arg(long, default_value_t = 1_000_000)]
        epochs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    q: f64,
    /// threshold:<lambda_prime> | optimal | greedy | uniform:<period>
    #[arg(long)]
    policy: String,
    /// Stop after this many successful updates
    #[arg(long, conflicts_with = "horizon")]
    epochs: Option<u64>,
    /// Stop at this simulated time (keeps the partial-age tail term)
    #[arg(long)]
    horizon: Option<f64>,
    /// Battery capacity: a positive integer or "inf"
    #[arg(long, default_value = "1")]
    battery: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent replications (deterministically derived seeds)
    #[arg(long, default_value_t = 1)]
    reps: u32,
    /// Write the event trace to this path (single replication only)
    #[arg(long)]
    trace: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.01)]
    q_min: f64,
    #[arg(long, default_value_t = 0.95)]
    q_max: f64,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Also simulate the optimal policy at each grid point
    #[arg(long)]
    simulate: bool,
    #[arg(long, default_value_t = 100_000)]
    epochs: u64,
    #[arg(long, default_value_t = 8)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path, or "-" for standard output
    #[arg(long, default_value = "-")]
    out: String,
}

const EXIT_USAGE: u8 = 2;
const EXIT_FAIL: u8 = 1;

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn channel_for(q: f64) -> Result<ChannelModel, String> {
    ChannelModel::with_zero_boundary(q).map_err(|e| e.to_string())
}

fn parse_policy(spec: &str, channel: ChannelModel) -> Result<(PolicySpec, Option<f64>), String> {
    if spec == "greedy" {
        return Ok((PolicySpec::Greedy, None));
    }
    if spec == "optimal" {
        let solved =
            solve_optimal(channel, analytic::DEFAULT_TOL).map_err(|e| e.to_string())?;
        return Ok((
            PolicySpec::threshold(solved.lambda_prime),
            Some(solved.lambda_star),
        ));
    }
    if let Some(v) = spec.strip_prefix("threshold:") {
        let lp: f64 = v.parse().map_err(|_| format!("bad threshold value {v:?}"))?;
        if lp < 0.0 {
            return Err("threshold must be nonnegative".into());
        }
        return Ok((PolicySpec::threshold(lp), None));
    }
    if let Some(v) = spec.strip_prefix("uniform:") {
        let period: f64 = v.parse().map_err(|_| format!("bad period value {v:?}"))?;
        if period <= 0.0 {
            return Err("period must be positive".into());
        }
        return Ok((PolicySpec::uniform(period), None));
    }
    Err(format!(
        "unknown policy {spec:?}; expected threshold:<l>, optimal, greedy, or uniform:<p>"
    ))
}

fn parse_battery(spec: &str) -> Result<BatteryCapacity, String> {
    if spec == "inf" {
        return Ok(BatteryCapacity::Infinite);
    }
    let b: u64 = spec
        .parse()
        .map_err(|_| format!("bad battery capacity {spec:?}"))?;
    if b == 0 {
        return Err("battery capacity must be at least 1".into());
    }
    Ok(BatteryCapacity::Finite(b))
}

fn cmd_solve(q: f64, tol: f64) -> ExitCode {
    let channel = match channel_for(q) {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    let r = match solve_optimal(channel, tol) {
        Ok(r) => r,
        Err(e) => return usage_error(&e.to_string()),
    };
    println!("q={q:.9}");
    println!("regime={}", r.regime);
    println!("lambda_prime={:.9}", r.lambda_prime);
    println!("lambda_star={:.9}", r.lambda_star);
    println!("expected_x={:.9}", r.expected_x);
    println!("expected_x_sq={:.9}", r.expected_x_sq);
    println!("expected_epoch_length={:.9}", r.expected_epoch_length);
    println!("expected_epoch_area={:.9}", r.expected_epoch_area);
    println!("root_residual={:.3e}", r.root_residual);
    println!(
        "bounds: {:.9} <= lambda_star <= {:.9}",
        analytic::infinite_battery_benchmark(channel),
        analytic::greedy_aoi(channel)
    );
    ExitCode::SUCCESS
}

fn cmd_simulate(args: SimulateArgs) -> ExitCode {
    let channel = match channel_for(args.q) {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    let (policy, analytic_star) = match parse_policy(&args.policy, channel) {
        Ok(p) => p,
        Err(e) => return usage_error(&e),
    };
    let battery = match parse_battery(&args.battery) {
        Ok(b) => b,
        Err(e) => return usage_error(&e),
    };
    let horizon = match (args.epochs, args.horizon) {
        (Some(n), None) => Horizon::Epochs(n),
        (None, Some(t)) if t > 0.0 => Horizon::Time(t),
        (None, Some(_)) => return usage_error("--horizon must be positive"),
        (None, None) => return usage_error("one of --epochs or --horizon is required"),
        (Some(_), Some(_)) => unreachable!("clap conflict"),
    };
    if args.trace.is_some() && args.reps != 1 {
        return usage_error("--trace requires --reps 1");
    }
    if args.reps == 0 {
        return usage_error("--reps must be at least 1");
    }

    let mut cfg = SimConfig::new(channel, policy, battery, horizon, args.seed);
    if args.trace.is_some() {
        cfg = cfg.with_trace();
    }

    println!("policy={policy}");
    if let Some(star) = analytic_star {
        println!("analytic_lambda_star={star:.9}");
    }
    if args.reps == 1 {
        let r = run_simulation(&cfg);
        if let Some(path) = &args.trace {
            let trace = r.trace.as_ref().expect("trace was requested");
            match File::create(path) {
                Ok(f) => {
                    let mut w = BufWriter::new(f);
                    for ev in trace {
                        if writeln!(w, "{}", ev.to_line()).is_err() {
                            return usage_error("failed writing trace");
                        }
                    }
                }
                Err(e) => return usage_error(&format!("cannot create {path}: {e}")),
            }
        }
        println!("time_avg_aoi={:.9}", r.time_avg_aoi);
        println!("total_time={:.9}", r.total_time);
        println!("n_success={}", r.n_success);
        println!("n_attempts={}", r.n_attempts);
        println!("mean_inter_attempt={:.9}", r.mean_inter_attempt);
        println!("mean_epoch_length={:.9}", r.mean_epoch_length);
        println!("mean_epoch_area={:.9}", r.mean_epoch_area);
        println!("final_partial_age_area={:.9}", r.final_partial_age_area);
        println!("overflow_events={}", r.overflow_events);
        println!("degenerate={}", r.is_degenerate());
    } else {
        let reps = run_replications(&cfg, args.reps);
        for (i, r) in reps.results.iter().enumerate() {
            println!("rep{i}_time_avg_aoi={:.9}", r.time_avg_aoi);
        }
        println!("pooled_mean={:.9}", reps.pooled_mean);
        println!("pooled_std_error={:.9}", reps.pooled_std_error);
    }
    ExitCode::SUCCESS
}

fn cmd_sweep(args: SweepArgs) -> ExitCode {
    let sim = args.simulate.then_some(SweepSimOpts {
        epochs: args.epochs,
        reps: args.reps,
        seed: args.seed,
    });
    let rows = match sweep_q(args.q_min, args.q_max, args.steps, sim) {
        Ok(rows) => rows,
        Err(e) => return usage_error(&e.to_string()),
    };
    let result = if args.out == "-" {
        let stdout = io::stdout();
        write_sweep_csv(&rows, &mut stdout.lock())
    } else {
        match File::create(&args.out) {
            Ok(f) => write_sweep_csv(&rows, &mut BufWriter::new(f)),
            Err(e) => return usage_error(&format!("cannot create {}: {e}", args.out)),
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => usage_error(&e.to_string()),
    }
}

fn cmd_validate(q: f64, epochs: u64, seed: u64) -> ExitCode {
    if !(q.is_finite() && (0.0..1.0).contains(&q)) {
        return usage_error(&format!("erasure probability must lie in [0,1), got {q}"));
    }
    let report = match validate_theory(q, epochs, seed) {
        Ok(r) => r,
        Err(e) => return usage_error(&e.to_string()),
    };
    println!("q={:.9}", report.q);
    println!("n_epochs={}", report.n_epochs);
    println!("lambda_prime={:.9}", report.lambda_prime);
    for row in &report.rows {
        println!(
            "{} analytic={:.9} simulated={:.9} stderr={:.9} z={:+.3}{}",
            row.quantity,
            row.analytic,
            row.estimate.mean,
            row.estimate.std_error,
            row.z,
            if row.z.abs() > 4.0 { " FLAG" } else { "" }
        );
    }
    let pass = report.pass();
    println!("pass={pass}");
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Solve { q, tol } => cmd_solve(q, tol),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Validate { q, epochs, seed } => cmd_validate(q, epochs, seed),
    }
}
