//! Event-driven Monte Carlo of the status update system: unit-rate Poisson
//! energy arrivals into a finite battery, policy-driven transmission
//! attempts, Bernoulli erasures, and exact age-area accounting.
//!
//! Two RNG substreams are derived from the config seed with SplitMix64, one
//! for energy arrivals and one for erasures, so changing the policy never
//! perturbs the channel realization. The generator is ChaCha8 throughout;
//! identical seed and config give a bit-identical result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::ChannelModel;
use crate::policy::PolicySpec;

/// SplitMix64 output function.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for substream `index` of a base seed. Index 0 feeds the arrival
/// stream, index 1 the erasure stream; replication `r >= 1` of
/// [`run_replications`] uses `REPLICATION_STREAM_BASE + r`.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

const ARRIVAL_STREAM: u64 = 0;
const ERASURE_STREAM: u64 = 1;
pub const REPLICATION_STREAM_BASE: u64 = 0x5EED_0000;

fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    // inverse CDF on (0,1]; 1 - gen() avoids ln(0)
    -(1.0 - rng.gen::<f64>()).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatteryCapacity {
    Finite(u64),
    Infinite,
}

impl BatteryCapacity {
    fn clip(&self, level: u64) -> (u64, bool) {
        match *self {
            BatteryCapacity::Finite(cap) if level > cap => (cap, true),
            _ => (level, false),
        }
    }
}

/// Stopping rule: a fixed simulated time span, or a target number of
/// successful updates (in which case the horizon ends at the last success
/// and the age-area tail term is zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Time(f64),
    Epochs(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub channel: ChannelModel,
    pub policy: PolicySpec,
    pub battery: BatteryCapacity,
    pub horizon: Horizon,
    pub seed: u64,
    /// Record the event trace in the result.
    pub record_trace: bool,
}

impl SimConfig {
    pub fn new(
        channel: ChannelModel,
        policy: PolicySpec,
        battery: BatteryCapacity,
        horizon: Horizon,
        seed: u64,
    ) -> Self {
        match horizon {
            Horizon::Time(t) => assert!(t > 0.0, "horizon must be positive"),
            Horizon::Epochs(n) => assert!(n > 0, "horizon must be positive"),
        }
        if let BatteryCapacity::Finite(b) = battery {
            assert!(b >= 1, "battery capacity must be at least 1");
        }
        SimConfig {
            channel,
            policy,
            battery,
            horizon,
            seed,
            record_trace: false,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }
}

/// One interval between consecutive successful receptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// Epoch length y.
    pub length: f64,
    /// Transmission attempts in the epoch.
    pub attempts: u64,
    /// Area under the age curve within the epoch, y^2/2.
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Arrival,
    Attempt,
    Success,
}

impl std::fmt::Display for TraceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceKind::Arrival => write!(f, "ARRIVAL"),
            TraceKind::Attempt => write!(f, "ATTEMPT"),
            TraceKind::Success => write!(f, "SUCCESS"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
    pub battery_after: u64,
    pub age_after: f64,
}

impl TraceEvent {
    /// Fixed-precision line `time,kind,battery_after,age_after`.
    pub fn to_line(&self) -> String {
        format!(
            "{:.9},{},{},{:.9}",
            self.time, self.kind, self.battery_after, self.age_after
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// r(T)/T: (sum of epoch areas + tail) over total time.
    pub time_avg_aoi: f64,
    /// Total simulated time T (the last success time under an epoch horizon).
    pub total_time: f64,
    pub n_success: u64,
    pub n_attempts: u64,
    pub epochs: Vec<EpochRecord>,
    /// Empirical mean of the inter-attempt delays x.
    pub mean_inter_attempt: f64,
    pub mean_epoch_length: f64,
    pub mean_epoch_area: f64,
    /// (T - s_{n(T)})^2 / 2, zero under an epoch horizon.
    pub final_partial_age_area: f64,
    /// Sum of x and x^2 over all attempts, for standard errors.
    pub sum_inter_attempt: f64,
    pub sum_inter_attempt_sq: f64,
    /// Arrivals lost to a full battery.
    pub overflow_events: u64,
    pub trace: Option<Vec<TraceEvent>>,
}

impl SimResult {
    /// True when the horizon ended before any successful update.
    pub fn is_degenerate(&self) -> bool {
        self.n_success == 0
    }

    pub fn epoch_lengths(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.length).collect()
    }

    pub fn epoch_areas(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.area).collect()
    }

    pub fn epoch_attempts(&self) -> Vec<u64> {
        self.epochs.iter().map(|e| e.attempts).collect()
    }

    pub fn mean_attempts_per_epoch(&self) -> f64 {
        if self.epochs.is_empty() {
            f64::NAN
        } else {
            self.n_attempts as f64 / self.epochs.len() as f64
        }
    }
}

enum ErasureSource<'a> {
    Stream(Box<ChaCha8Rng>),
    Pregenerated(&'a [bool], usize),
}

impl ErasureSource<'_> {
    fn next_erased(&mut self, q: f64) -> bool {
        match self {
            ErasureSource::Stream(rng) => rng.gen::<f64>() < q,
            ErasureSource::Pregenerated(draws, idx) => {
                let e = draws
                    .get(*idx)
                    .copied()
                    .expect("pregenerated erasure sequence exhausted");
                *idx += 1;
                e
            }
        }
    }
}

/// Erasure outcomes the simulation with this config would draw, in attempt
/// order. Feeding them back through [`run_simulation_pregen`] must reproduce
/// the run exactly; the policy has no channel to observe them through.
pub fn pregenerate_erasures(config: &SimConfig, n: usize) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(config.seed, ERASURE_STREAM));
    let q = config.channel.q();
    (0..n).map(|_| rng.gen::<f64>() < q).collect()
}

pub fn run_simulation(config: &SimConfig) -> SimResult {
    let erasures = ErasureSource::Stream(Box::new(ChaCha8Rng::seed_from_u64(substream_seed(
        config.seed,
        ERASURE_STREAM,
    ))));
    run_with_erasures(config, erasures)
}

/// As [`run_simulation`] but consuming a pregenerated erasure sequence.
/// Panics if the sequence is shorter than the number of attempts.
pub fn run_simulation_pregen(config: &SimConfig, erasures: &[bool]) -> SimResult {
    run_with_erasures(config, ErasureSource::Pregenerated(erasures, 0))
}

fn run_with_erasures(config: &SimConfig, erasures: ErasureSource) -> SimResult {
    // With a unit battery every transmission empties it, so the next arrival
    // is exp(1) from the attempt by memorylessness; the arrival queue reduces
    // to one draw per attempt.
    match config.battery {
        BatteryCapacity::Finite(1) => run_unit_battery(config, erasures),
        _ => run_general(config, erasures),
    }
}

struct Accounting {
    epochs: Vec<EpochRecord>,
    area_sum: f64,
    n_attempts: u64,
    attempts_in_epoch: u64,
    sum_x: f64,
    sum_x_sq: f64,
    last_success: f64,
    trace: Option<Vec<TraceEvent>>,
}

impl Accounting {
    fn new(config: &SimConfig) -> Self {
        Accounting {
            epochs: Vec::new(),
            area_sum: 0.0,
            n_attempts: 0,
            attempts_in_epoch: 0,
            sum_x: 0.0,
            sum_x_sq: 0.0,
            last_success: 0.0,
            trace: config.record_trace.then(Vec::new),
        }
    }

    fn record(&mut self, time: f64, kind: TraceKind, battery_after: u64) {
        if let Some(t) = self.trace.as_mut() {
            let age_after = if kind == TraceKind::Success {
                0.0
            } else {
                time - self.last_success
            };
            t.push(TraceEvent {
                time,
                kind,
                battery_after,
                age_after,
            });
        }
    }

    fn attempt(&mut self, time: f64, x: f64, battery_after: u64) {
        self.n_attempts += 1;
        self.attempts_in_epoch += 1;
        self.sum_x += x;
        self.sum_x_sq += x * x;
        self.record(time, TraceKind::Attempt, battery_after);
    }

    fn success(&mut self, time: f64, battery_after: u64) {
        let y = time - self.last_success;
        let area = 0.5 * y * y;
        self.epochs.push(EpochRecord {
            length: y,
            attempts: self.attempts_in_epoch,
            area,
        });
        self.area_sum += area;
        self.attempts_in_epoch = 0;
        self.record(time, TraceKind::Success, battery_after);
        self.last_success = time;
    }

    fn finish(self, total_time: f64, overflow_events: u64) -> SimResult {
        let tail_span = total_time - self.last_success;
        let tail = 0.5 * tail_span * tail_span;
        let n_success = self.epochs.len() as u64;
        let n_epochs = self.epochs.len().max(1) as f64;
        SimResult {
            time_avg_aoi: (self.area_sum + tail) / total_time,
            total_time,
            n_success,
            n_attempts: self.n_attempts,
            mean_inter_attempt: self.sum_x / self.n_attempts.max(1) as f64,
            mean_epoch_length: self.epochs.iter().map(|e| e.length).sum::<f64>() / n_epochs,
            mean_epoch_area: self.area_sum / n_epochs,
            epochs: self.epochs,
            final_partial_age_area: tail,
            sum_inter_attempt: self.sum_x,
            sum_inter_attempt_sq: self.sum_x_sq,
            overflow_events,
            trace: self.trace,
        }
    }
}

fn run_unit_battery(config: &SimConfig, mut erasures: ErasureSource) -> SimResult {
    let q = config.channel.q();
    let mut arrivals = ChaCha8Rng::seed_from_u64(substream_seed(config.seed, ARRIVAL_STREAM));
    let mut acc = Accounting::new(config);

    // t = 0 carries a successful update by convention: fresh information,
    // and the initial energy unit spent delivering it. Every epoch therefore
    // starts with an empty battery.
    let mut prev_attempt = 0.0_f64;
    loop {
        let tau = exp1(&mut arrivals);
        let x = config.policy.waiting_time(tau, prev_attempt);
        let attempt_time = prev_attempt + x;
        if let Horizon::Time(t_end) = config.horizon {
            if attempt_time > t_end {
                return acc.finish(t_end, 0);
            }
        }
        acc.record(prev_attempt + tau, TraceKind::Arrival, 1);
        acc.attempt(attempt_time, x, 0);
        if !erasures.next_erased(q) {
            acc.success(attempt_time, 0);
            if let Horizon::Epochs(n) = config.horizon {
                if acc.epochs.len() as u64 >= n {
                    return acc.finish(attempt_time, 0);
                }
            }
        }
        prev_attempt = attempt_time;
    }
}

fn run_general(config: &SimConfig, mut erasures: ErasureSource) -> SimResult {
    let q = config.channel.q();
    let mut arrivals = ChaCha8Rng::seed_from_u64(substream_seed(config.seed, ARRIVAL_STREAM));
    let mut acc = Accounting::new(config);
    let mut overflow_events = 0_u64;

    // Full battery at t = 0, less the unit consumed by the conventional
    // initial update.
    let mut battery = match config.battery {
        BatteryCapacity::Finite(cap) => cap - 1,
        BatteryCapacity::Infinite => 0,
    };
    let mut next_arrival = exp1(&mut arrivals);
    let mut prev_attempt = 0.0_f64;

    loop {
        // time from the previous attempt until energy is next available
        let tau = if battery >= 1 {
            0.0
        } else {
            loop {
                let at = next_arrival;
                next_arrival += exp1(&mut arrivals);
                let (b, overflowed) = config.battery.clip(battery + 1);
                battery = b;
                if overflowed {
                    overflow_events += 1;
                }
                acc.record(at, TraceKind::Arrival, battery);
                if battery >= 1 {
                    break at - prev_attempt;
                }
            }
        };
        let x = config.policy.waiting_time(tau, prev_attempt);
        let attempt_time = prev_attempt + x;
        if let Horizon::Time(t_end) = config.horizon {
            if attempt_time > t_end {
                // drain arrivals up to the horizon so overflow counts are exact
                while next_arrival <= t_end {
                    let at = next_arrival;
                    next_arrival += exp1(&mut arrivals);
                    let (b, overflowed) = config.battery.clip(battery + 1);
                    battery = b;
                    if overflowed {
                        overflow_events += 1;
                    }
                    acc.record(at, TraceKind::Arrival, battery);
                }
                return acc.finish(t_end, overflow_events);
            }
        }
        // arrivals landing while the policy waits
        while next_arrival <= attempt_time {
            let at = next_arrival;
            next_arrival += exp1(&mut arrivals);
            let (b, overflowed) = config.battery.clip(battery + 1);
            battery = b;
            if overflowed {
                overflow_events += 1;
            }
            acc.record(at, TraceKind::Arrival, battery);
        }
        debug_assert!(battery >= 1, "energy causality violated");
        battery -= 1;
        acc.attempt(attempt_time, x, battery);
        if !erasures.next_erased(q) {
            acc.success(attempt_time, battery);
            if let Horizon::Epochs(n) = config.horizon {
                if acc.epochs.len() as u64 >= n {
                    return acc.finish(attempt_time, overflow_events);
                }
            }
        }
        prev_attempt = attempt_time;
    }
}

/// Aggregate of independent replications.
#[derive(Debug, Clone, PartialEq)]
pub struct Replications {
    pub results: Vec<SimResult>,
    /// Mean of the per-replication time-average AoI values.
    pub pooled_mean: f64,
    /// Sample standard error of that mean; 0 for a single replication.
    pub pooled_std_error: f64,
}

/// Runs `n_reps` independent simulations. Replication 0 uses the config seed
/// unchanged (so a single replication reproduces [`run_simulation`]);
/// replication `r >= 1` uses `substream_seed(seed, REPLICATION_STREAM_BASE + r)`.
pub fn run_replications(config: &SimConfig, n_reps: u32) -> Replications {
    assert!(n_reps >= 1, "need at least one replication");
    let results: Vec<SimResult> = (0..n_reps)
        .map(|r| {
            let mut cfg = config.clone();
            if r > 0 {
                cfg.seed = substream_seed(config.seed, REPLICATION_STREAM_BASE + r as u64);
            }
            run_simulation(&cfg)
        })
        .collect();
    let n = results.len() as f64;
    let pooled_mean = results.iter().map(|r| r.time_avg_aoi).sum::<f64>() / n;
    let pooled_std_error = if results.len() > 1 {
        let var = results
            .iter()
            .map(|r| (r.time_avg_aoi - pooled_mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Replications {
        results,
        pooled_mean,
        pooled_std_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;

    fn cfg(q: f64, policy: PolicySpec, horizon: Horizon, seed: u64) -> SimConfig {
        SimConfig::new(
            ChannelModel::with_zero_boundary(q).unwrap(),
            policy,
            BatteryCapacity::Finite(1),
            horizon,
            seed,
        )
    }

    #[test]
    fn greedy_no_erasures_aoi_near_one() {
        let r = run_simulation(&cfg(0.0, PolicySpec::Greedy, Horizon::Epochs(200_000), 7));
        assert!((r.time_avg_aoi - 1.0).abs() < 0.02, "aoi={}", r.time_avg_aoi);
        assert_eq!(r.n_success, 200_000);
        assert_eq!(r.n_attempts, r.n_success);
        assert_eq!(r.final_partial_age_area, 0.0);
    }

    #[test]
    fn greedy_half_erasures_aoi_near_two() {
        let r = run_simulation(&cfg(0.5, PolicySpec::Greedy, Horizon::Epochs(200_000), 7));
        assert!((r.time_avg_aoi - 2.0).abs() < 0.05, "aoi={}", r.time_avg_aoi);
        assert!(r.n_success <= r.n_attempts);
    }

    #[test]
    fn deterministic_given_seed() {
        let c = cfg(0.3, PolicySpec::threshold(0.4), Horizon::Epochs(5_000), 42).with_trace();
        let a = run_simulation(&c);
        let b = run_simulation(&c);
        assert_eq!(a, b);
    }

    #[test]
    fn seeds_differ() {
        let a = run_simulation(&cfg(0.3, PolicySpec::Greedy, Horizon::Epochs(1_000), 1));
        let b = run_simulation(&cfg(0.3, PolicySpec::Greedy, Horizon::Epochs(1_000), 2));
        assert_ne!(a.time_avg_aoi, b.time_avg_aoi);
    }

    #[test]
    fn area_accounting_exact() {
        let r = run_simulation(&cfg(0.4, PolicySpec::threshold(0.3), Horizon::Time(5_000.0), 11));
        let recomputed: f64 =
            r.epochs.iter().map(|e| 0.5 * e.length * e.length).sum::<f64>()
                + r.final_partial_age_area;
        let direct = r.time_avg_aoi * r.total_time;
        assert!(
            (recomputed - direct).abs() <= 1e-12 * direct.abs().max(1.0),
            "recomputed={recomputed} direct={direct}"
        );
        for e in &r.epochs {
            assert!((e.area - 0.5 * e.length * e.length).abs() < 1e-12);
            assert!(e.attempts >= 1);
            assert!(e.length > 0.0);
        }
    }

    #[test]
    fn attempt_counts_geometric_mean() {
        let q = 0.4;
        let r = run_simulation(&cfg(q, PolicySpec::Greedy, Horizon::Epochs(100_000), 3));
        let n = r.epochs.len() as f64;
        let mean = r.mean_attempts_per_epoch();
        // geometric(p = 1-q): mean 1/p, variance q/p^2
        let expect = 1.0 / (1.0 - q);
        let sd = (q / ((1.0 - q) * (1.0 - q))).sqrt();
        assert!(
            (mean - expect).abs() <= 3.0 * sd / n.sqrt(),
            "mean={mean} expect={expect}"
        );
    }

    #[test]
    fn empirical_moments_match_analytic() {
        let q = 0.3;
        let c = ChannelModel::new(q).unwrap();
        let lp = 0.5;
        let r = run_simulation(&cfg(q, PolicySpec::threshold(lp), Horizon::Epochs(200_000), 9));
        let n_att = r.n_attempts as f64;
        let ex = analytic::expected_inter_attempt(lp);
        let varx = analytic::expected_inter_attempt_sq(lp) - ex * ex;
        assert!(
            (r.mean_inter_attempt - ex).abs() <= 3.0 * (varx / n_att).sqrt(),
            "mean_x={} expect={ex}",
            r.mean_inter_attempt
        );
        let ey = analytic::expected_epoch_length(lp, c);
        assert!((r.mean_epoch_length - ey).abs() / ey < 0.01);
        let er = analytic::expected_epoch_area(lp, c);
        assert!((r.mean_epoch_area - er).abs() / er < 0.02);
    }

    #[test]
    fn trace_respects_battery_and_causality() {
        let c = SimConfig::new(
            ChannelModel::new(0.3).unwrap(),
            PolicySpec::uniform(1.0),
            BatteryCapacity::Finite(3),
            Horizon::Time(2_000.0),
            17,
        )
        .with_trace();
        let r = run_simulation(&c);
        let trace = r.trace.as_ref().unwrap();
        let mut prev_time = 0.0;
        for ev in trace {
            assert!(ev.time >= prev_time - 1e-12, "events out of order");
            prev_time = ev.time;
            assert!(ev.battery_after <= 3);
            if ev.kind == TraceKind::Attempt {
                // battery_after is post-consumption, so it was >= 1 before
                assert!(ev.battery_after <= 2);
            }
        }
        assert!(trace.iter().any(|e| e.kind == TraceKind::Success));
    }

    #[test]
    fn pregen_erasures_reproduce_run() {
        let c = cfg(0.45, PolicySpec::threshold(0.2), Horizon::Epochs(2_000), 23).with_trace();
        let direct = run_simulation(&c);
        let draws = pregenerate_erasures(&c, direct.n_attempts as usize);
        let replay = run_simulation_pregen(&c, &draws);
        assert_eq!(direct, replay);
    }

    #[test]
    fn degenerate_when_horizon_tiny() {
        let r = run_simulation(&cfg(0.5, PolicySpec::threshold(5.0), Horizon::Time(1e-6), 5));
        assert!(r.is_degenerate());
        assert_eq!(r.n_success, 0);
        assert!(r.time_avg_aoi >= 0.0);
    }

    #[test]
    fn replications_deterministic_and_pooled() {
        let c = cfg(0.2, PolicySpec::Greedy, Horizon::Epochs(2_000), 99);
        let a = run_replications(&c, 8);
        let b = run_replications(&c, 8);
        assert_eq!(a, b);
        assert!(a.pooled_std_error > 0.0);
        let single = run_replications(&c, 1);
        assert_eq!(single.results[0], run_simulation(&c));
        assert_eq!(single.pooled_std_error, 0.0);
    }

    #[test]
    fn infinite_battery_never_overflows() {
        let c = SimConfig::new(
            ChannelModel::new(0.3).unwrap(),
            PolicySpec::uniform(1.0),
            BatteryCapacity::Infinite,
            Horizon::Time(5_000.0),
            31,
        );
        let r = run_simulation(&c);
        assert_eq!(r.overflow_events, 0);
        assert!(r.n_success > 0);
    }

    #[test]
    fn trace_line_format() {
        let ev = TraceEvent {
            time: 1.5,
            kind: TraceKind::Attempt,
            battery_after: 0,
            age_after: 2.25,
        };
        assert_eq!(ev.to_line(), "1.500000000,ATTEMPT,0,2.250000000");
    }
}
