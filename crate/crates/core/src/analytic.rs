//! Closed-form solver for the optimal status-update policy of a unit-battery
//! energy harvesting sensor over a feedback-free erasure channel.
//!
//! The long-term average age of information (AoI) of a renewal policy is the
//! ratio of the expected per-epoch age area to the expected epoch length. The
//! ratio is minimized Dinkelbach-style: the auxiliary value
//! `p(lambda) = min E[R] - lambda * E[y]` is strictly decreasing in `lambda`
//! and its unique zero is the optimal AoI. For erasure probability
//! `q <= 1/2` the minimizer is a threshold policy `x(tau) = max(lambda', tau)`
//! and `p` reduces to a closed form in the threshold; for `q > 1/2` the
//! zero-wait greedy policy is optimal.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("erasure probability must lie in (0,1), got {0}")]
    InvalidErasureProbability(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("bisection bracket expansion failed: p({0}) = {1} >= 0 at the hard cap")]
    BracketExpansion(f64, f64),
}

/// Per-transmission erasure probability `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    q: f64,
}

impl ChannelModel {
    /// Channel with `q` in the open interval (0,1).
    pub fn new(q: f64) -> Result<Self, SolverError> {
        if q.is_finite() && q > 0.0 && q < 1.0 {
            Ok(ChannelModel { q })
        } else {
            Err(SolverError::InvalidErasureProbability(q))
        }
    }

    /// Accepts the closed boundary `q = 0` as well. The erasure-free channel
    /// is outside the model proper but reproduces the known no-erasure
    /// optimum, so validation and benchmark entry points admit it. `q = 1` is
    /// rejected everywhere (the AoI diverges).
    pub fn with_zero_boundary(q: f64) -> Result<Self, SolverError> {
        if q == 0.0 {
            Ok(ChannelModel { q })
        } else {
            Self::new(q)
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// The greedy zero-wait policy is optimal iff `q > 1/2`.
    pub fn is_greedy_regime(&self) -> bool {
        self.q > 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Threshold,
    Greedy,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Threshold => write!(f, "threshold"),
            Regime::Greedy => write!(f, "greedy"),
        }
    }
}

/// Optimal policy for a given channel, with the analytic epoch moments
/// evaluated at the optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverResult {
    pub regime: Regime,
    /// Optimal waiting threshold; 0 in the greedy regime.
    pub lambda_prime: f64,
    /// Optimal long-term average AoI.
    pub lambda_star: f64,
    /// E[x(tau)], mean inter-attempt time.
    pub expected_x: f64,
    /// E[x^2(tau)].
    pub expected_x_sq: f64,
    /// E[y], mean epoch length.
    pub expected_epoch_length: f64,
    /// E[R], mean age area per epoch.
    pub expected_epoch_area: f64,
    /// |p| at the returned root.
    pub root_residual: f64,
}

/// AoI of the zero-wait policy, `1/(1-q)`. Always achievable, so it upper
/// bounds the optimum.
pub fn greedy_aoi(channel: ChannelModel) -> f64 {
    1.0 / (1.0 - channel.q)
}

/// Auxiliary value `p(lambda)` under the greedy policy,
/// `(1 - lambda(1-q)) / (1-q)^2`.
pub fn p_greedy(lambda: f64, channel: ChannelModel) -> f64 {
    let s = 1.0 - channel.q;
    (1.0 - lambda * s) / (s * s)
}

/// E[max(lambda', tau)] for tau ~ exp(1): `lambda' + e^{-lambda'}`.
pub fn expected_inter_attempt(lambda_prime: f64) -> f64 {
    lambda_prime + (-lambda_prime).exp()
}

/// E[max(lambda', tau)^2] for tau ~ exp(1):
/// `lambda'^2 + 2(lambda' + 1) e^{-lambda'}`.
pub fn expected_inter_attempt_sq(lambda_prime: f64) -> f64 {
    lambda_prime * lambda_prime + 2.0 * (lambda_prime + 1.0) * (-lambda_prime).exp()
}

/// Mean epoch length of a threshold policy, `E[x]/(1-q)`. The attempt count
/// per epoch is geometric with success probability `1-q`.
pub fn expected_epoch_length(lambda_prime: f64, channel: ChannelModel) -> f64 {
    expected_inter_attempt(lambda_prime) / (1.0 - channel.q)
}

/// Mean age area per epoch of a threshold policy,
/// `(E[x^2]/2)/(1-q) + q E[x]^2/(1-q)^2`.
pub fn expected_epoch_area(lambda_prime: f64, channel: ChannelModel) -> f64 {
    let s = 1.0 - channel.q;
    let ex = expected_inter_attempt(lambda_prime);
    0.5 * expected_inter_attempt_sq(lambda_prime) / s + channel.q * ex * ex / (s * s)
}

/// The AoI value `lambda` whose auxiliary problem is minimized by the
/// threshold `lambda'`:
/// `lambda = (1+q)/(1-q) lambda' + 2q/(1-q) e^{-lambda'}`.
/// Strictly increasing in `lambda'` for `lambda' >= 0`.
pub fn lambda_from_lambda_prime(lambda_prime: f64, channel: ChannelModel) -> f64 {
    let s = 1.0 - channel.q;
    ((1.0 + channel.q) * lambda_prime + 2.0 * channel.q * (-lambda_prime).exp()) / s
}

/// Auxiliary value along the threshold family:
/// `p = [(1-q)(e^{-l'} - l'^2/2) - q(l' + e^{-l'})^2] / (1-q)^2`.
/// Identical to `expected_epoch_area - lambda_from_lambda_prime *
/// expected_epoch_length`.
pub fn p_threshold(lambda_prime: f64, channel: ChannelModel) -> f64 {
    let s = 1.0 - channel.q;
    let e = (-lambda_prime).exp();
    let ex = lambda_prime + e;
    (s * (e - 0.5 * lambda_prime * lambda_prime) - channel.q * ex * ex) / (s * s)
}

/// Optimal long-term AoI with an infinite battery, `(1+q)/(2(1-q))`. Lower
/// bounds the unit-battery optimum.
pub fn infinite_battery_benchmark(channel: ChannelModel) -> f64 {
    (1.0 + channel.q) / (2.0 * (1.0 - channel.q))
}

pub const DEFAULT_TOL: f64 = 1e-9;

const BRACKET_START: f64 = 2.0;
const BRACKET_CAP: f64 = 64.0;
const WIDTH_LIMIT: f64 = 1e-10;

/// Computes the optimal policy for the channel.
///
/// For `q > 1/2` the result is the greedy regime with `lambda* = 1/(1-q)`.
/// For `q <= 1/2` the threshold is the unique root of `p_threshold`, found by
/// doubling the upper bracket from 2 until `p < 0` (capped at 64) and then
/// bisecting until the bracket width is below 1e-10 or `|p| <= tol`.
pub fn solve_optimal(channel: ChannelModel, tol: f64) -> Result<SolverResult, SolverError> {
    if tol <= 0.0 || tol.is_nan() {
        return Err(SolverError::InvalidTolerance(tol));
    }
    if channel.is_greedy_regime() {
        let lambda_star = greedy_aoi(channel);
        let s = 1.0 - channel.q;
        return Ok(SolverResult {
            regime: Regime::Greedy,
            lambda_prime: 0.0,
            lambda_star,
            expected_x: 1.0,
            expected_x_sq: 2.0,
            expected_epoch_length: 1.0 / s,
            expected_epoch_area: 1.0 / s + channel.q / (s * s),
            root_residual: p_greedy(lambda_star, channel).abs(),
        });
    }

    let p0 = p_threshold(0.0, channel);
    let lambda_prime = if p0 <= 0.0 {
        // q = 1/2 boundary: p(0) = 0 exactly, threshold 0.
        0.0
    } else {
        let mut hi = BRACKET_START;
        while p_threshold(hi, channel) >= 0.0 {
            hi *= 2.0;
            if hi > BRACKET_CAP {
                return Err(SolverError::BracketExpansion(hi, p_threshold(hi, channel)));
            }
        }
        let mut lo = 0.0_f64;
        loop {
            let mid = 0.5 * (lo + hi);
            let pm = p_threshold(mid, channel);
            if pm.abs() <= tol || hi - lo <= WIDTH_LIMIT {
                break mid;
            }
            if pm > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    };

    Ok(SolverResult {
        regime: Regime::Threshold,
        lambda_prime,
        lambda_star: lambda_from_lambda_prime(lambda_prime, channel),
        expected_x: expected_inter_attempt(lambda_prime),
        expected_x_sq: expected_inter_attempt_sq(lambda_prime),
        expected_epoch_length: expected_epoch_length(lambda_prime, channel),
        expected_epoch_area: expected_epoch_area(lambda_prime, channel),
        root_residual: p_threshold(lambda_prime, channel).abs(),
    })
}
