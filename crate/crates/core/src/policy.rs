//! Update policies expressed as waiting functions of the most recent energy
//! arrival delay. Policies never see erasure outcomes; the interface simply
//! does not carry them, which is what makes the feedback-free constraint
//! structural rather than behavioral.

/// A waiting-function family. `tau` below is the delay from the previous
/// attempt until the battery next holds energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    /// Transmit at `max(lambda_prime, tau)` after the previous attempt.
    Threshold { lambda_prime: f64 },
    /// Transmit as soon as energy is available.
    Greedy,
    /// Transmit at the first multiple of `period` (on the wall clock,
    /// anchored at 0) at or after the energy arrival, and strictly after the
    /// previous attempt. Energy arriving exactly on a grid point is
    /// transmitted at that point.
    BestEffortUniform { period: f64 },
}

impl PolicySpec {
    pub fn threshold(lambda_prime: f64) -> Self {
        assert!(lambda_prime >= 0.0, "threshold must be nonnegative");
        PolicySpec::Threshold { lambda_prime }
    }

    pub fn uniform(period: f64) -> Self {
        assert!(period > 0.0, "period must be positive");
        PolicySpec::BestEffortUniform { period }
    }

    /// Delay from the previous attempt (at wall-clock `prev_attempt_clock`)
    /// to the next attempt, given energy availability `tau` after the
    /// previous attempt. Always at least `tau` (energy causality).
    pub fn waiting_time(&self, tau: f64, prev_attempt_clock: f64) -> f64 {
        match *self {
            PolicySpec::Threshold { lambda_prime } => lambda_prime.max(tau),
            PolicySpec::Greedy => tau,
            PolicySpec::BestEffortUniform { period } => {
                // first grid point at or after the energy arrival, but
                // strictly after the previous attempt (one attempt per
                // slot); the epsilon absorbs fp drift in long runs
                let eps = 1e-6 * period;
                let energy_at = prev_attempt_clock + tau;
                let mut k = ((energy_at - eps) / period).ceil();
                if k * period <= prev_attempt_clock + eps {
                    k += 1.0;
                }
                (k * period - prev_attempt_clock).max(tau)
            }
        }
    }
}

impl std::fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            PolicySpec::Threshold { lambda_prime } => write!(f, "threshold:{lambda_prime}"),
            PolicySpec::Greedy => write!(f, "greedy"),
            PolicySpec::BestEffortUniform { period } => write!(f, "uniform:{period}"),
        }
    }
}
