//! Estimation utilities over epoch streams: the renewal-reward ratio
//! estimator with a delta-method standard error, and loose i.i.d. screens
//! used as renewal diagnostics.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("inputs must have equal lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("all epoch lengths must be positive")]
    NonPositiveLength,
    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl EstimateWithError {
    pub fn z_score(&self, reference: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.mean == reference {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - reference) / self.std_error
        }
    }
}

/// Sample mean with its standard error (0 by convention for n = 1).
pub fn mean_estimator(samples: &[f64]) -> Result<EstimateWithError, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(EstimateWithError { mean, std_error, n })
}

/// Renewal-reward ratio `sum(areas)/sum(lengths)` with a delta-method
/// standard error. Epochs are i.i.d., so with ratio r and per-epoch
/// covariances the variance of the estimator is
/// `(var(R) - 2 r cov(R,y) + r^2 var(y)) / (n ybar^2)`.
pub fn ratio_estimator(areas: &[f64], lengths: &[f64]) -> Result<EstimateWithError, StatsError> {
    if areas.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if areas.len() != lengths.len() {
        return Err(StatsError::LengthMismatch(areas.len(), lengths.len()));
    }
    if lengths.iter().any(|&y| y <= 0.0) {
        return Err(StatsError::NonPositiveLength);
    }
    let n = areas.len();
    let nf = n as f64;
    let sum_r: f64 = areas.iter().sum();
    let sum_y: f64 = lengths.iter().sum();
    let mean = sum_r / sum_y;
    let std_error = if n > 1 {
        let rbar = sum_r / nf;
        let ybar = sum_y / nf;
        let mut s_rr = 0.0;
        let mut s_yy = 0.0;
        let mut s_ry = 0.0;
        for (&r, &y) in areas.iter().zip(lengths) {
            s_rr += (r - rbar) * (r - rbar);
            s_yy += (y - ybar) * (y - ybar);
            s_ry += (r - rbar) * (y - ybar);
        }
        s_rr /= nf - 1.0;
        s_yy /= nf - 1.0;
        s_ry /= nf - 1.0;
        let var = (s_rr - 2.0 * mean * s_ry + mean * mean * s_yy) / (nf * ybar * ybar);
        var.max(0.0).sqrt()
    } else {
        0.0
    };
    Ok(EstimateWithError { mean, std_error, n })
}

/// Screens for the epoch lengths being i.i.d.: lag-1 autocorrelation against
/// a 4/sqrt(n) band and a split-half mean comparison against 3 sigma. Loose
/// gates by design, to keep false alarms rare across repeated runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IidDiagnostics {
    pub n: usize,
    pub lag1_autocorr: f64,
    /// 4/sqrt(n) acceptance band for the autocorrelation.
    pub autocorr_bound: f64,
    /// (mean of first half - mean of second half) in sigma units.
    pub split_half_z: f64,
    pub autocorr_pass: bool,
    pub split_half_pass: bool,
}

impl IidDiagnostics {
    pub fn pass(&self) -> bool {
        self.autocorr_pass && self.split_half_pass
    }
}

pub fn iid_diagnostics(lengths: &[f64]) -> Result<IidDiagnostics, StatsError> {
    let n = lengths.len();
    if n < 100 {
        return Err(StatsError::InsufficientData { needed: 100, got: n });
    }
    let nf = n as f64;
    let mean = lengths.iter().sum::<f64>() / nf;
    let var = lengths.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    let lag1 = if var > 0.0 {
        lengths
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum::<f64>()
            / (nf * var)
    } else {
        0.0
    };
    let autocorr_bound = 4.0 / nf.sqrt();

    let half = n / 2;
    let a = mean_estimator(&lengths[..half]).expect("nonempty half");
    let b = mean_estimator(&lengths[half..]).expect("nonempty half");
    let denom = (a.std_error * a.std_error + b.std_error * b.std_error).sqrt();
    let split_half_z = if denom > 0.0 {
        (a.mean - b.mean) / denom
    } else {
        0.0
    };

    Ok(IidDiagnostics {
        n,
        lag1_autocorr: lag1,
        autocorr_bound,
        split_half_z,
        autocorr_pass: lag1.abs() <= autocorr_bound,
        split_half_pass: split_half_z.abs() <= 3.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exp1_samples(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect()
    }

    #[test]
    fn ratio_single_sample() {
        let e = ratio_estimator(&[0.5], &[1.0]).unwrap();
        assert_eq!(e.mean, 0.5);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.n, 1);
    }

    #[test]
    fn ratio_deterministic_epochs() {
        let c = 3.0;
        let lengths = vec![c; 50];
        let areas: Vec<f64> = lengths.iter().map(|y| 0.5 * y * y).collect();
        let e = ratio_estimator(&areas, &lengths).unwrap();
        assert!((e.mean - c / 2.0).abs() < 1e-12);
        assert!(e.std_error < 1e-12);
    }

    #[test]
    fn ratio_exp_epochs_near_one() {
        // y ~ exp(1), R = y^2/2: E[R]/E[y] = 1
        let lengths = exp1_samples(1_000_000, 12);
        let areas: Vec<f64> = lengths.iter().map(|y| 0.5 * y * y).collect();
        let e = ratio_estimator(&areas, &lengths).unwrap();
        assert!((e.mean - 1.0).abs() <= 3.0 * e.std_error, "mean={}", e.mean);
        assert!(e.std_error < 0.01);
    }

    #[test]
    fn ratio_scale_equivariant() {
        let lengths = exp1_samples(1_000, 4);
        let areas: Vec<f64> = lengths.iter().map(|y| 0.5 * y * y).collect();
        let base = ratio_estimator(&areas, &lengths).unwrap();
        let c = 2.5;
        let lengths2: Vec<f64> = lengths.iter().map(|y| c * y).collect();
        let areas2: Vec<f64> = areas.iter().map(|r| c * r).collect();
        let scaled = ratio_estimator(&areas2, &lengths2).unwrap();
        assert!((scaled.mean - base.mean).abs() < 1e-12);
    }

    #[test]
    fn ratio_errors() {
        assert_eq!(ratio_estimator(&[], &[]), Err(StatsError::EmptyInput));
        assert_eq!(
            ratio_estimator(&[1.0], &[1.0, 2.0]),
            Err(StatsError::LengthMismatch(1, 2))
        );
        assert_eq!(
            ratio_estimator(&[1.0], &[0.0]),
            Err(StatsError::NonPositiveLength)
        );
    }

    #[test]
    fn iid_passes_on_iid_input() {
        let d = iid_diagnostics(&exp1_samples(100_000, 8)).unwrap();
        assert!(d.pass(), "{d:?}");
    }

    #[test]
    fn iid_fails_on_ar1_input() {
        // AR(1) with coefficient 0.9, exp(1)-driven innovations
        let innov = exp1_samples(100_000, 9);
        let mut x = 0.0;
        let series: Vec<f64> = innov
            .iter()
            .map(|&e| {
                x = 0.9 * x + e;
                x
            })
            .collect();
        let d = iid_diagnostics(&series).unwrap();
        assert!(!d.autocorr_pass, "{d:?}");
        assert!(!d.pass());
    }

    #[test]
    fn iid_needs_enough_data() {
        assert_eq!(
            iid_diagnostics(&[1.0; 99]),
            Err(StatsError::InsufficientData { needed: 100, got: 99 })
        );
    }

    #[test]
    fn z_score_convention() {
        let e = EstimateWithError { mean: 1.0, std_error: 0.0, n: 1 };
        assert_eq!(e.z_score(1.0), 0.0);
        let e2 = EstimateWithError { mean: 1.5, std_error: 0.25, n: 10 };
        assert_eq!(e2.z_score(1.0), 2.0);
    }
}
