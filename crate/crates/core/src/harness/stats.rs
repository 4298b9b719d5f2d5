//! Estimators with standard errors for the campaign summaries.
//!
//! Slots inside one transport block are correlated (same HARQ process), so
//! slot-level ratios are treated as ratio estimators over independent
//! transport blocks and their standard errors use the delta method.

/// `sum(a) / sum(b)` over independent clusters, with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioEstimate {
    pub value: f64,
    pub std_error: f64,
}

pub fn ratio_estimate(pairs: &[(f64, f64)]) -> RatioEstimate {
    let n = pairs.len();
    let sum_b: f64 = pairs.iter().map(|p| p.1).sum();
    if n == 0 || sum_b == 0.0 {
        return RatioEstimate {
            value: f64::NAN,
            std_error: f64::NAN,
        };
    }
    let sum_a: f64 = pairs.iter().map(|p| p.0).sum();
    let r = sum_a / sum_b;
    if n < 2 {
        return RatioEstimate {
            value: r,
            std_error: f64::NAN,
        };
    }
    let resid: f64 = pairs.iter().map(|(a, b)| (a - r * b).powi(2)).sum();
    let nf = n as f64;
    RatioEstimate {
        value: r,
        std_error: (nf / (nf - 1.0) * resid).sqrt() / sum_b,
    }
}

/// Sample mean with its standard error.
pub fn mean_estimate(values: &[f64]) -> RatioEstimate {
    let pairs: Vec<(f64, f64)> = values.iter().map(|&v| (v, 1.0)).collect();
    ratio_estimate(&pairs)
}

/// Standard error of `p_hat = k/n`.
pub fn proportion_std_error(k: usize, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let p = k as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}
