use std::f64::consts::SQRT_2;

use crate::error::{argument, Result};
use crate::grid::{ReSet, ResourceGrid};

/// Noise variance floor used for LLR scaling so a noiseless link still
/// produces finite soft values.
pub const MIN_NOISE_VARIANCE: f64 = 1e-12;

/// One-tap equalization and max-log QPSK LLRs over `data_set`, in mapping
/// order. Each RE yields two LLRs `2|h|^2/sigma^2 * sqrt(2) * Re/Im(s_hat)`;
/// an RE with a zero channel estimate yields two zero LLRs.
pub fn equalize_demod(
    y: &ResourceGrid,
    h_hat: &ResourceGrid,
    noise_variance: f64,
    data_set: &ReSet,
) -> Result<Vec<f64>> {
    if !y.same_shape(h_hat) {
        return argument("received grid and channel estimate have different dimensions");
    }
    if !(noise_variance >= 0.0) {
        return argument(format!("noise variance must be non-negative, got {noise_variance}"));
    }
    let noise = noise_variance.max(MIN_NOISE_VARIANCE);
    let mut llrs = Vec::with_capacity(2 * data_set.len());
    for ((yv, hv), &is_data) in y.as_slice().iter().zip(h_hat.as_slice()).zip(data_set.mask()) {
        if !is_data {
            continue;
        }
        let gain = hv.norm_sqr();
        if gain == 0.0 {
            llrs.extend([0.0, 0.0]);
            continue;
        }
        let s_hat = yv * hv.conj() / gain;
        let scale = 2.0 * gain / noise * SQRT_2;
        llrs.extend([scale * s_hat.re, scale * s_hat.im]);
    }
    Ok(llrs)
}
