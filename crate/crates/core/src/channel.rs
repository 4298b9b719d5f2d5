//! Frequency-domain delay-Doppler multipath channel at resource-element level.
//!
//! After the receiver FFT, each path contributes
//! `alpha * exp(-j 2 pi k df tau) * exp(+j 2 pi l Ts nu)` to RE `(k, l)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{argument, Result};
use crate::grid::{ResourceGrid, SlotConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub amplitude: Complex64,
    pub delay_s: f64,
    pub doppler_hz: f64,
}

impl PathParams {
    pub fn new(amplitude: Complex64, delay_s: f64, doppler_hz: f64) -> Self {
        Self {
            amplitude,
            delay_s,
            doppler_hz,
        }
    }

    /// Whether the path lies in the region `tau in [0, T)`, `|nu| < df`.
    pub fn is_identifiable(&self, slot: &SlotConfig) -> bool {
        (0.0..slot.data_duration()).contains(&self.delay_s)
            && self.doppler_hz.abs() < slot.subcarrier_spacing_hz
    }

    /// Per-subcarrier phasor `exp(-j 2 pi k df tau)`.
    pub fn frequency_phasors(&self, slot: &SlotConfig) -> Vec<Complex64> {
        (0..slot.num_subcarriers)
            .map(|k| Complex64::cis(-2.0 * PI * k as f64 * slot.subcarrier_spacing_hz * self.delay_s))
            .collect()
    }

    /// Per-symbol phasor `exp(+j 2 pi l Ts nu)`.
    pub fn time_phasors(&self, slot: &SlotConfig) -> Vec<Complex64> {
        let ts = slot.symbol_duration();
        (0..slot.num_symbols)
            .map(|l| Complex64::cis(2.0 * PI * l as f64 * ts * self.doppler_hz))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: ResourceGrid,
    pub paths: Vec<PathParams>,
}

impl ChannelRealization {
    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.amplitude.norm_sqr()).sum()
    }
}

pub fn synthesize_channel(paths: &[PathParams], slot: &SlotConfig) -> Result<ChannelRealization> {
    if paths.is_empty() {
        return argument("channel needs at least one path");
    }
    let (k_max, l_max) = (slot.num_subcarriers, slot.num_symbols);
    let mut h = ResourceGrid::zeros(k_max, l_max);
    for path in paths {
        let freq = path.frequency_phasors(slot);
        let time = path.time_phasors(slot);
        for (l, &t) in time.iter().enumerate() {
            let at = path.amplitude * t;
            let row = &mut h.as_mut_slice()[l * k_max..(l + 1) * k_max];
            for (entry, &f) in row.iter_mut().zip(&freq) {
                *entry += at * f;
            }
        }
    }
    Ok(ChannelRealization {
        h,
        paths: paths.to_vec(),
    })
}

/// One draw of circularly-symmetric complex Gaussian noise with total
/// variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// `y = h * x + w` per RE with i.i.d. `w ~ CN(0, noise_variance)`.
pub fn apply_channel<R: Rng + ?Sized>(
    x: &ResourceGrid,
    ch: &ChannelRealization,
    noise_variance: f64,
    rng: &mut R,
) -> Result<ResourceGrid> {
    if !(noise_variance >= 0.0) {
        return argument(format!("noise variance must be non-negative, got {noise_variance}"));
    }
    if !x.same_shape(&ch.h) {
        return argument("transmit grid and channel have different dimensions");
    }
    let mut y = x.clone();
    for (yv, hv) in y.as_mut_slice().iter_mut().zip(ch.h.as_slice()) {
        *yv *= hv;
        if noise_variance > 0.0 {
            *yv += complex_gaussian(rng, noise_variance);
        }
    }
    Ok(y)
}

/// Subtract the known LoS contribution from `y`. The LoS path is static, so
/// its Doppler is taken as zero regardless of `los.doppler_hz`.
pub fn remove_los(
    y: &ResourceGrid,
    x: &ResourceGrid,
    los: &PathParams,
    slot: &SlotConfig,
) -> Result<ResourceGrid> {
    if !y.same_shape(x) {
        return argument("received and transmitted grids have different dimensions");
    }
    let k_max = slot.num_subcarriers;
    let freq = los.frequency_phasors(slot);
    let mut residual = y.clone();
    for (i, (r, xv)) in residual.as_mut_slice().iter_mut().zip(x.as_slice()).enumerate() {
        *r -= los.amplitude * freq[i % k_max] * xv;
    }
    Ok(residual)
}

/// Per-path SNR settings for a LoS + single target channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSpec {
    /// SNR of the reflected path, dB.
    pub snr1_db: f64,
    /// `|alpha_0|^2 / |alpha_1|^2`.
    pub los_to_target_power_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPowers {
    pub los_magnitude: f64,
    pub target_magnitude: f64,
    pub noise_variance: f64,
}

impl LinkPowers {
    pub fn snr_target(&self) -> f64 {
        self.target_magnitude.powi(2) / self.noise_variance
    }

    /// Communication SNR, `SNR_0 + SNR_1`.
    pub fn snr_comm(&self) -> f64 {
        (self.los_magnitude.powi(2) + self.target_magnitude.powi(2)) / self.noise_variance
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Split unit total path power between LoS and target and derive the noise
/// variance that gives the requested target-path SNR.
pub fn sigma_from_snr(spec: &SnrSpec) -> Result<LinkPowers> {
    let ratio = spec.los_to_target_power_ratio;
    if !(ratio > 0.0) || !ratio.is_finite() {
        return argument(format!("LoS/target power ratio must be positive, got {ratio}"));
    }
    let snr1 = db_to_linear(spec.snr1_db);
    if !(snr1 > 0.0) {
        return argument(format!("target SNR must be positive, got {} dB", spec.snr1_db));
    }
    let target_power = 1.0 / (1.0 + ratio);
    let los_power = ratio / (1.0 + ratio);
    Ok(LinkPowers {
        los_magnitude: los_power.sqrt(),
        target_magnitude: target_power.sqrt(),
        noise_variance: target_power / snr1,
    })
}
