//! Maximum-likelihood delay/Doppler estimation of the reflected path from
//! phase-compensated resource elements.
//!
//! When the transport block failed CRC only the DMRS REs have known symbols
//! ([`Scenario::DmrsOnly`]); after a successful decode the receiver can
//! regenerate every transmitted symbol and uses the whole grid
//! ([`Scenario::AllRe`]).

pub mod measurement;
pub mod periodogram;
pub mod refine;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{argument, config, Error, Result};
use crate::grid::{ReSet, ResourceGrid, SlotConfig};

pub use measurement::{MeasurementMode, SlotObservation, DEFAULT_MEASUREMENT_MODE, MEASUREMENT_MODES};
pub use periodogram::{periodogram, Periodogram};
pub use refine::{PeakRefiner, DEFAULT_REFINER, PEAK_REFINERS};

/// Tolerance on `|x| = 1` for symbols used to phase-compensate a measurement.
const UNIT_MODULUS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Transport block not decoded: pilots only.
    DmrsOnly,
    /// Transport block decoded: every RE.
    AllRe,
}

#[derive(Debug, Clone)]
pub struct SensingMeasurement {
    pub z: ResourceGrid,
    pub mask: ReSet,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    pub delay_oversampling: usize,
    pub doppler_oversampling: usize,
    /// Refine the lattice peak; when false the lattice point is returned.
    pub refine: bool,
    /// Refinement strategy, see [`PEAK_REFINERS`].
    pub refiner: String,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            delay_oversampling: 4,
            doppler_oversampling: 4,
            refine: true,
            refiner: DEFAULT_REFINER.to_string(),
        }
    }
}

impl EstimatorConfig {
    pub fn with_refiner(refiner: &str) -> Self {
        Self {
            refiner: refiner.to_string(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delay_oversampling == 0 || self.doppler_oversampling == 0 {
            return config("oversampling factors must be at least 1");
        }
        if !PEAK_REFINERS.contains(&self.refiner) {
            PEAK_REFINERS.create(&self.refiner)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingEstimate {
    pub tau_hat: f64,
    pub nu_hat: f64,
    pub alpha_hat: Complex64,
    /// `|A(tau_hat, nu_hat)|^2` on the same scale as the periodogram.
    pub peak_value: f64,
}

/// `z = residual * conj(x)` inside `mask`, zero elsewhere.
pub fn form_measurement(
    residual: &ResourceGrid,
    known_symbols: &ResourceGrid,
    mask: &ReSet,
    scenario: Scenario,
) -> Result<SensingMeasurement> {
    if !residual.same_shape(known_symbols)
        || residual.num_subcarriers() != mask.num_subcarriers()
        || residual.num_symbols() != mask.num_symbols()
    {
        return argument("measurement grids and mask have different dimensions");
    }
    let mut z = ResourceGrid::zeros(residual.num_subcarriers(), residual.num_symbols());
    for (i, &inside) in mask.mask().iter().enumerate() {
        if !inside {
            continue;
        }
        let x = known_symbols.as_slice()[i];
        if (x.norm() - 1.0).abs() > UNIT_MODULUS_TOL {
            return argument(format!("known symbol at RE {i} has modulus {}", x.norm()));
        }
        z.as_mut_slice()[i] = residual.as_slice()[i] * x.conj();
    }
    Ok(SensingMeasurement {
        z,
        mask: mask.clone(),
        scenario,
    })
}

/// Sensing RE set for a slot given its decode outcome.
pub fn select_scenario(decoded: bool, dmrs_set: &ReSet) -> (ReSet, Scenario) {
    if decoded {
        (
            ReSet::full(dmrs_set.num_subcarriers(), dmrs_set.num_symbols()),
            Scenario::AllRe,
        )
    } else {
        (dmrs_set.clone(), Scenario::DmrsOnly)
    }
}

/// Least-squares amplitude at `(tau, nu)` and the matching correlation power.
pub fn amplitude_at(z: &SensingMeasurement, slot: &SlotConfig, tau: f64, nu: f64) -> (Complex64, f64) {
    let u = 2.0 * PI * slot.subcarrier_spacing_hz * tau;
    let v = 2.0 * PI * slot.symbol_duration() * nu;
    let k_max = z.z.num_subcarriers();
    let freq: Vec<Complex64> = (0..k_max).map(|k| Complex64::cis(k as f64 * u)).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for l in z.mask.occupied_symbols() {
        let row: Complex64 = (0..k_max)
            .filter(|&k| z.mask.contains(k, l))
            .map(|k| z.z.get(k, l) * freq[k])
            .sum();
        acc += row * Complex64::cis(-(l as f64) * v);
    }
    (acc / z.mask.len() as f64, acc.norm_sqr())
}

/// Maximum-likelihood single-target estimate: periodogram peak, optional
/// refinement, then the least-squares amplitude at the refined point.
pub fn estimate_ml(z: &SensingMeasurement, slot: &SlotConfig, cfg: &EstimatorConfig) -> Result<SensingEstimate> {
    if z.mask.is_empty() {
        return Err(Error::Estimation("sensing mask selects no REs".into()));
    }
    let pg = periodogram(z, slot, cfg)?;
    let refiner = if cfg.refine {
        PEAK_REFINERS.create(&cfg.refiner)?
    } else {
        PEAK_REFINERS.create("lattice")?
    };
    let (tau, nu) = refiner.refine(z, slot, &pg);
    let tau_hat = tau.rem_euclid(slot.data_duration());
    let nu_hat = wrap_doppler(nu, slot);
    let (alpha_hat, peak_value) = amplitude_at(z, slot, tau_hat, nu_hat);
    Ok(SensingEstimate {
        tau_hat,
        nu_hat,
        alpha_hat,
        peak_value,
    })
}

/// Map a Doppler shift into `[-1/(2 Ts), 1/(2 Ts))`.
pub fn wrap_doppler(nu: f64, slot: &SlotConfig) -> f64 {
    let period = 1.0 / slot.symbol_duration();
    let wrapped = (nu + 0.5 * period).rem_euclid(period) - 0.5 * period;
    if wrapped >= 0.5 * period {
        wrapped - period
    } else {
        wrapped
    }
}
