//! How the sensing measurement of a slot is produced.
//!
//! `paper-faithful` draws the phase-compensated measurement directly from
//! the target path with fresh noise at the target-path SNR, independent of
//! the communication receiver's noise. `coupled` cancels the LoS path from
//! the communication slot's own received grid and phase-compensates it with
//! the symbols the receiver knows, so sensing and decoding share one noise
//! draw.

use rand::RngCore;

use crate::channel::{complex_gaussian, remove_los, PathParams};
use crate::error::Result;
use crate::grid::{ReSet, ResourceGrid, SlotConfig};
use crate::registry::Registry;
use crate::sensing::{form_measurement, Scenario, SensingMeasurement};

/// Everything a measurement mode may use about one received slot.
pub struct SlotObservation<'a> {
    pub slot: &'a SlotConfig,
    pub los: &'a PathParams,
    pub target: &'a PathParams,
    pub received: &'a ResourceGrid,
    /// Symbols the receiver knows: pilots, plus data after a decode.
    pub known_symbols: &'a ResourceGrid,
    pub noise_variance: f64,
}

pub trait MeasurementMode: Send + Sync {
    fn name(&self) -> &'static str;

    fn measure(
        &self,
        obs: &SlotObservation<'_>,
        mask: &ReSet,
        scenario: Scenario,
        rng: &mut dyn RngCore,
    ) -> Result<SensingMeasurement>;
}

pub static MEASUREMENT_MODES: Registry<dyn MeasurementMode> = Registry::new(
    "measurement mode",
    &[
        ("paper-faithful", || Box::new(Independent)),
        ("coupled", || Box::new(Coupled)),
    ],
);

pub const DEFAULT_MEASUREMENT_MODE: &str = "paper-faithful";

/// `z = alpha_1 exp(-j 2 pi k df tau_1) exp(j 2 pi l Ts nu_1) + w` on the
/// mask, `w ~ CN(0, sigma^2)` drawn fresh.
#[derive(Debug, Clone, Copy, Default)]
pub struct Independent;

impl MeasurementMode for Independent {
    fn name(&self) -> &'static str {
        "paper-faithful"
    }

    fn measure(
        &self,
        obs: &SlotObservation<'_>,
        mask: &ReSet,
        scenario: Scenario,
        rng: &mut dyn RngCore,
    ) -> Result<SensingMeasurement> {
        let slot = obs.slot;
        let freq = obs.target.frequency_phasors(slot);
        let time = obs.target.time_phasors(slot);
        let k_max = slot.num_subcarriers;
        let mut z = ResourceGrid::zeros(k_max, slot.num_symbols);
        for (k, l) in mask.iter() {
            let mut v = obs.target.amplitude * freq[k] * time[l];
            if obs.noise_variance > 0.0 {
                v += complex_gaussian(rng, obs.noise_variance);
            }
            z.set(k, l, v);
        }
        Ok(SensingMeasurement {
            z,
            mask: mask.clone(),
            scenario,
        })
    }
}

/// LoS cancellation on the received slot, then phase compensation with the
/// known symbols.
#[derive(Debug, Clone, Copy, Default)]
pub struct Coupled;

impl MeasurementMode for Coupled {
    fn name(&self) -> &'static str {
        "coupled"
    }

    fn measure(
        &self,
        obs: &SlotObservation<'_>,
        mask: &ReSet,
        scenario: Scenario,
        _rng: &mut dyn RngCore,
    ) -> Result<SensingMeasurement> {
        // Outside the mask the residual is wrong wherever the receiver does
        // not know the symbol, but those REs are discarded.
        let residual = remove_los(obs.received, obs.known_symbols, obs.los, obs.slot)?;
        form_measurement(&residual, obs.known_symbols, mask, scenario)
    }
}
