//! Closed-form reports: HARQ throughput and bistatic localization.

use serde::{Deserialize, Serialize};

use crate::bounds::HarqProbabilities;
use crate::error::Result;
use crate::geometry::{doppler_from_velocity, localize, SPEED_OF_LIGHT};
use crate::grid::{generate_dmrs, DmrsConfig, SlotConfig};
use crate::link::{tbs_compute, McsEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub mcs: u8,
    pub dmrs_additional_position: u8,
    pub num_data_res: usize,
    pub payload_bits: usize,
    pub nominal_bits: f64,
    pub expected_rounds: f64,
    pub rho: f64,
    pub throughput_bits_per_slot: f64,
}

pub fn run_throughput(
    bler: [f64; 4],
    mcs: u8,
    dmrs_additional_position: u8,
    slot: &SlotConfig,
) -> Result<ThroughputReport> {
    let p = HarqProbabilities::new(bler)?;
    let entry = McsEntry::from_index(mcs)?;
    let pilots = generate_dmrs(&DmrsConfig::new(dmrs_additional_position, 0)?, slot)?;
    let n_d = pilots.num_data_res();
    let nominal = entry.nominal_bits(n_d);
    Ok(ThroughputReport {
        mcs,
        dmrs_additional_position,
        num_data_res: n_d,
        payload_bits: tbs_compute(n_d, &entry)?,
        nominal_bits: nominal,
        expected_rounds: p.expected_rounds(),
        rho: p.rho(),
        throughput_bits_per_slot: nominal * p.rho(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub d0_m: f64,
    pub delta_tau_s: f64,
    pub theta_rad: f64,
    pub bistatic_range_m: f64,
    pub target_range_m: f64,
    pub target_ue_range_m: f64,
    /// Target position with the gNB at the origin and the UE at `(d0, 0)`.
    pub x_m: f64,
    pub y_m: f64,
    /// Doppler magnitude for the given speed, when one is supplied.
    pub doppler_hz: Option<f64>,
}

pub fn run_geometry(
    d0: f64,
    delta_tau: f64,
    theta: f64,
    speed: Option<f64>,
    carrier_frequency: f64,
) -> Result<GeometryReport> {
    if !(d0 > 0.0) || !d0.is_finite() {
        return Err(crate::Error::Geometry(format!("baseline must be positive, got {d0} m")));
    }
    let loc = localize(delta_tau, theta, d0)?;
    let doppler_hz = speed
        .map(|v| doppler_from_velocity(v, loc.d1, d0, theta, carrier_frequency))
        .transpose()?;
    Ok(GeometryReport {
        d0_m: d0,
        delta_tau_s: delta_tau,
        theta_rad: theta,
        bistatic_range_m: loc.d_p,
        target_range_m: loc.d1,
        target_ue_range_m: loc.d_p - loc.d1,
        x_m: loc.position.x,
        y_m: loc.position.y,
        doppler_hz,
    })
}

/// Excess delay that places a target at bistatic range `d_p`.
pub fn excess_delay(d_p: f64, d0: f64) -> f64 {
    (d_p - d0) / SPEED_OF_LIGHT
}
