//! Lower-bound tables for both sensing scenarios and their HARQ mixture.

use serde::{Deserialize, Serialize};

use crate::bounds::{crlb, fisher_matrix, re_sums, HarqProbabilities, Param};
use crate::channel::{linear_to_db, sigma_from_snr, SnrSpec};
use crate::error::{config, Result};
use crate::geometry::SPEED_OF_LIGHT;
use crate::grid::{dmrs_symbol_positions, ReSet};
use crate::harness::config::{CampaignConfig, Setup};
use crate::harness::output::nonfinite;
use crate::harness::CampaignResult;

/// Full-inverse variance bounds (s², Hz²) of the two scenarios at one SNR.
/// NaN where the Fisher matrix is singular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioVariances {
    pub delay: [f64; 2],
    pub doppler: [f64; 2],
}

impl ScenarioVariances {
    /// `(1 - rho) B_1 + rho B_2` for delay and Doppler.
    pub fn mixture(&self, rho: f64) -> (f64, f64) {
        let mix = |b: [f64; 2]| {
            if rho == 1.0 {
                b[1]
            } else if rho == 0.0 {
                b[0]
            } else {
                (1.0 - rho) * b[0] + rho * b[1]
            }
        };
        (mix(self.delay), mix(self.doppler))
    }
}

/// Bounds for DMRS-only (index 0) and all-RE (index 1) sensing.
pub fn scenario_variances(cfg: &CampaignConfig, dmrs_additional_position: u8, snr1_db: f64) -> Result<ScenarioVariances> {
    let powers = sigma_from_snr(&SnrSpec {
        snr1_db,
        los_to_target_power_ratio: cfg.channel.los_to_target_power_ratio,
    })?;
    if powers.noise_variance == 0.0 {
        return Ok(ScenarioVariances {
            delay: [0.0; 2],
            doppler: [0.0; 2],
        });
    }
    let slot = &cfg.slot;
    let (k, l) = (slot.num_subcarriers, slot.num_symbols);
    let dmrs = ReSet::symbols(k, l, dmrs_symbol_positions(dmrs_additional_position)?);
    let mut delay = [f64::NAN; 2];
    let mut doppler = [f64::NAN; 2];
    for (i, set) in [dmrs, ReSet::full(k, l)].iter().enumerate() {
        let f = fisher_matrix(
            powers.target_magnitude,
            powers.noise_variance,
            &re_sums(set)?,
            slot.subcarrier_spacing_hz,
            slot.symbol_duration(),
        )?;
        let b = crlb(&f)?;
        if let Some(full) = b.full {
            delay[i] = full[Param::Delay as usize];
            doppler[i] = full[Param::Doppler as usize];
        }
    }
    Ok(ScenarioVariances { delay, doppler })
}

/// Standard-deviation bounds in metres and Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTriple {
    #[serde(with = "nonfinite")]
    pub dmrs_only: f64,
    #[serde(with = "nonfinite")]
    pub all_re: f64,
    #[serde(with = "nonfinite")]
    pub mixture: f64,
}

impl BoundTriple {
    pub fn range_from(v: &ScenarioVariances, rho: f64) -> Self {
        let c = SPEED_OF_LIGHT;
        Self {
            dmrs_only: c * v.delay[0].sqrt(),
            all_re: c * v.delay[1].sqrt(),
            mixture: c * v.mixture(rho).0.sqrt(),
        }
    }

    pub fn doppler_from(v: &ScenarioVariances, rho: f64) -> Self {
        Self {
            dmrs_only: v.doppler[0].sqrt(),
            all_re: v.doppler[1].sqrt(),
            mixture: v.mixture(rho).1.sqrt(),
        }
    }
}

/// Where the per-round BLERs for the mixture bound come from.
#[derive(Debug, Clone)]
pub enum BlerSource {
    Missing,
    Fixed(HarqProbabilities),
    Campaign(CampaignResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrlbRow {
    pub mcs: u8,
    pub dmrs_additional_position: u8,
    #[serde(with = "nonfinite")]
    pub snr1_db: f64,
    #[serde(with = "nonfinite")]
    pub snrc_db: f64,
    pub rho: f64,
    pub crlb_range_m: BoundTriple,
    pub crlb_doppler_hz: BoundTriple,
}

fn lookup_rho(result: &CampaignResult, setup: Setup, snr1_db: f64) -> Result<f64> {
    result
        .points
        .iter()
        .find(|p| p.mcs == setup.mcs && p.dmrs_additional_position == setup.dmrs_additional_position && p.snr1_db == snr1_db)
        .map(|p| p.rho)
        .ok_or_else(|| {
            crate::Error::Config(format!(
                "campaign has no point for MCS {}, DMRS additional position {}, SNR {snr1_db} dB",
                setup.mcs, setup.dmrs_additional_position
            ))
        })
}

/// Bound table over every configured setup and SNR.
pub fn run_crlb(cfg: &CampaignConfig, source: &BlerSource) -> Result<Vec<CrlbRow>> {
    cfg.validate()?;
    if let BlerSource::Missing = source {
        return config(
            "the mixed bound needs per-round block error rates P1..P4; pass them explicitly or point to a campaign's results.json",
        );
    }
    let mut rows = Vec::new();
    for setup in cfg.setups() {
        for &snr in &cfg.snr1_db {
            let rho = match source {
                BlerSource::Fixed(p) => p.rho(),
                BlerSource::Campaign(r) => lookup_rho(r, setup, snr)?,
                BlerSource::Missing => unreachable!(),
            };
            let v = scenario_variances(cfg, setup.dmrs_additional_position, snr)?;
            rows.push(CrlbRow {
                mcs: setup.mcs,
                dmrs_additional_position: setup.dmrs_additional_position,
                snr1_db: snr,
                snrc_db: snrc_db(snr, cfg.channel.los_to_target_power_ratio),
                rho,
                crlb_range_m: BoundTriple::range_from(&v, rho),
                crlb_doppler_hz: BoundTriple::doppler_from(&v, rho),
            });
        }
    }
    Ok(rows)
}

/// Communication SNR, `SNR_0 + SNR_1 = (1 + ratio) SNR_1`.
pub fn snrc_db(snr1_db: f64, ratio: f64) -> f64 {
    snr1_db + linear_to_db(1.0 + ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_error_rates_give_all_re_bound() {
        let cfg = CampaignConfig::default();
        let rows = run_crlb(&cfg, &BlerSource::Fixed(HarqProbabilities::new([0.0; 4]).unwrap())).unwrap();
        for r in &rows {
            assert_eq!(r.crlb_range_m.mixture, r.crlb_range_m.all_re);
            assert_eq!(r.crlb_doppler_hz.mixture, r.crlb_doppler_hz.all_re);
            assert!(r.crlb_doppler_hz.dmrs_only > r.crlb_doppler_hz.all_re);
        }
    }

    #[test]
    fn missing_rates_name_the_dependency() {
        let err = run_crlb(&CampaignConfig::default(), &BlerSource::Missing).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("P1..P4"));
    }

    #[test]
    fn more_dmrs_symbols_tighten_doppler_bound() {
        let cfg = CampaignConfig::default();
        let one = scenario_variances(&cfg, 1, 0.0).unwrap();
        let three = scenario_variances(&cfg, 3, 0.0).unwrap();
        assert!(three.doppler[0] < one.doppler[0]);
        assert_eq!(three.doppler[1], one.doppler[1]);
    }

    #[test]
    fn bounds_fall_a_decade_per_ten_db() {
        let cfg = CampaignConfig::default();
        let a = scenario_variances(&cfg, 1, 0.0).unwrap();
        let b = scenario_variances(&cfg, 1, 10.0).unwrap();
        for i in 0..2 {
            assert!((a.delay[i] / b.delay[i] - 10.0).abs() < 1e-9);
            assert!((a.doppler[i] / b.doppler[i] - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_dmrs_symbol_has_no_doppler_bound() {
        let v = scenario_variances(&CampaignConfig::default(), 0, 10.0).unwrap();
        assert!(v.doppler[0].is_nan());
        assert!(v.doppler[1].is_finite());
    }

    #[test]
    fn communication_snr_offset() {
        assert!((snrc_db(0.0, 9.0) - 10.0).abs() < 1e-12);
    }
}
