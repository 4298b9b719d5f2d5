//! Campaign configuration, read from TOML. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{config, Result};
use crate::grid::{dmrs_symbol_positions, DmrsConfig, SlotConfig};
use crate::link::{McsEntry, PuschLink, CHANNEL_CODES, CHANNEL_ESTIMATORS, DEFAULT_CODE, DEFAULT_ESTIMATOR};
use crate::sensing::{EstimatorConfig, DEFAULT_MEASUREMENT_MODE, MEASUREMENT_MODES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignConfig {
    pub master_seed: u64,
    /// Slots simulated per SNR point (at least; the last transport block is
    /// always completed).
    pub trials: usize,
    /// Target-path SNR sweep, dB. `inf` runs without noise.
    #[serde(with = "crate::harness::output::nonfinite::vec")]
    pub snr1_db: Vec<f64>,
    /// MCS indices to run.
    pub mcs: Vec<u8>,
    pub slot: SlotConfig,
    pub dmrs: DmrsSettings,
    pub channel: ChannelSettings,
    pub target: TargetRanges,
    pub estimator: EstimatorConfig,
    pub link: LinkSettings,
    /// `paper-faithful` or `coupled`.
    pub measurement_mode: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmrsSettings {
    /// DMRS additional-position settings to run.
    pub additional_positions: Vec<u8>,
    /// Seed of the pilot QPSK sequence.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSettings {
    /// `|alpha_0|^2 / |alpha_1|^2`.
    pub los_to_target_power_ratio: f64,
    pub los_delay_s: f64,
}

/// Uniform ranges of the target parameters, drawn per slot. Delay is a
/// fraction of the useful symbol duration `T`, Doppler a fraction of `1/Ts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetRanges {
    pub delay_fraction: [f64; 2],
    pub doppler_fraction: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSettings {
    pub code: String,
    pub channel_estimator: String,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            trials: 2000,
            snr1_db: (-4..=6).map(|i| 5.0 * i as f64).collect(),
            mcs: vec![0, 1],
            slot: SlotConfig::default(),
            dmrs: DmrsSettings::default(),
            channel: ChannelSettings::default(),
            target: TargetRanges::default(),
            estimator: EstimatorConfig::default(),
            link: LinkSettings::default(),
            measurement_mode: DEFAULT_MEASUREMENT_MODE.to_string(),
        }
    }
}

impl Default for DmrsSettings {
    fn default() -> Self {
        Self {
            additional_positions: vec![1, 3],
            seed: 0x5eed,
        }
    }
}

impl Default for ChannelSettings {
    fn default() -> Self {
        Self {
            los_to_target_power_ratio: 9.0,
            los_delay_s: 0.0,
        }
    }
}

impl Default for TargetRanges {
    fn default() -> Self {
        Self {
            delay_fraction: [0.05, 0.8],
            doppler_fraction: [-0.3, 0.3],
        }
    }
}

impl Default for LinkSettings {
    fn default() -> Self {
        Self {
            code: DEFAULT_CODE.to_string(),
            channel_estimator: DEFAULT_ESTIMATOR.to_string(),
        }
    }
}

/// One (MCS, DMRS) combination of a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Setup {
    pub mcs: u8,
    pub dmrs_additional_position: u8,
}

impl CampaignConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| crate::Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return config("trials must be positive");
        }
        if self.snr1_db.is_empty() {
            return config("snr1_db must list at least one SNR");
        }
        if let Some(bad) = self.snr1_db.iter().find(|s| s.is_nan() || **s == f64::NEG_INFINITY) {
            return config(format!("invalid SNR {bad} dB"));
        }
        if self.mcs.is_empty() || self.dmrs.additional_positions.is_empty() {
            return config("mcs and dmrs.additional_positions must be non-empty");
        }
        self.slot.validate()?;
        for &m in &self.mcs {
            McsEntry::from_index(m)?;
        }
        for &p in &self.dmrs.additional_positions {
            dmrs_symbol_positions(p)?;
        }
        let ch = &self.channel;
        if !(ch.los_to_target_power_ratio > 0.0) || !ch.los_to_target_power_ratio.is_finite() {
            return config("channel.los_to_target_power_ratio must be positive and finite");
        }
        if !(0.0..1.0).contains(&(ch.los_delay_s / self.slot.data_duration())) {
            return config("channel.los_delay_s must lie in [0, T)");
        }
        let [d0, d1] = self.target.delay_fraction;
        if !(0.0 <= d0 && d0 <= d1 && d1 < 1.0) {
            return config("target.delay_fraction must be an ordered range within [0, 1)");
        }
        let [f0, f1] = self.target.doppler_fraction;
        if !(-0.5 < f0 && f0 <= f1 && f1 < 0.5) {
            return config("target.doppler_fraction must be an ordered range within (-0.5, 0.5)");
        }
        self.estimator.validate()?;
        CHANNEL_CODES.create(&self.link.code)?;
        CHANNEL_ESTIMATORS.create(&self.link.channel_estimator)?;
        MEASUREMENT_MODES.create(&self.measurement_mode)?;
        // Builds every link once so sizing errors (e.g. an empty transport
        // block) surface before any trial runs.
        for setup in self.setups() {
            self.build_link(setup)?;
        }
        Ok(())
    }

    /// Combinations in run order: MCS outer, DMRS inner.
    pub fn setups(&self) -> Vec<Setup> {
        self.mcs
            .iter()
            .flat_map(|&mcs| {
                self.dmrs.additional_positions.iter().map(move |&p| Setup {
                    mcs,
                    dmrs_additional_position: p,
                })
            })
            .collect()
    }

    pub fn dmrs_config(&self, additional_position: u8) -> Result<DmrsConfig> {
        DmrsConfig::new(additional_position, self.dmrs.seed)
    }

    pub fn build_link(&self, setup: Setup) -> Result<PuschLink> {
        PuschLink::new(
            self.slot,
            &self.dmrs_config(setup.dmrs_additional_position)?,
            McsEntry::from_index(setup.mcs)?,
            &self.link.code,
            &self.link.channel_estimator,
        )
    }
}
