//! Monte-Carlo campaign: HARQ transport blocks over fresh per-slot channels,
//! with one sensing estimate per slot.
//!
//! Every transport block owns an RNG substream: ChaCha8 seeded with the
//! master seed, stream `(setup << 56) | (snr << 40) | block` where `setup`
//! indexes the (MCS, DMRS) combination and `snr` the sweep point. Blocks
//! are simulated in order until at least `trials` slots are collected; the
//! last block is always completed. Results depend only on block indices,
//! never on scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::bounds::HarqProbabilities;
use crate::channel::{apply_channel, sigma_from_snr, synthesize_channel, LinkPowers, PathParams, SnrSpec};
use crate::error::{config, Error, Result};
use crate::geometry::SPEED_OF_LIGHT;
use crate::grid::{ReSet, SlotConfig};
use crate::harness::config::{CampaignConfig, Setup};
use crate::harness::crlb::{scenario_variances, snrc_db, BoundTriple};
use crate::harness::output::nonfinite;
use crate::harness::stats::{ratio_estimate, RatioEstimate};
use crate::link::{PuschLink, MAX_ROUNDS};
use crate::sensing::measurement::Independent;
use crate::sensing::{
    estimate_ml, select_scenario, MeasurementMode, Scenario, SlotObservation, MEASUREMENT_MODES,
};

const SETUP_SHIFT: u32 = 56;
const SNR_SHIFT: u32 = 40;
/// Marks substreams of the forced-scenario sensing sweep.
const SWEEP_TAG: u64 = 1 << 63;

/// Substream of one transport block (campaign) or trial (sensing sweep).
pub fn substream(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

fn stream_id(setup: usize, snr: usize, index: u64) -> Result<u64> {
    if setup >= 1 << (63 - SETUP_SHIFT) || snr >= 1 << (SETUP_SHIFT - SNR_SHIFT) || index >= 1 << SNR_SHIFT {
        return config("campaign too large for the substream layout");
    }
    Ok(((setup as u64) << SETUP_SHIFT) | ((snr as u64) << SNR_SHIFT) | index)
}

/// Errors of one slot's sensing estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    pub scenario: Scenario,
    pub delay_error_s: f64,
    pub doppler_error_hz: f64,
}

/// One transport block: one slot per HARQ round.
#[derive(Debug, Clone, PartialEq)]
pub struct TbRecord {
    pub decoded: bool,
    pub slots: Vec<SlotRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStats {
    pub slots: usize,
    #[serde(with = "nonfinite")]
    pub rmse_range_m: f64,
    #[serde(with = "nonfinite")]
    pub rmse_doppler_hz: f64,
    /// Standard error of the range MSE, m².
    #[serde(with = "nonfinite")]
    pub mse_range_se: f64,
    /// Standard error of the Doppler MSE, Hz².
    #[serde(with = "nonfinite")]
    pub mse_doppler_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignPoint {
    pub mcs: u8,
    pub dmrs_additional_position: u8,
    #[serde(with = "nonfinite")]
    pub snr1_db: f64,
    #[serde(with = "nonfinite")]
    pub snrc_db: f64,
    /// Slots simulated.
    pub trials: usize,
    pub transport_blocks: usize,
    pub payload_bits: usize,
    pub num_data_res: usize,
    #[serde(with = "nonfinite")]
    pub rmse_range_m: f64,
    #[serde(with = "nonfinite")]
    pub rmse_doppler_hz: f64,
    #[serde(with = "nonfinite")]
    pub mse_range_se: f64,
    #[serde(with = "nonfinite")]
    pub mse_doppler_se: f64,
    pub dmrs_only: ScenarioStats,
    pub all_re: ScenarioStats,
    /// Measured; each decoded block credits `N_d Q R` bits.
    pub throughput_bits_per_slot: f64,
    #[serde(with = "nonfinite")]
    pub throughput_se: f64,
    /// `N_d Q R (1 - prod P_i) / E[X]` at the measured `P_i`.
    pub throughput_analytic: f64,
    /// Conditional block error rate of each round; 0 for rounds never
    /// reached.
    pub bler_round: [f64; MAX_ROUNDS],
    pub round_attempts: [usize; MAX_ROUNDS],
    pub expected_rounds: f64,
    pub rho: f64,
    pub scenario2_fraction: f64,
    #[serde(with = "nonfinite")]
    pub scenario2_fraction_se: f64,
    pub crlb_range_m: BoundTriple,
    pub crlb_doppler_hz: BoundTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub master_seed: u64,
    pub config: CampaignConfig,
    pub points: Vec<CampaignPoint>,
}

/// Run `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => config("workers must be at least 1"),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

struct TrialContext<'a> {
    slot: &'a SlotConfig,
    cfg: &'a CampaignConfig,
    powers: LinkPowers,
}

impl TrialContext<'_> {
    fn draw_paths<R: Rng + ?Sized>(&self, rng: &mut R) -> (PathParams, PathParams) {
        let t = self.slot.data_duration();
        let inv_ts = 1.0 / self.slot.symbol_duration();
        let [d0, d1] = self.cfg.target.delay_fraction;
        let [f0, f1] = self.cfg.target.doppler_fraction;
        let tau = t * uniform(rng, d0, d1);
        let nu = inv_ts * uniform(rng, f0, f1);
        let los_phase = rng.random::<f64>() * TAU;
        let target_phase = rng.random::<f64>() * TAU;
        (
            PathParams::new(
                Complex64::from_polar(self.powers.los_magnitude, los_phase),
                self.cfg.channel.los_delay_s,
                0.0,
            ),
            PathParams::new(Complex64::from_polar(self.powers.target_magnitude, target_phase), tau, nu),
        )
    }
}

/// Maps an estimation error onto `[-period/2, period/2)`. Delay is only
/// identifiable modulo `T` and Doppler modulo `1/Ts`.
pub fn wrap(error: f64, period: f64) -> f64 {
    (error + 0.5 * period).rem_euclid(period) - 0.5 * period
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn simulate_tb(
    ctx: &TrialContext<'_>,
    link: &PuschLink,
    mode: &dyn MeasurementMode,
    rng: &mut ChaCha8Rng,
) -> Result<TbRecord> {
    let slot = ctx.slot;
    let sigma2 = ctx.powers.noise_variance;
    let payload = link.random_payload(rng);
    let codeword = link.encode(&payload)?;
    let mut process = link.new_process();
    let mut slots = Vec::with_capacity(MAX_ROUNDS);
    while let Some(rv) = process.next_rv() {
        let tx = link.modulate(&codeword, rv)?;
        let (los, target) = ctx.draw_paths(rng);
        let channel = synthesize_channel(&[los, target], slot)?;
        let received = apply_channel(&tx, &channel, sigma2, rng)?;
        let result = link.receive_round(&mut process, rv, &received, sigma2)?;

        let (mask, scenario) = select_scenario(result.crc_ok, &link.pilots().set);
        // After a decode the receiver rebuilds the whole slot from the
        // delivered payload.
        let regenerated = if result.crc_ok {
            Some(link.modulate(&link.encode(&result.payload)?, rv)?)
        } else {
            None
        };
        let obs = SlotObservation {
            slot,
            los: &los,
            target: &target,
            received: &received,
            known_symbols: regenerated.as_ref().unwrap_or(&link.pilots().grid),
            noise_variance: sigma2,
        };
        let z = mode.measure(&obs, &mask, scenario, rng)?;
        let est = estimate_ml(&z, slot, &ctx.cfg.estimator)?;
        slots.push(SlotRecord {
            scenario,
            delay_error_s: wrap(est.tau_hat - target.delay_s, slot.data_duration()),
            doppler_error_hz: wrap(est.nu_hat - target.doppler_hz, 1.0 / slot.symbol_duration()),
        });
    }
    Ok(TbRecord {
        decoded: process.is_decoded(),
        slots,
    })
}

/// Transport-block records of one (setup, SNR) point, in block order.
pub fn simulate_point(cfg: &CampaignConfig, setup_index: usize, snr_index: usize) -> Result<Vec<TbRecord>> {
    let setup = *cfg
        .setups()
        .get(setup_index)
        .ok_or_else(|| Error::Argument(format!("no setup {setup_index}")))?;
    let snr1_db = *cfg
        .snr1_db
        .get(snr_index)
        .ok_or_else(|| Error::Argument(format!("no SNR point {snr_index}")))?;
    let link = cfg.build_link(setup)?;
    let mode = MEASUREMENT_MODES.create(&cfg.measurement_mode)?;
    let ctx = TrialContext {
        slot: &cfg.slot,
        cfg,
        powers: sigma_from_snr(&SnrSpec {
            snr1_db,
            los_to_target_power_ratio: cfg.channel.los_to_target_power_ratio,
        })?,
    };

    let mut records: Vec<TbRecord> = Vec::new();
    let mut slots = 0usize;
    let mut next = 0u64;
    while slots < cfg.trials {
        // A block uses at most MAX_ROUNDS slots, so this batch never runs
        // past the block that completes the point.
        let batch = (cfg.trials - slots).div_ceil(MAX_ROUNDS) as u64;
        let ids: Vec<u64> = (next..next + batch)
            .map(|i| stream_id(setup_index, snr_index, i))
            .collect::<Result<_>>()?;
        let simulated: Vec<Result<TbRecord>> = ids
            .par_iter()
            .map(|&id| simulate_tb(&ctx, &link, mode.as_ref(), &mut substream(cfg.master_seed, id)))
            .collect();
        next += batch;
        for record in simulated {
            if slots >= cfg.trials {
                break;
            }
            let record = record?;
            slots += record.slots.len();
            records.push(record);
        }
    }
    Ok(records)
}

fn scenario_stats(records: &[TbRecord], scenario: Option<Scenario>) -> (ScenarioStats, RatioEstimate, RatioEstimate) {
    let keep = |s: &SlotRecord| scenario.is_none_or(|sc| s.scenario == sc);
    let c = SPEED_OF_LIGHT;
    let mut range_pairs = Vec::with_capacity(records.len());
    let mut doppler_pairs = Vec::with_capacity(records.len());
    let mut count = 0usize;
    for r in records {
        let kept: Vec<&SlotRecord> = r.slots.iter().filter(|s| keep(s)).collect();
        count += kept.len();
        let n = kept.len() as f64;
        range_pairs.push((kept.iter().map(|s| (c * s.delay_error_s).powi(2)).sum::<f64>(), n));
        doppler_pairs.push((kept.iter().map(|s| s.doppler_error_hz.powi(2)).sum::<f64>(), n));
    }
    let range = ratio_estimate(&range_pairs);
    let doppler = ratio_estimate(&doppler_pairs);
    (
        ScenarioStats {
            slots: count,
            rmse_range_m: range.value.sqrt(),
            rmse_doppler_hz: doppler.value.sqrt(),
            mse_range_se: range.std_error,
            mse_doppler_se: doppler.std_error,
        },
        range,
        doppler,
    )
}

/// Conditional per-round error rates and attempt counts.
pub fn round_statistics(records: &[TbRecord]) -> ([f64; MAX_ROUNDS], [usize; MAX_ROUNDS]) {
    let mut attempts = [0usize; MAX_ROUNDS];
    let mut failures = [0usize; MAX_ROUNDS];
    for r in records {
        for (i, _) in r.slots.iter().enumerate() {
            attempts[i] += 1;
            let succeeded_here = r.decoded && i + 1 == r.slots.len();
            if !succeeded_here {
                failures[i] += 1;
            }
        }
    }
    let bler = std::array::from_fn(|i| {
        if attempts[i] == 0 {
            0.0
        } else {
            failures[i] as f64 / attempts[i] as f64
        }
    });
    (bler, attempts)
}

pub fn summarize(cfg: &CampaignConfig, setup: Setup, snr1_db: f64, records: &[TbRecord]) -> Result<CampaignPoint> {
    let link = cfg.build_link(setup)?;
    let (bler_round, round_attempts) = round_statistics(records);
    let probs = HarqProbabilities::new(bler_round)?;
    let rho = probs.rho();
    let nominal = link.mcs().nominal_bits(link.data_set().len());

    let fraction = ratio_estimate(
        &records
            .iter()
            .map(|r| (r.decoded as u8 as f64, r.slots.len() as f64))
            .collect::<Vec<_>>(),
    );
    let (_, total_range, total_doppler) = scenario_stats(records, None);
    let (dmrs_only, _, _) = scenario_stats(records, Some(Scenario::DmrsOnly));
    let (all_re, _, _) = scenario_stats(records, Some(Scenario::AllRe));
    let variances = scenario_variances(cfg, setup.dmrs_additional_position, snr1_db)?;

    Ok(CampaignPoint {
        mcs: setup.mcs,
        dmrs_additional_position: setup.dmrs_additional_position,
        snr1_db,
        snrc_db: snrc_db(snr1_db, cfg.channel.los_to_target_power_ratio),
        trials: records.iter().map(|r| r.slots.len()).sum(),
        transport_blocks: records.len(),
        payload_bits: link.payload_bits(),
        num_data_res: link.data_set().len(),
        rmse_range_m: total_range.value.sqrt(),
        rmse_doppler_hz: total_doppler.value.sqrt(),
        mse_range_se: total_range.std_error,
        mse_doppler_se: total_doppler.std_error,
        dmrs_only,
        all_re,
        throughput_bits_per_slot: nominal * fraction.value,
        throughput_se: nominal * fraction.std_error,
        throughput_analytic: nominal * rho,
        bler_round,
        round_attempts,
        expected_rounds: probs.expected_rounds(),
        rho,
        scenario2_fraction: fraction.value,
        scenario2_fraction_se: fraction.std_error,
        crlb_range_m: BoundTriple::range_from(&variances, rho),
        crlb_doppler_hz: BoundTriple::doppler_from(&variances, rho),
    })
}

/// Every (setup, SNR) point of the configuration; setups outer, SNR inner.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    let mut points = Vec::new();
    for (si, setup) in cfg.setups().into_iter().enumerate() {
        for (ni, &snr) in cfg.snr1_db.iter().enumerate() {
            let records = simulate_point(cfg, si, ni)?;
            points.push(summarize(cfg, setup, snr, &records)?);
        }
    }
    Ok(CampaignResult {
        master_seed: cfg.master_seed,
        config: cfg.clone(),
        points,
    })
}

/// Forced-scenario sensing statistics at one SNR: both RE sets measure the
/// same target in every trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingSweepPoint {
    #[serde(with = "nonfinite")]
    pub snr1_db: f64,
    pub trials: usize,
    /// Delay MSE (s²) for DMRS-only and all-RE sensing, with standard errors.
    pub delay_mse: [f64; 2],
    pub delay_mse_se: [f64; 2],
    /// Doppler MSE (Hz²), same layout.
    pub doppler_mse: [f64; 2],
    pub doppler_mse_se: [f64; 2],
    /// Full-inverse lower bounds, same layout; NaN when singular.
    #[serde(skip)]
    pub delay_crlb: [f64; 2],
    #[serde(skip)]
    pub doppler_crlb: [f64; 2],
}

/// Sensing-only sweep with the scenario forced rather than chosen by the
/// link. Uses independent measurement noise at each SNR.
pub fn run_sensing_sweep(
    cfg: &CampaignConfig,
    dmrs_additional_position: u8,
    trials: usize,
) -> Result<Vec<SensingSweepPoint>> {
    cfg.validate()?;
    if trials == 0 {
        return config("trials must be positive");
    }
    let slot = &cfg.slot;
    let dmrs = cfg.dmrs_config(dmrs_additional_position)?;
    let pilots = crate::grid::generate_dmrs(&dmrs, slot)?;
    let full = ReSet::full(slot.num_subcarriers, slot.num_symbols);
    let mut out = Vec::with_capacity(cfg.snr1_db.len());
    for (ni, &snr1_db) in cfg.snr1_db.iter().enumerate() {
        let ctx = TrialContext {
            slot,
            cfg,
            powers: sigma_from_snr(&SnrSpec {
                snr1_db,
                los_to_target_power_ratio: cfg.channel.los_to_target_power_ratio,
            })?,
        };
        let errors: Vec<Result<[(f64, f64); 2]>> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = substream(cfg.master_seed, SWEEP_TAG | stream_id(0, ni, t)?);
                let (los, target) = ctx.draw_paths(&mut rng);
                let mut out = [(0.0, 0.0); 2];
                for (i, (mask, scenario)) in [(&pilots.set, Scenario::DmrsOnly), (&full, Scenario::AllRe)]
                    .into_iter()
                    .enumerate()
                {
                    let obs = SlotObservation {
                        slot,
                        los: &los,
                        target: &target,
                        received: &pilots.grid,
                        known_symbols: &pilots.grid,
                        noise_variance: ctx.powers.noise_variance,
                    };
                    let z = Independent.measure(&obs, mask, scenario, &mut rng)?;
                    let est = estimate_ml(&z, slot, &cfg.estimator)?;
                    out[i] = (
                        wrap(est.tau_hat - target.delay_s, slot.data_duration()),
                        wrap(est.nu_hat - target.doppler_hz, 1.0 / slot.symbol_duration()),
                    );
                }
                Ok(out)
            })
            .collect();
        let errors: Vec<[(f64, f64); 2]> = errors.into_iter().collect::<Result<_>>()?;
        let stat = |f: &dyn Fn(&[(f64, f64); 2]) -> f64| {
            crate::harness::stats::mean_estimate(&errors.iter().map(f).collect::<Vec<_>>())
        };
        let d = [stat(&|e| e[0].0.powi(2)), stat(&|e| e[1].0.powi(2))];
        let n = [stat(&|e| e[0].1.powi(2)), stat(&|e| e[1].1.powi(2))];
        let v = scenario_variances(cfg, dmrs_additional_position, snr1_db)?;
        out.push(SensingSweepPoint {
            snr1_db,
            trials,
            delay_mse: [d[0].value, d[1].value],
            delay_mse_se: [d[0].std_error, d[1].std_error],
            doppler_mse: [n[0].value, n[1].value],
            doppler_mse_se: [n[0].std_error, n[1].std_error],
            delay_crlb: v.delay,
            doppler_crlb: v.doppler,
        });
    }
    Ok(out)
}
