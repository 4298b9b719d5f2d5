//! PUSCH transport chain with HARQ incremental redundancy.
//!
//! Transmit: payload → CRC-24A → mother code → circular-buffer rate matching
//! → QPSK → data REs around the DMRS. Receive: channel estimate → one-tap
//! equalization → LLRs → soft de-rate-matching into the HARQ buffer →
//! decode → CRC.

pub mod code;
pub mod crc;
pub mod demod;
pub mod estimate;
pub mod harq;
pub mod mcs;
pub mod rate_match;

use rand::Rng;

use crate::error::{config, Result};
use crate::grid::{generate_dmrs, map_pusch, qpsk_modulate, DmrsConfig, Pilots, ReSet, ResourceGrid, SlotConfig};

pub use code::{ChannelCode, ConvolutionalCode, CHANNEL_CODES, DEFAULT_CODE};
pub use crc::{crc24, crc24_attach, crc24_check, TransportBlock, CRC_BITS};
pub use demod::equalize_demod;
pub use estimate::{ChannelEstimator, LsLinear, CHANNEL_ESTIMATORS, DEFAULT_ESTIMATOR};
pub use harq::{decode, DecodeResult, HarqOutcome, HarqProcess, RoundRecord, SlotReception, MAX_ROUNDS};
pub use mcs::{tbs_compute, McsEntry};
pub use rate_match::{derate_match, rate_match, RV_SEQUENCE};

/// A configured uplink: slot layout, pilots, MCS and the pluggable code and
/// channel estimator.
pub struct PuschLink {
    slot: SlotConfig,
    pilots: Pilots,
    data_set: ReSet,
    mcs: McsEntry,
    payload_bits: usize,
    code: Box<dyn ChannelCode>,
    estimator: Box<dyn ChannelEstimator>,
}

impl std::fmt::Debug for PuschLink {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PuschLink")
            .field("mcs", &self.mcs)
            .field("payload_bits", &self.payload_bits)
            .field("code", &self.code.name())
            .field("estimator", &self.estimator.name())
            .finish()
    }
}

impl PuschLink {
    pub fn new(
        slot: SlotConfig,
        dmrs: &DmrsConfig,
        mcs: McsEntry,
        code: &str,
        estimator: &str,
    ) -> Result<Self> {
        let pilots = generate_dmrs(dmrs, &slot)?;
        let data_set = pilots.data_set();
        let payload_bits = tbs_compute(data_set.len(), &mcs)?;
        let code = CHANNEL_CODES.create(code)?;
        let estimator = CHANNEL_ESTIMATORS.create(estimator)?;
        if code.mother_length(payload_bits + CRC_BITS) == 0 {
            return config("channel code produced an empty mother codeword");
        }
        Ok(Self {
            slot,
            pilots,
            data_set,
            mcs,
            payload_bits,
            code,
            estimator,
        })
    }

    pub fn with_defaults(slot: SlotConfig, dmrs: &DmrsConfig, mcs: McsEntry) -> Result<Self> {
        Self::new(slot, dmrs, mcs, DEFAULT_CODE, DEFAULT_ESTIMATOR)
    }

    pub fn slot(&self) -> &SlotConfig {
        &self.slot
    }

    pub fn pilots(&self) -> &Pilots {
        &self.pilots
    }

    pub fn data_set(&self) -> &ReSet {
        &self.data_set
    }

    pub fn mcs(&self) -> &McsEntry {
        &self.mcs
    }

    pub fn payload_bits(&self) -> usize {
        self.payload_bits
    }

    /// Coded bits carried per slot, `E = N_d Q`.
    pub fn coded_bits_per_slot(&self) -> usize {
        self.data_set.len() * self.mcs.modulation_order as usize
    }

    pub fn mother_length(&self) -> usize {
        self.code.mother_length(self.payload_bits + CRC_BITS)
    }

    pub fn random_payload<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        (0..self.payload_bits).map(|_| rng.random_range(0..2u8)).collect()
    }

    /// CRC-attach and encode a payload into the mother codeword.
    pub fn encode(&self, payload: &[u8]) -> Result<Vec<u8>> {
        if payload.len() != self.payload_bits {
            return config(format!(
                "payload has {} bits, transport block size is {}",
                payload.len(),
                self.payload_bits
            ));
        }
        Ok(self.code.encode(&crc24_attach(payload).bits()))
    }

    /// The slot grid that carries redundancy version `rv` of `codeword`.
    pub fn modulate(&self, codeword: &[u8], rv: u8) -> Result<ResourceGrid> {
        let bits = rate_match(codeword, rv, self.coded_bits_per_slot())?;
        let symbols = qpsk_modulate(&bits)?;
        map_pusch(&self.slot, &self.pilots, &symbols)
    }

    pub fn new_process(&self) -> HarqProcess {
        HarqProcess::new(self.mother_length())
    }

    /// Receive one round into `process` and attempt to decode.
    pub fn receive_round(
        &self,
        process: &mut HarqProcess,
        rv: u8,
        y: &ResourceGrid,
        noise_variance: f64,
    ) -> Result<DecodeResult> {
        let h_hat = self.estimator.estimate(y, &self.pilots)?;
        let llrs = equalize_demod(y, &h_hat, noise_variance, &self.data_set)?;
        derate_match(&llrs, rv, process.soft_buffer_mut())?;
        let result = decode(self.code.as_ref(), process.soft_buffer(), self.payload_bits);
        process.finish_round(result.crc_ok)?;
        Ok(result)
    }

    /// Send one transport block through up to four HARQ rounds. `channel` is
    /// called once per round with the round index and the transmitted grid
    /// and returns what the receiver sees.
    pub fn harq_run_tb<F>(&self, payload: &[u8], mut channel: F) -> Result<(HarqOutcome, Option<Vec<u8>>)>
    where
        F: FnMut(usize, &ResourceGrid) -> Result<SlotReception>,
    {
        let codeword = self.encode(payload)?;
        let mut process = self.new_process();
        let mut rounds = Vec::with_capacity(MAX_ROUNDS);
        let mut delivered = None;
        while let Some(rv) = process.next_rv() {
            let tx = self.modulate(&codeword, rv)?;
            let rx = channel(rounds.len(), &tx)?;
            let result = self.receive_round(&mut process, rv, &rx.grid, rx.noise_variance)?;
            rounds.push(RoundRecord {
                rv,
                crc_ok: result.crc_ok,
            });
            if result.crc_ok {
                delivered = Some(result.payload);
            }
        }
        Ok((HarqOutcome::from_rounds(&rounds), delivered))
    }
}
