use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::grid::ResourceGrid;
use crate::link::code::ChannelCode;
use crate::link::crc::{crc24_check, CRC_BITS};
use crate::link::rate_match::RV_SEQUENCE;

pub const MAX_ROUNDS: usize = 4;

/// Soft-combining state of one transport block across its HARQ rounds.
#[derive(Debug, Clone)]
pub struct HarqProcess {
    rounds_done: usize,
    soft_buffer: Vec<f64>,
    decoded: bool,
    rv_sequence: [u8; MAX_ROUNDS],
}

impl HarqProcess {
    pub fn new(mother_length: usize) -> Self {
        Self {
            rounds_done: 0,
            soft_buffer: vec![0.0; mother_length],
            decoded: false,
            rv_sequence: RV_SEQUENCE,
        }
    }

    /// Rounds transmitted so far.
    pub fn rounds_done(&self) -> usize {
        self.rounds_done
    }

    pub fn is_decoded(&self) -> bool {
        self.decoded
    }

    pub fn soft_buffer(&self) -> &[f64] {
        &self.soft_buffer
    }

    /// Redundancy version of the next round, or `None` once the block is
    /// decoded or all rounds are spent.
    pub fn next_rv(&self) -> Option<u8> {
        if self.decoded || self.rounds_done >= MAX_ROUNDS {
            None
        } else {
            Some(self.rv_sequence[self.rounds_done])
        }
    }

    pub(crate) fn soft_buffer_mut(&mut self) -> &mut [f64] {
        &mut self.soft_buffer
    }

    pub(crate) fn finish_round(&mut self, crc_ok: bool) -> Result<()> {
        if self.rounds_done >= MAX_ROUNDS {
            return argument("HARQ process already used all rounds");
        }
        self.rounds_done += 1;
        self.decoded = crc_ok;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub payload: Vec<u8>,
    pub crc_ok: bool,
}

/// Viterbi-decode the combined buffer and check the CRC. A buffer holding
/// no soft information at all is reported as a failure without decoding.
pub fn decode(code: &dyn ChannelCode, soft_buffer: &[f64], payload_bits: usize) -> DecodeResult {
    if soft_buffer.iter().all(|&v| v == 0.0) {
        return DecodeResult {
            payload: vec![0; payload_bits],
            crc_ok: false,
        };
    }
    let mut block = code.decode(soft_buffer, payload_bits + CRC_BITS);
    let crc_ok = crc24_check(&block);
    block.truncate(payload_bits);
    DecodeResult {
        payload: block,
        crc_ok,
    }
}

/// One transmitted round as seen by the caller's channel.
#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub rv: u8,
    pub crc_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct HarqOutcome {
    pub rounds_used: usize,
    pub decoded: bool,
    /// CRC result of each transmitted round.
    pub per_round: Vec<bool>,
}

impl HarqOutcome {
    pub fn from_rounds(rounds: &[RoundRecord]) -> Self {
        Self {
            rounds_used: rounds.len(),
            decoded: rounds.last().is_some_and(|r| r.crc_ok),
            per_round: rounds.iter().map(|r| r.crc_ok).collect(),
        }
    }
}

/// Received slot handed back by a channel callback.
pub struct SlotReception {
    pub grid: ResourceGrid,
    pub noise_variance: f64,
}
