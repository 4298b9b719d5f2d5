use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::link::crc::CRC_BITS;

/// Code rate denominators are fixed at 1024 as in the NR MCS tables.
pub const RATE_DENOMINATOR: u32 = 1024;

// QPSK rows of the NR PUSCH MCS index table 1 (no transform precoding).
const QPSK_RATES_X1024: [u32; 10] = [120, 157, 193, 251, 308, 379, 449, 526, 602, 679];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McsEntry {
    pub index: u8,
    pub modulation_order: u32,
    pub rate_x1024: u32,
}

impl McsEntry {
    pub fn from_index(index: u8) -> Result<Self> {
        match QPSK_RATES_X1024.get(index as usize) {
            Some(&rate_x1024) => Ok(Self {
                index,
                modulation_order: 2,
                rate_x1024,
            }),
            None => config(format!(
                "MCS {index} is not supported (QPSK entries 0..={} only)",
                QPSK_RATES_X1024.len() - 1
            )),
        }
    }

    pub fn code_rate(&self) -> f64 {
        self.rate_x1024 as f64 / RATE_DENOMINATOR as f64
    }

    /// Nominal information bits carried by `num_data_res` REs, `N_d Q R`.
    pub fn nominal_bits(&self, num_data_res: usize) -> f64 {
        num_data_res as f64 * self.modulation_order as f64 * self.code_rate()
    }
}

/// Payload size: `floor(N_d Q R) - 24`, rounded down to whole bytes.
pub fn tbs_compute(num_data_res: usize, mcs: &McsEntry) -> Result<usize> {
    if num_data_res == 0 {
        return config("no data REs left in the slot");
    }
    let info = (num_data_res as u64 * mcs.modulation_order as u64 * mcs.rate_x1024 as u64)
        / RATE_DENOMINATOR as u64;
    let payload = (info as i64 - CRC_BITS as i64).max(0) as usize / 8 * 8;
    if payload == 0 {
        return config(format!(
            "MCS {} leaves no payload bits in {num_data_res} data REs",
            mcs.index
        ));
    }
    Ok(payload)
}
