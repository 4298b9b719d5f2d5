//! CRC-24A, generator 0x1864CFB, zero initial state, MSB first.

pub const CRC_BITS: usize = 24;
const POLY: u32 = 0x864CFB;

/// Remainder of `bits` (one bit per byte, 0 or 1) divided by the generator.
pub fn crc24(bits: &[u8]) -> u32 {
    let mut reg: u32 = 0;
    for &b in bits {
        let top = ((reg >> 23) & 1) ^ (b as u32 & 1);
        reg = (reg << 1) & 0xFF_FFFF;
        if top != 0 {
            reg ^= POLY;
        }
    }
    reg
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportBlock {
    pub payload_bits: Vec<u8>,
    pub crc_bits: Vec<u8>,
}

impl TransportBlock {
    /// Payload followed by CRC.
    pub fn bits(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.payload_bits.len() + CRC_BITS);
        out.extend_from_slice(&self.payload_bits);
        out.extend_from_slice(&self.crc_bits);
        out
    }
}

pub fn crc24_attach(payload: &[u8]) -> TransportBlock {
    let crc = crc24(payload);
    TransportBlock {
        payload_bits: payload.to_vec(),
        crc_bits: (0..CRC_BITS).rev().map(|i| ((crc >> i) & 1) as u8).collect(),
    }
}

/// True iff payload-plus-CRC leaves a zero remainder.
pub fn crc24_check(block_bits: &[u8]) -> bool {
    crc24(block_bits) == 0
}
