//! Circular-buffer rate matching with quarter-point redundancy versions.

use crate::error::{argument, Result};

/// HARQ round `i` (0-based) transmits redundancy version `RV_SEQUENCE[i]`.
pub const RV_SEQUENCE: [u8; 4] = [0, 2, 3, 1];

pub fn rv_offset(rv: u8, buffer_len: usize) -> usize {
    rv as usize * (buffer_len / 4)
}

/// Read `num_bits` from the circular buffer starting at the RV offset.
pub fn rate_match(codeword: &[u8], rv: u8, num_bits: usize) -> Result<Vec<u8>> {
    check(rv, num_bits, codeword.len())?;
    let n = codeword.len();
    let start = rv_offset(rv, n);
    Ok((0..num_bits).map(|i| codeword[(start + i) % n]).collect())
}

/// Accumulate received LLRs back into their circular-buffer positions.
pub fn derate_match(llrs: &[f64], rv: u8, soft_buffer: &mut [f64]) -> Result<()> {
    check(rv, llrs.len(), soft_buffer.len())?;
    let n = soft_buffer.len();
    let start = rv_offset(rv, n);
    for (i, &v) in llrs.iter().enumerate() {
        soft_buffer[(start + i) % n] += v;
    }
    Ok(())
}

fn check(rv: u8, num_bits: usize, buffer_len: usize) -> Result<()> {
    if num_bits == 0 {
        return argument("rate matching needs a positive output length");
    }
    if rv > 3 {
        return argument(format!("redundancy version must be 0..=3, got {rv}"));
    }
    if buffer_len == 0 {
        return argument("empty circular buffer");
    }
    Ok(())
}
