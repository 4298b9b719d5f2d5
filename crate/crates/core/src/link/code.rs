//! Forward error correction behind the [`ChannelCode`] trait.
//!
//! The built-in code is a rate-1/3 recursive systematic convolutional code,
//! constraint length 7, feedback polynomial 133 and parity polynomials
//! 171/165 (octal). It generates the same codeword set as the feedforward
//! 133/171/165 code, so its distance properties are unchanged, while the
//! first output stream carries the input bits unmodified. The trellis is
//! zero-terminated with 6 feedback-driven tail steps.
//!
//! Codewords are laid out stream by stream:
//! `[systematic (B+6) | parity 171 (B+6) | parity 165 (B+6)]`.

use crate::registry::Registry;

/// Soft-decision channel code. LLRs are `ln P(b=0)/P(b=1)`: positive
/// values favour a zero bit.
pub trait ChannelCode: Send + Sync {
    fn name(&self) -> &'static str;

    /// Mother codeword length for `info_bits` input bits.
    fn mother_length(&self, info_bits: usize) -> usize;

    fn encode(&self, info: &[u8]) -> Vec<u8>;

    /// Hard decisions on the `info_bits` input bits from mother-codeword LLRs.
    fn decode(&self, llrs: &[f64], info_bits: usize) -> Vec<u8>;
}

pub static CHANNEL_CODES: Registry<dyn ChannelCode> = Registry::new(
    "channel code",
    &[("conv-k7-r3", || Box::new(ConvolutionalCode::k7_rate_third()))],
);

pub const DEFAULT_CODE: &str = "conv-k7-r3";

const MEMORY: usize = 6;
const NUM_STATES: usize = 1 << MEMORY;

#[derive(Debug, Clone, Copy)]
struct Branch {
    next: u8,
    /// Systematic, parity 1, parity 2.
    out: [u8; 3],
}

#[derive(Debug, Clone)]
pub struct ConvolutionalCode {
    feedback_mask: u8,
    branches: [[Branch; 2]; NUM_STATES],
}

/// Split an octal generator (constraint length 7, D^0 in the MSB) into the
/// D^0 tap and a mask over state bits, bit `i - 1` holding D^i.
fn split_taps(octal: u32) -> (bool, u8) {
    let bits = u32::from_str_radix(&octal.to_string(), 8).expect("octal literal");
    let d0 = (bits >> MEMORY) & 1 == 1;
    let mut mask = 0u8;
    for i in 1..=MEMORY {
        if (bits >> (MEMORY - i)) & 1 == 1 {
            mask |= 1 << (i - 1);
        }
    }
    (d0, mask)
}

fn parity(x: u8) -> u8 {
    (x.count_ones() & 1) as u8
}

impl ConvolutionalCode {
    pub fn k7_rate_third() -> Self {
        Self::new(133, [171, 165])
    }

    fn new(feedback: u32, parity_polys: [u32; 2]) -> Self {
        let (_, feedback_mask) = split_taps(feedback);
        let parity_taps = parity_polys.map(split_taps);
        let mut branches = [[Branch { next: 0, out: [0; 3] }; 2]; NUM_STATES];
        for (state, entry) in branches.iter_mut().enumerate() {
            let state = state as u8;
            for u in 0..2u8 {
                let a = u ^ parity(state & feedback_mask);
                let mut out = [u, 0, 0];
                for (j, &(d0, mask)) in parity_taps.iter().enumerate() {
                    out[j + 1] = (a & d0 as u8) ^ parity(state & mask);
                }
                entry[u as usize] = Branch {
                    next: ((state << 1) | a) & (NUM_STATES as u8 - 1),
                    out,
                };
            }
        }
        Self {
            feedback_mask,
            branches,
        }
    }

    /// Input bit that drives the register towards zero from `state`.
    fn tail_input(&self, state: u8) -> u8 {
        parity(state & self.feedback_mask)
    }
}

impl ChannelCode for ConvolutionalCode {
    fn name(&self) -> &'static str {
        "conv-k7-r3"
    }

    fn mother_length(&self, info_bits: usize) -> usize {
        3 * (info_bits + MEMORY)
    }

    fn encode(&self, info: &[u8]) -> Vec<u8> {
        let steps = info.len() + MEMORY;
        let mut out = vec![0u8; 3 * steps];
        let mut state = 0u8;
        let inputs = info
            .iter()
            .map(|&b| Some(b & 1))
            .chain(std::iter::repeat_n(None, MEMORY));
        for (t, input) in inputs.enumerate() {
            let u = input.unwrap_or_else(|| self.tail_input(state));
            let branch = self.branches[state as usize][u as usize];
            for (j, &bit) in branch.out.iter().enumerate() {
                out[j * steps + t] = bit;
            }
            state = branch.next;
        }
        debug_assert_eq!(state, 0);
        out
    }

    fn decode(&self, llrs: &[f64], info_bits: usize) -> Vec<u8> {
        let steps = info_bits + MEMORY;
        assert_eq!(llrs.len(), 3 * steps, "soft buffer length mismatch");

        // Path metric = sum of llr * (1 - 2c) / 2 over the path; maximize.
        let mut metric = [f64::NEG_INFINITY; NUM_STATES];
        metric[0] = 0.0;
        let mut decisions: Vec<u64> = Vec::with_capacity(steps);
        let mut next_metric = [f64::NEG_INFINITY; NUM_STATES];
        for t in 0..steps {
            let l = [llrs[t], llrs[steps + t], llrs[2 * steps + t]];
            // Correlation of the LLRs with each of the 8 output labels.
            let mut label_metric = [0.0; 8];
            for (label, m) in label_metric.iter_mut().enumerate() {
                *m = 0.5
                    * l.iter()
                        .enumerate()
                        .map(|(j, &v)| if (label >> j) & 1 == 0 { v } else { -v })
                        .sum::<f64>();
            }
            let mut chosen = 0u64;
            for (ns, nm) in next_metric.iter_mut().enumerate() {
                let a = (ns & 1) as u8;
                let mut best = f64::NEG_INFINITY;
                let mut best_b = 0u64;
                for b in 0..2usize {
                    let prev = (ns >> 1) | (b << (MEMORY - 1));
                    if metric[prev] == f64::NEG_INFINITY {
                        continue;
                    }
                    let u = a ^ parity(prev as u8 & self.feedback_mask);
                    let out = self.branches[prev][u as usize].out;
                    let label = (out[0] | (out[1] << 1) | (out[2] << 2)) as usize;
                    let candidate = metric[prev] + label_metric[label];
                    if candidate > best {
                        best = candidate;
                        best_b = b as u64;
                    }
                }
                *nm = best;
                chosen |= best_b << ns;
            }
            decisions.push(chosen);
            std::mem::swap(&mut metric, &mut next_metric);
        }

        let mut bits = vec![0u8; steps];
        let mut state = 0usize;
        for t in (0..steps).rev() {
            let b = ((decisions[t] >> state) & 1) as usize;
            let prev = (state >> 1) | (b << (MEMORY - 1));
            let a = (state & 1) as u8;
            bits[t] = a ^ parity(prev as u8 & self.feedback_mask);
            state = prev;
        }
        bits.truncate(info_bits);
        bits
    }
}
