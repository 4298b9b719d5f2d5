//! OFDM slot resource grid, DMRS placement and QPSK mapping.
//!
//! Grids are stored frequency-first: the entry for subcarrier `k` of OFDM
//! symbol `l` lives at index `l * K + k`. Data mapping and extraction walk the
//! grid in this same order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{argument, config, Result};

/// Normal cyclic prefix at 30 kHz: 144 of 2048 samples.
pub const NORMAL_CP_30KHZ_S: f64 = 144.0 / 2048.0 / 30e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotConfig {
    pub subcarrier_spacing_hz: f64,
    pub num_subcarriers: usize,
    pub num_symbols: usize,
    pub cp_duration_s: f64,
    pub carrier_frequency_hz: f64,
}

impl Default for SlotConfig {
    /// 106 PRBs at 30 kHz, 14 symbols, normal CP, 3.5 GHz carrier.
    fn default() -> Self {
        Self {
            subcarrier_spacing_hz: 30e3,
            num_subcarriers: 1272,
            num_symbols: 14,
            cp_duration_s: NORMAL_CP_30KHZ_S,
            carrier_frequency_hz: 3.5e9,
        }
    }
}

impl SlotConfig {
    /// A slot with the given dimensions and unit subcarrier spacing, no CP.
    /// Handy for small analytic grids.
    pub fn unit(num_subcarriers: usize, num_symbols: usize) -> Self {
        Self {
            subcarrier_spacing_hz: 1.0,
            num_subcarriers,
            num_symbols,
            cp_duration_s: 0.0,
            carrier_frequency_hz: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_subcarriers == 0 || self.num_symbols == 0 {
            return config("slot must have at least one subcarrier and one symbol");
        }
        if !(self.subcarrier_spacing_hz > 0.0) || !self.subcarrier_spacing_hz.is_finite() {
            return config("subcarrier spacing must be positive");
        }
        if !(self.cp_duration_s >= 0.0) || !self.cp_duration_s.is_finite() {
            return config("cyclic prefix duration must be non-negative");
        }
        if !(self.carrier_frequency_hz > 0.0) {
            return config("carrier frequency must be positive");
        }
        Ok(())
    }

    /// Useful symbol duration `T = 1/Δf`.
    pub fn data_duration(&self) -> f64 {
        1.0 / self.subcarrier_spacing_hz
    }

    /// Total OFDM symbol duration `T_s = T + T_cp`.
    pub fn symbol_duration(&self) -> f64 {
        self.data_duration() + self.cp_duration_s
    }

    pub fn num_res(&self) -> usize {
        self.num_subcarriers * self.num_symbols
    }
}

/// Single-symbol type-A DMRS positions in a 14-symbol slot.
pub fn dmrs_symbol_positions(additional_position: u8) -> Result<&'static [usize]> {
    match additional_position {
        0 => Ok(&[2]),
        1 => Ok(&[2, 11]),
        2 => Ok(&[2, 7, 11]),
        3 => Ok(&[2, 5, 8, 11]),
        n => config(format!("DMRS additional position must be 0..=3, got {n}")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DmrsConfig {
    pub additional_position: u8,
    pub symbol_positions: Vec<usize>,
    pub seed: u64,
}

impl DmrsConfig {
    pub fn new(additional_position: u8, seed: u64) -> Result<Self> {
        Ok(Self {
            additional_position,
            symbol_positions: dmrs_symbol_positions(additional_position)?.to_vec(),
            seed,
        })
    }

    pub fn validate(&self, slot: &SlotConfig) -> Result<()> {
        if self.symbol_positions.is_empty() {
            return config("DMRS needs at least one symbol");
        }
        if self.symbol_positions.windows(2).any(|w| w[0] >= w[1]) {
            return config("DMRS symbol positions must be strictly increasing");
        }
        if let Some(&last) = self.symbol_positions.last() {
            if last >= slot.num_symbols {
                return config(format!(
                    "DMRS symbol {last} does not fit in a {}-symbol slot",
                    slot.num_symbols
                ));
            }
        }
        Ok(())
    }
}

/// A set of resource elements, as a membership mask over the K×L grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReSet {
    num_subcarriers: usize,
    num_symbols: usize,
    mask: Vec<bool>,
    len: usize,
}

impl ReSet {
    pub fn empty(num_subcarriers: usize, num_symbols: usize) -> Self {
        Self {
            num_subcarriers,
            num_symbols,
            mask: vec![false; num_subcarriers * num_symbols],
            len: 0,
        }
    }

    pub fn full(num_subcarriers: usize, num_symbols: usize) -> Self {
        Self {
            num_subcarriers,
            num_symbols,
            mask: vec![true; num_subcarriers * num_symbols],
            len: num_subcarriers * num_symbols,
        }
    }

    /// Every subcarrier of each listed OFDM symbol.
    pub fn symbols(num_subcarriers: usize, num_symbols: usize, symbols: &[usize]) -> Self {
        let mut set = Self::empty(num_subcarriers, num_symbols);
        for &l in symbols {
            for k in 0..num_subcarriers {
                set.insert(k, l);
            }
        }
        set
    }

    pub fn from_mask(num_subcarriers: usize, num_symbols: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != num_subcarriers * num_symbols {
            return argument(format!(
                "mask has {} entries, grid has {}",
                mask.len(),
                num_subcarriers * num_symbols
            ));
        }
        let len = mask.iter().filter(|&&m| m).count();
        Ok(Self {
            num_subcarriers,
            num_symbols,
            mask,
            len,
        })
    }

    pub fn insert(&mut self, k: usize, l: usize) {
        let idx = l * self.num_subcarriers + k;
        if !self.mask[idx] {
            self.mask[idx] = true;
            self.len += 1;
        }
    }

    pub fn contains(&self, k: usize, l: usize) -> bool {
        self.mask[l * self.num_subcarriers + k]
    }

    pub fn complement(&self) -> Self {
        Self {
            num_subcarriers: self.num_subcarriers,
            num_symbols: self.num_symbols,
            mask: self.mask.iter().map(|m| !m).collect(),
            len: self.mask.len() - self.len,
        }
    }

    /// Cardinality N.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Member `(k, l)` pairs in frequency-first order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k_max = self.num_subcarriers;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(i, _)| (i % k_max, i / k_max))
    }

    /// OFDM symbols that contain at least one member.
    pub fn occupied_symbols(&self) -> Vec<usize> {
        (0..self.num_symbols)
            .filter(|&l| {
                self.mask[l * self.num_subcarriers..(l + 1) * self.num_subcarriers]
                    .iter()
                    .any(|&m| m)
            })
            .collect()
    }
}

/// K×L complex grid of baseband symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceGrid {
    num_subcarriers: usize,
    num_symbols: usize,
    data: Vec<Complex64>,
}

impl ResourceGrid {
    pub fn zeros(num_subcarriers: usize, num_symbols: usize) -> Self {
        Self {
            num_subcarriers,
            num_symbols,
            data: vec![Complex64::new(0.0, 0.0); num_subcarriers * num_symbols],
        }
    }

    pub fn from_fn(
        num_subcarriers: usize,
        num_symbols: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        let mut data = Vec::with_capacity(num_subcarriers * num_symbols);
        for l in 0..num_symbols {
            for k in 0..num_subcarriers {
                data.push(f(k, l));
            }
        }
        Self {
            num_subcarriers,
            num_symbols,
            data,
        }
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.data[l * self.num_subcarriers + k]
    }

    pub fn set(&mut self, k: usize, l: usize, value: Complex64) {
        self.data[l * self.num_subcarriers + k] = value;
    }

    /// Entries in frequency-first order.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// The subcarriers of OFDM symbol `l`.
    pub fn symbol(&self, l: usize) -> &[Complex64] {
        &self.data[l * self.num_subcarriers..(l + 1) * self.num_subcarriers]
    }

    pub fn same_shape(&self, other: &ResourceGrid) -> bool {
        self.num_subcarriers == other.num_subcarriers && self.num_symbols == other.num_symbols
    }

    pub fn max_abs_diff(&self, other: &ResourceGrid) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Known pilot symbols and the REs that carry them.
#[derive(Debug, Clone)]
pub struct Pilots {
    pub grid: ResourceGrid,
    pub set: ReSet,
}

impl Pilots {
    /// REs left over for data.
    pub fn data_set(&self) -> ReSet {
        self.set.complement()
    }

    pub fn num_data_res(&self) -> usize {
        self.set.mask().len() - self.set.len()
    }
}

fn qpsk_point(b0: bool, b1: bool) -> Complex64 {
    let re = if b0 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
    let im = if b1 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
    Complex64::new(re, im)
}

/// Full-symbol DMRS with seeded pseudo-random QPSK values.
pub fn generate_dmrs(dmrs: &DmrsConfig, slot: &SlotConfig) -> Result<Pilots> {
    slot.validate()?;
    dmrs.validate(slot)?;
    let (k_max, l_max) = (slot.num_subcarriers, slot.num_symbols);
    let set = ReSet::symbols(k_max, l_max, &dmrs.symbol_positions);
    let mut grid = ResourceGrid::zeros(k_max, l_max);
    let mut rng = ChaCha8Rng::seed_from_u64(dmrs.seed);
    for &l in &dmrs.symbol_positions {
        for k in 0..k_max {
            let bits: u8 = rng.random();
            grid.set(k, l, qpsk_point(bits & 1 != 0, bits & 2 != 0));
        }
    }
    Ok(Pilots { grid, set })
}

/// Gray-mapped QPSK: `(b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)`.
pub fn qpsk_modulate(bits: &[u8]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(2) {
        return argument(format!("QPSK needs an even number of bits, got {}", bits.len()));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|pair| qpsk_point(pair[0] != 0, pair[1] != 0))
        .collect())
}

/// Place pilots at their REs and fill the remaining REs with `data`,
/// frequency-first.
pub fn map_pusch(slot: &SlotConfig, pilots: &Pilots, data: &[Complex64]) -> Result<ResourceGrid> {
    let (k_max, l_max) = (slot.num_subcarriers, slot.num_symbols);
    if pilots.grid.num_subcarriers() != k_max || pilots.grid.num_symbols() != l_max {
        return argument("pilot grid does not match slot dimensions");
    }
    let n_d = pilots.num_data_res();
    if data.len() != n_d {
        return argument(format!("expected {n_d} data symbols, got {}", data.len()));
    }
    let mut grid = pilots.grid.clone();
    let mut symbols = data.iter();
    for (slot_re, &is_pilot) in grid.as_mut_slice().iter_mut().zip(pilots.set.mask()) {
        if !is_pilot {
            *slot_re = *symbols.next().expect("count checked above");
        }
    }
    Ok(grid)
}

/// Inverse of [`map_pusch`]: the entries outside `pilot_set`, frequency-first.
pub fn extract_data(grid: &ResourceGrid, pilot_set: &ReSet) -> Vec<Complex64> {
    grid.as_slice()
        .iter()
        .zip(pilot_set.mask())
        .filter(|(_, &is_pilot)| !is_pilot)
        .map(|(v, _)| *v)
        .collect()
}
