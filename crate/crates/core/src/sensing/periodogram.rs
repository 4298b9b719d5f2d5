//! Two-dimensional delay-Doppler periodogram on an oversampled lattice.
//!
//! `P(a, b) = |sum_{(k,l) in mask} z[k][l] exp(+j 2 pi k a / M) exp(-j 2 pi l b / N)|^2`
//! with `M = O_f K` delay bins covering `[0, T)` and `N = O_t L` Doppler
//! bins covering `[-1/(2 Ts), 1/(2 Ts))`. Evaluated with one zero-padded
//! inverse FFT per occupied symbol followed by one zero-padded forward FFT per
//! delay bin.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::SlotConfig;
use crate::sensing::{EstimatorConfig, SensingMeasurement};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Debug, Clone)]
pub struct Periodogram {
    delay_bins: usize,
    doppler_bins: usize,
    delay_step_s: f64,
    doppler_step_hz: f64,
    /// `values[a * N + j]`, `j` the unsigned FFT Doppler index.
    values: Vec<f64>,
    peak: (usize, i64),
}

impl Periodogram {
    pub fn delay_bins(&self) -> usize {
        self.delay_bins
    }

    pub fn doppler_bins(&self) -> usize {
        self.doppler_bins
    }

    /// Lattice spacing in delay, `T / (O_f K)`.
    pub fn delay_step(&self) -> f64 {
        self.delay_step_s
    }

    /// Lattice spacing in Doppler, `1 / (O_t L Ts)`.
    pub fn doppler_step(&self) -> f64 {
        self.doppler_step_hz
    }

    /// Maximum over the lattice as `(delay index, signed Doppler index)`.
    /// Ties resolve to the first maximum in storage order.
    pub fn peak(&self) -> (usize, i64) {
        self.peak
    }

    pub fn peak_value(&self) -> f64 {
        self.value(self.peak.0 as i64, self.peak.1)
    }

    pub fn delay_at(&self, a: usize) -> f64 {
        a as f64 * self.delay_step_s
    }

    pub fn doppler_at(&self, b: i64) -> f64 {
        b as f64 * self.doppler_step_hz
    }

    /// Value at delay index `a` (taken modulo M) and signed Doppler index
    /// `b` (taken modulo N).
    pub fn value(&self, a: i64, b: i64) -> f64 {
        let a = a.rem_euclid(self.delay_bins as i64) as usize;
        let j = b.rem_euclid(self.doppler_bins as i64) as usize;
        self.values[a * self.doppler_bins + j]
    }

    pub fn signed_doppler_index(&self, j: usize) -> i64 {
        signed_index(j, self.doppler_bins)
    }
}

fn signed_index(j: usize, n: usize) -> i64 {
    if 2 * j >= n {
        j as i64 - n as i64
    } else {
        j as i64
    }
}

pub fn periodogram(z: &SensingMeasurement, slot: &SlotConfig, cfg: &EstimatorConfig) -> Result<Periodogram> {
    cfg.validate()?;
    if z.mask.is_empty() {
        return Err(Error::Estimation("sensing mask selects no REs".into()));
    }
    let (k_max, l_max) = (z.z.num_subcarriers(), z.z.num_symbols());
    let m = cfg.delay_oversampling * k_max;
    let n = cfg.doppler_oversampling * l_max;
    let (ifft, fft) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_inverse(m), p.plan_fft_forward(n))
    });

    // Delay transform for each symbol that carries measurements.
    let occupied = z.mask.occupied_symbols();
    let mut delay_rows: Vec<Vec<Complex64>> = Vec::with_capacity(occupied.len());
    for &l in &occupied {
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..k_max {
            if z.mask.contains(k, l) {
                buf[k] = z.z.get(k, l);
            }
        }
        ifft.process(&mut buf);
        delay_rows.push(buf);
    }

    let mut values = vec![0.0; m * n];
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for a in 0..m {
        column.fill(Complex64::new(0.0, 0.0));
        for (row, &l) in delay_rows.iter().zip(&occupied) {
            column[l] = row[a];
        }
        fft.process_with_scratch(&mut column, &mut scratch);
        for (dst, c) in values[a * n..(a + 1) * n].iter_mut().zip(&column) {
            *dst = c.norm_sqr();
        }
    }

    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let peak = (best / n, signed_index(best % n, n));

    Ok(Periodogram {
        delay_bins: m,
        doppler_bins: n,
        delay_step_s: slot.data_duration() / m as f64,
        doppler_step_hz: 1.0 / (n as f64 * slot.symbol_duration()),
        values,
        peak,
    })
}
