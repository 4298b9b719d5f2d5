//! Fisher information and lower bounds for delay/Doppler estimation, the
//! HARQ-weighted sensing MSE mixture, and analytic HARQ throughput.
//!
//! Parameters are ordered `(h, phi, tau, nu)` with `h = |alpha_1|` and
//! `phi = arg alpha_1`. For the noiseless model
//! `s[k][l] = h exp(j phi) exp(-j 2 pi k df tau) exp(j 2 pi l Ts nu)` summed
//! over an RE set with index sums `N, Sk, Sl, Skk, Sll, Skl`:
//!
//! ```text
//!              | N   0               0                      0                   |
//! F = 2/s^2 *  | 0   h^2 N           -2pi h^2 df Sk         2pi h^2 Ts Sl       |
//!              | 0   -2pi h^2 df Sk  (2pi)^2 h^2 df^2 Skk   -(2pi)^2 h^2 df Ts Skl |
//!              | 0   2pi h^2 Ts Sl   -(2pi)^2 h^2 df Ts Skl (2pi)^2 h^2 Ts^2 Sll |
//! ```

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{argument, Error, Result};
use crate::grid::ReSet;
use crate::link::McsEntry;

/// Index sums of an RE set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReSums {
    pub n: u64,
    pub s_k: u64,
    pub s_l: u64,
    pub s_kk: u64,
    pub s_ll: u64,
    pub s_kl: u64,
}

pub fn re_sums(set: &ReSet) -> Result<ReSums> {
    if set.is_empty() {
        return argument("index sums need a non-empty RE set");
    }
    let mut s = ReSums {
        n: 0,
        s_k: 0,
        s_l: 0,
        s_kk: 0,
        s_ll: 0,
        s_kl: 0,
    };
    for (k, l) in set.iter() {
        let (k, l) = (k as u64, l as u64);
        s.n += 1;
        s.s_k += k;
        s.s_l += l;
        s.s_kk += k * k;
        s.s_ll += l * l;
        s.s_kl += k * l;
    }
    Ok(s)
}

/// Closed-form sums over the full K×L grid.
pub fn full_grid_sums(num_subcarriers: usize, num_symbols: usize) -> ReSums {
    let (k, l) = (num_subcarriers as u64, num_symbols as u64);
    let sum = |n: u64| n * (n - 1) / 2;
    let sum_sq = |n: u64| (n - 1) * n * (2 * n - 1) / 6;
    ReSums {
        n: k * l,
        s_k: l * sum(k),
        s_l: k * sum(l),
        s_kk: l * sum_sq(k),
        s_ll: k * sum_sq(l),
        s_kl: sum(k) * sum(l),
    }
}

/// Parameter positions in the Fisher matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Magnitude = 0,
    Phase = 1,
    Delay = 2,
    Doppler = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    pub entries: [[f64; 4]; 4],
}

impl FisherMatrix {
    pub fn get(&self, i: Param, j: Param) -> f64 {
        self.entries[i as usize][j as usize]
    }

    fn to_matrix(self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.entries[i][j])
    }
}

pub fn fisher_matrix(h: f64, noise_variance: f64, sums: &ReSums, df: f64, ts: f64) -> Result<FisherMatrix> {
    if !(h > 0.0) {
        return argument(format!("path magnitude must be positive, got {h}"));
    }
    if !(noise_variance > 0.0) {
        return argument(format!("noise variance must be positive, got {noise_variance}"));
    }
    let c = 2.0 / noise_variance;
    let h2 = h * h;
    let tp = 2.0 * PI;
    let (n, sk, sl) = (sums.n as f64, sums.s_k as f64, sums.s_l as f64);
    let (skk, sll, skl) = (sums.s_kk as f64, sums.s_ll as f64, sums.s_kl as f64);
    let phi_tau = -tp * h2 * df * sk;
    let phi_nu = tp * h2 * ts * sl;
    let tau_nu = -tp * tp * h2 * df * ts * skl;
    let entries = [
        [n, 0.0, 0.0, 0.0],
        [0.0, h2 * n, phi_tau, phi_nu],
        [0.0, phi_tau, tp * tp * h2 * df * df * skk, tau_nu],
        [0.0, phi_nu, tau_nu, tp * tp * h2 * ts * ts * sll],
    ]
    .map(|row| row.map(|v| c * v));
    Ok(FisherMatrix { entries })
}

/// Per-parameter lower bounds in natural units (`h`, rad², s², Hz²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingBounds {
    /// `1 / F[n][n]`.
    pub diag: [f64; 4],
    /// `(F^-1)[n][n]`, absent when F is singular.
    pub full: Option<[f64; 4]>,
}

impl SensingBounds {
    pub fn diag(&self, p: Param) -> f64 {
        self.diag[p as usize]
    }

    pub fn full(&self, p: Param) -> Result<f64> {
        self.full
            .map(|f| f[p as usize])
            .ok_or_else(|| Error::Singular("parameters are not jointly identifiable on this RE set".into()))
    }
}

/// Smallest eigenvalue of the unit-diagonal (correlation) form of F below
/// which F is treated as singular.
const SINGULARITY_TOL: f64 = 1e-12;

pub fn crlb(f: &FisherMatrix) -> Result<SensingBounds> {
    let diag_entries: [f64; 4] = std::array::from_fn(|i| f.entries[i][i]);
    if diag_entries.iter().any(|&d| !(d >= 0.0)) {
        return argument("Fisher matrix has a negative diagonal entry");
    }
    let diag = diag_entries.map(|d| 1.0 / d);
    if diag_entries.contains(&0.0) {
        return Ok(SensingBounds { diag, full: None });
    }
    // Invert through the correlation form D^-1/2 F D^-1/2; F mixes units
    // spanning many decades and is badly scaled as is.
    let m = f.to_matrix();
    let scale = Matrix4::from_diagonal(&nalgebra::Vector4::from_fn(|i, _| 1.0 / diag_entries[i].sqrt()));
    let corr = scale * m * scale;
    let eig = SymmetricEigen::new(corr);
    if eig.eigenvalues.min() < SINGULARITY_TOL {
        return Ok(SensingBounds { diag, full: None });
    }
    let inv_corr = eig.eigenvectors
        * Matrix4::from_diagonal(&eig.eigenvalues.map(|e| 1.0 / e))
        * eig.eigenvectors.transpose();
    let inv = scale * inv_corr * scale;
    Ok(SensingBounds {
        diag,
        full: Some(std::array::from_fn(|i| inv[(i, i)])),
    })
}

/// Conditional per-round TB error probabilities `P_1..P_4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarqProbabilities([f64; 4]);

impl HarqProbabilities {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return argument(format!("HARQ error probabilities must lie in [0, 1], got {bad}"));
        }
        Ok(Self(p))
    }

    pub fn values(&self) -> [f64; 4] {
        self.0
    }

    /// Whether `P_i <= P_j` for `i > j`, as later rounds combine more energy.
    pub fn is_non_increasing(&self) -> bool {
        self.0.windows(2).all(|w| w[1] <= w[0])
    }

    /// `E[X] = 1 + P1 + P1 P2 + P1 P2 P3`.
    pub fn expected_rounds(&self) -> f64 {
        let [p1, p2, p3, _] = self.0;
        1.0 + p1 + p1 * p2 + p1 * p2 * p3
    }

    /// Probability that all four rounds fail.
    pub fn residual_failure(&self) -> f64 {
        self.0.iter().product()
    }

    /// Fraction of slots that end in a successful decode,
    /// `(1 - P1 P2 P3 P4) / E[X]`.
    pub fn rho(&self) -> f64 {
        (1.0 - self.residual_failure()) / self.expected_rounds()
    }
}

pub fn rho(p: [f64; 4]) -> Result<f64> {
    Ok(HarqProbabilities::new(p)?.rho())
}

/// `MSE = (1 - rho) MSE_1 + rho MSE_2`, elementwise.
pub fn mse_mix(mse1: &[f64], mse2: &[f64], p: [f64; 4]) -> Result<Vec<f64>> {
    if mse1.len() != mse2.len() {
        return argument("per-scenario MSE vectors differ in length");
    }
    let rho = rho(p)?;
    Ok(mse1.iter().zip(mse2).map(|(a, b)| (1.0 - rho) * a + rho * b).collect())
}

/// Average HARQ throughput in bits per slot, `N_d Q R (1 - prod P) / E[X]`.
pub fn throughput_analytic(p: [f64; 4], num_data_res: usize, mcs: &McsEntry) -> Result<f64> {
    Ok(mcs.nominal_bits(num_data_res) * rho(p)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(k: usize, l: usize) -> ReSums {
        re_sums(&ReSet::full(k, l)).unwrap()
    }

    #[test]
    fn small_grid_sums() {
        let s = brute(4, 2);
        assert_eq!((s.n, s.s_k, s.s_l, s.s_kk, s.s_ll, s.s_kl), (8, 12, 4, 28, 4, 6));
        assert_eq!(full_grid_sums(4, 2), s);
    }

    #[test]
    fn table_grid_closed_form() {
        assert_eq!(full_grid_sums(1272, 14), brute(1272, 14));
    }

    #[test]
    fn single_re() {
        let mut set = ReSet::empty(8, 8);
        set.insert(3, 5);
        let s = re_sums(&set).unwrap();
        assert_eq!((s.n, s.s_k, s.s_l, s.s_kk, s.s_ll, s.s_kl), (1, 3, 5, 9, 25, 15));
        assert!(re_sums(&ReSet::empty(2, 2)).is_err());
    }

    #[test]
    fn fisher_small_grid_entry() {
        let f = fisher_matrix(1.0, 1.0, &brute(4, 2), 1.0, 1.0).unwrap();
        let expected = 2.0 * (2.0 * PI).powi(2) * 28.0;
        assert!((f.get(Param::Delay, Param::Delay) - expected).abs() < 1e-9);
        assert_eq!(f.get(Param::Magnitude, Param::Magnitude), 16.0);
        assert!(fisher_matrix(0.0, 1.0, &brute(4, 2), 1.0, 1.0).is_err());
        assert!(fisher_matrix(1.0, 0.0, &brute(4, 2), 1.0, 1.0).is_err());
    }

    #[test]
    fn fisher_scales_with_h_squared() {
        let s = brute(16, 8);
        let a = fisher_matrix(0.5, 0.3, &s, 30e3, 35e-6).unwrap();
        let b = fisher_matrix(1.0, 0.3, &s, 30e3, 35e-6).unwrap();
        let ratio = b.get(Param::Delay, Param::Delay) / a.get(Param::Delay, Param::Delay);
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn full_bound_dominates_diagonal_and_scales_with_noise() {
        let s = full_grid_sums(1272, 14);
        let ts = 1.0 / 30e3 + 144.0 / 2048.0 / 30e3;
        let f = fisher_matrix(0.1f64.sqrt(), 1e-3, &s, 30e3, ts).unwrap();
        let b = crlb(&f).unwrap();
        for p in [Param::Magnitude, Param::Phase, Param::Delay, Param::Doppler] {
            assert!(b.full(p).unwrap() >= b.diag(p) * (1.0 - 1e-12));
        }
        let half = crlb(&fisher_matrix(0.1f64.sqrt(), 0.5e-3, &s, 30e3, ts).unwrap()).unwrap();
        for i in 0..4 {
            assert!((half.diag[i] / b.diag[i] - 0.5).abs() < 1e-9);
            assert!((half.full.unwrap()[i] / b.full.unwrap()[i] - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn full_inverse_matches_centred_closed_form() {
        // With phase unknown, the delay bound equals 1/F_tau,tau evaluated on
        // mean-removed indices when Skl dispersion vanishes.
        let (k, l) = (16usize, 8usize);
        let s = full_grid_sums(k, l);
        let f = fisher_matrix(1.0, 1.0, &s, 1.0, 1.0).unwrap();
        let b = crlb(&f).unwrap();
        let n = (k * l) as f64;
        let var_k = s.s_kk as f64 - (s.s_k as f64).powi(2) / n;
        let expected = 1.0 / (2.0 * (2.0 * PI).powi(2) * var_k);
        assert!((b.full(Param::Delay).unwrap() / expected - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_symbol_set_is_singular_for_doppler() {
        let set = ReSet::symbols(16, 8, &[2]);
        let f = fisher_matrix(1.0, 1.0, &re_sums(&set).unwrap(), 1.0, 1.0).unwrap();
        let b = crlb(&f).unwrap();
        assert!(b.full.is_none());
        assert!(matches!(b.full(Param::Doppler), Err(Error::Singular(_))));
        assert!(b.diag(Param::Doppler).is_finite());
    }

    #[test]
    fn two_dmrs_symbols_bound_doppler_worse_than_full_grid() {
        let ts = 1.0 / 30e3 + 144.0 / 2048.0 / 30e3;
        let bound = |set: &ReSet| {
            crlb(&fisher_matrix(0.3, 0.01, &re_sums(set).unwrap(), 30e3, ts).unwrap())
                .unwrap()
                .full(Param::Doppler)
                .unwrap()
        };
        let dmrs = ReSet::symbols(1272, 14, &[2, 11]);
        assert!(bound(&dmrs) > bound(&ReSet::full(1272, 14)));
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho([0.0, 0.3, 0.2, 0.1]).unwrap(), 1.0);
        assert_eq!(rho([1.0; 4]).unwrap(), 0.0);
        let p = HarqProbabilities::new([0.5, 0.25, 0.1, 0.05]).unwrap();
        assert!((p.expected_rounds() - 1.6375).abs() < 1e-15);
        assert!((p.rho() - (1.0 - 0.000625) / 1.6375).abs() < 1e-15);
        assert!((p.rho() - 0.610305).abs() < 1e-6);
        assert!(p.is_non_increasing());
        assert!(!HarqProbabilities::new([0.1, 0.2, 0.0, 0.0]).unwrap().is_non_increasing());
        assert!(rho([1.1, 0.0, 0.0, 0.0]).is_err());
        assert!(rho([-0.1, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn mixture_examples() {
        assert_eq!(mse_mix(&[4.0], &[1.0], [0.0; 4]).unwrap(), vec![1.0]);
        assert_eq!(mse_mix(&[4.0], &[1.0], [1.0; 4]).unwrap(), vec![4.0]);
        let m = mse_mix(&[4.0], &[1.0], [0.5, 0.25, 0.1, 0.05]).unwrap()[0];
        let rho = (1.0 - 0.000625) / 1.6375;
        assert!((m - (4.0 * (1.0 - rho) + rho)).abs() < 1e-12);
        assert!((m - 2.169).abs() < 1e-3);
    }

    #[test]
    fn throughput_examples() {
        let mcs = McsEntry::from_index(0).unwrap();
        assert_eq!(throughput_analytic([0.0; 4], 15264, &mcs).unwrap(), 3577.5);
        assert_eq!(throughput_analytic([1.0; 4], 15264, &mcs).unwrap(), 0.0);
        let r = throughput_analytic([0.5, 0.25, 0.1, 0.05], 15264, &mcs).unwrap();
        assert!((r - 3577.5 * (1.0 - 0.000625) / 1.6375).abs() < 1e-9);
        assert!((r - 2183.4).abs() < 0.1);
    }
}
