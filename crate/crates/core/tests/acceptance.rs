//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! The trend checks run a reduced 200-slot campaign by default; set
//! `ISAC_ACCEPTANCE_FULL=1` to run them on the full default campaign.

use std::f64::consts::PI;
use std::time::Instant;

use isac_core::bounds::{fisher_matrix, re_sums};
use isac_core::geometry::{bistatic_delay, doppler_from_velocity, localize, BistaticScene, Point, SPEED_OF_LIGHT};
use isac_core::grid::{dmrs_symbol_positions, ReSet, ResourceGrid, SlotConfig};
use isac_core::harness::{
    emit_results, run_campaign, run_sensing_sweep, with_workers, CampaignConfig, CampaignPoint, CampaignResult,
    DmrsSettings,
};
use isac_core::sensing::{amplitude_at, estimate_ml, periodogram, EstimatorConfig, Scenario, SensingMeasurement};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn single_setup(mcs: u8, position: u8, snr1_db: Vec<f64>, trials: usize) -> CampaignConfig {
    CampaignConfig {
        trials,
        snr1_db,
        mcs: vec![mcs],
        dmrs: DmrsSettings {
            additional_positions: vec![position],
            ..Default::default()
        },
        ..Default::default()
    }
}

fn target_measurement(slot: &SlotConfig, mask: &ReSet, alpha: Complex64, tau: f64, nu: f64) -> SensingMeasurement {
    let ts = slot.symbol_duration();
    let z = ResourceGrid::from_fn(slot.num_subcarriers, slot.num_symbols, |k, l| {
        if mask.contains(k, l) {
            alpha
                * Complex64::cis(-2.0 * PI * k as f64 * slot.subcarrier_spacing_hz * tau)
                * Complex64::cis(2.0 * PI * l as f64 * ts * nu)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    SensingMeasurement {
        z,
        mask: mask.clone(),
        scenario: Scenario::AllRe,
    }
}

/// DMRS symbols of the densest configuration that fit in `l` symbols.
fn dmrs_set(k: usize, l: usize) -> ReSet {
    let symbols: Vec<usize> = dmrs_symbol_positions(3).unwrap().iter().copied().filter(|&s| s < l).collect();
    ReSet::symbols(k, l, &symbols)
}

fn fisher_oracle() -> Outcome {
    let (h, phi, sigma2) = (0.7, 0.4, 0.5);
    let slot = SlotConfig::default();
    let (df, ts) = (slot.subcarrier_spacing_hz, slot.symbol_duration());
    let (tau, nu) = (0.31 * slot.data_duration(), 1234.0);
    let mut worst: f64 = 0.0;
    for k in [8, 16] {
        for l in [4, 8] {
            for set in [dmrs_set(k, l), ReSet::full(k, l)] {
                let closed = fisher_matrix(h, sigma2, &re_sums(&set).unwrap(), df, ts).unwrap();
                let theta = [h, phi, tau, nu];
                let steps = [1e-5 * h, 1e-5, 1e-5 / (df * k as f64), 1e-5 / (ts * l as f64)];
                let mean = |t: &[f64; 4]| -> Vec<Complex64> {
                    set.iter()
                        .map(|(kk, ll)| {
                            t[0] * Complex64::cis(t[1] - 2.0 * PI * kk as f64 * df * t[2] + 2.0 * PI * ll as f64 * ts * t[3])
                        })
                        .collect()
                };
                let grads: Vec<Vec<Complex64>> = (0..4)
                    .map(|i| {
                        let (mut up, mut down) = (theta, theta);
                        up[i] += steps[i];
                        down[i] -= steps[i];
                        mean(&up)
                            .iter()
                            .zip(mean(&down))
                            .map(|(a, b)| (a - b) / (2.0 * steps[i]))
                            .collect()
                    })
                    .collect();
                let mut fd = [[0.0; 4]; 4];
                for i in 0..4 {
                    for j in 0..4 {
                        let s: f64 = grads[i].iter().zip(&grads[j]).map(|(a, b)| (a.conj() * b).re).sum();
                        fd[i][j] = 2.0 / sigma2 * s;
                    }
                }
                for i in 0..4 {
                    for j in 0..4 {
                        let scale = (closed.entries[i][i] * closed.entries[j][j]).sqrt();
                        worst = worst.max((fd[i][j] - closed.entries[i][j]).abs() / scale);
                    }
                }
            }
        }
    }
    check(worst <= 1e-5, format!("max normalized entry error {worst:.2e} (limit 1e-5)"))
}

fn periodogram_oracle() -> Outcome {
    let (k_max, l_max) = (16, 8);
    let slot = SlotConfig::unit(k_max, l_max);
    let cfg = EstimatorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for mask in [dmrs_set(k_max, l_max), ReSet::full(k_max, l_max)] {
        let z = ResourceGrid::from_fn(k_max, l_max, |k, l| {
            if mask.contains(k, l) {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let meas = SensingMeasurement {
            z,
            mask: mask.clone(),
            scenario: Scenario::AllRe,
        };
        let pg = periodogram(&meas, &slot, &cfg).unwrap();
        let (m, n) = (pg.delay_bins(), pg.doppler_bins());
        let direct = |a: usize, b: i64| -> f64 {
            mask.iter()
                .map(|(k, l)| {
                    meas.z.get(k, l)
                        * Complex64::cis(2.0 * PI * (k * a) as f64 / m as f64)
                        * Complex64::cis(-2.0 * PI * l as f64 * b as f64 / n as f64)
                })
                .sum::<Complex64>()
                .norm_sqr()
        };
        let mut values = Vec::with_capacity(m * n);
        for a in 0..m {
            for j in 0..n {
                let b = pg.signed_doppler_index(j);
                values.push((direct(a, b), pg.value(a as i64, b)));
            }
        }
        let peak = values.iter().map(|v| v.0).fold(0.0, f64::max);
        for (d, f) in values {
            worst = worst.max((d - f).abs() / peak);
        }
    }
    check(worst <= 1e-8, format!("max error {worst:.2e} relative to the peak (limit 1e-8)"))
}

fn noiseless_exactness() -> Outcome {
    let slot = SlotConfig::default();
    let full = ReSet::full(slot.num_subcarriers, slot.num_symbols);
    let alpha = Complex64::from_polar(0.8, 0.3);
    let lattice = EstimatorConfig {
        refine: false,
        ..Default::default()
    };
    let tau_step = slot.data_duration() / (lattice.delay_oversampling * slot.num_subcarriers) as f64;
    let nu_step = 1.0 / ((lattice.doppler_oversampling * slot.num_symbols) as f64 * slot.symbol_duration());
    let mut notes = Vec::new();
    let mut ok = true;

    for (a, b) in [(1000usize, 7i64), (37, -12), (4000, 0)] {
        let (tau, nu) = (a as f64 * tau_step, b as f64 * nu_step);
        let z = target_measurement(&slot, &full, alpha, tau, nu);
        let est = estimate_ml(&z, &slot, &lattice).unwrap();
        let (alpha_hat, _) = amplitude_at(&z, &slot, est.tau_hat, est.nu_hat);
        let e_tau = (est.tau_hat - tau).abs() / tau_step;
        let e_nu = (est.nu_hat - nu).abs() / nu_step;
        let e_alpha = (alpha_hat - alpha).norm();
        ok &= e_tau <= 1e-12 && e_nu <= 1e-12 && e_alpha <= 1e-9;
        notes.push(format!("lattice ({a},{b}): {e_tau:.0e}/{e_nu:.0e} steps, |da| {e_alpha:.0e}"));
    }
    for refiner in ["newton", "parabolic"] {
        let cfg = EstimatorConfig::with_refiner(refiner);
        let mut worst: f64 = 0.0;
        for (a, b) in [(1000.37, 7.29), (37.5, -11.6), (4000.81, 0.45)] {
            let (tau, nu) = (a * tau_step, b * nu_step);
            let est = estimate_ml(&target_measurement(&slot, &full, alpha, tau, nu), &slot, &cfg).unwrap();
            worst = worst.max((est.tau_hat - tau).abs() / tau_step).max((est.nu_hat - nu).abs() / nu_step);
        }
        ok &= worst < 0.25;
        notes.push(format!("{refiner} off-lattice max {worst:.1e} steps"));
    }
    check(ok, notes.join("; "))
}

fn crlb_approach() -> Outcome {
    let cfg = CampaignConfig {
        snr1_db: vec![20.0],
        ..Default::default()
    };
    let p = &run_sensing_sweep(&cfg, 1, 500).unwrap()[0];
    let limit = 10f64.powf(0.3);
    let delay = p.delay_mse[1] / p.delay_crlb[1];
    let doppler = p.doppler_mse[1] / p.doppler_crlb[1];
    check(
        delay <= limit && doppler <= limit,
        format!("MSE/CRLB delay {delay:.3}, Doppler {doppler:.3} (limit {limit:.3})"),
    )
}

fn scenario_ordering() -> Outcome {
    let cfg = CampaignConfig::default();
    let mut notes = Vec::new();
    let mut ok = true;
    for position in [1, 3] {
        let mut worst = f64::NEG_INFINITY;
        for p in run_sensing_sweep(&cfg, position, 500).unwrap() {
            for (mse, se) in [(p.delay_mse, p.delay_mse_se), (p.doppler_mse, p.doppler_mse_se)] {
                let slack = 2.0 * (se[0].powi(2) + se[1].powi(2)).sqrt();
                let margin = (mse[1] - mse[0]) / slack;
                worst = worst.max(margin);
                ok &= mse[1] <= mse[0] + slack;
            }
        }
        notes.push(format!("position {position}: worst (MSE2-MSE1)/2SE {worst:.2}"));
    }
    check(ok, format!("{} SNR points, {}", cfg.snr1_db.len(), notes.join(", ")))
}

fn proposition_one() -> Outcome {
    let result = run_campaign(&single_setup(0, 1, vec![-11.0], 1000)).unwrap();
    let p = &result.points[0];
    if !(0.2 < p.scenario2_fraction && p.scenario2_fraction < 0.8) {
        return Err(format!("scenario2_fraction {} outside (0.2, 0.8)", p.scenario2_fraction));
    }
    let rho = p.rho;
    let mix = |a: f64, b: f64| (1.0 - rho) * a.powi(2) + rho * b.powi(2);
    let range = (p.rmse_range_m.powi(2) - mix(p.dmrs_only.rmse_range_m, p.all_re.rmse_range_m)).abs() / p.mse_range_se;
    let doppler =
        (p.rmse_doppler_hz.powi(2) - mix(p.dmrs_only.rmse_doppler_hz, p.all_re.rmse_doppler_hz)).abs() / p.mse_doppler_se;
    let fraction = (p.scenario2_fraction - rho).abs() / p.scenario2_fraction_se;
    check(
        range <= 3.0 && doppler <= 3.0 && fraction <= 3.0,
        format!(
            "fraction {:.3}, rho {rho:.3}; deviations in SE: range {range:.2e}, Doppler {doppler:.2e}, fraction {fraction:.2e}",
            p.scenario2_fraction
        ),
    )
}

fn throughput_identity(campaign: &CampaignResult) -> Outcome {
    let mut worst: f64 = 0.0;
    for p in &campaign.points {
        let diff = (p.throughput_bits_per_slot - p.throughput_analytic).abs();
        if diff > 1e-9 * p.throughput_analytic.max(1.0) {
            worst = worst.max(diff / p.throughput_se);
        }
    }
    let top = campaign
        .points
        .iter()
        .filter(|p| p.mcs == 0 && p.dmrs_additional_position == 1)
        .max_by(|a, b| a.snr1_db.total_cmp(&b.snr1_db))
        .unwrap();
    let exact = top.bler_round[0] == 0.0 && top.throughput_bits_per_slot == 3577.5;
    check(
        worst <= 3.0 && exact,
        format!(
            "{} points, worst deviation {worst:.2} SE; MCS 0 position 1 at {} dB: {} bits/slot",
            campaign.points.len(),
            top.snr1_db,
            top.throughput_bits_per_slot
        ),
    )
}

fn incremental_redundancy() -> Outcome {
    let snr = -12.0;
    let p = &run_campaign(&single_setup(0, 1, vec![snr], 2000)).unwrap().points[0];
    let (bler, n) = (p.bler_round, p.round_attempts);
    if bler[0] < 0.9 {
        return Err(format!("round-1 BLER {} at {snr} dB is not IR-operating", bler[0]));
    }
    let se = |i: usize| (bler[i] * (1.0 - bler[i]) / n[i] as f64).sqrt();
    let mut ok = true;
    for i in 0..3 {
        if n[i + 1] > 0 {
            let slack = 2.0 * (se(i).powi(2) + se(i + 1).powi(2)).sqrt();
            ok &= bler[i + 1] < bler[i] + slack;
        }
    }
    check(ok, format!("{} slots at {snr} dB: BLER {bler:?}, attempts {n:?}", p.trials))
}

fn geometry_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut coord = || 2000.0 * rng.random::<f64>() - 1000.0;
    let (mut scenes, mut worst) = (0, 0.0f64);
    while scenes < 10_000 {
        let scene = BistaticScene {
            gnb_position: Point::new(coord(), coord()),
            ue_position: Point::new(coord(), coord()),
            target_position: Point::new(coord(), coord()),
            target_speed: 10.0,
            carrier_frequency: 3.5e9,
        };
        let d0 = scene.baseline();
        let delay = bistatic_delay(&scene).unwrap();
        if d0 < 1.0 || delay.d_p - d0 < 1e-3 * d0 {
            continue;
        }
        scenes += 1;
        let loc = localize(delay.delta_tau, scene.aoa().unwrap(), d0).unwrap();
        let found = loc.to_world(&scene.gnb_position, &scene.ue_position);
        let d1 = scene.gnb_position.distance(&scene.target_position);
        worst = worst.max(found.distance(&scene.target_position) / d1);
    }
    let mut monostatic: f64 = 0.0;
    for (v, d1, theta) in [(10.0, 50.0, 0.3), (-3.0, 1e4, -2.0), (250.0, 1.0, 1.2)] {
        let nu = doppler_from_velocity(v, d1, 0.0, theta, 3.5e9).unwrap();
        let expected = 2.0 * 3.5e9 * v / SPEED_OF_LIGHT;
        monostatic = monostatic.max((nu - expected).abs() / expected);
    }
    check(
        worst <= 1e-9 && monostatic <= 1e-12,
        format!("{scenes} scenes, max relative position error {worst:.1e}; monostatic Doppler error {monostatic:.1e}"),
    )
}

fn paper_trends(campaign: &CampaignResult) -> Outcome {
    let find = |mcs: u8, pos: u8, snr: f64| -> &CampaignPoint {
        campaign
            .points
            .iter()
            .find(|p| p.mcs == mcs && p.dmrs_additional_position == pos && p.snr1_db == snr)
            .unwrap()
    };
    let cfg = &campaign.config;
    let top = cfg.snr1_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut a_ok, mut a_points, mut b_ok, mut c_ok) = (true, 0, true, true);
    let mut notes = Vec::new();
    for &mcs in &cfg.mcs {
        for &snr in &cfg.snr1_db {
            let (one, three) = (find(mcs, 1, snr), find(mcs, 3, snr));
            if one.scenario2_fraction <= 0.2 && three.scenario2_fraction <= 0.2 {
                a_points += 1;
                let slack = 2.0 * (one.mse_doppler_se.powi(2) + three.mse_doppler_se.powi(2)).sqrt();
                a_ok &= three.rmse_doppler_hz.powi(2) <= one.rmse_doppler_hz.powi(2) + slack;
            }
        }
        let (one, three) = (find(mcs, 1, top), find(mcs, 3, top));
        b_ok &= three.throughput_bits_per_slot < one.throughput_bits_per_slot;
        notes.push(format!(
            "MCS {mcs} at {top} dB: {} vs {} bits/slot",
            one.throughput_bits_per_slot, three.throughput_bits_per_slot
        ));
    }
    let mut c_worst = f64::INFINITY;
    for p in &campaign.points {
        let bound = p.crlb_doppler_hz.mixture.powi(2);
        let margin = (p.rmse_doppler_hz.powi(2) - bound) / p.mse_doppler_se;
        c_worst = c_worst.min(margin);
        // At high SNR the estimator is efficient and the MSE sits on the
        // bound, so only a significant shortfall across all points counts.
        c_ok &= p.rmse_doppler_hz.powi(2) + 3.0 * p.mse_doppler_se >= bound;
    }
    a_ok &= a_points > 0;
    check(
        a_ok && b_ok && c_ok,
        format!(
            "(a) {} on {a_points} low-SNR points; (b) {} [{}]; (c) {} (closest (MSE-bound)/SE {c_worst:.2})",
            pass(a_ok),
            pass(b_ok),
            notes.join(", "),
            pass(c_ok)
        ),
    )
}

fn determinism() -> Outcome {
    let mut cfg = single_setup(0, 1, vec![-12.0, 0.0], 40);
    cfg.dmrs.additional_positions = vec![1, 3];
    let emit = |workers| {
        let result = with_workers(Some(workers), || run_campaign(&cfg)).unwrap().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (csv, json) = emit_results(&result, dir.path()).unwrap();
        (std::fs::read(csv).unwrap(), std::fs::read(json).unwrap())
    };
    let one = emit(1);
    let four = emit(4);
    check(one == four, format!("CSV {} bytes, JSON {} bytes, workers 1 vs 4", one.0.len(), one.1.len()))
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() {
    let full = std::env::var("ISAC_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
    let trend_trials = if full { CampaignConfig::default().trials } else { 200 };
    let mut campaign: Option<CampaignResult> = None;
    let mut default_campaign = || -> CampaignResult {
        campaign
            .get_or_insert_with(|| {
                let start = Instant::now();
                let cfg = CampaignConfig {
                    trials: trend_trials,
                    ..Default::default()
                };
                let r = run_campaign(&cfg).unwrap();
                println!(
                    "default campaign: {trend_trials} slots per point, {} points, {:.1} s",
                    r.points.len(),
                    start.elapsed().as_secs_f64()
                );
                r
            })
            .clone()
    };

    let mut failures = 0;
    let mut report = |id: u32, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        if !ok {
            failures += 1;
        }
        println!("{} {id:>2} {name} ({secs:.1} s): {detail}", pass(ok));
    };

    report(1, "fisher oracle", &mut fisher_oracle);
    report(2, "periodogram oracle", &mut periodogram_oracle);
    report(3, "noiseless exactness", &mut noiseless_exactness);
    report(4, "CRLB approach", &mut crlb_approach);
    report(5, "scenario ordering", &mut scenario_ordering);
    report(6, "proposition 1 mixture", &mut proposition_one);
    report(7, "throughput identity", &mut || throughput_identity(&default_campaign()));
    report(8, "HARQ incremental redundancy", &mut incremental_redundancy);
    report(9, "geometry round trip", &mut geometry_round_trip);
    report(10, "paper trends", &mut || paper_trends(&default_campaign()));
    report(11, "determinism", &mut determinism);

    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
