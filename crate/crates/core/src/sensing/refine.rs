//! Sub-lattice refinement of the periodogram peak.

use num_complex::Complex64;

use crate::grid::SlotConfig;
use crate::registry::Registry;
use crate::sensing::periodogram::Periodogram;
use crate::sensing::SensingMeasurement;
use std::f64::consts::PI;

/// Turns the lattice maximum of a periodogram into a continuous
/// `(delay_s, doppler_hz)` estimate.
pub trait PeakRefiner: Send + Sync {
    fn name(&self) -> &'static str;

    fn refine(&self, z: &SensingMeasurement, slot: &SlotConfig, pg: &Periodogram) -> (f64, f64);
}

pub static PEAK_REFINERS: Registry<dyn PeakRefiner> = Registry::new(
    "peak refiner",
    &[
        ("lattice", || Box::new(LatticePeak)),
        ("parabolic", || Box::new(Parabolic)),
        ("newton", || Box::new(Newton::default())),
    ],
);

pub const DEFAULT_REFINER: &str = "newton";

/// No refinement: the lattice point itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct LatticePeak;

impl PeakRefiner for LatticePeak {
    fn name(&self) -> &'static str {
        "lattice"
    }

    fn refine(&self, _z: &SensingMeasurement, _slot: &SlotConfig, pg: &Periodogram) -> (f64, f64) {
        let (a, b) = pg.peak();
        (pg.delay_at(a), pg.doppler_at(b))
    }
}

/// Three-point parabola through the log-periodogram, separately in delay and
/// Doppler. Offsets are clamped to half a bin.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parabolic;

fn parabolic_offset(minus: f64, centre: f64, plus: f64) -> f64 {
    let ln = |v: f64| v.max(f64::MIN_POSITIVE).ln();
    let (lm, l0, lp) = (ln(minus), ln(centre), ln(plus));
    let curvature = lm - 2.0 * l0 + lp;
    if !(curvature < 0.0) {
        return 0.0;
    }
    (0.5 * (lm - lp) / curvature).clamp(-0.5, 0.5)
}

impl PeakRefiner for Parabolic {
    fn name(&self) -> &'static str {
        "parabolic"
    }

    fn refine(&self, _z: &SensingMeasurement, _slot: &SlotConfig, pg: &Periodogram) -> (f64, f64) {
        let (a, b) = pg.peak();
        let ai = a as i64;
        let p0 = pg.value(ai, b);
        let da = parabolic_offset(pg.value(ai - 1, b), p0, pg.value(ai + 1, b));
        let db = parabolic_offset(pg.value(ai, b - 1), p0, pg.value(ai, b + 1));
        ((a as f64 + da) * pg.delay_step(), (b as f64 + db) * pg.doppler_step())
    }
}

/// Parabolic start followed by damped Newton ascent on the continuous
/// periodogram `|A(tau, nu)|^2`, using analytic first and second derivatives.
#[derive(Debug, Clone, Copy)]
pub struct Newton {
    pub max_iterations: usize,
}

impl Default for Newton {
    fn default() -> Self {
        Self { max_iterations: 30 }
    }
}

/// Masked correlation `A(u, v) = sum z[k][l] exp(j (k u - l v))` and its
/// derivatives, with `k` and `l` centred on the mask's mean index for
/// conditioning. `u = 2 pi df tau`, `v = 2 pi Ts nu`.
struct Correlator<'a> {
    z: &'a SensingMeasurement,
    symbols: Vec<usize>,
    k_centre: f64,
    l_centre: f64,
}

struct Local {
    value: f64,
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
}

impl<'a> Correlator<'a> {
    fn new(z: &'a SensingMeasurement) -> Self {
        let n = z.mask.len() as f64;
        let (sk, sl) = z
            .mask
            .iter()
            .fold((0.0, 0.0), |(sk, sl), (k, l)| (sk + k as f64, sl + l as f64));
        Self {
            z,
            symbols: z.mask.occupied_symbols(),
            k_centre: sk / n,
            l_centre: sl / n,
        }
    }

    fn local(&self, u: f64, v: f64) -> Local {
        let k_max = self.z.z.num_subcarriers();
        let phasors: Vec<Complex64> = (0..k_max)
            .map(|k| Complex64::cis((k as f64 - self.k_centre) * u))
            .collect();
        let j = Complex64::i();
        let zero = Complex64::new(0.0, 0.0);
        let (mut a, mut a_u, mut a_v, mut a_uu, mut a_vv, mut a_uv) = (zero, zero, zero, zero, zero, zero);
        for &l in &self.symbols {
            let (mut b0, mut b1, mut b2) = (zero, zero, zero);
            for k in 0..k_max {
                if !self.z.mask.contains(k, l) {
                    continue;
                }
                let kc = k as f64 - self.k_centre;
                let t = self.z.z.get(k, l) * phasors[k];
                b0 += t;
                b1 += t * kc;
                b2 += t * (kc * kc);
            }
            let lc = l as f64 - self.l_centre;
            let tl = Complex64::cis(-lc * v);
            a += tl * b0;
            a_u += j * tl * b1;
            a_uu -= tl * b2;
            a_v -= j * lc * tl * b0;
            a_vv -= lc * lc * tl * b0;
            a_uv += lc * tl * b1;
        }
        let ac = a.conj();
        Local {
            value: a.norm_sqr(),
            grad: [2.0 * (ac * a_u).re, 2.0 * (ac * a_v).re],
            hess: [
                [
                    2.0 * (a_u.norm_sqr() + (ac * a_uu).re),
                    2.0 * (a_u.conj() * a_v + ac * a_uv).re,
                ],
                [
                    2.0 * (a_u.conj() * a_v + ac * a_uv).re,
                    2.0 * (a_v.norm_sqr() + (ac * a_vv).re),
                ],
            ],
        }
    }
}

impl PeakRefiner for Newton {
    fn name(&self) -> &'static str {
        "newton"
    }

    fn refine(&self, z: &SensingMeasurement, slot: &SlotConfig, pg: &Periodogram) -> (f64, f64) {
        let (tau0, nu0) = Parabolic.refine(z, slot, pg);
        let u_scale = 2.0 * PI * slot.subcarrier_spacing_hz;
        let v_scale = 2.0 * PI * slot.symbol_duration();
        // One lattice step in (u, v).
        let step_u = u_scale * pg.delay_step();
        let step_v = v_scale * pg.doppler_step();

        let corr = Correlator::new(z);
        let (mut u, mut v) = (u_scale * tau0, v_scale * nu0);
        let mut here = corr.local(u, v);
        for _ in 0..self.max_iterations {
            let [[huu, huv], [_, hvv]] = here.hess;
            let det = huu * hvv - huv * huv;
            let (mut du, mut dv) = if huu < 0.0 && det > 0.0 {
                (
                    -(hvv * here.grad[0] - huv * here.grad[1]) / det,
                    -(-huv * here.grad[0] + huu * here.grad[1]) / det,
                )
            } else {
                // Not locally concave: small gradient step instead.
                let g = here.grad[0].hypot(here.grad[1]);
                if g == 0.0 {
                    break;
                }
                (0.1 * step_u * here.grad[0] / g, 0.1 * step_v * here.grad[1] / g)
            };
            // Stay within half a lattice step per iteration.
            let shrink = (du.abs() / (0.5 * step_u)).max(dv.abs() / (0.5 * step_v)).max(1.0);
            du /= shrink;
            dv /= shrink;

            let mut accepted = false;
            for _ in 0..20 {
                let next = corr.local(u + du, v + dv);
                if next.value >= here.value {
                    u += du;
                    v += dv;
                    here = next;
                    accepted = true;
                    break;
                }
                du *= 0.5;
                dv *= 0.5;
            }
            if !accepted || (du.abs() < 1e-9 * step_u && dv.abs() < 1e-9 * step_v) {
                break;
            }
        }
        (u / u_scale, v / v_scale)
    }
}
