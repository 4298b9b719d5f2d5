//! Pilot-based channel estimation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Pilots, ResourceGrid};
use crate::registry::Registry;

pub trait ChannelEstimator: Send + Sync {
    fn name(&self) -> &'static str;

    fn estimate(&self, y: &ResourceGrid, pilots: &Pilots) -> Result<ResourceGrid>;
}

pub static CHANNEL_ESTIMATORS: Registry<dyn ChannelEstimator> = Registry::new(
    "channel estimator",
    &[("ls-linear", || Box::new(LsLinear))],
);

pub const DEFAULT_ESTIMATOR: &str = "ls-linear";

/// Least squares at pilot REs, then per subcarrier linear interpolation in
/// time between pilot symbols. Symbols before the first or after the last
/// pilot take the nearest pilot's estimate.
#[derive(Debug, Clone, Copy, Default)]
pub struct LsLinear;

impl ChannelEstimator for LsLinear {
    fn name(&self) -> &'static str {
        "ls-linear"
    }

    fn estimate(&self, y: &ResourceGrid, pilots: &Pilots) -> Result<ResourceGrid> {
        if !y.same_shape(&pilots.grid) {
            return Err(Error::Argument(
                "received grid and pilot grid have different dimensions".into(),
            ));
        }
        if pilots.set.is_empty() {
            return Err(Error::Estimation("no pilot REs to estimate from".into()));
        }
        let (k_max, l_max) = (y.num_subcarriers(), y.num_symbols());
        let mut h_hat = ResourceGrid::zeros(k_max, l_max);
        let mut anchors: Vec<(usize, Complex64)> = Vec::with_capacity(l_max);
        for k in 0..k_max {
            anchors.clear();
            for l in 0..l_max {
                if pilots.set.contains(k, l) {
                    anchors.push((l, y.get(k, l) / pilots.grid.get(k, l)));
                }
            }
            if anchors.is_empty() {
                return Err(Error::Estimation(format!("subcarrier {k} carries no pilot")));
            }
            let mut seg = 0;
            for l in 0..l_max {
                while seg + 1 < anchors.len() && anchors[seg + 1].0 <= l {
                    seg += 1;
                }
                let (l0, h0) = anchors[seg];
                let value = match anchors.get(seg + 1) {
                    Some(&(l1, h1)) if l > l0 => {
                        let w = (l - l0) as f64 / (l1 - l0) as f64;
                        h0 * (1.0 - w) + h1 * w
                    }
                    _ => h0,
                };
                h_hat.set(k, l, value);
            }
        }
        Ok(h_hat)
    }
}
