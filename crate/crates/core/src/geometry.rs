//! Planar bistatic geometry: gNB receiver, UE transmitter, one reflector.
//!
//! Angle of arrival convention. Let `beta` be the signed angle at the gNB
//! from the gNB→UE baseline to the gNB→target direction. Then
//! `theta = beta - pi/2`, so `theta = 0` points along the baseline's left
//! normal and `sin(theta) = -cos(beta)`:
//!
//! ```text
//!                 target
//!                  *
//!            d1   /  \   d2
//!                /    \
//!     theta=0 ^ /      \
//!             |/ beta   \
//!        gNB  o----------o  UE
//!                 d0
//! ```
//!
//! With this convention the law of cosines gives
//! `d1 = (dp^2 - d0^2) / (2 (dp + d0 sin theta))` and
//! `d2 = sqrt(d1^2 + d0^2 + 2 d1 d0 sin theta)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn angle_to(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BistaticScene {
    pub gnb_position: Point,
    pub ue_position: Point,
    pub target_position: Point,
    pub target_speed: f64,
    pub carrier_frequency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BistaticDelay {
    /// LoS delay `d0 / c`.
    pub tau0: f64,
    /// Excess delay of the reflected path over the LoS path.
    pub delta_tau: f64,
    /// Bistatic range `d1 + d2`.
    pub d_p: f64,
}

impl BistaticScene {
    pub fn baseline(&self) -> f64 {
        self.gnb_position.distance(&self.ue_position)
    }

    fn check(&self) -> Result<f64> {
        let d0 = self.baseline();
        if !(d0 > 0.0) {
            return Err(Error::Geometry("gNB and UE positions coincide".into()));
        }
        Ok(d0)
    }

    /// Angle of arrival at the gNB, in `(-3pi/2, pi/2]`.
    pub fn aoa(&self) -> Result<f64> {
        self.check()?;
        let baseline = self.gnb_position.angle_to(&self.ue_position);
        let target = self.gnb_position.angle_to(&self.target_position);
        let beta = (target - baseline).rem_euclid(std::f64::consts::TAU);
        let beta = if beta > std::f64::consts::PI { beta - std::f64::consts::TAU } else { beta };
        Ok(beta - FRAC_PI_2)
    }
}

pub fn bistatic_delay(scene: &BistaticScene) -> Result<BistaticDelay> {
    let d0 = scene.check()?;
    let d1 = scene.gnb_position.distance(&scene.target_position);
    let d2 = scene.target_position.distance(&scene.ue_position);
    let d_p = d1 + d2;
    Ok(BistaticDelay {
        tau0: d0 / SPEED_OF_LIGHT,
        delta_tau: ((d_p - d0) / SPEED_OF_LIGHT).max(0.0),
        d_p,
    })
}

/// gNB–target distance from the bistatic range and the angle of arrival.
pub fn target_range(d_p: f64, d0: f64, theta: f64) -> Result<f64> {
    if !(d0 >= 0.0) || !(d_p >= d0) {
        return Err(Error::Geometry(format!(
            "bistatic range {d_p} m must be at least the baseline {d0} m"
        )));
    }
    let denom = 2.0 * (d_p + d0 * theta.sin());
    if !(denom > 0.0) {
        return Err(Error::Geometry(format!(
            "degenerate angle of arrival {theta} rad for d_p = {d_p} m, d0 = {d0} m"
        )));
    }
    Ok((d_p * d_p - d0 * d0) / denom)
}

/// Bistatic Doppler shift magnitude for a target moving at speed `v`.
pub fn doppler_from_velocity(v: f64, d1: f64, d0: f64, theta: f64, carrier_frequency: f64) -> Result<f64> {
    if !(d1 >= 0.0) {
        return Err(Error::Geometry(format!("target range must be non-negative, got {d1}")));
    }
    let s = theta.sin();
    let d2_sq = d1 * d1 + d0 * d0 + 2.0 * d1 * d0 * s;
    if !(d2_sq > 0.0) {
        return Err(Error::Geometry("target coincides with the UE".into()));
    }
    let radicand = 0.5 + (d1 + d0 * s) / (2.0 * d2_sq.sqrt());
    if radicand < 0.0 {
        return Err(Error::Geometry(format!("negative Doppler radicand {radicand}")));
    }
    Ok(2.0 * carrier_frequency / SPEED_OF_LIGHT * v * radicand.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub d1: f64,
    pub d_p: f64,
    /// Target position in the baseline frame: gNB at the origin, UE at
    /// `(d0, 0)`.
    pub position: Point,
}

impl Localization {
    /// Position in the frame of an arbitrary gNB/UE placement.
    pub fn to_world(&self, gnb: &Point, ue: &Point) -> Point {
        let d0 = gnb.distance(ue);
        let (c, s) = ((ue.x - gnb.x) / d0, (ue.y - gnb.y) / d0);
        Point::new(
            gnb.x + c * self.position.x - s * self.position.y,
            gnb.y + s * self.position.x + c * self.position.y,
        )
    }
}

pub fn localize(delta_tau: f64, theta: f64, d0: f64) -> Result<Localization> {
    if !(delta_tau >= 0.0) {
        return Err(Error::Geometry(format!("excess delay must be non-negative, got {delta_tau}")));
    }
    let d_p = SPEED_OF_LIGHT * delta_tau + d0;
    let d1 = if delta_tau == 0.0 { 0.0 } else { target_range(d_p, d0, theta)? };
    let beta = theta + FRAC_PI_2;
    Ok(Localization {
        d1,
        d_p,
        position: Point::new(d1 * beta.cos(), d1 * beta.sin()),
    })
}
