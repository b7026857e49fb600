//! Opto-coupler wheel-speed measurement and 2-D dead reckoning.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Why an opto-coupler sample was discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptoReject {
    /// Slower than one interrupt per zero-detection window: the wheel is stopped.
    ZeroDetection,
    /// Faster than the switch bounce time allows: a spurious interrupt.
    Bounce,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptoParams {
    pub wheel_diameter: f64,
    pub t_zd: f64,
    pub t_bt: f64,
}

impl Default for OptoParams {
    fn default() -> Self {
        Self {
            wheel_diameter: 0.11,
            t_zd: 2.0,
            t_bt: 0.01,
        }
    }
}

/// Ground speed from the interrupt frequency `tick_frequency` (revolutions
/// per second), accepted only inside `[1/t_zd, 1/t_bt]`.
pub fn opto_speed(
    tick_frequency: f64,
    wheel_diameter: f64,
    t_zd: f64,
    t_bt: f64,
) -> Result<std::result::Result<f64, OptoReject>> {
    if !(t_zd > t_bt && t_bt > 0.0) {
        return Err(Error::contract(format!(
            "opto timing requires t_zd > t_bt > 0, got t_zd={t_zd}, t_bt={t_bt}"
        )));
    }
    if tick_frequency < 1.0 / t_zd {
        return Ok(Err(OptoReject::ZeroDetection));
    }
    if tick_frequency > 1.0 / t_bt {
        return Ok(Err(OptoReject::Bounce));
    }
    Ok(Ok(tick_frequency * PI * wheel_diameter))
}

/// `P + v * dt`, componentwise.
pub fn dead_reckon(pos: (f64, f64), velocity: (f64, f64), dt: f64) -> (f64, f64) {
    debug_assert!(dt >= 0.0);
    (pos.0 + velocity.0 * dt, pos.1 + velocity.1 * dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula() {
        let v = opto_speed(1.0, 0.1, 2.0, 0.01).unwrap().unwrap();
        assert!((v - 0.314_159_265_358_979_3).abs() < 1e-12);
    }

    #[test]
    fn bounds_are_inclusive() {
        let (zd, bt) = (2.0, 0.01);
        assert!(opto_speed(1.0 / zd, 0.1, zd, bt).unwrap().is_ok());
        assert!(opto_speed(1.0 / bt, 0.1, zd, bt).unwrap().is_ok());
        assert_eq!(
            opto_speed(0.499, 0.1, zd, bt).unwrap(),
            Err(OptoReject::ZeroDetection)
        );
        assert_eq!(opto_speed(100.01, 0.1, zd, bt).unwrap(), Err(OptoReject::Bounce));
    }

    #[test]
    fn bad_timing_is_a_contract_error() {
        assert!(opto_speed(1.0, 0.1, 0.01, 0.02).is_err());
        assert!(opto_speed(1.0, 0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn dead_reckoning() {
        assert_eq!(dead_reckon((0.0, 0.0), (0.5, 0.0), 2.0), (1.0, 0.0));
        assert_eq!(dead_reckon((1.0, 1.0), (0.3, -0.4), 0.0), (1.0, 1.0));
        let (x, y) = dead_reckon((1.0, 1.0), (0.3, -0.4), 10.0);
        assert!((x - 4.0).abs() < 1e-12 && (y + 3.0).abs() < 1e-12);
    }
}
