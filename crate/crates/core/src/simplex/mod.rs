//! Decision logics over the two steering controllers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::calibration::{SPEED_DUTY_MIN, SPEED_DUTY_RL_MAX};
use crate::sim::{SpeedDuty, SteerDuty};

/// Convex weights on the learning-enabled (`w_l`) and classical (`w_c`) controllers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleWeights {
    w_l: f64,
}

impl EnsembleWeights {
    pub const LEC_ONLY: EnsembleWeights = EnsembleWeights { w_l: 1.0 };
    pub const CV_ONLY: EnsembleWeights = EnsembleWeights { w_l: 0.0 };

    pub fn new(w_l: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&w_l) {
            Ok(Self { w_l })
        } else {
            Err(Error::Range {
                what: "LEC weight",
                value: w_l,
                lo: 0.0,
                hi: 1.0,
            })
        }
    }

    /// `(w_l, w_c)` with `w_l + w_c = 1`.
    pub fn pair(w_l: f64, w_c: f64) -> Result<Self> {
        if (w_l + w_c - 1.0).abs() > 1e-12 {
            return Err(Error::contract(format!("weights {w_l} + {w_c} do not sum to 1")));
        }
        Self::new(w_l)
    }

    pub fn w_l(self) -> f64 {
        self.w_l
    }

    pub fn w_c(self) -> f64 {
        1.0 - self.w_l
    }
}

/// `w_c * theta_c + w_l * (theta_l - theta_c)`, i.e. the weighted sum written
/// so the result never leaves `[min, max]` of the inputs.
pub fn blend(theta_l: SteerDuty, theta_c: SteerDuty, w: EnsembleWeights) -> SteerDuty {
    let (a, b) = (theta_l.value(), theta_c.value());
    SteerDuty::clamped(b + w.w_l() * (a - b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpeedDirection {
    Inc,
    Dec,
    Nop,
}

/// `v ± delta_v`, saturated to the learned-strategy throttle band.
pub fn speed_update(v: SpeedDuty, dir: SpeedDirection, delta_v: f64) -> SpeedDuty {
    debug_assert!(delta_v > 0.0);
    let next = match dir {
        SpeedDirection::Inc => v.value() + delta_v,
        SpeedDirection::Dec => v.value() - delta_v,
        SpeedDirection::Nop => return v,
    };
    SpeedDuty::clamped_to(next, SPEED_DUTY_MIN, SPEED_DUTY_RL_MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedStrategyParams {
    /// Disagreement above which the controllers are blended, duty-%.
    pub tau_sw: f64,
    pub w_l: f64,
    pub delta_v: f64,
    /// Lowest duty the slow-down may reach; at 15.58 the car can stall for good.
    pub min_speed_duty: f64,
}

impl Default for FixedStrategyParams {
    fn default() -> Self {
        Self {
            tau_sw: 1.0,
            w_l: 0.8,
            delta_v: 0.001,
            min_speed_duty: 15.59,
        }
    }
}

impl FixedStrategyParams {
    pub fn validate(&self) -> Result<()> {
        if self.tau_sw > 0.0
            && self.delta_v > 0.0
            && (0.0..=1.0).contains(&self.w_l)
            && (SPEED_DUTY_MIN..=SPEED_DUTY_RL_MAX).contains(&self.min_speed_duty)
        {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid fixed-strategy parameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedDecision {
    pub steer: SteerDuty,
    pub v_next: SpeedDuty,
    pub blended: bool,
}

/// Arguing-machines rule: blend and slow down on disagreement, otherwise
/// trust the LEC and speed up.
pub fn fixed_strategy(
    theta_l: SteerDuty,
    theta_c: SteerDuty,
    v: SpeedDuty,
    p: &FixedStrategyParams,
) -> FixedDecision {
    if (theta_l.value() - theta_c.value()).abs() > p.tau_sw {
        let w = EnsembleWeights { w_l: p.w_l };
        FixedDecision {
            steer: blend(theta_l, theta_c, w),
            v_next: SpeedDuty::clamped(speed_update(v, SpeedDirection::Dec, p.delta_v).value().max(p.min_speed_duty)),
            blended: true,
        }
    } else {
        FixedDecision {
            steer: theta_l,
            v_next: speed_update(v, SpeedDirection::Inc, p.delta_v),
            blended: false,
        }
    }
}

/// Hard switch: the LEC unless flagged unsafe, then the classical controller.
pub fn conventional_simplex(theta_l: SteerDuty, theta_c: SteerDuty, unsafe_: bool) -> SteerDuty {
    if unsafe_ {
        theta_c
    } else {
        theta_l
    }
}
