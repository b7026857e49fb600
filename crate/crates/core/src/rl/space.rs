//! Discretized state grid and the nine weight/speed actions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::calibration::{SPEED_DUTY_MIN, STEER_DUTY_CENTER, STEER_DUTY_MIN};
use crate::sim::{SpeedDuty, SteerDuty};

pub const W_STEPS: usize = 21;
pub const V_STEPS: usize = 41;
pub const THETA_L_STEPS: usize = 11;
pub const THETA_C_STEPS: usize = 3;
pub const N_STATES: usize = W_STEPS * V_STEPS * THETA_L_STEPS * THETA_C_STEPS;
pub const N_ACTIONS: usize = 9;

pub const W_STEP: f64 = 0.05;
pub const V_STEP: f64 = 0.001;

/// Nearest integer duty in `[10, 20]`, as an index from 0; halves round toward 15.
pub fn theta_l_bucket(theta: SteerDuty) -> u8 {
    let d = theta.value() - STEER_DUTY_CENTER;
    let r = d.signum() * (d.abs() - 0.5).ceil();
    (STEER_DUTY_CENTER + r - STEER_DUTY_MIN).clamp(0.0, (THETA_L_STEPS - 1) as f64) as u8
}

/// 10 -> 0, 15 -> 1, 20 -> 2; intermediate values go to the nearest of the three.
pub fn theta_c_bucket(theta: SteerDuty) -> u8 {
    let v = theta.value();
    if v < 12.5 {
        0
    } else if v <= 17.5 {
        1
    } else {
        2
    }
}

/// Grid index of a speed duty, nearest step, saturated to the grid.
pub fn v_index(v: SpeedDuty) -> u8 {
    (((v.value() - SPEED_DUTY_MIN) / V_STEP).round()).clamp(0.0, (V_STEPS - 1) as f64) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RlState {
    pub w_idx: u8,
    pub v_idx: u8,
    pub theta_l_bucket: u8,
    pub theta_c_bucket: u8,
}

impl RlState {
    pub fn new(w_idx: u8, v_idx: u8, theta_l_bucket: u8, theta_c_bucket: u8) -> Result<Self> {
        let s = Self {
            w_idx,
            v_idx,
            theta_l_bucket,
            theta_c_bucket,
        };
        if (w_idx as usize) < W_STEPS
            && (v_idx as usize) < V_STEPS
            && (theta_l_bucket as usize) < THETA_L_STEPS
            && (theta_c_bucket as usize) < THETA_C_STEPS
        {
            Ok(s)
        } else {
            Err(Error::contract(format!("state {s:?} is off the grid")))
        }
    }

    pub fn w_l(&self) -> f64 {
        self.w_idx as f64 * W_STEP
    }

    pub fn w_c(&self) -> f64 {
        1.0 - self.w_l()
    }

    pub fn speed_duty(&self) -> SpeedDuty {
        SpeedDuty::clamped(SPEED_DUTY_MIN + self.v_idx as f64 * V_STEP)
    }

    pub fn theta_l(&self) -> f64 {
        STEER_DUTY_MIN + self.theta_l_bucket as f64
    }

    pub fn theta_c(&self) -> f64 {
        STEER_DUTY_MIN + 5.0 * self.theta_c_bucket as f64
    }

    /// Dense row index into a Q-table.
    pub fn index(&self) -> usize {
        ((self.w_idx as usize * V_STEPS + self.v_idx as usize) * THETA_L_STEPS
            + self.theta_l_bucket as usize)
            * THETA_C_STEPS
            + self.theta_c_bucket as usize
    }

    pub fn from_index(i: usize) -> Self {
        debug_assert!(i < N_STATES);
        let tc = i % THETA_C_STEPS;
        let i = i / THETA_C_STEPS;
        let tl = i % THETA_L_STEPS;
        let i = i / THETA_L_STEPS;
        Self {
            w_idx: (i / V_STEPS) as u8,
            v_idx: (i % V_STEPS) as u8,
            theta_l_bucket: tl as u8,
            theta_c_bucket: tc as u8,
        }
    }
}

impl fmt::Display for RlState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(W_L={:.2}, W_C={:.2}, v={:.3}, theta_L={}, theta_C={})",
            self.w_l(),
            self.w_c(),
            self.speed_duty().value(),
            self.theta_l(),
            self.theta_c()
        )
    }
}

/// Step direction on one grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Delta {
    Up,
    Down,
    Hold,
}

impl Delta {
    fn apply(self, idx: u8, len: usize) -> Option<u8> {
        match self {
            Delta::Up => ((idx as usize) + 1 < len).then_some(idx + 1),
            Delta::Down => idx.checked_sub(1),
            Delta::Hold => Some(idx),
        }
    }

    fn sign(self) -> f64 {
        match self {
            Delta::Up => 1.0,
            Delta::Down => -1.0,
            Delta::Hold => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RlAction {
    pub dw: Delta,
    pub dv: Delta,
}

/// Row-major over weight change (up, down, hold) then speed change (up, down, hold).
pub const ACTIONS: [RlAction; N_ACTIONS] = {
    use Delta::*;
    [
        RlAction { dw: Up, dv: Up },
        RlAction { dw: Up, dv: Down },
        RlAction { dw: Up, dv: Hold },
        RlAction { dw: Down, dv: Up },
        RlAction { dw: Down, dv: Down },
        RlAction { dw: Down, dv: Hold },
        RlAction { dw: Hold, dv: Up },
        RlAction { dw: Hold, dv: Down },
        RlAction { dw: Hold, dv: Hold },
    ]
};

impl RlAction {
    pub fn index(self) -> usize {
        ACTIONS.iter().position(|a| *a == self).expect("every action is listed")
    }

    /// Change in `W_L`.
    pub fn dw(self) -> f64 {
        self.dw.sign() * W_STEP
    }

    /// Change in speed duty.
    pub fn dv(self) -> f64 {
        self.dv.sign() * V_STEP
    }
}

impl fmt::Display for RlAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(dW_L={:+.2}, dv={:+.3})", self.dw(), self.dv())
    }
}

/// Moves the weight and speed indices; the steering buckets are left for the
/// next observation to overwrite.
pub fn transition(s: RlState, a: RlAction) -> Result<RlState> {
    let w = a.dw.apply(s.w_idx, W_STEPS);
    let v = a.dv.apply(s.v_idx, V_STEPS);
    match (w, v) {
        (Some(w_idx), Some(v_idx)) => Ok(RlState { w_idx, v_idx, ..s }),
        _ => Err(Error::InvalidAction {
            state: s.to_string(),
            action: a.to_string(),
        }),
    }
}

pub fn is_valid(s: RlState, a: RlAction) -> bool {
    a.dw.apply(s.w_idx, W_STEPS).is_some() && a.dv.apply(s.v_idx, V_STEPS).is_some()
}

/// Action indices that stay on the grid, in table order.
pub fn valid_action_indices(s: RlState) -> impl Iterator<Item = usize> {
    (0..N_ACTIONS).filter(move |&i| is_valid(s, ACTIONS[i]))
}

pub fn enumerate_actions(s: RlState) -> Vec<RlAction> {
    valid_action_indices(s).map(|i| ACTIONS[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinalities() {
        assert_eq!(N_STATES, 28_413);
        assert_eq!(ACTIONS.len(), 9);
        for i in [0, 1, 1234, N_STATES - 1] {
            assert_eq!(RlState::from_index(i).index(), i);
        }
    }

    #[test]
    fn theta_buckets() {
        let b = |v| theta_l_bucket(SteerDuty::new(v).unwrap());
        assert_eq!(b(10.0), 0);
        assert_eq!(b(20.0), 10);
        assert_eq!(b(16.2), 6);
        assert_eq!(b(16.5), 6);
        assert_eq!(b(13.5), 4);
        assert_eq!(b(13.49), 3);
        assert_eq!(b(15.0), 5);
        let c = |v| theta_c_bucket(SteerDuty::new(v).unwrap());
        assert_eq!((c(10.0), c(15.0), c(20.0)), (0, 1, 2));
    }

    #[test]
    fn boundary_masking() {
        let interior = RlState::new(10, 20, 5, 1).unwrap();
        assert_eq!(enumerate_actions(interior).len(), 9);
        let top_w = RlState::new(20, 20, 5, 1).unwrap();
        assert_eq!(enumerate_actions(top_w).len(), 6);
        let corner = RlState::new(0, 0, 5, 1).unwrap();
        assert_eq!(enumerate_actions(corner).len(), 4);
        assert!(matches!(
            transition(top_w, ACTIONS[0]),
            Err(Error::InvalidAction { .. })
        ));
    }

    #[test]
    fn state_display_uses_physical_units() {
        let s = RlState::new(18, 10, 6, 1).unwrap();
        assert_eq!(s.to_string(), "(W_L=0.90, W_C=0.10, v=15.590, theta_L=16, theta_C=15)");
    }
}
