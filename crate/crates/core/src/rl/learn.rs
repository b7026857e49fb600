//! Reward, Bellman update and action selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::qtable::QTable;
use super::space::{valid_action_indices, RlAction, RlState, ACTIONS};
use crate::error::{Error, Result};
use crate::sim::Deviation;

/// Deviation penalty factor `t_hat`.
pub fn penalty(dev: Deviation) -> f64 {
    match dev {
        Deviation::Center => 0.0,
        Deviation::OffCenter => 0.5,
        Deviation::Out => 10.0,
    }
}

/// `v * (1 - t_hat)`.
pub fn reward(v: f64, dev: Deviation) -> f64 {
    debug_assert!(v >= 0.0);
    v * (1.0 - penalty(dev))
}

/// `q + alpha * (r + gamma * max_next - q)`, evaluated as a convex combination
/// so that `alpha = 1` yields the target exactly.
pub fn bellman(q: f64, r: f64, max_next: f64, alpha: f64, gamma: f64) -> f64 {
    (1.0 - alpha) * q + alpha * (r + gamma * max_next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RlHyperparams {
    pub alpha: f64,
    pub gamma: f64,
    pub steps_per_run: usize,
    pub runs: usize,
    pub eps0: f64,
    /// Per-episode multiplier on epsilon.
    pub eps_decay: f64,
    /// Per-episode multiplier on alpha.
    pub alpha_decay: f64,
    /// Starting `W_L` grid index (10 is 0.5).
    pub start_w_idx: u8,
    /// Starting speed grid index.
    pub start_v_idx: u8,
}

impl Default for RlHyperparams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.4,
            steps_per_run: 1000,
            runs: 5,
            eps0: 0.5,
            eps_decay: 0.7,
            alpha_decay: 0.9,
            start_w_idx: 10,
            start_v_idx: 20,
        }
    }
}

impl RlHyperparams {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if unit.contains(&self.alpha)
            && unit.contains(&self.gamma)
            && unit.contains(&self.eps0)
            && unit.contains(&self.eps_decay)
            && unit.contains(&self.alpha_decay)
            && (self.start_w_idx as usize) < super::space::W_STEPS
            && (self.start_v_idx as usize) < super::space::V_STEPS
        {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid RL hyperparameters {self:?}")))
        }
    }
}

/// Applies one Bellman backup to `Q(s, a)` and returns the new value. The
/// maximum over `s'` only considers actions that stay on the grid.
pub fn q_update(
    q: &mut QTable,
    s: RlState,
    a: RlAction,
    r: f64,
    s_next: RlState,
    alpha: f64,
    gamma: f64,
) -> f64 {
    let max_next = q.max_value(s_next);
    let i = a.index();
    let new = bellman(q.value(s, i), r, max_next, alpha, gamma);
    q.set_value(s, i, new);
    q.record_visit(s, i);
    new
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    Explore { epsilon: f64 },
    Exploit,
}

/// Greedy over valid actions, lowest index winning ties.
pub fn greedy(q: &QTable, s: RlState) -> usize {
    let mut best = None;
    for i in valid_action_indices(s) {
        let v = q.value(s, i);
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((i, v));
        }
    }
    best.expect("every state has a valid hold action").0
}

pub fn select_action<R: Rng + ?Sized>(q: &QTable, s: RlState, policy: Policy, rng: &mut R) -> RlAction {
    let i = match policy {
        Policy::Exploit => greedy(q, s),
        Policy::Explore { epsilon } => {
            let u: f64 = rng.random();
            if u < epsilon {
                let valid: Vec<usize> = valid_action_indices(s).collect();
                valid[rng.random_range(0..valid.len())]
            } else {
                greedy(q, s)
            }
        }
    };
    ACTIONS[i]
}
