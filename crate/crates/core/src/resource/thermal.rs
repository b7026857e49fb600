//! First-order processor thermal model and the monitor's sample type.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::middleware::Strategy;

/// Onboard CPU fraction drawn by each strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadProfile {
    pub lec_only: f64,
    pub cv_only: f64,
    pub conventional: f64,
    pub fixed: f64,
    pub dynamic: f64,
    /// Load removed from the onboard processor while the RL actor is offloaded.
    pub rl_share: f64,
}

impl Default for LoadProfile {
    fn default() -> Self {
        Self {
            lec_only: 0.45,
            cv_only: 0.40,
            conventional: 0.70,
            fixed: 0.70,
            dynamic: 0.85,
            rl_share: 0.30,
        }
    }
}

impl LoadProfile {
    pub fn onboard(&self, strategy: Strategy) -> f64 {
        match strategy {
            Strategy::LecOnly => self.lec_only,
            Strategy::CvOnly => self.cv_only,
            Strategy::Conventional => self.conventional,
            Strategy::Fixed => self.fixed,
            Strategy::Dynamic => self.dynamic,
        }
    }

    /// Load with the RL actor running elsewhere; unchanged for strategies without RL.
    pub fn load(&self, strategy: Strategy, offloaded: bool) -> f64 {
        let base = self.onboard(strategy);
        if offloaded && strategy.uses_rl() {
            (base - self.rl_share).max(0.0)
        } else {
            base
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalParams {
    /// °C
    pub ambient: f64,
    /// °C/s per unit load.
    pub heat_gain: f64,
    /// 1/s
    pub cool_rate: f64,
    /// Sd of the per-second load fluctuation.
    pub load_noise_sd: f64,
    pub load_profile: LoadProfile,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            ambient: 25.0,
            heat_gain: 1.2,
            cool_rate: 0.02,
            load_noise_sd: 0.03,
            load_profile: LoadProfile::default(),
        }
    }
}

impl ThermalParams {
    pub fn validate(&self) -> Result<()> {
        let lp = &self.load_profile;
        let loads = [lp.lec_only, lp.cv_only, lp.conventional, lp.fixed, lp.dynamic, lp.rl_share];
        if self.heat_gain > 0.0
            && self.cool_rate > 0.0
            && self.load_noise_sd >= 0.0
            && loads.iter().all(|l| (0.0..=1.0).contains(l))
        {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid thermal parameters {self:?}")))
        }
    }

    /// Temperature the processor settles at under a constant `load`.
    pub fn steady_state(&self, load: f64) -> f64 {
        self.ambient + self.heat_gain * load / self.cool_rate
    }
}

/// One explicit Euler step of `dT/dt = heat_gain·load − cool_rate·(T − ambient)`.
pub fn thermal_step(t: f64, load: f64, p: &ThermalParams, dt: f64) -> f64 {
    debug_assert!(dt > 0.0);
    t + (p.heat_gain * load - p.cool_rate * (t - p.ambient)) * dt
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceSample {
    pub time: f64,
    pub temperature: f64,
    pub cpu_load: f64,
    pub offloaded: bool,
}
