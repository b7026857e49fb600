//! Simulated compute latencies of the pipeline actors.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where an offloadable actor runs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Placement {
    #[default]
    Onboard,
    Fog(String),
}

impl Placement {
    pub fn is_offloaded(&self) -> bool {
        matches!(self, Placement::Fog(_))
    }
}

/// Per-actor latencies in seconds, before contention and jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatencyModel {
    pub lec: f64,
    pub cv: f64,
    /// Slowdown of each controller when both share the processor.
    pub contention: f64,
    pub rl: f64,
    /// Label handshake and fan-out by the decision manager.
    pub dma: f64,
    pub actuator: f64,
    /// Log-space sd of the per-cycle load factor applied to onboard work.
    pub jitter_sigma: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            lec: 0.060,
            cv: 0.060,
            contention: 5.0 / 3.0,
            rl: 0.010,
            dma: 0.010,
            actuator: 0.010,
            jitter_sigma: 0.12,
        }
    }
}

impl LatencyModel {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lec, self.cv, self.rl, self.dma, self.actuator, self.jitter_sigma];
        if all.iter().all(|&x| x >= 0.0) && self.contention >= 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid latency model {self:?}")))
        }
    }

    /// Mean-one lognormal factor; one standard normal draw per call.
    pub fn draw_factor<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        let s = self.jitter_sigma;
        (s * z - 0.5 * s * s).exp()
    }

    /// Controller latencies for one cycle given which controllers run.
    pub fn controller_latencies(&self, lec: bool, cv: bool, factor: f64) -> (f64, f64) {
        let c = if lec && cv { self.contention } else { 1.0 };
        (self.lec * c * factor, self.cv * c * factor)
    }

    /// Expected cycle time for a configuration, ignoring jitter.
    pub fn nominal_cycle(&self, lec: bool, cv: bool, rl: bool, fog_rtt: f64) -> f64 {
        let (l, c) = self.controller_latencies(lec, cv, 1.0);
        let ctrl = match (lec, cv) {
            (true, true) => l.max(c),
            (true, false) => l,
            (false, true) => c,
            (false, false) => 0.0,
        };
        let rl = if rl { self.rl + fog_rtt } else { 0.0 };
        self.dma + ctrl + rl + self.actuator
    }
}
