//! Fog-device roster, latency pings and lowest-average selection.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How many of the latest pings enter a device's average.
pub const PING_WINDOW: usize = 3;

/// Roster entry as written in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FogSpec {
    pub id: String,
    pub base_latency_ms: f64,
    pub jitter_ms: f64,
}

pub fn default_roster() -> Vec<FogSpec> {
    vec![
        FogSpec {
            id: "fog-a".into(),
            base_latency_ms: 20.0,
            jitter_ms: 4.0,
        },
        FogSpec {
            id: "fog-b".into(),
            base_latency_ms: 25.0,
            jitter_ms: 10.0,
        },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct FogDevice {
    pub id: String,
    /// Seconds.
    pub base_latency: f64,
    /// Seconds.
    pub jitter_sd: f64,
    /// `(time, latency)` in seconds, oldest first.
    pub pings: Vec<(f64, f64)>,
}

impl FogDevice {
    pub fn new(id: impl Into<String>, base_latency: f64, jitter_sd: f64) -> Result<Self> {
        let id = id.into();
        if !(base_latency > 0.0) || !(jitter_sd >= 0.0) {
            return Err(Error::Config(format!(
                "fog device '{id}' needs base latency > 0 and jitter >= 0"
            )));
        }
        Ok(Self {
            id,
            base_latency,
            jitter_sd,
            pings: Vec::new(),
        })
    }

    pub fn from_spec(spec: &FogSpec) -> Result<Self> {
        Self::new(spec.id.clone(), spec.base_latency_ms / 1e3, spec.jitter_ms / 1e3)
    }

    /// Draws one simulated ping latency and records it.
    pub fn ping<R: Rng + ?Sized>(&mut self, now: f64, rng: &mut R) -> f64 {
        let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
        // keep pings physical; a reply never beats a tenth of the base
        let latency = (self.base_latency + self.jitter_sd * z).max(0.1 * self.base_latency);
        self.record(now, latency);
        latency
    }

    pub fn record(&mut self, now: f64, latency: f64) {
        self.pings.push((now, latency));
    }

    /// Mean of the latest pings, or `None` before the first one.
    pub fn recent_mean(&self) -> Option<f64> {
        if self.pings.is_empty() {
            return None;
        }
        let tail = &self.pings[self.pings.len().saturating_sub(PING_WINDOW)..];
        Some(tail.iter().map(|p| p.1).sum::<f64>() / tail.len() as f64)
    }
}

/// Index of the device with the lowest recent mean; the earliest registered wins ties.
pub fn select_device(devices: &[FogDevice]) -> Result<usize> {
    if devices.is_empty() {
        return Err(Error::Selection("no fog devices registered".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, d) in devices.iter().enumerate() {
        if let Some(m) = d.recent_mean() {
            if best.is_none_or(|(_, b)| m < b) {
                best = Some((i, m));
            }
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::Selection("no fog device has been pinged yet".into()))
}
