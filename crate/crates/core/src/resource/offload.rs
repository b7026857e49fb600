//! Offload state machine and cycle-time speed saturation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::middleware::Placement;
use crate::sim::{Calibration, SpeedDuty};

pub const DEFAULT_THRESHOLD: f64 = 70.0;
pub const DEFAULT_HYSTERESIS: f64 = 2.0;
/// Meters the car may travel during one cycle and still correct in time.
pub const SAFE_DISTANCE: f64 = 0.09;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OffloadState {
    pub placement: Placement,
    /// Simulated time of the last transition.
    pub since: f64,
}

impl OffloadState {
    pub fn is_offloaded(&self) -> bool {
        self.placement.is_offloaded()
    }
}

/// Result of one offload decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub state: OffloadState,
    /// Set when an offload was due but no device could take it.
    pub warning: Option<String>,
}

/// Moves to `selected` when the forecast exceeds `threshold`, and back
/// onboard once it falls below `threshold - hysteresis`.
pub fn offload_decide(
    forecast: f64,
    state: &OffloadState,
    threshold: f64,
    hysteresis: f64,
    selected: Option<&str>,
    now: f64,
) -> Decision {
    let keep = Decision {
        state: state.clone(),
        warning: None,
    };
    match &state.placement {
        Placement::Onboard if forecast > threshold => match selected {
            Some(id) => Decision {
                state: OffloadState {
                    placement: Placement::Fog(id.to_string()),
                    since: now,
                },
                warning: None,
            },
            None => Decision {
                warning: Some(format!("forecast {forecast:.2} °C above {threshold} °C but no fog device available")),
                ..keep
            },
        },
        Placement::Fog(_) if forecast < threshold - hysteresis => Decision {
            state: OffloadState {
                placement: Placement::Onboard,
                since: now,
            },
            warning: None,
        },
        _ => keep,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimit {
    /// m/s
    pub v_max: f64,
    pub duty: SpeedDuty,
}

/// The fastest speed at which a cycle of `t_r` seconds covers at most `d_s` meters.
pub fn saturate_speed(d_s: f64, t_r: f64, cal: &Calibration) -> Result<SpeedLimit> {
    if !(t_r > 0.0) || !(d_s >= 0.0) {
        return Err(Error::contract(format!("speed saturation needs t_r > 0 and d_s >= 0, got {t_r}, {d_s}")));
    }
    let v_max = d_s / t_r;
    Ok(SpeedLimit {
        v_max,
        duty: cal.speed_to_duty(v_max),
    })
}
