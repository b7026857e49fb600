//! Ground-truth lane deviation classes and the out-of-track tally.

use serde::{Deserialize, Serialize};

use super::track::Track;
use super::vehicle::VehicleState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deviation {
    Center,
    OffCenter,
    Out,
}

impl Deviation {
    pub fn as_str(self) -> &'static str {
        match self {
            Deviation::Center => "center",
            Deviation::OffCenter => "off_center",
            Deviation::Out => "out",
        }
    }
}

/// `|offset| < center` is centered, `< out` is off-center, otherwise out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationThresholds {
    pub center: f64,
    pub out: f64,
}

impl DeviationThresholds {
    /// `lane_width / 6` and `lane_width / 2`.
    pub fn for_lane(lane_width: f64) -> Self {
        Self {
            center: lane_width / 6.0,
            out: lane_width / 2.0,
        }
    }

    pub fn validate(&self, lane_width: f64) -> Result<()> {
        if 0.0 < self.center && self.center < self.out && self.out <= lane_width {
            Ok(())
        } else {
            Err(Error::contract(format!(
                "deviation thresholds need 0 < center < out <= lane_width, got {self:?}"
            )))
        }
    }

    pub fn classify(&self, lateral_offset: f64) -> Deviation {
        let a = lateral_offset.abs();
        if a < self.center {
            Deviation::Center
        } else if a < self.out {
            Deviation::OffCenter
        } else {
            Deviation::Out
        }
    }
}

/// Counts out-of-track events and, in evaluation mode, puts the car back on
/// the centerline where it left, keeping its speed and clock.
#[derive(Debug, Clone, Default)]
pub struct DeviationMonitor {
    pub out_events: u64,
    pub reset_on_out: bool,
}

impl DeviationMonitor {
    pub fn new(reset_on_out: bool) -> Self {
        Self {
            out_events: 0,
            reset_on_out,
        }
    }

    pub fn observe(
        &mut self,
        state: &mut VehicleState,
        track: &Track,
        thresholds: &DeviationThresholds,
    ) -> Deviation {
        let class = thresholds.classify(state.lateral_offset);
        if class == Deviation::Out {
            self.out_events += 1;
            if self.reset_on_out {
                reset_to_centerline(state, track);
            }
        }
        class
    }
}

pub fn reset_to_centerline(state: &mut VehicleState, track: &Track) {
    let mut fresh = VehicleState::on_centerline(track, state.arc_position, state.speed);
    fresh.time = state.time;
    *state = fresh;
}

/// Free-function classification with the out-of-track side effects.
pub fn deviation_class(
    state: &mut VehicleState,
    track: &Track,
    thresholds: &DeviationThresholds,
    monitor: &mut DeviationMonitor,
) -> Deviation {
    monitor.observe(state, track, thresholds)
}
