//! Kinematic bicycle model driven by the two duty cycles.

use serde::{Deserialize, Serialize};

use super::calibration::{Calibration, SpeedDuty, SteerDuty, SPEED_MAX};
use super::track::{wrap_angle, Track};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Clockwise from `+x`, wrapped to `(-pi, pi]`.
    pub heading: f64,
    /// m/s, within `[0, 1]`.
    pub speed: f64,
    pub arc_position: f64,
    /// Signed, left of travel positive.
    pub lateral_offset: f64,
    pub time: f64,
}

impl VehicleState {
    /// Places the car on the centerline at `s`, aligned with the track.
    pub fn on_centerline(track: &Track, s: f64, speed: f64) -> Self {
        Self::at_offset(track, s, 0.0, speed)
    }

    pub fn at_offset(track: &Track, s: f64, offset: f64, speed: f64) -> Self {
        let s = track.wrap_s(s);
        let pose = track.pose_at(s);
        let (x, y) = track.point_at(s, offset);
        Self {
            x,
            y,
            heading: wrap_angle(pose.heading),
            speed: speed.clamp(0.0, SPEED_MAX),
            arc_position: s,
            lateral_offset: offset,
            time: 0.0,
        }
    }

    /// Heading relative to the centerline tangent at the current projection,
    /// positive when the track runs to the right of the vehicle's nose.
    pub fn heading_error(&self, track: &Track) -> f64 {
        self.preview_heading_error(track, 0.0)
    }

    /// Like [`VehicleState::heading_error`] but against the tangent
    /// `preview` meters further along the centerline.
    pub fn preview_heading_error(&self, track: &Track, preview: f64) -> f64 {
        let tangent = track.pose_at(self.arc_position + preview).heading;
        wrap_angle(tangent - self.heading)
    }
}

/// Bicycle geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleModel {
    pub wheelbase: f64,
}

impl Default for VehicleModel {
    fn default() -> Self {
        Self { wheelbase: 0.33 }
    }
}

impl VehicleModel {
    /// Advances the car by `dt` seconds holding both duties constant.
    ///
    /// Heading integrates `v / L * tan(delta)`; the position follows the exact
    /// circular arc for that constant yaw rate.
    pub fn step(
        &self,
        track: &Track,
        state: &VehicleState,
        steer: SteerDuty,
        speed: SpeedDuty,
        dt: f64,
        cal: &Calibration,
    ) -> VehicleState {
        debug_assert!(dt > 0.0);
        let v = cal.duty_to_speed(speed).clamp(0.0, SPEED_MAX);
        let delta = cal.duty_to_steering_deg(steer).to_radians();
        let mut next = *state;
        next.speed = v;
        next.time = state.time + dt;
        if v == 0.0 {
            return next;
        }
        let yaw_rate = v / self.wheelbase * delta.tan();
        let h0 = state.heading;
        let h1 = h0 + yaw_rate * dt;
        if yaw_rate.abs() < 1e-12 {
            next.x += v * dt * h0.cos();
            next.y += v * dt * h0.sin();
        } else {
            let r = v / yaw_rate;
            next.x += r * (h1.sin() - h0.sin());
            next.y -= r * (h1.cos() - h0.cos());
        }
        next.heading = wrap_angle(h1);
        let proj = track.project(next.x, next.y, Some(state.arc_position));
        next.arc_position = proj.arc_position;
        next.lateral_offset = proj.lateral_offset;
        next
    }

    /// Yaw change over `dt` for the given commands, without moving anything.
    pub fn heading_delta(&self, steer: SteerDuty, speed: SpeedDuty, dt: f64, cal: &Calibration) -> f64 {
        let v = cal.duty_to_speed(speed);
        v / self.wheelbase * cal.duty_to_steering_deg(steer).to_radians().tan() * dt
    }
}

/// Free-function form of [`VehicleModel::step`].
pub fn step_vehicle(
    model: &VehicleModel,
    track: &Track,
    state: &VehicleState,
    steer: SteerDuty,
    speed: SpeedDuty,
    dt: f64,
    cal: &Calibration,
) -> VehicleState {
    model.step(track, state, steer, speed, dt, cal)
}
