//! PWM duty-cycle actuation interface and its physical calibration.
//!
//! The car is driven exclusively by two duty cycles: steering in
//! `[10, 20] %` and throttle in `[15.58, 15.70] %`. Steering maps affinely
//! to `[-30, +30]` degrees (positive turns right). Throttle maps
//! piecewise-linearly to `[0, 1] m/s` under one of two named profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STEER_DUTY_MIN: f64 = 10.0;
pub const STEER_DUTY_MAX: f64 = 20.0;
pub const STEER_DUTY_CENTER: f64 = 15.0;
pub const STEER_DEG_MAX: f64 = 30.0;

pub const SPEED_DUTY_MIN: f64 = 15.58;
pub const SPEED_DUTY_MAX: f64 = 15.70;
/// Upper end of the throttle band the learned strategies operate in.
pub const SPEED_DUTY_RL_MAX: f64 = 15.62;
pub const SPEED_RL_MAX: f64 = 0.65;
pub const SPEED_MAX: f64 = 1.0;

/// Steering PWM duty cycle in percent.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SteerDuty(f64);

impl SteerDuty {
    pub const CENTER: SteerDuty = SteerDuty(STEER_DUTY_CENTER);
    pub const FULL_RIGHT: SteerDuty = SteerDuty(STEER_DUTY_MAX);
    pub const FULL_LEFT: SteerDuty = SteerDuty(STEER_DUTY_MIN);

    pub fn new(value: f64) -> Result<Self> {
        check_range("steer duty", value, STEER_DUTY_MIN, STEER_DUTY_MAX)?;
        Ok(Self(value))
    }

    /// Saturates into the valid band. NaN collapses to center.
    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            return Self::CENTER;
        }
        Self(value.clamp(STEER_DUTY_MIN, STEER_DUTY_MAX))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Throttle PWM duty cycle in percent.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SpeedDuty(f64);

impl SpeedDuty {
    pub const STOP: SpeedDuty = SpeedDuty(SPEED_DUTY_MIN);

    pub fn new(value: f64) -> Result<Self> {
        check_range("speed duty", value, SPEED_DUTY_MIN, SPEED_DUTY_MAX)?;
        Ok(Self(value))
    }

    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            return Self::STOP;
        }
        Self(value.clamp(SPEED_DUTY_MIN, SPEED_DUTY_MAX))
    }

    /// Saturates into `[lo, hi]` after intersecting with the valid band.
    pub fn clamped_to(value: f64, lo: f64, hi: f64) -> Self {
        Self::clamped(value.clamp(lo.max(SPEED_DUTY_MIN), hi.min(SPEED_DUTY_MAX)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    // small slack so grid arithmetic (15.58 + 0.001 * k) never trips the check
    const SLACK: f64 = 1e-9;
    if value.is_finite() && value >= lo - SLACK && value <= hi + SLACK {
        Ok(())
    } else {
        Err(Error::Range { what, value, lo, hi })
    }
}

/// Named throttle calibration profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedProfile {
    /// `15.58 % -> 0 m/s`, `15.70 % -> 1 m/s`, one affine piece.
    LinearFull,
    /// `15.58 % -> 0`, `15.62 % -> 0.65 m/s`, then affine up to `15.70 % -> 1 m/s`.
    #[default]
    RlRange,
}

impl SpeedProfile {
    fn knots(self) -> &'static [(f64, f64)] {
        match self {
            SpeedProfile::LinearFull => &[(SPEED_DUTY_MIN, 0.0), (SPEED_DUTY_MAX, SPEED_MAX)],
            SpeedProfile::RlRange => &[
                (SPEED_DUTY_MIN, 0.0),
                (SPEED_DUTY_RL_MAX, SPEED_RL_MAX),
                (SPEED_DUTY_MAX, SPEED_MAX),
            ],
        }
    }
}

impl std::str::FromStr for SpeedProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear-full" => Ok(SpeedProfile::LinearFull),
            "rl-range" => Ok(SpeedProfile::RlRange),
            other => Err(Error::Config(format!("unknown speed profile '{other}'"))),
        }
    }
}

/// Duty-cycle to physical-quantity maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Calibration {
    /// Degrees of steering per percent of duty away from center.
    pub steer_deg_per_duty: f64,
    pub speed_profile: SpeedProfile,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            steer_deg_per_duty: STEER_DEG_MAX / (STEER_DUTY_MAX - STEER_DUTY_CENTER),
            speed_profile: SpeedProfile::RlRange,
        }
    }
}

impl Calibration {
    pub fn with_profile(profile: SpeedProfile) -> Self {
        Self {
            speed_profile: profile,
            ..Self::default()
        }
    }

    /// Steering angle in degrees; positive steers right.
    pub fn duty_to_steering_deg(&self, duty: SteerDuty) -> f64 {
        (duty.value() - STEER_DUTY_CENTER) * self.steer_deg_per_duty
    }

    /// Inverse of [`Calibration::duty_to_steering_deg`], saturated to the duty band.
    pub fn steering_deg_to_duty(&self, degrees: f64) -> SteerDuty {
        SteerDuty::clamped(STEER_DUTY_CENTER + degrees / self.steer_deg_per_duty)
    }

    pub fn duty_to_speed(&self, duty: SpeedDuty) -> f64 {
        let knots = self.speed_profile.knots();
        let d = duty.value();
        for pair in knots.windows(2) {
            let ((d0, v0), (d1, v1)) = (pair[0], pair[1]);
            if d <= d1 {
                return (v0 + (d - d0) * (v1 - v0) / (d1 - d0)).max(0.0);
            }
        }
        knots[knots.len() - 1].1
    }

    /// Smallest duty whose speed reaches `speed`, clamped to the valid band.
    pub fn speed_to_duty(&self, speed: f64) -> SpeedDuty {
        let knots = self.speed_profile.knots();
        if !(speed > 0.0) {
            return SpeedDuty::STOP;
        }
        for pair in knots.windows(2) {
            let ((d0, v0), (d1, v1)) = (pair[0], pair[1]);
            if speed <= v1 {
                return SpeedDuty::clamped(d0 + (speed - v0) * (d1 - d0) / (v1 - v0));
            }
        }
        SpeedDuty::clamped(SPEED_DUTY_MAX)
    }
}

/// Free-function form of [`Calibration::duty_to_steering_deg`].
pub fn duty_to_steering_deg(duty: SteerDuty, cal: &Calibration) -> f64 {
    cal.duty_to_steering_deg(duty)
}

/// Free-function form of [`Calibration::duty_to_speed`].
pub fn duty_to_speed(duty: SpeedDuty, cal: &Calibration) -> f64 {
    cal.duty_to_speed(duty)
}
