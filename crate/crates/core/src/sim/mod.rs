//! Vehicle, track and sensing simulation.

pub mod calibration;
pub mod clock;
pub mod deviation;
pub mod odometry;
pub mod sensor;
pub mod track;
pub mod vehicle;

pub use calibration::{Calibration, SpeedDuty, SpeedProfile, SteerDuty};
pub use clock::SimClock;
pub use deviation::{deviation_class, reset_to_centerline, Deviation, DeviationMonitor, DeviationThresholds};
pub use odometry::{dead_reckon, opto_speed, OptoParams, OptoReject};
pub use track::{Pose, Projection, Segment, SegmentKind, Track, TrackSpec, Zone};
pub use vehicle::{step_vehicle, VehicleModel, VehicleState};
pub use sensor::{
    geometric_view, render, sense, CameraParams, LaneView, Raster, SenseMode, SensorFrame,
    SensorSuite,
};
