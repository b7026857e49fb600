//! The decision-manager control cycle over message-passing actors on a
//! deterministic simulated clock.
//!
//! Per cycle the decision manager (DMA) sends a data request to the buffer;
//! the buffer answers with the current label and fans the matching frame out
//! to the subscribed controllers, which reply after their compute latency.
//! Once every reply carries the requested label the DMA asks the RL actor for
//! weights (dynamic strategy only), blends, and hands the command to the
//! actuator. The next cycle starts as soon as the actuator has applied it.
//! Meanwhile the camera publishes into the buffer at its own fixed rate and the
//! vehicle keeps moving under the last applied command.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::OneSlotBuffer;
use super::queue::EventQueue;
use super::timing::{LatencyModel, Placement};
use crate::controllers::{
    cv_classify, ld_pipeline, CvOutput, LdParams, LecOutput, LecSurrogate, LecSurrogateParams,
    LecTruth, SegmentLabel,
};
use crate::error::{Error, Result};
use crate::rl::{theta_c_bucket, theta_l_bucket, Observation};
use crate::simplex::{
    blend, conventional_simplex, fixed_strategy, EnsembleWeights, FixedStrategyParams,
};
use crate::sim::{
    sense, OptoParams, Calibration, CameraParams, Deviation,
    DeviationMonitor, DeviationThresholds, SenseMode, SegmentKind, SensorFrame, SensorSuite, SpeedDuty,
    SteerDuty, Track, VehicleModel, VehicleState, Zone,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    LecOnly,
    CvOnly,
    Conventional,
    Fixed,
    Dynamic,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::LecOnly,
        Strategy::CvOnly,
        Strategy::Conventional,
        Strategy::Fixed,
        Strategy::Dynamic,
    ];

    pub fn uses_lec(self) -> bool {
        self != Strategy::CvOnly
    }

    pub fn uses_cv(self) -> bool {
        self != Strategy::LecOnly
    }

    pub fn uses_rl(self) -> bool {
        self == Strategy::Dynamic
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::LecOnly => "lec-only",
            Strategy::CvOnly => "cv-only",
            Strategy::Conventional => "conventional",
            Strategy::Fixed => "fixed",
            Strategy::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy '{s}'")))
    }
}

/// Baseline switching predicate: hand control to the classical controller
/// when it reports a curve or departure while the car is faster than this.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConventionalParams {
    pub speed_threshold: f64,
}

impl Default for ConventionalParams {
    fn default() -> Self {
        Self {
            speed_threshold: 0.35,
        }
    }
}

/// Injected faults for exercising the label-matching path.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaultModel {
    /// Probability that the LEC replies with a stale label.
    pub stale_label_prob: f64,
}

/// Lane-visibility flips that grow with ground speed above an onset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionBlur {
    pub onset_speed: f64,
    /// Flip probability per m/s above the onset.
    pub slope: f64,
    pub max_prob: f64,
}

impl Default for MotionBlur {
    fn default() -> Self {
        Self {
            onset_speed: 0.45,
            slope: 1.0,
            max_prob: 0.4,
        }
    }
}

impl MotionBlur {
    pub fn none() -> Self {
        Self {
            slope: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.onset_speed < 0.0 || self.slope < 0.0 || !(0.0..1.0).contains(&self.max_prob) {
            return Err(Error::Config(format!("invalid motion blur {self:?}")));
        }
        Ok(())
    }

    /// Flip probability added at ground speed `v`.
    pub fn prob_at(&self, v: f64) -> f64 {
        (self.slope * (v - self.onset_speed).max(0.0)).min(self.max_prob)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub calibration: Calibration,
    pub vehicle: VehicleModel,
    pub camera: CameraParams,
    pub opto: OptoParams,
    pub sense_mode: SenseMode,
    /// Per-flag flip probability of the lane-visibility sensor.
    pub sensor_noise: f64,
    /// Extra flip probability from motion blur.
    pub blur: MotionBlur,
    pub lec: LecSurrogateParams,
    pub ld: Option<LdParams>,
    /// Defaults to `lane_width / 6` and `lane_width / 2`.
    pub thresholds: Option<DeviationThresholds>,
    pub latency: LatencyModel,
    pub fixed: FixedStrategyParams,
    pub conventional: ConventionalParams,
    pub faults: FaultModel,
    /// Camera publication rate, Hz.
    pub camera_rate: f64,
    /// Longest vehicle integration step, seconds.
    pub max_substep: f64,
    /// Put the car back on the centerline after a departure.
    pub reset_on_out: bool,
    /// Halt on a STOP signal instead of logging it and driving on.
    pub halt_on_stop: bool,
    /// Distance before an arc that counts as approaching a curve, meters.
    pub zone_approach: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            calibration: Calibration::default(),
            vehicle: VehicleModel::default(),
            camera: CameraParams::default(),
            opto: OptoParams::default(),
            sense_mode: SenseMode::Geometric,
            sensor_noise: 0.0,
            blur: MotionBlur::default(),
            lec: LecSurrogateParams::default(),
            ld: None,
            thresholds: None,
            latency: LatencyModel::default(),
            fixed: FixedStrategyParams::default(),
            conventional: ConventionalParams::default(),
            faults: FaultModel::default(),
            camera_rate: 30.0,
            max_substep: 0.02,
            reset_on_out: true,
            halt_on_stop: false,
            zone_approach: 0.3,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self, track: &Track) -> Result<()> {
        self.camera.validate()?;
        self.lec.validate()?;
        self.latency.validate()?;
        self.fixed.validate()?;
        self.thresholds(track).validate(track.lane_width())?;
        if !(0.0..1.0).contains(&self.sensor_noise) {
            return Err(Error::Config(format!("sensor_noise {} not in [0, 1)", self.sensor_noise)));
        }
        self.blur.validate()?;
        if !(self.camera_rate > 0.0 && self.max_substep > 0.0) {
            return Err(Error::Config("camera_rate and max_substep must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.faults.stale_label_prob) {
            return Err(Error::Config("stale_label_prob must be a probability".into()));
        }
        Ok(())
    }

    pub fn thresholds(&self, track: &Track) -> DeviationThresholds {
        self.thresholds
            .unwrap_or_else(|| DeviationThresholds::for_lane(track.lane_width()))
    }
}

/// What the decision manager hands the RL actor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionInput {
    pub label: u64,
    pub theta_l: Option<SteerDuty>,
    pub theta_c: Option<SteerDuty>,
    pub segment: Option<SegmentLabel>,
    pub observation: Observation,
}

/// One completed control cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: u64,
    pub start: f64,
    pub label: u64,
    pub theta_l: Option<f64>,
    pub theta_c: Option<f64>,
    pub segment: Option<SegmentLabel>,
    pub w_l: f64,
    pub v_set: f64,
    pub theta_applied: f64,
    pub t_r: f64,
    pub stopped: bool,
    pub stop_signal: bool,
    pub fault: bool,
    pub rerequested: bool,
    /// Worst ground-truth deviation seen while the cycle ran.
    pub deviation: Deviation,
    /// Ground-truth departures counted during the cycle.
    pub out_events: u32,
    pub zone: Zone,
    pub segment_kind: SegmentKind,
    /// Simulated time at which the command was applied.
    pub end: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub arc_position: f64,
    pub lateral_offset: f64,
    pub speed: f64,
    pub offloaded: bool,
}

#[derive(Debug, Clone)]
enum Actor {
    Camera,
    Buffer,
    Lec,
    Cv,
    Rl,
    Dma,
    Actuator,
}

#[derive(Debug, Clone)]
enum Message {
    /// Camera self-timer.
    Tick,
    /// DMA asks the buffer for the current label and frame fan-out.
    DataRequest,
    LabelReply { label: u64 },
    Compute { frame: Box<SensorFrame> },
    LecReply { label: u64, out: LecOutput },
    CvReply { label: u64, out: CvOutput },
    RlReply { label: u64, w_l: f64, v_set: SpeedDuty },
    Actuate { steer: SteerDuty, speed: SpeedDuty },
    Applied,
}

#[derive(Debug, Clone)]
struct InFlight {
    t0: f64,
    factor: f64,
    label: Option<u64>,
    attempts: u8,
    lec: Option<(u64, LecOutput)>,
    cv: Option<(u64, CvOutput)>,
    weights: EnsembleWeights,
    v_set: SpeedDuty,
    theta_applied: SteerDuty,
    stop_signal: bool,
    fault: bool,
    done: bool,
    awaiting_decision: bool,
}

/// Vehicle, track and ground-truth bookkeeping.
#[derive(Debug, Clone)]
struct World {
    state: VehicleState,
    steer: SteerDuty,
    speed: SpeedDuty,
    monitor: DeviationMonitor,
    worst: Deviation,
    cycle_outs: u32,
    distance: f64,
}

fn severity(d: Deviation) -> u8 {
    match d {
        Deviation::Center => 0,
        Deviation::OffCenter => 1,
        Deviation::Out => 2,
    }
}

/// Independent random streams, so enabling one noise source never shifts another.
#[derive(Debug, Clone)]
struct Streams {
    sensor: ChaCha8Rng,
    lec: ChaCha8Rng,
    timing: ChaCha8Rng,
    fault: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let mk = |k: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(k);
            r
        };
        Self {
            sensor: mk(1),
            lec: mk(2),
            timing: mk(3),
            fault: mk(4),
        }
    }
}

pub enum CyclePhase {
    /// The RL actor must answer via [`Pipeline::finish_cycle`].
    NeedDecision(DecisionInput),
    Done(CycleRecord),
}

pub struct Pipeline {
    cfg: PipelineConfig,
    track: Track,
    strategy: Strategy,
    thresholds: DeviationThresholds,
    world: World,
    now: f64,
    queue: EventQueue<(Actor, Message)>,
    buffer: OneSlotBuffer,
    sensors: SensorSuite,
    lec: LecSurrogate,
    streams: Streams,
    setpoint: SpeedDuty,
    speed_cap: Option<SpeedDuty>,
    fixed_v: SpeedDuty,
    rl_placement: Placement,
    fog_rtt: f64,
    inflight: Option<InFlight>,
    cycle: u64,
    stopped: bool,
    stop_events: u64,
    recent_tr: VecDeque<f64>,
}

impl Pipeline {
    /// Car centered at `start_s`, commanded straight at `setpoint`.
    pub fn new(
        cfg: PipelineConfig,
        track: Track,
        strategy: Strategy,
        seed: u64,
        start_s: f64,
        setpoint: SpeedDuty,
    ) -> Result<Self> {
        cfg.validate(&track)?;
        let thresholds = cfg.thresholds(&track);
        let v = cfg.calibration.duty_to_speed(setpoint);
        let state = VehicleState::on_centerline(&track, start_s, v);
        let sensors = SensorSuite::new(cfg.camera, cfg.opto, cfg.sense_mode, cfg.sensor_noise);
        let mut p = Self {
            lec: LecSurrogate::new(cfg.lec),
            world: World {
                state,
                steer: SteerDuty::CENTER,
                speed: setpoint,
                monitor: DeviationMonitor::new(cfg.reset_on_out),
                worst: Deviation::Center,
                cycle_outs: 0,
                distance: 0.0,
            },
            cfg,
            track,
            strategy,
            thresholds,
            now: 0.0,
            queue: EventQueue::new(),
            buffer: OneSlotBuffer::new(),
            sensors,
            streams: Streams::new(seed),
            setpoint,
            speed_cap: None,
            fixed_v: setpoint,
            rl_placement: Placement::Onboard,
            fog_rtt: 0.0,
            inflight: None,
            cycle: 0,
            stopped: false,
            stop_events: 0,
            recent_tr: VecDeque::with_capacity(10),
        };
        p.queue.push(0.0, (Actor::Camera, Message::Tick));
        Ok(p)
    }

    pub fn track(&self) -> &Track {
        &self.track
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn state(&self) -> &VehicleState {
        &self.world.state
    }

    pub fn distance(&self) -> f64 {
        self.world.distance
    }

    pub fn out_events(&self) -> u64 {
        self.world.monitor.out_events
    }

    pub fn stop_events(&self) -> u64 {
        self.stop_events
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    pub fn cycles(&self) -> u64 {
        self.cycle
    }

    pub fn setpoint(&self) -> SpeedDuty {
        self.setpoint
    }

    pub fn set_setpoint(&mut self, v: SpeedDuty) {
        self.setpoint = v;
    }

    /// Upper bound on the applied speed duty, e.g. from the resource manager.
    pub fn set_speed_cap(&mut self, cap: Option<SpeedDuty>) {
        self.speed_cap = cap;
    }

    pub fn speed_cap(&self) -> Option<SpeedDuty> {
        self.speed_cap
    }

    /// Moves the RL actor; `rtt` is added to every RL request while on a fog device.
    pub fn set_rl_placement(&mut self, placement: Placement, rtt: f64) {
        self.fog_rtt = if placement.is_offloaded() { rtt } else { 0.0 };
        self.rl_placement = placement;
    }

    pub fn rl_placement(&self) -> &Placement {
        &self.rl_placement
    }

    /// Mean cycle time over the last ten cycles.
    pub fn recent_mean_tr(&self) -> Option<f64> {
        if self.recent_tr.is_empty() {
            None
        } else {
            Some(self.recent_tr.iter().sum::<f64>() / self.recent_tr.len() as f64)
        }
    }

    /// Repositions the car for a new episode without touching the clock,
    /// abandoning a cycle that is waiting for a decision.
    pub fn reset_vehicle(&mut self, s: f64, v: SpeedDuty) {
        self.inflight = None;
        let mut st = VehicleState::on_centerline(&self.track, s, self.cfg.calibration.duty_to_speed(v));
        st.time = self.now;
        self.world.state = st;
        self.world.steer = SteerDuty::CENTER;
        self.world.speed = v;
        self.fixed_v = v;
        self.lec.reset();
        self.stopped = false;
    }

    fn zone(&self) -> Zone {
        self.track.zone_at(self.world.state.arc_position, self.cfg.zone_approach)
    }

    fn progress(&self, from: f64, to: f64) -> f64 {
        let d = to - from;
        if self.track.is_closed() {
            let l = self.track.length();
            d - l * (d / l).round()
        } else {
            d
        }
    }

    /// Integrates the vehicle under the current command up to `t`.
    fn advance_world(&mut self, t: f64) {
        while self.now < t - 1e-12 {
            let dt = (t - self.now).min(self.cfg.max_substep);
            let before = self.world.state.arc_position;
            self.world.state = self.cfg.vehicle.step(
                &self.track,
                &self.world.state,
                self.world.steer,
                self.world.speed,
                dt,
                &self.cfg.calibration,
            );
            self.world.distance += self.progress(before, self.world.state.arc_position);
            let c = self
                .world
                .monitor
                .observe(&mut self.world.state, &self.track, &self.thresholds);
            if c == Deviation::Out {
                self.world.cycle_outs += 1;
            }
            if severity(c) > severity(self.world.worst) {
                self.world.worst = c;
            }
            self.now += dt;
        }
        self.now = self.now.max(t);
    }

    fn send(&mut self, at: f64, to: Actor, msg: Message) {
        self.queue.push(at, (to, msg));
    }

    fn applied_speed(&self, v_set: SpeedDuty) -> SpeedDuty {
        let mut hi = self.setpoint.value();
        if let Some(cap) = self.speed_cap {
            hi = hi.min(cap.value());
        }
        SpeedDuty::clamped(v_set.value().min(hi))
    }

    fn frame_for(&mut self, label: u64) -> Result<SensorFrame> {
        let publication = *self
            .buffer
            .latest()
            .ok_or_else(|| Error::contract("frame requested before first publication"))?;
        debug_assert_eq!(publication.label, label);
        let noise = (self.cfg.sensor_noise + self.cfg.blur.prob_at(publication.snapshot.speed)).min(0.99);
        let (lane_view, raster) = sense(
            &publication.snapshot,
            &self.track,
            noise,
            self.cfg.sense_mode,
            &self.cfg.camera,
            &mut self.streams.sensor,
        )?;
        Ok(SensorFrame {
            label,
            lane_view,
            measured_speed: self.sensors.measure_speed(publication.snapshot.speed),
            raster,
            timestamp: publication.time,
            truth: publication.snapshot,
        })
    }

    fn handle(&mut self, to: Actor, msg: Message) -> Result<()> {
        match (to, msg) {
            (Actor::Camera, Message::Tick) => {
                self.buffer.publish(self.now, self.world.state);
                let next = self.now + 1.0 / self.cfg.camera_rate;
                self.send(next, Actor::Camera, Message::Tick);
            }
            (Actor::Buffer, Message::DataRequest) => {
                let Some(label) = self.buffer.latest_label() else {
                    // nothing published yet: retry at the next camera tick
                    let t = self.queue.peek_time().unwrap_or(self.now);
                    self.send(t, Actor::Buffer, Message::DataRequest);
                    return Ok(());
                };
                let frame = Box::new(self.frame_for(label)?);
                self.send(self.now, Actor::Dma, Message::LabelReply { label });
                if self.strategy.uses_lec() {
                    self.send(self.now, Actor::Lec, Message::Compute { frame: frame.clone() });
                }
                if self.strategy.uses_cv() {
                    self.send(self.now, Actor::Cv, Message::Compute { frame });
                }
            }
            (Actor::Lec, Message::Compute { frame }) => {
                let fl = self.inflight.as_ref().expect("cycle in flight");
                let (lat, _) = self.cfg.latency.controller_latencies(
                    self.strategy.uses_lec(),
                    self.strategy.uses_cv(),
                    fl.factor,
                );
                let truth = LecTruth {
                    lateral_offset: frame.truth.lateral_offset,
                    heading_error: frame
                        .truth
                        .preview_heading_error(&self.track, self.cfg.lec.preview),
                };
                let speed = self.world.speed;
                let out = self.lec.predict(truth, speed, &self.cfg.calibration, &mut self.streams.lec);
                let stale: f64 = self.streams.fault.random();
                let label = if stale < self.cfg.faults.stale_label_prob {
                    frame.label.saturating_sub(1)
                } else {
                    frame.label
                };
                self.send(self.now + lat, Actor::Dma, Message::LecReply { label, out });
            }
            (Actor::Cv, Message::Compute { frame }) => {
                let fl = self.inflight.as_ref().expect("cycle in flight");
                let (_, lat) = self.cfg.latency.controller_latencies(
                    self.strategy.uses_lec(),
                    self.strategy.uses_cv(),
                    fl.factor,
                );
                let view = match (&frame.raster, &self.cfg.ld) {
                    (Some(img), Some(ld)) => ld_pipeline(img, ld)?,
                    (Some(img), None) => ld_pipeline(img, &LdParams::for_camera(&self.cfg.camera))?,
                    (None, _) => frame.lane_view,
                };
                let out = cv_classify(view);
                self.send(
                    self.now + lat,
                    Actor::Dma,
                    Message::CvReply {
                        label: frame.label,
                        out,
                    },
                );
            }
            (Actor::Dma, Message::LabelReply { label }) => {
                let fl = self.inflight.as_mut().expect("cycle in flight");
                fl.label = Some(label);
                fl.lec = None;
                fl.cv = None;
            }
            (Actor::Dma, Message::LecReply { label, out }) => {
                self.inflight.as_mut().expect("cycle in flight").lec = Some((label, out));
                self.dma_check_replies();
            }
            (Actor::Dma, Message::CvReply { label, out }) => {
                self.inflight.as_mut().expect("cycle in flight").cv = Some((label, out));
                self.dma_check_replies();
            }
            (Actor::Rl, Message::RlReply { label, w_l, v_set }) => {
                // the reply is routed through the RL actor's placement latency
                self.send(self.now, Actor::Dma, Message::RlReply { label, w_l, v_set });
            }
            (Actor::Dma, Message::RlReply { label, w_l, v_set }) => {
                let fl = self.inflight.as_ref().expect("cycle in flight");
                if fl.label != Some(label) {
                    return Err(Error::contract("RL reply label does not match the cycle"));
                }
                self.dma_actuate(EnsembleWeights::new(w_l)?, v_set);
            }
            (Actor::Actuator, Message::Actuate { steer, speed }) => {
                self.world.steer = steer;
                self.world.speed = speed;
                self.send(self.now, Actor::Dma, Message::Applied);
            }
            (Actor::Dma, Message::Applied) => {
                self.inflight.as_mut().expect("cycle in flight").done = true;
            }
            (to, msg) => {
                return Err(Error::contract(format!("actor {to:?} cannot handle {msg:?}")));
            }
        }
        Ok(())
    }

    fn dma_check_replies(&mut self) {
        let strategy = self.strategy;
        let fl = self.inflight.as_mut().expect("cycle in flight");
        let lec_ready = !strategy.uses_lec() || fl.lec.is_some();
        let cv_ready = !strategy.uses_cv() || fl.cv.is_some();
        if !(lec_ready && cv_ready) {
            return;
        }
        let want = fl.label;
        let coherent = fl.lec.is_none_or(|(l, _)| Some(l) == want)
            && fl.cv.is_none_or(|(l, _)| Some(l) == want);
        if !coherent {
            fl.lec = None;
            fl.cv = None;
            if fl.attempts < 2 {
                fl.attempts += 1;
                let t = self.now + self.cfg.latency.dma * fl.factor;
                self.send(t, Actor::Buffer, Message::DataRequest);
            } else {
                fl.fault = true;
                fl.done = true;
            }
            return;
        }
        if strategy.uses_rl() {
            fl.awaiting_decision = true;
        } else {
            let (w, v) = self.internal_decision();
            self.dma_actuate(w, v);
        }
    }

    fn internal_decision(&mut self) -> (EnsembleWeights, SpeedDuty) {
        let fl = self.inflight.as_ref().expect("cycle in flight");
        match self.strategy {
            Strategy::LecOnly => (EnsembleWeights::LEC_ONLY, self.setpoint),
            Strategy::CvOnly => (EnsembleWeights::CV_ONLY, self.setpoint),
            Strategy::Conventional => {
                let cv = fl.cv.expect("cv reply").1;
                let fast = self.world.state.speed > self.cfg.conventional.speed_threshold;
                let unsafe_ = cv.label != SegmentLabel::Straight && fast;
                let w = if unsafe_ {
                    EnsembleWeights::CV_ONLY
                } else {
                    EnsembleWeights::LEC_ONLY
                };
                (w, self.setpoint)
            }
            Strategy::Fixed => {
                let theta_l = fl.lec.expect("lec reply").1.steer;
                let theta_c = fl.cv.expect("cv reply").1.steer;
                let v = self.applied_speed(self.fixed_v);
                let d = fixed_strategy(theta_l, theta_c, v, &self.cfg.fixed);
                self.fixed_v = d.v_next;
                let w = if d.blended {
                    EnsembleWeights::new(self.cfg.fixed.w_l).expect("validated")
                } else {
                    EnsembleWeights::LEC_ONLY
                };
                (w, d.v_next)
            }
            Strategy::Dynamic => unreachable!("dynamic decisions come from the RL actor"),
        }
    }

    fn dma_actuate(&mut self, w: EnsembleWeights, v_set: SpeedDuty) {
        let strategy = self.strategy;
        let v_applied = self.applied_speed(v_set);
        let halt = self.cfg.halt_on_stop;
        let fl = self.inflight.as_mut().expect("cycle in flight");
        fl.awaiting_decision = false;
        let theta_l = fl.lec.map(|(_, o)| o.steer);
        let cv = fl.cv.map(|(_, o)| o);
        let steer = match strategy {
            Strategy::LecOnly => theta_l.expect("lec reply"),
            Strategy::CvOnly => cv.expect("cv reply").steer,
            Strategy::Conventional => conventional_simplex(
                theta_l.expect("lec reply"),
                cv.expect("cv reply").steer,
                w.w_l() < 0.5,
            ),
            Strategy::Fixed | Strategy::Dynamic => {
                blend(theta_l.expect("lec reply"), cv.expect("cv reply").steer, w)
            }
        };
        fl.weights = w;
        fl.v_set = v_set;
        fl.theta_applied = steer;
        let stop = cv.is_some_and(|c| c.stop);
        fl.stop_signal = stop;
        let t = self.now + self.cfg.latency.actuator * fl.factor;
        if stop {
            self.stop_events += 1;
            if halt {
                self.stopped = true;
                self.world.speed = SpeedDuty::STOP;
                fl.done = true;
                return;
            }
        }
        self.send(
            t,
            Actor::Actuator,
            Message::Actuate {
                steer,
                speed: v_applied,
            },
        );
    }

    /// Runs events until `until` reports true or the queue empties.
    fn pump(&mut self, until: impl Fn(&Self) -> bool) -> Result<()> {
        while !until(self) {
            let Some((t, (to, msg))) = self.queue.pop() else {
                return Err(Error::contract("event queue drained mid-cycle"));
            };
            self.advance_world(t);
            self.handle(to, msg)?;
        }
        Ok(())
    }

    /// Starts a cycle and runs it until the RL actor is needed or it completes.
    pub fn begin_cycle(&mut self) -> Result<CyclePhase> {
        if self.stopped {
            return Err(Error::contract("pipeline halted by STOP"));
        }
        if self.inflight.is_some() {
            return Err(Error::contract("previous cycle still in flight"));
        }
        let factor = self.cfg.latency.draw_factor(&mut self.streams.timing);
        self.world.worst = Deviation::Center;
        self.world.cycle_outs = 0;
        self.inflight = Some(InFlight {
            t0: self.now,
            factor,
            label: None,
            attempts: 1,
            lec: None,
            cv: None,
            weights: EnsembleWeights::LEC_ONLY,
            v_set: self.setpoint,
            theta_applied: self.world.steer,
            stop_signal: false,
            fault: false,
            done: false,
            awaiting_decision: false,
        });
        let t = self.now + self.cfg.latency.dma * factor;
        self.send(t, Actor::Buffer, Message::DataRequest);
        self.pump(|p| {
            p.inflight
                .as_ref()
                .is_some_and(|f| f.done || f.awaiting_decision)
        })?;
        let fl = self.inflight.as_ref().expect("cycle in flight");
        if fl.awaiting_decision {
            let theta_l = fl.lec.map(|(_, o)| o.steer);
            let cv = fl.cv.map(|(_, o)| o);
            let observation = Observation {
                theta_l_bucket: theta_l.map_or(5, theta_l_bucket),
                theta_c_bucket: cv.map_or(1, |c| theta_c_bucket(c.steer)),
            };
            Ok(CyclePhase::NeedDecision(DecisionInput {
                label: fl.label.expect("label assigned"),
                theta_l,
                theta_c: cv.map(|c| c.steer),
                segment: cv.map(|c| c.label),
                observation,
            }))
        } else {
            Ok(CyclePhase::Done(self.close_cycle()))
        }
    }

    /// Delivers the RL actor's answer and runs the cycle to completion.
    pub fn finish_cycle(&mut self, w_l: f64, v_set: SpeedDuty) -> Result<CycleRecord> {
        let fl = self
            .inflight
            .as_ref()
            .filter(|f| f.awaiting_decision)
            .ok_or_else(|| Error::contract("no cycle is waiting for a decision"))?;
        let label = fl.label.expect("label assigned");
        let t = self.now + self.cfg.latency.rl * fl.factor + self.fog_rtt;
        self.send(t, Actor::Rl, Message::RlReply { label, w_l, v_set });
        self.pump(|p| p.inflight.as_ref().is_some_and(|f| f.done))?;
        Ok(self.close_cycle())
    }

    fn close_cycle(&mut self) -> CycleRecord {
        let fl = self.inflight.take().expect("cycle in flight");
        let t_r = self.now - fl.t0;
        if self.recent_tr.len() == 10 {
            self.recent_tr.pop_front();
        }
        self.recent_tr.push_back(t_r);
        self.cycle += 1;
        let st = &self.world.state;
        CycleRecord {
            cycle: self.cycle,
            start: fl.t0,
            label: fl.label.unwrap_or(0),
            theta_l: fl.lec.map(|(_, o)| o.steer.value()),
            theta_c: fl.cv.map(|(_, o)| o.steer.value()),
            segment: fl.cv.map(|(_, o)| o.label),
            w_l: fl.weights.w_l(),
            v_set: fl.v_set.value(),
            theta_applied: fl.theta_applied.value(),
            t_r,
            stopped: self.stopped,
            stop_signal: fl.stop_signal,
            fault: fl.fault,
            rerequested: fl.attempts > 1,
            deviation: self.world.worst,
            out_events: self.world.cycle_outs,
            zone: self.zone(),
            segment_kind: self.track.segment_kind_at(st.arc_position),
            end: self.now,
            x: st.x,
            y: st.y,
            heading: st.heading,
            arc_position: st.arc_position,
            lateral_offset: st.lateral_offset,
            speed: st.speed,
            offloaded: self.rl_placement.is_offloaded() && self.strategy.uses_rl(),
        }
    }

    /// Runs one full cycle; `rl` answers for the dynamic strategy.
    pub fn run_control_cycle(
        &mut self,
        rl: Option<&mut dyn FnMut(&DecisionInput) -> (f64, SpeedDuty)>,
    ) -> Result<CycleRecord> {
        match self.begin_cycle()? {
            CyclePhase::Done(r) => Ok(r),
            CyclePhase::NeedDecision(input) => {
                let f = rl.ok_or_else(|| Error::contract("dynamic strategy needs an RL actor"))?;
                let (w, v) = f(&input);
                self.finish_cycle(w, v)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pipe(strategy: Strategy, seed: u64) -> Pipeline {
        let cfg = PipelineConfig {
            latency: LatencyModel {
                jitter_sigma: 0.0,
                ..Default::default()
            },
            ..Default::default()
        };
        Pipeline::new(
            cfg,
            Track::default_loop(),
            strategy,
            seed,
            0.2,
            SpeedDuty::new(15.60).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn nominal_cycle_times() {
        let expect = [
            (Strategy::LecOnly, 0.080),
            (Strategy::CvOnly, 0.080),
            (Strategy::Conventional, 0.120),
            (Strategy::Fixed, 0.120),
        ];
        for (s, t) in expect {
            let mut p = pipe(s, 1);
            for _ in 0..5 {
                let r = p.run_control_cycle(None).unwrap();
                assert!((r.t_r - t).abs() < 1e-9, "{s}: {}", r.t_r);
            }
        }
        let mut p = pipe(Strategy::Dynamic, 1);
        let mut agent = |_: &DecisionInput| (0.9, SpeedDuty::new(15.6).unwrap());
        let r = p.run_control_cycle(Some(&mut agent)).unwrap();
        assert!((r.t_r - 0.130).abs() < 1e-9);
        assert!((r.w_l - 0.9).abs() < 1e-12);
    }

    #[test]
    fn offload_adds_round_trip_exactly() {
        let mut on = pipe(Strategy::Dynamic, 4);
        let mut off = pipe(Strategy::Dynamic, 4);
        off.set_rl_placement(Placement::Fog("fog-a".into()), 0.0125);
        let mut agent = |_: &DecisionInput| (0.95, SpeedDuty::new(15.6).unwrap());
        let a = on.run_control_cycle(Some(&mut agent)).unwrap();
        let b = off.run_control_cycle(Some(&mut agent)).unwrap();
        assert!((b.t_r - a.t_r - 0.0125).abs() < 1e-12);
        assert!(b.offloaded && !a.offloaded);
    }

    #[test]
    fn replies_share_the_cycle_label() {
        let mut p = pipe(Strategy::Fixed, 2);
        let mut last = 0;
        for _ in 0..20 {
            let r = p.run_control_cycle(None).unwrap();
            assert!(r.label > last);
            last = r.label;
            assert!(!r.fault && !r.rerequested);
        }
    }

    #[test]
    fn stale_labels_trigger_rerequest_then_fault() {
        let mut cfg = PipelineConfig::default();
        cfg.faults.stale_label_prob = 1.0;
        let mut p = Pipeline::new(
            cfg,
            Track::default_loop(),
            Strategy::Fixed,
            0,
            0.0,
            SpeedDuty::new(15.6).unwrap(),
        )
        .unwrap();
        let r = p.run_control_cycle(None).unwrap();
        assert!(r.rerequested && r.fault);
    }

    #[test]
    fn halting_stop_ends_actuation() {
        let cfg = PipelineConfig {
            halt_on_stop: true,
            reset_on_out: false,
            ..Default::default()
        };
        let track = Track::default_loop();
        let mut p = Pipeline::new(cfg, track, Strategy::CvOnly, 0, 0.2, SpeedDuty::new(15.6).unwrap())
            .unwrap();
        // shove the car off the lane so the classifier sees nothing
        p.world.state = VehicleState::at_offset(&p.track, 0.2, 0.4, 0.3);
        p.buffer.publish(0.0, p.world.state);
        let r = p.run_control_cycle(None).unwrap();
        assert!(r.stopped && r.stop_signal);
        assert!(p.run_control_cycle(None).is_err());
        assert_eq!(p.world.speed, SpeedDuty::STOP);
    }

    #[test]
    fn deterministic_for_seed() {
        let run = |seed| {
            let mut p = pipe(Strategy::Fixed, seed);
            (0..50).map(|_| p.run_control_cycle(None).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
    }
}
