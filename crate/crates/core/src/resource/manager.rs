//! The resource-manager actor and its closed loop with the control pipeline.

use std::collections::VecDeque;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::fog::{default_roster, select_device, FogDevice, FogSpec};
use super::forecast::{synthetic_trace, train_forecaster, Forecaster, TrainParams};
use super::offload::{offload_decide, saturate_speed, OffloadState, DEFAULT_HYSTERESIS, DEFAULT_THRESHOLD, SAFE_DISTANCE};
use super::thermal::{thermal_step, ResourceSample, ThermalParams};
use crate::controllers::dataset::csv_err;
use crate::error::{Error, Result};
use crate::middleware::{GreedyAgent, Pipeline, Placement, Strategy};
use crate::sim::{Calibration, SpeedDuty};

const THERMAL_DT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RmParams {
    /// Offloading, forecasting and speed saturation; the monitor always runs.
    pub enabled: bool,
    pub monitor_period: f64,
    pub ping_period: f64,
    pub threshold: f64,
    pub hysteresis: f64,
    pub safe_distance: f64,
    /// Cycles averaged for the speed cap.
    pub tr_window: usize,
    pub start_temperature: Option<f64>,
    /// Length of the synthetic history the forecaster is trained on, seconds.
    pub training_duration: f64,
    pub train: TrainParams,
    pub fog: Vec<FogSpec>,
}

impl Default for RmParams {
    fn default() -> Self {
        Self {
            enabled: true,
            monitor_period: 30.0,
            ping_period: 10.0,
            threshold: DEFAULT_THRESHOLD,
            hysteresis: DEFAULT_HYSTERESIS,
            safe_distance: SAFE_DISTANCE,
            tr_window: 10,
            start_temperature: None,
            training_duration: 6.0 * 3600.0,
            train: TrainParams::default(),
            fog: default_roster(),
        }
    }
}

impl RmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.monitor_period > 0.0 && self.ping_period > 0.0 && self.hysteresis >= 0.0 && self.tr_window > 0) {
            return Err(Error::Config(format!("invalid resource manager parameters {self:?}")));
        }
        Ok(())
    }
}

/// Messages from the resource manager to the decision manager.
#[derive(Debug, Clone, PartialEq)]
pub enum RmCommand {
    Place { placement: Placement, rtt: f64 },
    SpeedCap(Option<SpeedDuty>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time: f64,
    pub temperature: f64,
    pub cpu: f64,
    pub offloaded: bool,
    pub selected_device: String,
    pub forecast: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffloadEvent {
    pub time: f64,
    pub to: Placement,
    pub forecast: f64,
}

pub struct ResourceManager {
    params: RmParams,
    thermal: ThermalParams,
    cal: Calibration,
    strategy: Strategy,
    forecaster: Option<Forecaster>,
    devices: Vec<FogDevice>,
    state: OffloadState,
    temperature: f64,
    load: f64,
    clock: f64,
    next_ping: f64,
    next_monitor: f64,
    rng: ChaCha8Rng,
    load_noise: Normal<f64>,
    recent_tr: VecDeque<f64>,
    selected: Option<usize>,
    cap: Option<SpeedDuty>,
    samples: Vec<ResourceSample>,
    trace: Vec<TraceRow>,
    events: Vec<OffloadEvent>,
    warnings: Vec<String>,
}

/// Trains the forecaster on a synthetic history of the thermal model.
pub fn prepare_forecaster(thermal: &ThermalParams, params: &RmParams) -> Result<Forecaster> {
    let history = synthetic_trace(thermal, params.training_duration, params.monitor_period, params.train.seed);
    train_forecaster(&history, &params.train)
}

impl ResourceManager {
    /// `forecaster` is required when the manager is enabled.
    pub fn new(
        params: RmParams,
        thermal: ThermalParams,
        cal: Calibration,
        strategy: Strategy,
        forecaster: Option<Forecaster>,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        thermal.validate()?;
        if params.enabled && forecaster.is_none() {
            return Err(Error::contract("an enabled resource manager needs a forecaster"));
        }
        let devices = params.fog.iter().map(FogDevice::from_spec).collect::<Result<Vec<_>>>()?;
        let temperature = params.start_temperature.unwrap_or(thermal.ambient);
        Ok(Self {
            load: thermal.load_profile.load(strategy, false),
            load_noise: Normal::new(0.0, thermal.load_noise_sd).map_err(|e| Error::Config(e.to_string()))?,
            params,
            thermal,
            cal,
            strategy,
            forecaster,
            devices,
            state: OffloadState::default(),
            temperature,
            clock: 0.0,
            next_ping: 0.0,
            next_monitor: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x05ee_d0ff_10ad),
            recent_tr: VecDeque::new(),
            selected: None,
            cap: None,
            samples: Vec::new(),
            trace: Vec::new(),
            events: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn state(&self) -> &OffloadState {
        &self.state
    }

    pub fn devices(&self) -> &[FogDevice] {
        &self.devices
    }

    pub fn samples(&self) -> &[ResourceSample] {
        &self.samples
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    pub fn events(&self) -> &[OffloadEvent] {
        &self.events
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Reports a finished control cycle; may tighten or relax the speed cap.
    pub fn on_cycle(&mut self, t_r: f64) -> Result<Option<RmCommand>> {
        if self.recent_tr.len() == self.params.tr_window {
            self.recent_tr.pop_front();
        }
        self.recent_tr.push_back(t_r);
        if !self.params.enabled {
            return Ok(None);
        }
        let mean = self.recent_tr.iter().sum::<f64>() / self.recent_tr.len() as f64;
        let cap = Some(saturate_speed(self.params.safe_distance, mean, &self.cal)?.duty);
        if cap == self.cap {
            return Ok(None);
        }
        self.cap = cap;
        Ok(Some(RmCommand::SpeedCap(cap)))
    }

    /// Runs the thermal model, pings and monitor up to simulated time `t`.
    pub fn advance_to(&mut self, t: f64) -> Vec<RmCommand> {
        let mut out = Vec::new();
        while self.clock <= t {
            let now = self.clock;
            if self.params.enabled && now >= self.next_ping {
                for d in &mut self.devices {
                    d.ping(now, &mut self.rng);
                }
                self.next_ping += self.params.ping_period;
            }
            let base = self.thermal.load_profile.load(self.strategy, self.state.is_offloaded());
            self.load = (base + self.load_noise.sample(&mut self.rng)).clamp(0.0, 1.0);
            if now >= self.next_monitor {
                out.extend(self.monitor(now));
                self.next_monitor += self.params.monitor_period;
            }
            self.temperature = thermal_step(self.temperature, self.load, &self.thermal, THERMAL_DT);
            self.clock += THERMAL_DT;
        }
        out
    }

    fn monitor(&mut self, now: f64) -> Option<RmCommand> {
        let mut cmd = None;
        let mut forecast = None;
        if self.params.enabled {
            self.selected = select_device(&self.devices).ok();
            let f = self
                .forecaster
                .as_ref()
                .expect("checked at construction")
                .predict(self.temperature, self.load);
            forecast = Some(f);
            let id = self.selected.map(|i| self.devices[i].id.as_str());
            let d = offload_decide(f, &self.state, self.params.threshold, self.params.hysteresis, id, now);
            if let Some(w) = d.warning {
                log::warn!("{w}");
                self.warnings.push(w);
            }
            if d.state != self.state {
                self.state = d.state;
                self.events.push(OffloadEvent {
                    time: now,
                    to: self.state.placement.clone(),
                    forecast: f,
                });
                let rtt = match &self.state.placement {
                    Placement::Fog(_) => self.selected.map_or(0.0, |i| self.devices[i].base_latency),
                    Placement::Onboard => 0.0,
                };
                cmd = Some(RmCommand::Place {
                    placement: self.state.placement.clone(),
                    rtt,
                });
            }
        }
        self.samples.push(ResourceSample {
            time: now,
            temperature: self.temperature,
            cpu_load: self.load,
            offloaded: self.state.is_offloaded(),
        });
        self.trace.push(TraceRow {
            time: now,
            temperature: self.temperature,
            cpu: self.load,
            offloaded: self.state.is_offloaded(),
            selected_device: self.selected.map(|i| self.devices[i].id.clone()).unwrap_or_default(),
            forecast,
        });
        cmd
    }
}

pub fn apply(pipe: &mut Pipeline, cmd: RmCommand) {
    match cmd {
        RmCommand::Place { placement, rtt } => pipe.set_rl_placement(placement, rtt),
        RmCommand::SpeedCap(cap) => pipe.set_speed_cap(cap),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlacementStats {
    pub cycles: u64,
    pub mean_speed: f64,
    pub mean_t_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceRunSummary {
    pub duration: f64,
    pub cycles: u64,
    pub samples: usize,
    pub offload_events: usize,
    pub max_temperature: f64,
    /// Fraction of monitor samples above `threshold + 3 °C`.
    pub hot_fraction: f64,
    pub out_of_track: u64,
    pub onboard: PlacementStats,
    pub offloaded: PlacementStats,
}

/// Drives `pipe` and `rm` together for `duration` simulated seconds.
pub fn run_resource_sim(
    pipe: &mut Pipeline,
    mut agent: Option<&mut GreedyAgent>,
    rm: &mut ResourceManager,
    duration: f64,
) -> Result<ResourceRunSummary> {
    if pipe.strategy().uses_rl() && agent.is_none() {
        return Err(Error::contract("the dynamic strategy needs a trained agent"));
    }
    let start_outs = pipe.out_events();
    let mut stats = [PlacementStats::default(); 2];
    let mut cycles = 0;
    for cmd in rm.advance_to(pipe.now()) {
        apply(pipe, cmd);
    }
    while pipe.now() < duration && !pipe.is_stopped() {
        let rec = match agent.as_deref_mut() {
            Some(a) if pipe.strategy().uses_rl() => a.drive(pipe)?,
            _ => pipe.run_control_cycle(None)?,
        };
        cycles += 1;
        let s = &mut stats[rec.offloaded as usize];
        s.cycles += 1;
        s.mean_speed += rec.speed;
        s.mean_t_r += rec.t_r;
        if let Some(cmd) = rm.on_cycle(rec.t_r)? {
            apply(pipe, cmd);
        }
        for cmd in rm.advance_to(pipe.now()) {
            apply(pipe, cmd);
        }
    }
    for s in &mut stats {
        if s.cycles > 0 {
            s.mean_speed /= s.cycles as f64;
            s.mean_t_r /= s.cycles as f64;
        }
    }
    let hot_line = rm.params.threshold + 3.0;
    let n = rm.samples.len();
    Ok(ResourceRunSummary {
        duration,
        cycles,
        samples: n,
        offload_events: rm.events.len(),
        max_temperature: rm.samples.iter().map(|s| s.temperature).fold(f64::MIN, f64::max),
        hot_fraction: rm.samples.iter().filter(|s| s.temperature > hot_line).count() as f64 / n.max(1) as f64,
        out_of_track: pipe.out_events() - start_outs,
        onboard: stats[0],
        offloaded: stats[1],
    })
}

pub fn write_resource_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manager(enabled: bool, strategy: Strategy) -> ResourceManager {
        let params = RmParams {
            enabled,
            training_duration: 3.0 * 3600.0,
            ..Default::default()
        };
        let thermal = ThermalParams::default();
        let f = enabled.then(|| prepare_forecaster(&thermal, &params).unwrap());
        ResourceManager::new(params, thermal, Calibration::default(), strategy, f, 1).unwrap()
    }

    #[test]
    fn monitor_every_thirty_seconds() {
        let mut rm = manager(false, Strategy::Dynamic);
        rm.advance_to(299.0);
        assert_eq!(rm.samples().len(), 10);
        for w in rm.samples().windows(2) {
            assert_eq!(w[1].time - w[0].time, 30.0);
        }
    }

    #[test]
    fn disabled_manager_overheats() {
        let mut rm = manager(false, Strategy::Dynamic);
        rm.advance_to(1800.0);
        assert!(rm.temperature() > 70.0, "{}", rm.temperature());
        assert!(rm.events().is_empty());
    }

    #[test]
    fn enabled_manager_cycles_placement_on_monitor_ticks() {
        let mut rm = manager(true, Strategy::Dynamic);
        let mut changes = Vec::new();
        for t in 0..3600 {
            for c in rm.advance_to(t as f64) {
                if let RmCommand::Place { placement, rtt } = c {
                    changes.push((t, placement, rtt));
                }
            }
        }
        assert!(!changes.is_empty());
        for ev in rm.events() {
            assert_eq!(ev.time % 30.0, 0.0);
        }
        // the sample flag follows the state machine
        let mut offloaded = false;
        let mut ev = rm.events().iter().peekable();
        for s in rm.samples() {
            if let Some(e) = ev.peek() {
                if e.time == s.time {
                    offloaded = e.to.is_offloaded();
                    ev.next();
                }
            }
            assert_eq!(s.offloaded, offloaded, "at {}", s.time);
        }
        let hot = rm.samples().iter().filter(|s| s.temperature > 73.0).count();
        assert!((hot as f64) < 0.05 * rm.samples().len() as f64);
        for (_, p, rtt) in &changes {
            match p {
                Placement::Fog(_) => assert!(*rtt > 0.0),
                Placement::Onboard => assert_eq!(*rtt, 0.0),
            }
        }
    }

    #[test]
    fn speed_cap_tracks_cycle_time() {
        let mut rm = manager(true, Strategy::Dynamic);
        let Some(RmCommand::SpeedCap(Some(a))) = rm.on_cycle(0.13).unwrap() else {
            panic!("first report sets a cap")
        };
        for _ in 0..20 {
            rm.on_cycle(0.15).unwrap();
        }
        let cal = Calibration::default();
        let expect = cal.speed_to_duty(0.09 / 0.15).value();
        assert!((rm.cap.unwrap().value() - expect).abs() < 1e-12);
        assert!(rm.cap.unwrap().value() < a.value());
    }
}
