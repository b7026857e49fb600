//! Lap evaluation: drive a pipeline for a number of laps and summarize.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::agent::GreedyAgent;
use super::pipeline::{CycleRecord, Pipeline, Strategy};
use crate::controllers::dataset::csv_err;
use crate::error::{Error, Result};
use crate::sim::SegmentKind;

/// Lowest average progress, m/s, before an evaluation is abandoned.
const MIN_PROGRESS_SPEED: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

impl Distribution {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let pick = |q: f64| sorted[((q * (sorted.len() - 1) as f64).round()) as usize];
        Some(Self {
            count: values.len(),
            mean,
            sd: var.sqrt(),
            min: sorted[0],
            p50: pick(0.5),
            p95: pick(0.95),
            max: sorted[sorted.len() - 1],
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub cycles: usize,
    pub out_of_track: u64,
    pub mean_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub strategy: Strategy,
    pub seed: u64,
    pub laps_requested: u32,
    pub laps_completed: f64,
    pub completed: bool,
    pub setpoint_duty: f64,
    pub cycles: u64,
    pub sim_time: f64,
    pub distance: f64,
    pub out_of_track: u64,
    pub stop_signals: u64,
    pub faults: u64,
    pub halted: bool,
    pub mean_speed: f64,
    pub max_speed: f64,
    pub t_r: Distribution,
    pub per_segment: BTreeMap<SegmentKind, SegmentStats>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Drives `laps` laps (or until halted) and returns the summary and every cycle.
/// `agent` answers for the dynamic strategy and is ignored otherwise.
pub fn run_laps(
    pipe: &mut Pipeline,
    laps: u32,
    seed: u64,
    mut agent: Option<&mut GreedyAgent>,
) -> Result<(EvaluationReport, Vec<CycleRecord>)> {
    if laps == 0 {
        return Err(Error::contract("laps must be at least 1"));
    }
    if pipe.strategy().uses_rl() && agent.is_none() {
        return Err(Error::contract("dynamic evaluation needs a trained agent"));
    }
    let goal = laps as f64 * pipe.track().length();
    let deadline = pipe.now() + goal / MIN_PROGRESS_SPEED;
    let start_distance = pipe.distance();
    let start_outs = pipe.out_events();
    let start_stops = pipe.stop_events();
    let mut records = Vec::new();
    while pipe.distance() - start_distance < goal && pipe.now() < deadline && !pipe.is_stopped() {
        let rec = match agent.as_deref_mut() {
            Some(a) if pipe.strategy().uses_rl() => a.drive(pipe)?,
            _ => pipe.run_control_cycle(None)?,
        };
        records.push(rec);
    }
    let distance = pipe.distance() - start_distance;
    let t_r: Vec<f64> = records.iter().map(|r| r.t_r).collect();
    let speeds: Vec<f64> = records.iter().map(|r| r.speed).collect();
    let mut per_segment: BTreeMap<SegmentKind, SegmentStats> = BTreeMap::new();
    for r in &records {
        let e = per_segment.entry(r.segment_kind).or_default();
        e.cycles += 1;
        e.out_of_track += r.out_events as u64;
        e.mean_speed += r.speed;
    }
    for e in per_segment.values_mut() {
        e.mean_speed /= e.cycles as f64;
    }
    let sim_time = records.last().map_or(0.0, |r| r.end) - records.first().map_or(0.0, |r| r.start);
    let report = EvaluationReport {
        strategy: pipe.strategy(),
        seed,
        laps_requested: laps,
        laps_completed: distance / pipe.track().length(),
        completed: distance >= goal,
        setpoint_duty: pipe.setpoint().value(),
        cycles: records.len() as u64,
        sim_time,
        distance,
        out_of_track: pipe.out_events() - start_outs,
        stop_signals: pipe.stop_events() - start_stops,
        faults: records.iter().filter(|r| r.fault).count() as u64,
        halted: pipe.is_stopped(),
        mean_speed: speeds.iter().sum::<f64>() / speeds.len().max(1) as f64,
        max_speed: speeds.iter().copied().fold(0.0, f64::max),
        t_r: Distribution::of(&t_r).ok_or_else(|| Error::contract("no cycles ran"))?,
        per_segment,
    };
    Ok((report, records))
}

/// Per-cycle log, one row per control cycle.
pub fn write_cycle_log<W: Write>(out: W, records: &[CycleRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TrajectoryRow {
    time: f64,
    x: f64,
    y: f64,
    heading: f64,
    speed: f64,
    offset: f64,
    deviation: &'static str,
}

/// Vehicle trajectory sampled at the end of each cycle.
pub fn write_trajectory<W: Write>(out: W, records: &[CycleRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(TrajectoryRow {
            time: r.end,
            x: r.x,
            y: r.y,
            heading: r.heading,
            speed: r.speed,
            offset: r.lateral_offset,
            deviation: r.deviation.as_str(),
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::middleware::PipelineConfig;
    use crate::sim::{SpeedDuty, Track};

    #[test]
    fn distribution_summary() {
        let d = Distribution::of(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((d.min, d.p50, d.max), (1.0, 3.0, 5.0));
        assert!((d.mean - 3.0).abs() < 1e-12);
        assert!((d.sd - 2f64.sqrt()).abs() < 1e-12);
        assert!(Distribution::of(&[]).is_none());
    }

    #[test]
    fn one_lap_is_reported_and_reproducible() {
        let run = || {
            let mut p = Pipeline::new(
                PipelineConfig::default(),
                Track::default_loop(),
                Strategy::LecOnly,
                5,
                0.0,
                SpeedDuty::new(15.60).unwrap(),
            )
            .unwrap();
            let (rep, recs) = run_laps(&mut p, 1, 5, None).unwrap();
            let mut csv = Vec::new();
            write_cycle_log(&mut csv, &recs).unwrap();
            (rep.to_json(), csv)
        };
        let (a, ca) = run();
        let (b, cb) = run();
        assert_eq!(a, b);
        assert_eq!(ca, cb);
        let rep: EvaluationReport = serde_json::from_str(&a).unwrap();
        assert!(rep.completed && rep.laps_completed >= 1.0);
        assert!(rep.per_segment.contains_key(&SegmentKind::RightArc));
    }

    #[test]
    fn dynamic_needs_an_agent() {
        let mut p = Pipeline::new(
            PipelineConfig::default(),
            Track::default_loop(),
            Strategy::Dynamic,
            0,
            0.0,
            SpeedDuty::new(15.60).unwrap(),
        )
        .unwrap();
        assert!(run_laps(&mut p, 1, 0, None).is_err());
    }
}
