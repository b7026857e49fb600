//! One function per run mode, shared by the binary, the examples and the tests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::confidence::{Evidence, Network, Posterior};
use crate::controllers::{ld_sweep, LdMetrics, LdParams};
use crate::error::{Error, Result};
use crate::middleware::{run_laps, CycleRecord, EvaluationReport, GreedyAgent, Pipeline, Strategy};
use crate::resource::{prepare_forecaster, run_resource_sim, ResourceManager, ResourceRunSummary};
use crate::rl::{exploit_run, explore_run, QTable, StepRecord};
use crate::sim::Track;

/// Offsets the agent's random stream from the pipeline's.
const AGENT_STREAM: u64 = 0xa9e7;

/// Evenly spaced episode starts around the track.
pub fn start_poses(track: &Track, runs: usize) -> Vec<f64> {
    let n = runs.max(1);
    (0..n).map(|k| k as f64 * track.length() / n as f64).collect()
}

fn dynamic_pipeline(cfg: &RunConfig, track: &Track) -> Result<Pipeline> {
    Pipeline::new(cfg.pipeline.clone(), track.clone(), Strategy::Dynamic, cfg.seed, 0.0, cfg.setpoint()?)
}

pub struct Explored {
    pub q: QTable,
    pub log: Vec<StepRecord>,
}

/// Learns a Q-table from scratch with `cfg.rl.runs` episodes.
pub fn explore(cfg: &RunConfig, track: &Track) -> Result<Explored> {
    cfg.validate(track)?;
    let mut pipe = dynamic_pipeline(cfg, track)?;
    let mut q = QTable::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ AGENT_STREAM);
    let log = explore_run(&mut pipe, &mut q, &cfg.rl, &start_poses(track, cfg.rl.runs), &mut rng)?;
    Ok(Explored { q, log })
}

/// Greedy rollout from the start line.
pub fn exploit(cfg: &RunConfig, track: &Track, q: &QTable) -> Result<Vec<StepRecord>> {
    cfg.validate(track)?;
    let mut pipe = dynamic_pipeline(cfg, track)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ AGENT_STREAM);
    exploit_run(&mut pipe, q, &cfg.rl, 0.0, cfg.exploit_steps, &mut rng)
}

fn agent_for(cfg: &RunConfig, strategy: Strategy, q: Option<&QTable>) -> Result<Option<GreedyAgent>> {
    if !strategy.uses_rl() {
        return Ok(None);
    }
    let q = q.ok_or_else(|| Error::contract(format!("strategy {strategy} needs a Q-table")))?;
    Ok(Some(GreedyAgent::new(q.clone(), &cfg.rl)?))
}

/// `cfg.laps` laps of `strategy` at the configured set-point.
pub fn evaluate(
    cfg: &RunConfig,
    track: &Track,
    strategy: Strategy,
    q: Option<&QTable>,
) -> Result<(EvaluationReport, Vec<CycleRecord>)> {
    cfg.validate(track)?;
    let mut agent = agent_for(cfg, strategy, q)?;
    let mut pipe = Pipeline::new(cfg.pipeline.clone(), track.clone(), strategy, cfg.seed, 0.0, cfg.setpoint()?)?;
    run_laps(&mut pipe, cfg.laps, cfg.seed, agent.as_mut())
}

/// Closed loop of the pipeline and the resource manager for `cfg.resource_duration` seconds.
pub fn resource_sim(
    cfg: &RunConfig,
    track: &Track,
    q: Option<&QTable>,
) -> Result<(ResourceRunSummary, ResourceManager)> {
    cfg.validate(track)?;
    let forecaster = if cfg.resource.enabled {
        Some(prepare_forecaster(&cfg.thermal, &cfg.resource)?)
    } else {
        None
    };
    let mut rm = ResourceManager::new(
        cfg.resource.clone(),
        cfg.thermal,
        cfg.pipeline.calibration,
        cfg.strategy,
        forecaster,
        cfg.seed,
    )?;
    let mut agent = agent_for(cfg, cfg.strategy, q)?;
    let mut pipe = Pipeline::new(cfg.pipeline.clone(), track.clone(), cfg.strategy, cfg.seed, 0.0, cfg.setpoint()?)?;
    let summary = run_resource_sim(&mut pipe, agent.as_mut(), &mut rm, cfg.resource_duration)?;
    Ok((summary, rm))
}

pub fn bn_query(cfg: &RunConfig, evidence: &Evidence) -> Result<Posterior> {
    Network::new(cfg.priors)?.infer(evidence)
}

/// Raster detector agreement with the geometric oracle over the configured sweep.
pub fn ld_bench(cfg: &RunConfig, track: &Track) -> Result<LdMetrics> {
    let cam = cfg.pipeline.camera;
    let ld = cfg.pipeline.ld.unwrap_or_else(|| LdParams::for_camera(&cam));
    ld_sweep(track, &cam, &ld, &cfg.ld_sweep)
}
