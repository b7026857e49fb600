//! Exploration and exploitation runs against an abstract control-cycle environment.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::learn::{q_update, reward, select_action, Policy, RlHyperparams};
use super::qtable::QTable;
use super::space::{transition, RlState, W_STEP};
use crate::controllers::dataset::csv_err;
use crate::error::{Error, Result};
use crate::sim::{Deviation, SpeedDuty, Zone};

/// Steering buckets seen at the start of a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub theta_l_bucket: u8,
    pub theta_c_bucket: u8,
}

/// What one completed cycle did to the car.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    /// Ground speed during the cycle, m/s.
    pub speed: f64,
    pub deviation: Deviation,
    pub zone: Zone,
}

/// A closed loop that the agent drives one cycle at a time.
pub trait RlEnv {
    /// Places the car at arc position `s` for a new episode.
    fn reset_episode(&mut self, s: f64, v: SpeedDuty) -> Result<()>;
    /// Starts a cycle: samples the sensors and runs both controllers.
    fn observe(&mut self) -> Result<Observation>;
    /// Finishes the cycle with the chosen weight and speed set-point.
    fn act(&mut self, w_l: f64, v_set: SpeedDuty) -> Result<Outcome>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub run: usize,
    pub step: usize,
    pub w_idx: u8,
    pub v_idx: u8,
    pub theta_l_bucket: u8,
    pub theta_c_bucket: u8,
    pub action: usize,
    pub next_w_idx: u8,
    pub next_v_idx: u8,
    pub next_theta_l_bucket: u8,
    pub next_theta_c_bucket: u8,
    pub reward: f64,
    pub cumulative_reward: f64,
    pub deviation: String,
    pub zone: String,
}

fn state_from(w_idx: u8, v_idx: u8, o: Observation) -> Result<RlState> {
    RlState::new(w_idx, v_idx, o.theta_l_bucket, o.theta_c_bucket)
}

/// Runs `hp.runs` episodes of `hp.steps_per_run` cycles, updating `q` in place.
/// Episode `k` starts at `start_poses[k % len]` with epsilon and alpha scaled
/// by their decay factors raised to `k`.
pub fn explore_run<E: RlEnv, R: Rng + ?Sized>(
    env: &mut E,
    q: &mut QTable,
    hp: &RlHyperparams,
    start_poses: &[f64],
    rng: &mut R,
) -> Result<Vec<StepRecord>> {
    hp.validate()?;
    if start_poses.is_empty() {
        return Err(Error::contract("exploration needs at least one start pose"));
    }
    let mut log = Vec::with_capacity(hp.runs * hp.steps_per_run);
    if hp.steps_per_run == 0 {
        return Ok(log);
    }
    for run in 0..hp.runs {
        let epsilon = hp.eps0 * hp.eps_decay.powi(run as i32);
        let alpha = hp.alpha * hp.alpha_decay.powi(run as i32);
        let start = state_from(hp.start_w_idx, hp.start_v_idx, Observation { theta_l_bucket: 0, theta_c_bucket: 0 })?;
        env.reset_episode(start_poses[run % start_poses.len()], start.speed_duty())?;
        let mut s = state_from(start.w_idx, start.v_idx, env.observe()?)?;
        let mut total = 0.0;
        for step in 0..hp.steps_per_run {
            let a = select_action(q, s, Policy::Explore { epsilon }, rng);
            let moved = transition(s, a)?;
            let out = env.act(moved.w_l(), moved.speed_duty())?;
            let r = reward(out.speed, out.deviation);
            let s_next = state_from(moved.w_idx, moved.v_idx, env.observe()?)?;
            q_update(q, s, a, r, s_next, alpha, hp.gamma);
            total += r;
            log.push(StepRecord {
                run,
                step,
                w_idx: s.w_idx,
                v_idx: s.v_idx,
                theta_l_bucket: s.theta_l_bucket,
                theta_c_bucket: s.theta_c_bucket,
                action: a.index(),
                next_w_idx: s_next.w_idx,
                next_v_idx: s_next.v_idx,
                next_theta_l_bucket: s_next.theta_l_bucket,
                next_theta_c_bucket: s_next.theta_c_bucket,
                reward: r,
                cumulative_reward: total,
                deviation: out.deviation.as_str().to_string(),
                zone: out.zone.as_str().to_string(),
            });
            s = s_next;
        }
    }
    Ok(log)
}

/// Greedy rollout of `steps` cycles with no learning.
pub fn exploit_run<E: RlEnv, R: Rng + ?Sized>(
    env: &mut E,
    q: &QTable,
    hp: &RlHyperparams,
    start: f64,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<StepRecord>> {
    let init = state_from(hp.start_w_idx, hp.start_v_idx, Observation { theta_l_bucket: 0, theta_c_bucket: 0 })?;
    env.reset_episode(start, init.speed_duty())?;
    let mut s = state_from(init.w_idx, init.v_idx, env.observe()?)?;
    let mut total = 0.0;
    let mut log = Vec::with_capacity(steps);
    for step in 0..steps {
        let a = select_action(q, s, Policy::Exploit, rng);
        let moved = transition(s, a)?;
        let out = env.act(moved.w_l(), moved.speed_duty())?;
        let r = reward(out.speed, out.deviation);
        total += r;
        let s_next = state_from(moved.w_idx, moved.v_idx, env.observe()?)?;
        log.push(StepRecord {
            run: 0,
            step,
            w_idx: s.w_idx,
            v_idx: s.v_idx,
            theta_l_bucket: s.theta_l_bucket,
            theta_c_bucket: s.theta_c_bucket,
            action: a.index(),
            next_w_idx: moved.w_idx,
            next_v_idx: moved.v_idx,
            next_theta_l_bucket: s_next.theta_l_bucket,
            next_theta_c_bucket: s_next.theta_c_bucket,
            reward: r,
            cumulative_reward: total,
            deviation: out.deviation.as_str().to_string(),
            zone: out.zone.as_str().to_string(),
        });
        s = s_next;
    }
    Ok(log)
}

/// Per zone, the `W_L` most often applied; ties go to the larger weight.
pub fn modal_weights(log: &[StepRecord]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, BTreeMap<u8, usize>> = BTreeMap::new();
    for r in log {
        *counts.entry(r.zone.clone()).or_default().entry(r.next_w_idx).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(zone, hist)| {
            let (w, _) = hist
                .into_iter()
                .fold((0u8, 0usize), |best, (w, n)| if n >= best.1 { (w, n) } else { best });
            (zone, w as f64 * W_STEP)
        })
        .collect()
}

pub fn write_episode_log<W: Write>(out: W, log: &[StepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in log {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Centered whenever the weight is at or above one half, off-center below.
    struct Toy {
        cycles: usize,
    }

    impl RlEnv for Toy {
        fn reset_episode(&mut self, _s: f64, _v: SpeedDuty) -> Result<()> {
            Ok(())
        }
        fn observe(&mut self) -> Result<Observation> {
            Ok(Observation {
                theta_l_bucket: 5,
                theta_c_bucket: 1,
            })
        }
        fn act(&mut self, w_l: f64, _v: SpeedDuty) -> Result<Outcome> {
            self.cycles += 1;
            Ok(Outcome {
                speed: 0.4,
                deviation: if w_l >= 0.5 { Deviation::Center } else { Deviation::OffCenter },
                zone: Zone::Straight,
            })
        }
    }

    #[test]
    fn zero_steps_leave_table_untouched() {
        let mut q = QTable::new();
        let hp = RlHyperparams {
            steps_per_run: 0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let log = explore_run(&mut Toy { cycles: 0 }, &mut q, &hp, &[0.0], &mut rng).unwrap();
        assert!(log.is_empty());
        assert_eq!(q, QTable::new());
    }

    #[test]
    fn runs_and_logs_every_step() {
        let mut q = QTable::new();
        let hp = RlHyperparams {
            steps_per_run: 50,
            runs: 3,
            ..Default::default()
        };
        let mut env = Toy { cycles: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let log = explore_run(&mut env, &mut q, &hp, &[0.0, 1.0], &mut rng).unwrap();
        assert_eq!(log.len(), 150);
        assert_eq!(env.cycles, 150);
        assert!(q.visited_states() > 0);
        let last = log.last().unwrap();
        assert!((last.cumulative_reward - log[100..].iter().map(|r| r.reward).sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn empty_start_poses_rejected() {
        let mut q = QTable::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = explore_run(&mut Toy { cycles: 0 }, &mut q, &RlHyperparams::default(), &[], &mut rng);
        assert!(r.is_err());
    }

    #[test]
    fn modal_weight_per_zone() {
        let mk = |w: u8, zone: &str| StepRecord {
            run: 0,
            step: 0,
            w_idx: 0,
            v_idx: 0,
            theta_l_bucket: 0,
            theta_c_bucket: 0,
            action: 0,
            next_w_idx: w,
            next_v_idx: 0,
            next_theta_l_bucket: 0,
            next_theta_c_bucket: 0,
            reward: 0.0,
            cumulative_reward: 0.0,
            deviation: "center".into(),
            zone: zone.into(),
        };
        let log = vec![mk(19, "straight"), mk(19, "straight"), mk(20, "straight"), mk(16, "in_curve"), mk(17, "in_curve")];
        let m = modal_weights(&log);
        assert!((m["straight"] - 0.95).abs() < 1e-12);
        assert!((m["in_curve"] - 0.85).abs() < 1e-12);
    }

    #[test]
    fn episode_log_csv_header() {
        let mut buf = Vec::new();
        let mut q = QTable::new();
        let hp = RlHyperparams {
            steps_per_run: 3,
            runs: 1,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let log = explore_run(&mut Toy { cycles: 0 }, &mut q, &hp, &[0.0], &mut rng).unwrap();
        write_episode_log(&mut buf, &log).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("run,step,w_idx,v_idx,theta_l_bucket,theta_c_bucket,action,"));
        assert_eq!(text.lines().count(), 4);
    }
}
