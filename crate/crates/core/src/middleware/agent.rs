//! The RL actor: the pipeline as a learning environment, and a greedy agent
//! that drives it from a trained table.

use super::pipeline::{CycleRecord, CyclePhase, DecisionInput, Pipeline};
use crate::error::{Error, Result};
use crate::rl::{greedy, transition, Observation, Outcome, QTable, RlEnv, RlHyperparams, RlState, ACTIONS};
use crate::sim::SpeedDuty;

/// Cycles that fault before reaching the RL actor are retried this many times.
const MAX_FAULTED_CYCLES: usize = 8;

impl Pipeline {
    /// Runs cycles until one needs an RL decision.
    fn next_decision(&mut self) -> Result<DecisionInput> {
        for _ in 0..MAX_FAULTED_CYCLES {
            match self.begin_cycle()? {
                CyclePhase::NeedDecision(d) => return Ok(d),
                CyclePhase::Done(_) => continue,
            }
        }
        Err(Error::contract("too many consecutive faulted cycles"))
    }
}

impl RlEnv for Pipeline {
    fn reset_episode(&mut self, s: f64, v: SpeedDuty) -> Result<()> {
        self.reset_vehicle(s, v);
        Ok(())
    }

    fn observe(&mut self) -> Result<Observation> {
        Ok(self.next_decision()?.observation)
    }

    fn act(&mut self, w_l: f64, v_set: SpeedDuty) -> Result<Outcome> {
        let rec = self.finish_cycle(w_l, v_set)?;
        Ok(Outcome {
            speed: rec.speed,
            deviation: rec.deviation,
            zone: rec.zone,
        })
    }
}

/// Greedy policy over a Q-table, carrying its own weight and speed indices.
#[derive(Debug, Clone)]
pub struct GreedyAgent {
    q: QTable,
    w_idx: u8,
    v_idx: u8,
}

impl GreedyAgent {
    pub fn new(q: QTable, hp: &RlHyperparams) -> Result<Self> {
        hp.validate()?;
        Ok(Self {
            q,
            w_idx: hp.start_w_idx,
            v_idx: hp.start_v_idx,
        })
    }

    pub fn table(&self) -> &QTable {
        &self.q
    }

    /// Picks the greedy action for this cycle and returns the resulting
    /// `(W_L, speed set-point)`.
    pub fn decide(&mut self, input: &DecisionInput) -> (f64, SpeedDuty) {
        let o = input.observation;
        let s = RlState::new(self.w_idx, self.v_idx, o.theta_l_bucket, o.theta_c_bucket)
            .expect("indices stay on the grid");
        let next = transition(s, ACTIONS[greedy(&self.q, s)]).expect("greedy picks valid actions");
        self.w_idx = next.w_idx;
        self.v_idx = next.v_idx;
        (next.w_l(), next.speed_duty())
    }

    /// One full cycle of `pipe` under this agent.
    pub fn drive(&mut self, pipe: &mut Pipeline) -> Result<CycleRecord> {
        pipe.run_control_cycle(Some(&mut |d: &DecisionInput| self.decide(d)))
    }
}
