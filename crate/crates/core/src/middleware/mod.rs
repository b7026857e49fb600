//! Message-passing control pipeline: buffer, controllers, decision manager,
//! RL actor and actuator on a simulated clock.

pub mod agent;
pub mod buffer;
pub mod pipeline;
pub mod queue;
pub mod report;
pub mod timing;

pub use agent::GreedyAgent;
pub use buffer::{OneSlotBuffer, Publication};
pub use pipeline::{
    ConventionalParams, CycleRecord, MotionBlur, CyclePhase, DecisionInput, FaultModel, Pipeline,
    PipelineConfig, Strategy,
};
pub use queue::EventQueue;
pub use report::{run_laps, write_cycle_log, write_trajectory, Distribution, EvaluationReport, SegmentStats};
pub use timing::{LatencyModel, Placement};
