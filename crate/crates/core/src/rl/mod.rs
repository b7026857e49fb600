//! Tabular Q-learning over ensemble weight and speed.

pub mod episode;
pub mod learn;
pub mod qtable;
pub mod space;

pub use episode::{
    exploit_run, explore_run, modal_weights, write_episode_log, Observation, Outcome, RlEnv,
    StepRecord,
};
pub use learn::{bellman, greedy, penalty, q_update, reward, select_action, Policy, RlHyperparams};
pub use qtable::{load_qtable, save_qtable, QTable};
pub use space::{
    enumerate_actions, theta_c_bucket, theta_l_bucket, transition, v_index, Delta, RlAction,
    RlState, ACTIONS, N_ACTIONS, N_STATES,
};
