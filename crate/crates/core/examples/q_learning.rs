//! Learns ensemble weights with tabular Q-learning, then rolls the greedy
//! policy out and reports the modal weight per track zone.
//!
//! Usage: `cargo run --release --example q_learning [seed]`

use wsimplex::rl::modal_weights;
use wsimplex::{runner, RunConfig};

fn main() -> wsimplex::Result<()> {
    let cfg = RunConfig {
        seed: std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1),
        ..RunConfig::default()
    };
    let track = cfg.load_track()?;
    let learned = runner::explore(&cfg, &track)?;
    let per_run: Vec<f64> = learned
        .log
        .chunks(cfg.rl.steps_per_run)
        .map(|c| c.last().map_or(0.0, |r| r.cumulative_reward))
        .collect();
    println!("cumulative reward per run: {per_run:.1?}");
    println!("visited states: {}", learned.q.visited_states());
    let rollout = runner::exploit(&cfg, &track, &learned.q)?;
    for (zone, w) in modal_weights(&rollout) {
        println!("modal W_L {zone:>10}: {w:.2}");
    }
    Ok(())
}
