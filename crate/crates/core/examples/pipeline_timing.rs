//! Inference pipeline time per strategy, and the cost of running the RL
//! actor on a fog device.

use wsimplex::middleware::{Pipeline, PipelineConfig, Placement, Strategy};
use wsimplex::sim::{SpeedDuty, Track};

fn mean_tr(strategy: Strategy, rtt: Option<f64>) -> wsimplex::Result<f64> {
    let mut p = Pipeline::new(
        PipelineConfig::default(),
        Track::default_loop(),
        strategy,
        3,
        0.0,
        SpeedDuty::new(15.61)?,
    )?;
    if let Some(rtt) = rtt {
        p.set_rl_placement(Placement::Fog("edge".into()), rtt);
    }
    let mut total = 0.0;
    let n = 500;
    for _ in 0..n {
        let rec = p.run_control_cycle(Some(&mut |_| (0.8, SpeedDuty::new(15.61).expect("valid"))))?;
        total += rec.t_r;
    }
    Ok(total / n as f64)
}

fn main() -> wsimplex::Result<()> {
    for s in Strategy::ALL {
        println!("{:>13}: mean T_R {:6.1} ms", s.as_str(), mean_tr(s, None)? * 1e3);
    }
    let on = mean_tr(Strategy::Dynamic, None)?;
    let off = mean_tr(Strategy::Dynamic, Some(0.010))?;
    println!("dynamic offloaded with 10 ms round trip: {:.1} ms (+{:.3} ms)", off * 1e3, (off - on) * 1e3);
    Ok(())
}
