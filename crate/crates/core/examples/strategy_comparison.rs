//! Ten laps of every strategy at the top speed set-point.

use wsimplex::middleware::Strategy;
use wsimplex::{runner, RunConfig};

fn main() -> wsimplex::Result<()> {
    let cfg = RunConfig::default();
    let track = cfg.load_track()?;
    let q = runner::explore(&cfg, &track)?.q;
    println!("{:>13} {:>5} {:>5} {:>7} {:>8} {:>8}", "strategy", "laps", "outs", "stops", "v m/s", "T_R ms");
    for s in Strategy::ALL {
        let (r, _) = runner::evaluate(&cfg, &track, s, Some(&q))?;
        println!(
            "{:>13} {:>5.1} {:>5} {:>7} {:>8.3} {:>8.1}",
            s.as_str(),
            r.laps_completed,
            r.out_of_track,
            r.stop_signals,
            r.mean_speed,
            r.t_r.mean * 1e3
        );
    }
    Ok(())
}
