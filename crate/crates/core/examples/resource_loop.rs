//! Thirty simulated minutes of the dynamic strategy with and without the
//! resource manager; writes the resource trace to `resource_trace.csv`.

use std::fs::File;

use wsimplex::resource::write_resource_trace;
use wsimplex::{runner, RunConfig};

fn main() -> wsimplex::Result<()> {
    let mut cfg = RunConfig {
        resource_duration: 1800.0,
        ..RunConfig::default()
    };
    let track = cfg.load_track()?;
    let q = runner::explore(&cfg, &track)?.q;
    for enabled in [false, true] {
        cfg.resource.enabled = enabled;
        let (s, rm) = runner::resource_sim(&cfg, &track, Some(&q))?;
        println!(
            "manager {:<3}: max {:.1} °C, {} offload events, speed onboard {:.3} / offloaded {:.3} m/s",
            if enabled { "on" } else { "off" },
            s.max_temperature,
            s.offload_events,
            s.onboard.mean_speed,
            s.offloaded.mean_speed
        );
        if enabled {
            write_resource_trace(File::create("resource_trace.csv")?, rm.trace())?;
        }
    }
    Ok(())
}
