//! Scores the raster lane detector against the geometric oracle on a pose sweep.

use wsimplex::controllers::{ld_sweep, LdParams, SweepParams};
use wsimplex::sim::{CameraParams, Track};

fn main() -> wsimplex::Result<()> {
    let track = Track::default_loop();
    let cam = CameraParams::default();
    let frames = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3000);
    let sweep = SweepParams {
        frames,
        ..SweepParams::default()
    };
    let m = ld_sweep(&track, &cam, &LdParams::for_camera(&cam), &sweep)?;
    println!("frames {}  agreement {:.4}", m.samples, m.accuracy);
    for c in &m.per_class {
        println!(
            "{:>8}  n={:<5} P={:.3} R={:.3} F1={:.3}",
            c.label, c.support, c.precision, c.recall, c.f1
        );
    }
    Ok(())
}
