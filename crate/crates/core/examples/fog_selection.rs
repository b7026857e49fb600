//! Pings a small fog roster every 10 s and re-selects every 30 s.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wsimplex::resource::{select_device, FogDevice};

fn main() -> wsimplex::Result<()> {
    let mut roster = vec![
        FogDevice::new("bench-pc", 0.018, 0.002)?,
        FogDevice::new("lab-server", 0.015, 0.012)?,
        FogDevice::new("laptop", 0.030, 0.001)?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for t in (0..=180).step_by(10) {
        for d in &mut roster {
            d.ping(t as f64, &mut rng);
        }
        if t % 30 == 0 {
            let i = select_device(&roster)?;
            let means: Vec<String> = roster
                .iter()
                .map(|d| format!("{}={:.1}ms", d.id, d.recent_mean().unwrap_or(f64::NAN) * 1e3))
                .collect();
            println!("t={t:>3}s  {}  -> {}", means.join("  "), roster[i].id);
        }
    }
    Ok(())
}
