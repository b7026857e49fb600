//! Posteriors of the safety-confidence network for a few observations.

use wsimplex::confidence::{Evidence, Network, RootPriors};

fn main() -> wsimplex::Result<()> {
    let net = Network::new(RootPriors::default())?;
    for q in [
        "",
        "position=Far velocity=Medium steering=Straight",
        "position=Far velocity=Medium steering=Straight cmd=Right",
        "position=On velocity=Slow",
        "velocity=Fast",
    ] {
        let e = Evidence::parse(q.split_whitespace())?;
        let p = net.infer(&e)?;
        println!(
            "{:<58} SafeTurn={:.3} InTrack={:.3}",
            if q.is_empty() { "(no evidence)" } else { q },
            p.safe_turn_yes,
            p.in_track_yes
        );
    }
    Ok(())
}
