//! The three decision logics on a handful of controller disagreements.

use wsimplex::simplex::{blend, conventional_simplex, fixed_strategy, EnsembleWeights, FixedStrategyParams};
use wsimplex::sim::{SpeedDuty, SteerDuty};

fn main() -> wsimplex::Result<()> {
    let p = FixedStrategyParams::default();
    let v = SpeedDuty::new(15.60)?;
    println!("{:>6} {:>6} | {:>8} {:>8} {:>8} | fixed v_next", "lec", "cv", "w=0.8", "fixed", "conv");
    for (l, c) in [(16.0, 15.0), (15.3, 15.0), (18.6, 20.0), (12.0, 10.0), (17.0, 10.0)] {
        let (tl, tc) = (SteerDuty::new(l)?, SteerDuty::new(c)?);
        let w = blend(tl, tc, EnsembleWeights::pair(0.8, 0.2)?);
        let f = fixed_strategy(tl, tc, v, &p);
        let conv = conventional_simplex(tl, tc, (l - c).abs() > 3.0);
        println!(
            "{l:>6.1} {c:>6.1} | {:>8.2} {:>8.2} {:>8.2} | {:.3}{}",
            w.value(),
            f.steer.value(),
            conv.value(),
            f.v_next.value(),
            if f.blended { " (blended)" } else { "" }
        );
    }
    Ok(())
}
