//! Trains the temperature forecaster and its linear baseline on a synthetic
//! history and scores both on a held-out trace.

use wsimplex::resource::{mape, synthetic_trace, train_forecaster, train_linear, ThermalParams, TrainParams};

fn main() -> wsimplex::Result<()> {
    let p = ThermalParams::default();
    let train = synthetic_trace(&p, 6.0 * 3600.0, 30.0, 11);
    let test = synthetic_trace(&p, 2.0 * 3600.0, 30.0, 12);
    let mlp = train_forecaster(&train, &TrainParams::default())?;
    let lin = train_linear(&train)?;
    println!("training samples {}, held-out samples {}", train.len(), test.len());
    println!("MLP MAPE    {:.3}%", mape(&mlp, &test));
    println!("linear MAPE {:.3}%", mape(&lin, &test));
    for (t, l) in [(50.0, 0.85), (68.0, 0.85), (72.0, 0.55)] {
        println!("T={t:.0} load={l:.2} -> {:.2} °C in 30 s", mlp.predict(t, l));
    }
    Ok(())
}
