//! Thirty-second-ahead temperature forecasting from `(temperature, load)`.
//!
//! The network predicts the normalized temperature change over the horizon;
//! inputs are standardized with statistics from the training history.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::thermal::{thermal_step, ResourceSample, ThermalParams};
use crate::error::{Error, Result};

pub const MIN_HISTORY: usize = 100;
pub const HIDDEN: [usize; 2] = [20, 40];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Scaler {
    mean: f64,
    sd: f64,
}

impl Scaler {
    fn fit(xs: impl Iterator<Item = f64> + Clone) -> Self {
        let n = xs.clone().count() as f64;
        let mean = xs.clone().sum::<f64>() / n;
        let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        Self {
            mean,
            sd: if sd > 1e-6 { sd } else { 1.0 },
        }
    }

    fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }

    fn invert(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    n_in: usize,
    n_out: usize,
    /// Row-major `n_out × n_in`.
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Dense {
    fn new<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (n_in + n_out) as f64).sqrt();
        Self {
            n_in,
            n_out,
            w: (0..n_in * n_out).map(|_| rng.random_range(-limit..limit)).collect(),
            b: vec![0.0; n_out],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.n_out {
            let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
            out.push(self.b[o] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>());
        }
    }

    fn params(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// Two tanh hidden layers of 20 and 40 units and a linear scalar output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: [Dense; 3],
    x_t: Scaler,
    x_load: Scaler,
    y: Scaler,
}

struct Trace {
    inputs: Vec<f64>,
    /// Pre-activation outputs of every layer.
    z: [Vec<f64>; 3],
    /// Activations of the hidden layers.
    a: [Vec<f64>; 2],
}

impl Mlp {
    fn new<R: Rng + ?Sized>(x_t: Scaler, x_load: Scaler, y: Scaler, rng: &mut R) -> Self {
        Self {
            layers: [
                Dense::new(2, HIDDEN[0], rng),
                Dense::new(HIDDEN[0], HIDDEN[1], rng),
                Dense::new(HIDDEN[1], 1, rng),
            ],
            x_t,
            x_load,
            y,
        }
    }

    pub fn layer_sizes(&self) -> [usize; 3] {
        [self.layers[0].n_out, self.layers[1].n_out, self.layers[2].n_out]
    }

    fn run(&self, inputs: [f64; 2]) -> Trace {
        let mut z: [Vec<f64>; 3] = Default::default();
        let mut a: [Vec<f64>; 2] = Default::default();
        self.layers[0].forward(&inputs, &mut z[0]);
        a[0] = z[0].iter().map(|v| v.tanh()).collect();
        self.layers[1].forward(&a[0], &mut z[1]);
        a[1] = z[1].iter().map(|v| v.tanh()).collect();
        self.layers[2].forward(&a[1], &mut z[2]);
        Trace {
            inputs: inputs.to_vec(),
            z,
            a,
        }
    }

    fn normalized(&self, temperature: f64, load: f64) -> [f64; 2] {
        [self.x_t.apply(temperature), self.x_load.apply(load)]
    }

    pub fn predict(&self, temperature: f64, load: f64) -> f64 {
        let out = self.run(self.normalized(temperature, load)).z[2][0];
        temperature + self.y.invert(out)
    }

    /// Adds `d loss / d params` for one sample with output error `err` into `grads`.
    fn backprop(&self, tr: &Trace, err: f64, grads: &mut [Vec<f64>; 3]) {
        let mut delta = vec![err];
        for l in (0..3).rev() {
            let layer = &self.layers[l];
            let input: &[f64] = if l == 0 { &tr.inputs } else { &tr.a[l - 1] };
            let g = &mut grads[l];
            for o in 0..layer.n_out {
                for i in 0..layer.n_in {
                    g[o * layer.n_in + i] += delta[o] * input[i];
                }
                g[layer.w.len() + o] += delta[o];
            }
            if l > 0 {
                let mut prev = vec![0.0; layer.n_in];
                for (o, d) in delta.iter().enumerate() {
                    for (i, p) in prev.iter_mut().enumerate() {
                        *p += layer.w[o * layer.n_in + i] * d;
                    }
                }
                for (i, p) in prev.iter_mut().enumerate() {
                    let a = tr.a[l - 1][i];
                    *p *= 1.0 - a * a;
                }
                delta = prev;
            }
        }
    }
}

struct Adam {
    lr: f64,
    m: [Vec<f64>; 3],
    v: [Vec<f64>; 3],
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(net: &Mlp, lr: f64) -> Self {
        let zeros = |l: usize| vec![0.0; net.layers[l].params()];
        Self {
            lr,
            m: [zeros(0), zeros(1), zeros(2)],
            v: [zeros(0), zeros(1), zeros(2)],
            t: 0,
        }
    }

    fn step(&mut self, net: &mut Mlp, grads: &[Vec<f64>; 3]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for l in 0..3 {
            let layer = &mut net.layers[l];
            let nw = layer.w.len();
            for k in 0..grads[l].len() {
                let g = grads[l][k];
                let m = &mut self.m[l][k];
                let v = &mut self.v[l][k];
                *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                let upd = self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
                if k < nw {
                    layer.w[k] -= upd;
                } else {
                    layer.b[k - nw] -= upd;
                }
            }
        }
    }
}

/// Ordinary least squares on `[1, T, load]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coef: [f64; 3],
}

impl LinearModel {
    pub fn predict(&self, temperature: f64, load: f64) -> f64 {
        self.coef[0] + self.coef[1] * temperature + self.coef[2] * load
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Forecaster {
    Mlp(Mlp),
    LinearBaseline(LinearModel),
}

impl Forecaster {
    pub fn predict(&self, temperature: f64, load: f64) -> f64 {
        match self {
            Forecaster::Mlp(m) => m.predict(temperature, load),
            Forecaster::LinearBaseline(m) => m.predict(temperature, load),
        }
    }
}

/// `((T_t, load_t), T_next)` from consecutive monitor samples.
pub fn supervised_pairs(history: &[ResourceSample]) -> Vec<([f64; 2], f64)> {
    history
        .windows(2)
        .map(|w| ([w[0].temperature, w[0].cpu_load], w[1].temperature))
        .collect()
}

fn check_history(history: &[ResourceSample]) -> Result<Vec<([f64; 2], f64)>> {
    if history.len() < MIN_HISTORY {
        return Err(Error::contract(format!(
            "forecaster needs at least {MIN_HISTORY} samples, got {}",
            history.len()
        )));
    }
    Ok(supervised_pairs(history))
}

pub fn train_forecaster(history: &[ResourceSample], p: &TrainParams) -> Result<Forecaster> {
    let pairs = check_history(history)?;
    if p.epochs == 0 || p.batch_size == 0 || !(p.learning_rate > 0.0) {
        return Err(Error::Config(format!("invalid training parameters {p:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let x_t = Scaler::fit(pairs.iter().map(|(x, _)| x[0]));
    let x_load = Scaler::fit(pairs.iter().map(|(x, _)| x[1]));
    let y = Scaler::fit(pairs.iter().map(|(x, t)| t - x[0]));
    let mut net = Mlp::new(x_t, x_load, y, &mut rng);
    let data: Vec<([f64; 2], f64)> = pairs
        .iter()
        .map(|(x, t)| (net.normalized(x[0], x[1]), y.apply(t - x[0])))
        .collect();
    let mut adam = Adam::new(&net, p.learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..p.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(p.batch_size) {
            let mut grads: [Vec<f64>; 3] = std::array::from_fn(|l| vec![0.0; net.layers[l].params()]);
            let scale = 2.0 / batch.len() as f64;
            for &i in batch {
                let (x, target) = data[i];
                let tr = net.run(x);
                net.backprop(&tr, scale * (tr.z[2][0] - target), &mut grads);
            }
            adam.step(&mut net, &grads);
        }
    }
    Ok(Forecaster::Mlp(net))
}

pub fn train_linear(history: &[ResourceSample]) -> Result<Forecaster> {
    let pairs = check_history(history)?;
    // normal equations, solved by Cramer's rule
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (x, t) in &pairs {
        let row = [1.0, x[0], x[1]];
        for i in 0..3 {
            aty[i] += row[i] * t;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let det = det3(&ata);
    let coef = if det.abs() > 1e-9 * (1.0 + ata[1][1] * ata[2][2]) {
        std::array::from_fn(|k| {
            let mut m = ata;
            for (i, row) in m.iter_mut().enumerate() {
                row[k] = aty[i];
            }
            det3(&m) / det
        })
    } else {
        // degenerate history: persistence forecast
        [0.0, 1.0, 0.0]
    };
    Ok(Forecaster::LinearBaseline(LinearModel { coef }))
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Mean absolute percentage error, in percent, over a history's pairs.
pub fn mape(f: &Forecaster, history: &[ResourceSample]) -> f64 {
    let pairs = supervised_pairs(history);
    let total: f64 = pairs
        .iter()
        .map(|(x, t)| ((f.predict(x[0], x[1]) - t) / t).abs())
        .sum();
    100.0 * total / pairs.len().max(1) as f64
}

/// Monitor samples of the thermal model under a randomly switching load,
/// for training and held-out evaluation.
pub fn synthetic_trace(p: &ThermalParams, duration: f64, period: f64, seed: u64) -> Vec<ResourceSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dwell: Exp<f64> = Exp::new(1.0 / 600.0).expect("positive rate");
    let noise: Normal<f64> = Normal::new(0.0, p.load_noise_sd).expect("finite sd");
    let mut temperature = p.ambient + 20.0;
    let mut level = 0.6;
    let mut next_switch = 0.0;
    let mut next_sample = 0.0;
    let mut out = Vec::new();
    let steps = duration.round() as usize;
    for k in 0..=steps {
        let now = k as f64;
        if now >= next_switch {
            level = rng.random_range(0.3..0.95);
            next_switch = now + dwell.sample(&mut rng).max(period);
        }
        let load = (level + noise.sample(&mut rng)).clamp(0.0, 1.0);
        if now >= next_sample - 1e-9 {
            out.push(ResourceSample {
                time: now,
                temperature,
                cpu_load: load,
                offloaded: false,
            });
            next_sample += period;
        }
        temperature = thermal_step(temperature, load, p, 1.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(n: usize, t: f64) -> Vec<ResourceSample> {
        (0..n)
            .map(|i| ResourceSample {
                time: 30.0 * i as f64,
                temperature: t,
                cpu_load: 0.5,
                offloaded: false,
            })
            .collect()
    }

    #[test]
    fn rejects_short_history() {
        let h = constant(50, 60.0);
        assert!(matches!(train_forecaster(&h, &TrainParams::default()), Err(Error::Contract(_))));
        assert!(train_linear(&h).is_err());
    }

    #[test]
    fn constant_history_predicts_constant() {
        let h = constant(120, 55.0);
        let f = train_forecaster(&h, &TrainParams::default()).unwrap();
        assert!((f.predict(55.0, 0.5) - 55.0).abs() < 0.1);
        let lin = train_linear(&h).unwrap();
        assert!((lin.predict(55.0, 0.5) - 55.0).abs() < 1e-9);
    }

    #[test]
    fn architecture_is_fixed() {
        let h = synthetic_trace(&ThermalParams::default(), 3600.0 * 2.0, 30.0, 1);
        let Forecaster::Mlp(m) = train_forecaster(&h, &TrainParams { epochs: 1, ..Default::default() }).unwrap()
        else {
            panic!("expected an MLP")
        };
        assert_eq!(m.layer_sizes(), [20, 40, 1]);
    }

    #[test]
    fn linear_fit_recovers_exact_plane() {
        let h: Vec<ResourceSample> = (0..150)
            .map(|i| ResourceSample {
                time: 30.0 * i as f64,
                temperature: 40.0 + (i % 7) as f64 * 3.0,
                cpu_load: 0.2 + (i % 5) as f64 * 0.1,
                offloaded: false,
            })
            .collect();
        // rewrite the next temperature as an exact plane of the current pair
        let mut h2 = h.clone();
        for i in 1..h2.len() {
            h2[i].temperature = 2.0 + 0.9 * h2[i - 1].temperature + 10.0 * h2[i - 1].cpu_load;
        }
        let Forecaster::LinearBaseline(m) = train_linear(&h2).unwrap() else {
            panic!()
        };
        assert!((m.coef[0] - 2.0).abs() < 1e-6, "{:?}", m.coef);
        assert!((m.coef[1] - 0.9).abs() < 1e-8);
        assert!((m.coef[2] - 10.0).abs() < 1e-6);
    }

    #[test]
    fn mlp_forecasts_held_out_trace() {
        let p = ThermalParams::default();
        let train = synthetic_trace(&p, 6.0 * 3600.0, 30.0, 11);
        let test = synthetic_trace(&p, 2.0 * 3600.0, 30.0, 12);
        let mlp = train_forecaster(&train, &TrainParams::default()).unwrap();
        let lin = train_linear(&train).unwrap();
        let (m, l) = (mape(&mlp, &test), mape(&lin, &test));
        assert!(m <= 2.0, "mlp {m}");
        assert!(m <= 2.0 * l, "mlp {m} linear {l}");
    }
}
