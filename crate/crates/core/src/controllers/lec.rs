//! Lane-keeping surrogate for the learning-enabled steering predictor.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::calibration::STEER_DUTY_CENTER;
use crate::sim::{Calibration, SpeedDuty, SteerDuty};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorModel {
    /// Constant duty offset added to every prediction.
    pub bias: f64,
    /// Baseline Gaussian noise, duty-%.
    pub noise_sd: f64,
    /// Speed above which noise grows.
    pub degrade_speed: f64,
    /// Extra noise sd per m/s above `degrade_speed`.
    pub degrade_slope: f64,
}

impl Default for ErrorModel {
    fn default() -> Self {
        Self {
            bias: 0.0,
            noise_sd: 0.2,
            degrade_speed: 0.45,
            degrade_slope: 15.0,
        }
    }
}

impl ErrorModel {
    pub fn none() -> Self {
        Self {
            bias: 0.0,
            noise_sd: 0.0,
            degrade_speed: 0.0,
            degrade_slope: 0.0,
        }
    }

    /// Noise standard deviation at ground speed `v`.
    pub fn sd_at(&self, v: f64) -> f64 {
        self.noise_sd + self.degrade_slope * (v - self.degrade_speed).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LecSurrogateParams {
    /// Duty-% per meter of lateral offset.
    pub gain: f64,
    /// Duty-% per radian of heading error.
    pub heading_gain: f64,
    /// Look-ahead for the heading error, meters along the centerline.
    pub preview: f64,
    /// Weight on the previous output, in `[0, 1)`.
    pub smoothing: f64,
    pub error_model: ErrorModel,
}

impl Default for LecSurrogateParams {
    fn default() -> Self {
        Self {
            gain: 10.0,
            heading_gain: 10.0,
            preview: 0.3,
            smoothing: 0.3,
            error_model: ErrorModel::default(),
        }
    }
}

impl LecSurrogateParams {
    pub fn validate(&self) -> Result<()> {
        let em = &self.error_model;
        if self.gain < 0.0
            || self.heading_gain < 0.0
            || self.preview < 0.0
            || !(0.0..1.0).contains(&self.smoothing)
            || em.noise_sd < 0.0
            || em.degrade_slope < 0.0
        {
            return Err(Error::Config(format!("invalid LEC parameters {self:?}")));
        }
        Ok(())
    }
}

/// Ground-truth pose error the surrogate perceives in place of an image.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LecTruth {
    pub lateral_offset: f64,
    pub heading_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LecOutput {
    pub steer: SteerDuty,
}

/// One prediction. `prev` is the previous smoothed, noise-free law value;
/// the returned pair is the output and the new smoothed value.
pub fn lec_predict<R: Rng + ?Sized>(
    truth: LecTruth,
    speed: SpeedDuty,
    params: &LecSurrogateParams,
    cal: &Calibration,
    prev: Option<f64>,
    rng: &mut R,
) -> (LecOutput, f64) {
    let law = STEER_DUTY_CENTER
        + params.gain * truth.lateral_offset
        + params.heading_gain * truth.heading_error;
    let smoothed = match prev {
        Some(p) => params.smoothing * p + (1.0 - params.smoothing) * law,
        None => law,
    };
    let sd = params.error_model.sd_at(cal.duty_to_speed(speed));
    // always draw so the stream position does not depend on the noise level
    let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
    let raw = smoothed + params.error_model.bias + sd * z;
    (
        LecOutput {
            steer: SteerDuty::clamped(raw),
        },
        smoothed,
    )
}

/// Stateful wrapper carrying the smoothing memory between cycles.
#[derive(Debug, Clone)]
pub struct LecSurrogate {
    pub params: LecSurrogateParams,
    memory: Option<f64>,
}

impl LecSurrogate {
    pub fn new(params: LecSurrogateParams) -> Self {
        Self {
            params,
            memory: None,
        }
    }

    pub fn predict<R: Rng + ?Sized>(
        &mut self,
        truth: LecTruth,
        speed: SpeedDuty,
        cal: &Calibration,
        rng: &mut R,
    ) -> LecOutput {
        let (out, mem) = lec_predict(truth, speed, &self.params, cal, self.memory, rng);
        self.memory = Some(mem);
        out
    }

    pub fn reset(&mut self) {
        self.memory = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quiet(gain: f64, heading_gain: f64) -> LecSurrogateParams {
        LecSurrogateParams {
            gain,
            heading_gain,
            preview: 0.0,
            smoothing: 0.0,
            error_model: ErrorModel::none(),
        }
    }

    #[test]
    fn centered_is_straight() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (o, _) = lec_predict(
            LecTruth::default(),
            SpeedDuty::new(15.6).unwrap(),
            &quiet(20.0, 5.0),
            &Calibration::default(),
            None,
            &mut rng,
        );
        assert_eq!(o.steer.value(), 15.0);
    }

    #[test]
    fn linear_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let truth = LecTruth {
            lateral_offset: 0.1,
            heading_error: 0.0,
        };
        let (o, _) = lec_predict(
            truth,
            SpeedDuty::new(15.6).unwrap(),
            &quiet(20.0, 0.0),
            &Calibration::default(),
            None,
            &mut rng,
        );
        assert!((o.steer.value() - 17.0).abs() < 1e-12);
    }

    #[test]
    fn clamped_for_extreme_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = LecSurrogateParams::default();
        for off in [-100.0, 100.0] {
            let t = LecTruth {
                lateral_offset: off,
                heading_error: 0.0,
            };
            let (o, _) = lec_predict(t, SpeedDuty::STOP, &p, &Calibration::default(), None, &mut rng);
            assert!((10.0..=20.0).contains(&o.steer.value()));
        }
    }

    #[test]
    fn smoothing_blends_with_memory() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = quiet(10.0, 0.0);
        p.smoothing = 0.5;
        let t = LecTruth {
            lateral_offset: 0.2,
            heading_error: 0.0,
        };
        let (o, m) = lec_predict(t, SpeedDuty::STOP, &p, &Calibration::default(), Some(15.0), &mut rng);
        assert!((o.steer.value() - 16.0).abs() < 1e-12);
        assert!((m - 16.0).abs() < 1e-12);
    }

    #[test]
    fn degraded_noise_sd() {
        let em = ErrorModel {
            bias: 0.0,
            noise_sd: 0.0,
            degrade_speed: 0.45,
            degrade_slope: 5.0,
        };
        assert!((em.sd_at(0.65) - 1.0).abs() < 1e-12);
        assert_eq!(em.sd_at(0.3), 0.0);

        let p = LecSurrogateParams {
            error_model: em,
            ..quiet(0.0, 0.0)
        };
        let cal = Calibration::default();
        let duty = cal.speed_to_duty(0.65);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| lec_predict(LecTruth::default(), duty, &p, &cal, None, &mut rng).0.steer.value())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() - 1.0).abs() < 0.05, "sd {}", var.sqrt());
    }

    #[test]
    fn lipschitz_in_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = quiet(7.0, 0.0);
        let cal = Calibration::default();
        let f = |x: f64, rng: &mut ChaCha8Rng| {
            let t = LecTruth {
                lateral_offset: x,
                heading_error: 0.0,
            };
            lec_predict(t, SpeedDuty::STOP, &p, &cal, None, rng).0.steer.value()
        };
        let (a, b) = (f(0.05, &mut rng), f(0.15, &mut rng));
        assert!(((b - a) - 0.7).abs() < 1e-12);
    }
}
