//! Synthetic pose sweeps for scoring the lane detector against the geometric oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cv::{cv_classify, SegmentLabel};
use super::ld::{ld_accuracy, LdMetrics, LdParams};
use crate::error::Result;
use crate::sim::sensor::render;
use crate::sim::track::wrap_angle;
use crate::sim::{geometric_view, CameraParams, Raster, Track, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepParams {
    pub frames: usize,
    /// Lateral offsets drawn uniformly from `[-max_offset, max_offset]`.
    pub max_offset: f64,
    /// Heading perturbation drawn uniformly from `[-max_heading, max_heading]` rad.
    pub max_heading: f64,
    pub seed: u64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            frames: 3000,
            max_offset: 0.2,
            max_heading: 0.25,
            seed: 7,
        }
    }
}

/// Noise-free rendered frames labelled by the geometric oracle.
pub fn synthetic_dataset(
    track: &Track,
    cam: &CameraParams,
    sweep: &SweepParams,
) -> Vec<(Raster, SegmentLabel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(sweep.seed);
    (0..sweep.frames)
        .map(|_| {
            let s = rng.random_range(0.0..track.length());
            let off = rng.random_range(-sweep.max_offset..=sweep.max_offset);
            let dh = rng.random_range(-sweep.max_heading..=sweep.max_heading);
            let mut st = VehicleState::at_offset(track, s, off, 0.0);
            st.heading = wrap_angle(st.heading + dh);
            let label = cv_classify(geometric_view(&st, track, cam)).label;
            (render(&st, track, cam), label)
        })
        .collect()
}

/// Fraction of sweep frames on which the raster pipeline reproduces the oracle label.
pub fn ld_sweep(
    track: &Track,
    cam: &CameraParams,
    ld: &LdParams,
    sweep: &SweepParams,
) -> Result<LdMetrics> {
    ld_accuracy(&synthetic_dataset(track, cam, sweep), ld)
}
