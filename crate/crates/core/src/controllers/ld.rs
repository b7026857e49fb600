//! Raster lane-detection pipeline: blur, white mask, edges, side regions, line votes.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::cv::{cv_classify, SegmentLabel};
use crate::error::{Error, Result};
use crate::sim::sensor::{RASTER_HEIGHT, RASTER_WIDTH, ROI_WIDTH};
use crate::sim::{CameraParams, LaneView, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdParams {
    pub mask_lo: u8,
    pub mask_hi: u8,
    pub edge_low: f64,
    pub edge_high: f64,
    pub angle_bins: usize,
    /// Accumulator bin width along the normal, pixels.
    pub rho_step: f64,
    pub min_votes: u32,
    /// Lines closer than this to vertical, degrees, count for neither side.
    pub min_lean_deg: f64,
    pub left_roi_col: usize,
    pub right_roi_col: usize,
}

impl Default for LdParams {
    fn default() -> Self {
        Self::for_camera(&CameraParams::default())
    }
}

impl LdParams {
    /// Defaults with the regions of interest aligned to a camera.
    pub fn for_camera(cam: &CameraParams) -> Self {
        Self {
            mask_lo: 215,
            mask_hi: 255,
            edge_low: 200.0,
            edge_high: 500.0,
            angle_bins: 180,
            rho_step: 1.0,
            min_votes: 7,
            min_lean_deg: cam.min_lean_deg,
            left_roi_col: cam.left_roi_col,
            right_roi_col: cam.right_roi_col,
        }
    }
}

fn blur(img: &Raster) -> Vec<f64> {
    const K: [[f64; 3]; 3] = [[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]];
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut out = vec![0.0; (w * h) as usize];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (dr, row) in K.iter().enumerate() {
                for (dc, k) in row.iter().enumerate() {
                    let rr = (r + dr as isize - 1).clamp(0, h - 1);
                    let cc = (c + dc as isize - 1).clamp(0, w - 1);
                    acc += k * img.get(cc as usize, rr as usize) as f64;
                }
            }
            out[(r * w + c) as usize] = acc / 16.0;
        }
    }
    out
}

/// Gradient magnitude with double threshold and hysteresis.
fn edges(masked: &[f64], w: usize, h: usize, low: f64, high: f64) -> Vec<bool> {
    let at = |c: isize, r: isize| -> f64 {
        let c = c.clamp(0, w as isize - 1) as usize;
        let r = r.clamp(0, h as isize - 1) as usize;
        masked[r * w + c]
    };
    let mut mag = vec![0.0; w * h];
    for r in 0..h as isize {
        for c in 0..w as isize {
            let gx = at(c + 1, r - 1) + 2.0 * at(c + 1, r) + at(c + 1, r + 1)
                - at(c - 1, r - 1)
                - 2.0 * at(c - 1, r)
                - at(c - 1, r + 1);
            let gy = at(c - 1, r + 1) + 2.0 * at(c, r + 1) + at(c + 1, r + 1)
                - at(c - 1, r - 1)
                - 2.0 * at(c, r - 1)
                - at(c + 1, r - 1);
            mag[r as usize * w + c as usize] = gx.hypot(gy);
        }
    }
    let mut keep = vec![false; w * h];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (i, &m) in mag.iter().enumerate() {
        if m >= high {
            keep[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (r, c) = ((i / w) as isize, (i % w) as isize);
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (rr, cc) = (r + dr, c + dc);
                if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                    continue;
                }
                let j = rr as usize * w + cc as usize;
                if !keep[j] && mag[j] >= low {
                    keep[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    keep
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

impl Side {
    /// Whether a line with normal angle `t` in `[0, pi)` leans the way this
    /// side's boundary does, by at least `min_lean` from vertical.
    fn accepts(self, t: f64, min_lean: f64) -> bool {
        match self {
            Side::Left => t >= min_lean && t < FRAC_PI_2,
            Side::Right => t > FRAC_PI_2 && t <= PI - min_lean,
        }
    }
}

/// Largest column gap inside one stroke of edge pixels.
const STROKE_GAP: usize = 4;

/// Center column of each stroke of edge pixels in one row.
fn run_centers(row: &[bool]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut run: Option<(usize, usize)> = None;
    for (c, _) in row.iter().enumerate().filter(|(_, &e)| e) {
        run = match run {
            Some((a, b)) if c - b <= STROKE_GAP => Some((a, c)),
            Some((a, b)) => {
                out.push((a + b) as f64 / 2.0);
                Some((c, c))
            }
            None => Some((c, c)),
        };
    }
    if let Some((a, b)) = run {
        out.push((a + b) as f64 / 2.0);
    }
    out
}

/// Line accumulator over one region of interest: one point per stroke per
/// row, each row voting at most once per cell.
struct Accumulator {
    angles: Vec<f64>,
    rho_bins: usize,
    votes: Vec<u32>,
}

impl Accumulator {
    fn build(edge: &[bool], w: usize, h: usize, c0: usize, p: &LdParams) -> Self {
        let diag = ((ROI_WIDTH * ROI_WIDTH + h * h) as f64).sqrt();
        let rho_bins = (2.0 * diag / p.rho_step).ceil() as usize + 1;
        let angles: Vec<f64> = (0..p.angle_bins).map(|k| PI * k as f64 / p.angle_bins as f64).collect();
        let trig: Vec<(f64, f64)> = angles.iter().map(|t| (t.cos(), t.sin())).collect();
        let mut votes = vec![0u32; p.angle_bins * rho_bins];
        let mut last_row = vec![usize::MAX; p.angle_bins * rho_bins];
        for r in 0..h {
            for x in run_centers(&edge[r * w + c0..r * w + c0 + ROI_WIDTH]) {
                let y = r as f64;
                for (k, &(ct, st)) in trig.iter().enumerate() {
                    let rho = x * ct + y * st;
                    let cell = k * rho_bins + ((rho + diag) / p.rho_step) as usize;
                    if last_row[cell] != r {
                        last_row[cell] = r;
                        votes[cell] += 1;
                    }
                }
            }
        }
        Self { angles, rho_bins, votes }
    }

    fn is_peak(&self, k: usize, j: usize) -> bool {
        let v = self.votes[k * self.rho_bins + j];
        let ks = k.saturating_sub(1)..=(k + 1).min(self.angles.len() - 1);
        ks.flat_map(|kk| (j.saturating_sub(1)..=(j + 1).min(self.rho_bins - 1)).map(move |jj| (kk, jj)))
            .all(|(kk, jj)| self.votes[kk * self.rho_bins + jj] <= v)
    }

    /// Votes of the strongest peak whose line leans like `side`.
    fn side_votes(&self, side: Side, min_lean: f64) -> u32 {
        let mut best = 0;
        for (k, &t) in self.angles.iter().enumerate() {
            if !side.accepts(t, min_lean) {
                continue;
            }
            for j in 0..self.rho_bins {
                let v = self.votes[k * self.rho_bins + j];
                if v > best && self.is_peak(k, j) {
                    best = v;
                }
            }
        }
        best
    }
}

/// Votes of the strongest line in columns `[c0, c0 + ROI_WIDTH)` that leans
/// like `side`. Lines whose accumulator peak sits at a rejected angle do not count.
fn roi_votes(edge: &[bool], w: usize, h: usize, c0: usize, side: Side, p: &LdParams) -> u32 {
    Accumulator::build(edge, w, h, c0, p).side_votes(side, p.min_lean_deg.to_radians())
}

/// Peak line votes in the left and right regions of interest.
pub fn ld_votes(raster: &Raster, p: &LdParams) -> Result<(u32, u32)> {
    if raster.width() != RASTER_WIDTH || raster.height() != RASTER_HEIGHT {
        return Err(Error::contract(format!(
            "lane detection expects {RASTER_WIDTH}x{RASTER_HEIGHT}, got {}x{}",
            raster.width(),
            raster.height()
        )));
    }
    if p.left_roi_col + ROI_WIDTH > RASTER_WIDTH || p.right_roi_col + ROI_WIDTH > RASTER_WIDTH {
        return Err(Error::Config("region of interest exceeds the image".into()));
    }
    let (w, h) = (RASTER_WIDTH, RASTER_HEIGHT);
    let (lo, hi) = (p.mask_lo as f64, p.mask_hi as f64);
    let masked: Vec<f64> = blur(raster)
        .into_iter()
        .map(|v| if v >= lo && v <= hi { v } else { 0.0 })
        .collect();
    let edge = edges(&masked, w, h, p.edge_low, p.edge_high);
    Ok((
        roi_votes(&edge, w, h, p.left_roi_col, Side::Left, p),
        roi_votes(&edge, w, h, p.right_roi_col, Side::Right, p),
    ))
}

pub fn ld_pipeline(raster: &Raster, p: &LdParams) -> Result<LaneView> {
    let (l, r) = ld_votes(raster, p)?;
    Ok(LaneView::new(l >= p.min_votes, r >= p.min_votes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: SegmentLabel,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdMetrics {
    pub samples: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
}

/// Accuracy and per-class precision, recall and F1 from `(truth, predicted)` pairs.
/// Undefined ratios (no predictions or no support) are reported as zero.
pub fn classification_metrics(pairs: &[(SegmentLabel, SegmentLabel)]) -> Result<LdMetrics> {
    if pairs.is_empty() {
        return Err(Error::contract("metrics need at least one sample"));
    }
    let correct = pairs.iter().filter(|(t, p)| t == p).count();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let per_class = SegmentLabel::ALL
        .into_iter()
        .map(|label| {
            let tp = pairs.iter().filter(|&&(t, p)| t == label && p == label).count();
            let predicted = pairs.iter().filter(|&&(_, p)| p == label).count();
            let support = pairs.iter().filter(|&&(t, _)| t == label).count();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                label,
                support,
                precision,
                recall,
                f1,
            }
        })
        .collect();
    Ok(LdMetrics {
        samples: pairs.len(),
        accuracy: ratio(correct, pairs.len()),
        per_class,
    })
}

/// Runs the pipeline over labelled rasters and scores the resulting segment labels.
pub fn ld_accuracy(dataset: &[(Raster, SegmentLabel)], p: &LdParams) -> Result<LdMetrics> {
    if dataset.is_empty() {
        return Err(Error::contract("lane-detection dataset is empty"));
    }
    let pairs = dataset
        .iter()
        .map(|(img, truth)| Ok((*truth, cv_classify(ld_pipeline(img, p)?).label)))
        .collect::<Result<Vec<_>>>()?;
    classification_metrics(&pairs)
}
