//! Camera and wheel-speed sensing.
//!
//! The camera is a downward-looking pinhole over flat ground. Image columns
//! are linear in the bearing tangent `lateral / forward` (right positive) and
//! rows are linear in `1 / forward`, row 0 being the far edge. A side's lane
//! counts as visible when that side's boundary crosses its 30-column region
//! of interest on at least `min_rows` distinct rows. The two regions overlap
//! around the image center; in the picture the sides differ by the lean of
//! their lines, the left boundary drifting left toward the bottom rows.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::odometry::{opto_speed, OptoParams};
use super::track::Track;
use super::vehicle::VehicleState;
use crate::error::{Error, Result};

pub const RASTER_WIDTH: usize = 200;
pub const RASTER_HEIGHT: usize = 66;
pub const ROI_WIDTH: usize = 30;
pub const LANE_PIXEL: u8 = 255;
pub const GROUND_PIXEL: u8 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LaneView {
    pub left_visible: bool,
    pub right_visible: bool,
}

impl LaneView {
    pub const fn new(left_visible: bool, right_visible: bool) -> Self {
        Self {
            left_visible,
            right_visible,
        }
    }
}

/// Row-major 8-bit grayscale image, row 0 farthest from the car.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Raster {
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::contract(format!(
                "raster buffer holds {} bytes, expected {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, v: u8) {
        self.data[row * self.width + col] = v;
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SenseMode {
    #[default]
    Geometric,
    Raster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraParams {
    /// Ground distance imaged on the bottom row, meters.
    pub near: f64,
    /// Ground distance imaged on the top row, meters.
    pub far: f64,
    /// Bearing tangent at the image edges.
    pub half_width: f64,
    /// First column of the left region of interest.
    pub left_roi_col: usize,
    /// First column of the right region of interest.
    pub right_roi_col: usize,
    pub min_rows: usize,
    /// Smallest angle from vertical, degrees, at which a boundary trace counts
    /// as leaning toward a side.
    pub min_lean_deg: f64,
    /// Extra offset beyond the lane edge after which nothing is reported.
    pub cutoff: f64,
    /// Boundary samples per meter of arc.
    pub samples_per_meter: f64,
}

impl Default for CameraParams {
    fn default() -> Self {
        Self {
            near: 0.2,
            far: 0.8,
            half_width: 1.8,
            left_roi_col: 75,
            right_roi_col: 95,
            min_rows: 7,
            min_lean_deg: 6.5,
            cutoff: 0.0,
            samples_per_meter: 500.0,
        }
    }
}

impl CameraParams {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.near
            && self.near < self.far
            && self.half_width > 0.0
            && self.left_roi_col + ROI_WIDTH <= RASTER_WIDTH
            && self.right_roi_col + ROI_WIDTH <= RASTER_WIDTH
            && self.min_rows > 0
            && self.min_rows <= RASTER_HEIGHT
            && (0.0..90.0).contains(&self.min_lean_deg)
            && self.samples_per_meter > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid camera parameters {self:?}")))
        }
    }

    /// Continuous image coordinates `(column, row)` of a ground point at
    /// `forward` meters ahead and `right` meters to the right.
    pub fn image_point(&self, forward: f64, right: f64) -> Option<(f64, f64)> {
        if forward < self.near || forward > self.far {
            return None;
        }
        let u = (right / forward / self.half_width + 1.0) * 0.5 * RASTER_WIDTH as f64;
        if !(0.0..RASTER_WIDTH as f64).contains(&u) {
            return None;
        }
        let (inv_far, inv_near) = (1.0 / self.far, 1.0 / self.near);
        let t = (1.0 / forward - inv_far) / (inv_near - inv_far);
        Some((u, t * (RASTER_HEIGHT - 1) as f64))
    }

    /// Pixel hit by a ground point, if it lands inside the image.
    pub fn project(&self, forward: f64, right: f64) -> Option<(usize, usize)> {
        self.image_point(forward, right)
            .map(|(u, r)| (u as usize, (r.round() as usize).min(RASTER_HEIGHT - 1)))
    }

    fn in_roi(col: usize, start: usize) -> bool {
        (start..start + ROI_WIDTH).contains(&col)
    }

    pub fn in_left_roi(&self, col: usize) -> bool {
        Self::in_roi(col, self.left_roi_col)
    }

    pub fn in_right_roi(&self, col: usize) -> bool {
        Self::in_roi(col, self.right_roi_col)
    }
}

/// Which way a boundary trace leans as it climbs the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lean {
    Left,
    Right,
    Neither,
}

#[derive(Debug, Clone, Copy)]
struct BoundaryPixel {
    col: usize,
    row: usize,
    lean: Lean,
}

/// Image-plane samples of both lane boundaries as seen from `state`.
fn boundary_pixels(state: &VehicleState, track: &Track, cam: &CameraParams) -> [Vec<BoundaryPixel>; 2] {
    let (fx, fy) = (state.heading.cos(), state.heading.sin());
    let (rx, ry) = (-fy, fx);
    // Any boundary point inside the view lies within this arc window.
    let behind = track.lane_width();
    let reach = cam.far * (1.0 + cam.half_width) + track.lane_width();
    let n = ((behind + reach) * cam.samples_per_meter).ceil() as usize;
    let half = track.half_width();
    let min_slope = cam.min_lean_deg.to_radians().tan();
    let mut out = [Vec::new(), Vec::new()];
    let mut prev: [Option<(f64, f64)>; 2] = [None, None];
    for i in 0..=n {
        let s = state.arc_position - behind + (behind + reach) * i as f64 / n as f64;
        if !track.is_closed() && !(0.0..=track.length()).contains(&s) {
            prev = [None, None];
            continue;
        }
        for (k, off) in [half, -half].into_iter().enumerate() {
            let (px, py) = track.point_at(s, off);
            let (dx, dy) = (px - state.x, py - state.y);
            let Some((u, r)) = cam.image_point(dx * fx + dy * fy, dx * rx + dy * ry) else {
                prev[k] = None;
                continue;
            };
            let lean = match prev[k] {
                Some((pu, pr)) if (r - pr).abs() > 1e-9 => {
                    let slope = (u - pu) / (r - pr);
                    if slope < -min_slope {
                        Lean::Left
                    } else if slope > min_slope {
                        Lean::Right
                    } else {
                        Lean::Neither
                    }
                }
                _ => Lean::Neither,
            };
            prev[k] = Some((u, r));
            out[k].push(BoundaryPixel {
                col: u as usize,
                row: (r.round() as usize).min(RASTER_HEIGHT - 1),
                lean,
            });
        }
    }
    out
}

fn distinct_rows_in(pixels: &[BoundaryPixel], lean: Lean, roi: impl Fn(usize) -> bool) -> usize {
    let mut rows = [false; RASTER_HEIGHT];
    // count the full 3x3 footprint that `render` paints for each sample
    for p in pixels {
        let touches = (p.col.saturating_sub(1)..=p.col + 1).any(&roi);
        if p.lean == lean && touches {
            rows[p.row.saturating_sub(1)..=(p.row + 1).min(RASTER_HEIGHT - 1)].fill(true);
        }
    }
    rows.iter().filter(|&&b| b).count()
}

/// Noise-free lane visibility: a side is visible when boundary traces leaning
/// that side's way cross at least `min_rows` rows of its region of interest.
pub fn geometric_view(state: &VehicleState, track: &Track, cam: &CameraParams) -> LaneView {
    if state.lateral_offset.abs() > track.half_width() + cam.cutoff {
        return LaneView::default();
    }
    let all: Vec<BoundaryPixel> = boundary_pixels(state, track, cam).concat();
    LaneView {
        left_visible: distinct_rows_in(&all, Lean::Left, |c| cam.in_left_roi(c)) >= cam.min_rows,
        right_visible: distinct_rows_in(&all, Lean::Right, |c| cam.in_right_roi(c)) >= cam.min_rows,
    }
}

/// Renders the lane boundaries as 3x3 bright dots on a dark ground.
pub fn render(state: &VehicleState, track: &Track, cam: &CameraParams) -> Raster {
    let mut img = Raster::filled(RASTER_WIDTH, RASTER_HEIGHT, GROUND_PIXEL);
    if state.lateral_offset.abs() > track.half_width() + cam.cutoff {
        return img;
    }
    for side in boundary_pixels(state, track, cam) {
        for BoundaryPixel { col: c, row: r, .. } in side {
            for rr in r.saturating_sub(1)..=(r + 1).min(RASTER_HEIGHT - 1) {
                for cc in c.saturating_sub(1)..=(c + 1).min(RASTER_WIDTH - 1) {
                    img.set(cc, rr, LANE_PIXEL);
                }
            }
        }
    }
    img
}

fn flip<R: Rng + ?Sized>(b: bool, noise: f64, rng: &mut R) -> bool {
    // one draw per flag regardless of noise keeps streams aligned across configs
    let u: f64 = rng.random();
    if u < noise {
        !b
    } else {
        b
    }
}

/// One labelled sensor snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub label: u64,
    pub lane_view: LaneView,
    pub measured_speed: f64,
    pub raster: Option<Raster>,
    pub timestamp: f64,
    /// Pose at capture time; the steering surrogate reads it in place of pixels.
    pub truth: VehicleState,
}

/// Lane visibility with independent flag flips, plus the raster in raster mode.
pub fn sense<R: Rng + ?Sized>(
    state: &VehicleState,
    track: &Track,
    noise: f64,
    mode: SenseMode,
    cam: &CameraParams,
    rng: &mut R,
) -> Result<(LaneView, Option<Raster>)> {
    if !(0.0..1.0).contains(&noise) {
        return Err(Error::Range {
            what: "sensor flip probability",
            value: noise,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let truth = geometric_view(state, track, cam);
    let view = LaneView {
        left_visible: flip(truth.left_visible, noise, rng),
        right_visible: flip(truth.right_visible, noise, rng),
    };
    let raster = match mode {
        SenseMode::Geometric => None,
        SenseMode::Raster => Some(render(state, track, cam)),
    };
    Ok((view, raster))
}

/// Camera plus opto-coupler with a per-sensor label counter.
#[derive(Debug, Clone)]
pub struct SensorSuite {
    pub camera: CameraParams,
    pub opto: OptoParams,
    pub mode: SenseMode,
    pub noise: f64,
    next_label: u64,
}

impl SensorSuite {
    pub fn new(camera: CameraParams, opto: OptoParams, mode: SenseMode, noise: f64) -> Self {
        Self {
            camera,
            opto,
            mode,
            noise,
            next_label: 1,
        }
    }

    pub fn capture<R: Rng + ?Sized>(
        &mut self,
        state: &VehicleState,
        track: &Track,
        rng: &mut R,
    ) -> Result<SensorFrame> {
        let (lane_view, raster) = sense(state, track, self.noise, self.mode, &self.camera, rng)?;
        let label = self.next_label;
        self.next_label += 1;
        Ok(SensorFrame {
            label,
            lane_view,
            measured_speed: self.measure_speed(state.speed),
            raster,
            timestamp: state.time,
            truth: *state,
        })
    }

    /// Wheel speed through the opto-coupler; rejected samples read as zero.
    pub fn measure_speed(&self, speed: f64) -> f64 {
        let d = self.opto.wheel_diameter;
        let lambda = speed / (PI * d);
        match opto_speed(lambda, d, self.opto.t_zd, self.opto.t_bt) {
            Ok(Ok(v)) => v,
            _ => 0.0,
        }
    }
}
