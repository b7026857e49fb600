//! Piecewise track centerlines built from straights and circular arcs.
//!
//! Coordinates use a screen-style frame: `x` east, `y` south, headings
//! measured clockwise from `+x`. A positive curvature therefore turns the
//! vehicle right, matching the steering sign convention. Lateral offsets are
//! signed with left of the direction of travel positive.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CLOSURE_TOL: f64 = 1e-6;

/// One centerline piece as written in a track file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Segment {
    Straight { length: f64 },
    LeftArc { radius: f64, angle_deg: f64 },
    RightArc { radius: f64, angle_deg: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Straight,
    LeftArc,
    RightArc,
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentKind::Straight => "straight",
            SegmentKind::LeftArc => "left_arc",
            SegmentKind::RightArc => "right_arc",
        })
    }
}

impl Segment {
    pub fn kind(&self) -> SegmentKind {
        match self {
            Segment::Straight { .. } => SegmentKind::Straight,
            Segment::LeftArc { .. } => SegmentKind::LeftArc,
            Segment::RightArc { .. } => SegmentKind::RightArc,
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Segment::Straight { length } => length,
            Segment::LeftArc { radius, angle_deg } | Segment::RightArc { radius, angle_deg } => {
                radius * angle_deg.to_radians()
            }
        }
    }

    /// Signed curvature, positive for right turns.
    pub fn curvature(&self) -> f64 {
        match *self {
            Segment::Straight { .. } => 0.0,
            Segment::RightArc { radius, .. } => 1.0 / radius,
            Segment::LeftArc { radius, .. } => -1.0 / radius,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Segment::Straight { length } => length > 0.0 && length.is_finite(),
            Segment::LeftArc { radius, angle_deg } | Segment::RightArc { radius, angle_deg } => {
                radius > 0.0 && angle_deg > 0.0 && angle_deg < 360.0 && radius.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::contract(format!("degenerate track segment {self:?}")))
        }
    }
}

/// Serialized track description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    pub lane_width: f64,
    pub closed: bool,
    pub segments: Vec<Segment>,
}

impl TrackSpec {
    /// The built-in laboratory loop: a rounded rectangle driven clockwise
    /// (right turns only), about 10 m around, 3.2 m x 2.4 m footprint.
    pub fn default_loop() -> Self {
        let corner = Segment::RightArc {
            radius: 0.7,
            angle_deg: 90.0,
        };
        Self {
            lane_width: 0.5,
            closed: true,
            segments: vec![
                Segment::Straight { length: 1.8 },
                corner,
                Segment::Straight { length: 1.0 },
                corner,
                Segment::Straight { length: 1.8 },
                corner,
                Segment::Straight { length: 1.0 },
                corner,
            ],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("track file: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("track spec serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read track {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn left_normal(&self) -> (f64, f64) {
        (self.heading.sin(), -self.heading.cos())
    }
}

/// Result of projecting a point onto the centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub arc_position: f64,
    pub lateral_offset: f64,
    pub segment: usize,
    pub tangent: f64,
    pub distance: f64,
}

#[derive(Debug, Clone)]
struct Placed {
    seg: Segment,
    start: Pose,
    s0: f64,
    len: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Straight,
    NearCurve,
    InCurve,
}

impl Zone {
    pub const ALL: [Zone; 3] = [Zone::Straight, Zone::NearCurve, Zone::InCurve];

    pub fn as_str(self) -> &'static str {
        match self {
            Zone::Straight => "straight",
            Zone::NearCurve => "near_curve",
            Zone::InCurve => "in_curve",
        }
    }
}

/// A validated track with precomputed segment placements.
#[derive(Debug, Clone)]
pub struct Track {
    spec: TrackSpec,
    placed: Vec<Placed>,
    length: f64,
}

pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

fn advance(start: Pose, seg: &Segment, s: f64) -> Pose {
    let k = seg.curvature();
    if k == 0.0 {
        Pose {
            x: start.x + s * start.heading.cos(),
            y: start.y + s * start.heading.sin(),
            heading: start.heading,
        }
    } else {
        let h = start.heading + k * s;
        Pose {
            x: start.x + (h.sin() - start.heading.sin()) / k,
            y: start.y - (h.cos() - start.heading.cos()) / k,
            heading: h,
        }
    }
}

impl Track {
    pub fn new(spec: TrackSpec) -> Result<Self> {
        if !(spec.lane_width > 0.0) {
            return Err(Error::contract("lane_width must be positive"));
        }
        if spec.segments.is_empty() {
            return Err(Error::contract("track has no segments"));
        }
        let mut placed = Vec::with_capacity(spec.segments.len());
        let mut pose = Pose {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        };
        let mut s0 = 0.0;
        for seg in &spec.segments {
            seg.validate()?;
            let len = seg.length();
            placed.push(Placed {
                seg: *seg,
                start: pose,
                s0,
                len,
            });
            pose = advance(pose, seg, len);
            s0 += len;
        }
        if spec.closed {
            let dpos = pose.x.hypot(pose.y);
            let dh = wrap_angle(pose.heading).abs();
            if dpos > CLOSURE_TOL || dh > CLOSURE_TOL {
                return Err(Error::contract(format!(
                    "closed track does not close: end pose off by {dpos:.3e} m, {dh:.3e} rad"
                )));
            }
        }
        Ok(Self {
            spec,
            placed,
            length: s0,
        })
    }

    pub fn default_loop() -> Self {
        Self::new(TrackSpec::default_loop()).expect("built-in track is valid")
    }

    pub fn spec(&self) -> &TrackSpec {
        &self.spec
    }

    pub fn lane_width(&self) -> f64 {
        self.spec.lane_width
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_closed(&self) -> bool {
        self.spec.closed
    }

    pub fn segment_count(&self) -> usize {
        self.placed.len()
    }

    /// Normalizes an arc position into `[0, length)` (closed) or clamps it (open).
    pub fn wrap_s(&self, s: f64) -> f64 {
        if self.spec.closed {
            let w = s.rem_euclid(self.length);
            if w >= self.length {
                0.0
            } else {
                w
            }
        } else {
            s.clamp(0.0, self.length)
        }
    }

    pub fn segment_index_at(&self, s: f64) -> usize {
        let s = self.wrap_s(s);
        match self
            .placed
            .iter()
            .position(|p| s < p.s0 + p.len)
        {
            Some(i) => i,
            None => self.placed.len() - 1,
        }
    }

    pub fn segment_kind_at(&self, s: f64) -> SegmentKind {
        self.placed[self.segment_index_at(s)].seg.kind()
    }

    /// Distance from `s` forward to the start of the next arc, if any arc lies ahead
    /// within one lap.
    pub fn distance_to_next_arc(&self, s: f64) -> Option<f64> {
        let s = self.wrap_s(s);
        let n = self.placed.len();
        let i = self.segment_index_at(s);
        let mut acc = self.placed[i].s0 + self.placed[i].len - s;
        for k in 1..=n {
            let j = (i + k) % n;
            if !self.spec.closed && i + k >= n {
                return None;
            }
            if self.placed[j].seg.kind() != SegmentKind::Straight {
                return Some(acc);
            }
            acc += self.placed[j].len;
        }
        None
    }

    /// Coarse position class: on an arc, within `approach` meters before one,
    /// or on a plain straight.
    pub fn zone_at(&self, s: f64, approach: f64) -> Zone {
        if self.segment_kind_at(s) != SegmentKind::Straight {
            Zone::InCurve
        } else if self.distance_to_next_arc(s).is_some_and(|d| d <= approach) {
            Zone::NearCurve
        } else {
            Zone::Straight
        }
    }

    pub fn segment_start(&self, index: usize) -> f64 {
        self.placed[index].s0
    }

    pub fn segment(&self, index: usize) -> Segment {
        self.placed[index].seg
    }

    /// Centerline pose at arc position `s`.
    pub fn pose_at(&self, s: f64) -> Pose {
        let s = self.wrap_s(s);
        let p = &self.placed[self.segment_index_at(s)];
        advance(p.start, &p.seg, s - p.s0)
    }

    /// Point at arc position `s` displaced laterally by `offset` (left positive).
    pub fn point_at(&self, s: f64, offset: f64) -> (f64, f64) {
        let pose = self.pose_at(s);
        let (nx, ny) = pose.left_normal();
        (pose.x + offset * nx, pose.y + offset * ny)
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        self.placed[self.segment_index_at(s)].seg.curvature()
    }

    fn project_onto(&self, idx: usize, x: f64, y: f64) -> Projection {
        let p = &self.placed[idx];
        let k = p.seg.curvature();
        let (local, offset, tangent, distance);
        if k == 0.0 {
            let (c, sn) = (p.start.heading.cos(), p.start.heading.sin());
            let (dx, dy) = (x - p.start.x, y - p.start.y);
            let along = dx * c + dy * sn;
            let lat = dx * sn - dy * c;
            local = along.clamp(0.0, p.len);
            offset = lat;
            tangent = p.start.heading;
            let excess = along - local;
            distance = excess.hypot(lat);
        } else {
            let (cx, cy) = (
                p.start.x - p.start.heading.sin() / k,
                p.start.y + p.start.heading.cos() / k,
            );
            let (vx, vy) = (x - cx, y - cy);
            let rho = vx.hypot(vy);
            let radius = 1.0 / k.abs();
            let h = if k > 0.0 {
                vx.atan2(-vy)
            } else {
                (-vx).atan2(vy)
            };
            let sweep = p.len * k.abs();
            let delta = ((h - p.start.heading) * k.signum()).rem_euclid(TAU);
            let ang = if delta <= sweep {
                delta
            } else if delta - sweep < TAU - delta {
                sweep
            } else {
                0.0
            };
            local = ang * radius;
            offset = if k > 0.0 { rho - radius } else { radius - rho };
            let foot = advance(p.start, &p.seg, local);
            tangent = foot.heading;
            distance = (x - foot.x).hypot(y - foot.y);
        }
        Projection {
            arc_position: self.wrap_s(p.s0 + local),
            lateral_offset: offset,
            segment: idx,
            tangent: wrap_angle(tangent),
            distance,
        }
    }

    /// Nearest-centerline projection. `hint` (previous arc position) breaks
    /// near-ties between segments that pass close to each other.
    pub fn project(&self, x: f64, y: f64, hint: Option<f64>) -> Projection {
        let mut best: Option<(f64, Projection)> = None;
        for idx in 0..self.placed.len() {
            let cand = self.project_onto(idx, x, y);
            let mut score = cand.distance;
            if let Some(h) = hint {
                let mut ds = (cand.arc_position - h).abs();
                if self.spec.closed {
                    ds = ds.min(self.length - ds);
                }
                // only matters between nearly equidistant candidates
                score += 1e-3 * ds;
            }
            if best.as_ref().is_none_or(|(b, _)| score < *b) {
                best = Some((score, cand));
            }
        }
        best.expect("track has segments").1
    }

    /// Lateral offset of the boundary on each side: `(left, right)`.
    pub fn half_width(&self) -> f64 {
        self.spec.lane_width / 2.0
    }
}
