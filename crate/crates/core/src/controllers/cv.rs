//! Discrete lane-classification controller.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::sim::{LaneView, SteerDuty};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentLabel {
    Straight,
    Left,
    Right,
    Out,
}

impl SegmentLabel {
    pub const ALL: [SegmentLabel; 4] = [
        SegmentLabel::Straight,
        SegmentLabel::Left,
        SegmentLabel::Right,
        SegmentLabel::Out,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SegmentLabel::Straight => "straight",
            SegmentLabel::Left => "left",
            SegmentLabel::Right => "right",
            SegmentLabel::Out => "out",
        }
    }
}

impl fmt::Display for SegmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SegmentLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        SegmentLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Format(format!("unknown segment label '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOutput {
    pub label: SegmentLabel,
    pub steer: SteerDuty,
    pub stop: bool,
}

/// Both lanes: straight ahead. Only the left lane: the segment bends right,
/// steer full right. Only the right lane: bends left, steer full left.
/// Neither: out, hold center and stop.
pub fn cv_classify(view: LaneView) -> CvOutput {
    let (label, steer) = match (view.left_visible, view.right_visible) {
        (true, true) => (SegmentLabel::Straight, SteerDuty::CENTER),
        (true, false) => (SegmentLabel::Right, SteerDuty::FULL_RIGHT),
        (false, true) => (SegmentLabel::Left, SteerDuty::FULL_LEFT),
        (false, false) => (SegmentLabel::Out, SteerDuty::CENTER),
    };
    CvOutput {
        label,
        steer,
        stop: label == SegmentLabel::Out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_truth_table() {
        let cases = [
            ((true, true), SegmentLabel::Straight, 15.0, false),
            ((true, false), SegmentLabel::Right, 20.0, false),
            ((false, true), SegmentLabel::Left, 10.0, false),
            ((false, false), SegmentLabel::Out, 15.0, true),
        ];
        for ((l, r), label, duty, stop) in cases {
            let out = cv_classify(LaneView::new(l, r));
            assert_eq!(out.label, label);
            assert_eq!(out.steer.value(), duty);
            assert_eq!(out.stop, stop);
        }
    }

    #[test]
    fn label_text_round_trip() {
        for l in SegmentLabel::ALL {
            assert_eq!(l.to_string().parse::<SegmentLabel>().unwrap(), l);
        }
        assert!("sideways".parse::<SegmentLabel>().is_err());
    }
}
