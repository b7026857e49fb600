//! Safety-confidence estimate from a small discrete Bayesian network.
//!
//! Four observed root nodes (position relative to the next safe turn region,
//! velocity, current steering, commanded steering) feed two assurance nodes:
//! `SafeTurnRegion` and `InTrack`. Inference is exact, by enumeration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::Zone;

macro_rules! node_states {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: [$name; 3] = [$($name::$variant),+];

            pub fn index(self) -> usize {
                self as usize
            }

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                $name::ALL
                    .into_iter()
                    .find(|v| v.as_str().eq_ignore_ascii_case(s))
                    .ok_or_else(|| Error::Config(format!(
                        "'{s}' is not a state of {}", stringify!($name)
                    )))
            }
        }
    };
}

node_states!(Position { Near => "Near", On => "On", Far => "Far" });
node_states!(Velocity { Slow => "Slow", Medium => "Medium", Fast => "Fast" });
node_states!(Steering { Straight => "Straight", Left => "Left", Right => "Right" });
node_states!(CmdSteering { Left => "Left", Straight => "Straight", Right => "Right" });

/// `P(SafeTurnRegion = Yes | position, velocity, steering)`.
const SAFE_TURN_YES: [[[f64; 3]; 3]; 3] = [
    // Near
    [[1.0, 0.8, 0.8], [0.9, 0.6, 0.6], [0.2, 0.1, 0.1]],
    // On
    [[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]],
    // Far
    [[0.9, 0.9, 0.9], [0.8, 0.7, 0.7], [0.5, 0.2, 0.2]],
];

/// `P(InTrack = Yes | safe turn, command, velocity)`; first index 0 is Yes.
const IN_TRACK_YES: [[[f64; 3]; 3]; 2] = [
    [[0.6, 0.2, 0.0], [0.7, 0.5, 0.0], [1.0, 0.9, 0.0]],
    [[0.2, 0.1, 0.0], [0.3, 0.2, 0.0], [0.5, 0.4, 0.0]],
];

/// Categorical priors of the four root nodes, each in state order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RootPriors {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub steering: [f64; 3],
    pub cmd_steering: [f64; 3],
}

impl Default for RootPriors {
    fn default() -> Self {
        Self {
            position: [1.0 / 3.0; 3],
            velocity: [0.2, 0.7, 0.1],
            steering: [0.5, 0.1, 0.4],
            cmd_steering: [0.1, 0.3, 0.6],
        }
    }
}

impl RootPriors {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("position", self.position),
            ("velocity", self.velocity),
            ("steering", self.steering),
            ("cmd_steering", self.cmd_steering),
        ] {
            let sum: f64 = p.iter().sum();
            if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::contract(format!("prior for {name} is not a distribution: {p:?}")));
            }
        }
        Ok(())
    }
}

/// Partial assignment of the root nodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub position: Option<Position>,
    pub velocity: Option<Velocity>,
    pub steering: Option<Steering>,
    pub cmd_steering: Option<CmdSteering>,
}

impl Evidence {
    /// Parses `key=value` pairs such as `position=Far velocity=Medium`.
    pub fn parse<'a>(pairs: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut e = Evidence::default();
        for pair in pairs {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("evidence '{pair}' is not key=value")))?;
            match k.trim().to_ascii_lowercase().as_str() {
                "position" => e.position = Some(v.trim().parse()?),
                "velocity" => e.velocity = Some(v.trim().parse()?),
                "steering" => e.steering = Some(v.trim().parse()?),
                "cmd" | "cmd_steering" | "cmdsteering" => e.cmd_steering = Some(v.trim().parse()?),
                other => return Err(Error::Config(format!("unknown evidence node '{other}'"))),
            }
        }
        Ok(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub safe_turn_yes: f64,
    pub safe_turn_no: f64,
    pub in_track_yes: f64,
    pub in_track_no: f64,
}

/// The network with fixed conditional tables and configurable root priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Network {
    priors: RootPriors,
}

fn candidates<T: Copy>(all: [T; 3], fixed: Option<T>) -> impl Iterator<Item = T> {
    all.into_iter().filter(move |s| fixed.is_none_or(|f| std::mem::discriminant(&f) == std::mem::discriminant(s)))
}

impl Network {
    pub fn new(priors: RootPriors) -> Result<Self> {
        priors.validate()?;
        Ok(Self { priors })
    }

    pub fn priors(&self) -> &RootPriors {
        &self.priors
    }

    pub fn safe_turn_yes(&self, p: Position, v: Velocity, s: Steering) -> f64 {
        SAFE_TURN_YES[p.index()][v.index()][s.index()]
    }

    pub fn in_track_yes(&self, safe_turn: bool, c: CmdSteering, v: Velocity) -> f64 {
        IN_TRACK_YES[usize::from(!safe_turn)][c.index()][v.index()]
    }

    /// Probability of one complete assignment of all six nodes.
    pub fn joint(
        &self,
        p: Position,
        v: Velocity,
        s: Steering,
        c: CmdSteering,
        safe_turn: bool,
        in_track: bool,
    ) -> f64 {
        let pr = &self.priors;
        let st = self.safe_turn_yes(p, v, s);
        let it = self.in_track_yes(safe_turn, c, v);
        pr.position[p.index()]
            * pr.velocity[v.index()]
            * pr.steering[s.index()]
            * pr.cmd_steering[c.index()]
            * if safe_turn { st } else { 1.0 - st }
            * if in_track { it } else { 1.0 - it }
    }

    /// Posterior marginals of the two assurance nodes.
    pub fn infer(&self, e: &Evidence) -> Result<Posterior> {
        let pr = &self.priors;
        let (mut z, mut st_yes, mut it_yes) = (0.0, 0.0, 0.0);
        for p in candidates(Position::ALL, e.position) {
            for v in candidates(Velocity::ALL, e.velocity) {
                for s in candidates(Steering::ALL, e.steering) {
                    for c in candidates(CmdSteering::ALL, e.cmd_steering) {
                        let w = pr.position[p.index()]
                            * pr.velocity[v.index()]
                            * pr.steering[s.index()]
                            * pr.cmd_steering[c.index()];
                        let st = self.safe_turn_yes(p, v, s);
                        z += w;
                        st_yes += w * st;
                        it_yes += w
                            * (st * self.in_track_yes(true, c, v)
                                + (1.0 - st) * self.in_track_yes(false, c, v));
                    }
                }
            }
        }
        if z <= 0.0 {
            return Err(Error::contract("evidence has zero prior probability"));
        }
        let (st, it) = (st_yes / z, it_yes / z);
        Ok(Posterior {
            safe_turn_yes: st,
            safe_turn_no: 1.0 - st,
            in_track_yes: it,
            in_track_no: 1.0 - it,
        })
    }
}

impl Default for Network {
    fn default() -> Self {
        Self::new(RootPriors::default()).expect("default priors are valid")
    }
}

/// Maps simulator quantities onto node states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateThresholds {
    /// Below this speed, m/s, the car is Slow.
    pub slow: f64,
    /// Above this speed, m/s, the car is Fast.
    pub fast: f64,
    /// Steering angles beyond this many degrees count as a turn.
    pub steer_deg: f64,
}

impl Default for StateThresholds {
    fn default() -> Self {
        Self {
            slow: 0.25,
            fast: 0.6,
            steer_deg: 10.0,
        }
    }
}

impl StateThresholds {
    pub fn velocity(&self, speed: f64) -> Velocity {
        if speed < self.slow {
            Velocity::Slow
        } else if speed > self.fast {
            Velocity::Fast
        } else {
            Velocity::Medium
        }
    }

    /// Negative angles steer left.
    pub fn steering(&self, degrees: f64) -> Steering {
        if degrees < -self.steer_deg {
            Steering::Left
        } else if degrees > self.steer_deg {
            Steering::Right
        } else {
            Steering::Straight
        }
    }

    pub fn command(&self, degrees: f64) -> CmdSteering {
        match self.steering(degrees) {
            Steering::Left => CmdSteering::Left,
            Steering::Straight => CmdSteering::Straight,
            Steering::Right => CmdSteering::Right,
        }
    }

    pub fn position(zone: Zone) -> Position {
        match zone {
            Zone::InCurve => Position::On,
            Zone::NearCurve => Position::Near,
            Zone::Straight => Position::Far,
        }
    }

    /// Full root evidence for one control cycle.
    pub fn evidence(&self, zone: Zone, speed: f64, steer_deg: f64, cmd_deg: f64) -> Evidence {
        Evidence {
            position: Some(Self::position(zone)),
            velocity: Some(self.velocity(speed)),
            steering: Some(self.steering(steer_deg)),
            cmd_steering: Some(self.command(cmd_deg)),
        }
    }
}
