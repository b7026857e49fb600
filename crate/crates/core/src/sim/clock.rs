//! Simulated time. Nothing in the deterministic path reads the wall clock.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimClock {
    now: f64,
    /// Nominal seconds per control cycle, used where no measured cycle time exists.
    pub dt_control: f64,
}

impl SimClock {
    pub fn new(dt_control: f64) -> Self {
        Self {
            now: 0.0,
            dt_control,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Moves forward by `dt`; negative or NaN steps are ignored.
    pub fn advance(&mut self, dt: f64) {
        if dt > 0.0 {
            self.now += dt;
        }
    }

    /// Jumps to `t` if it lies in the future.
    pub fn advance_to(&mut self, t: f64) {
        if t > self.now {
            self.now = t;
        }
    }
}

impl Default for SimClock {
    fn default() -> Self {
        Self::new(0.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone() {
        let mut c = SimClock::default();
        c.advance(0.5);
        c.advance(-1.0);
        c.advance_to(0.2);
        assert_eq!(c.now(), 0.5);
        c.advance_to(2.0);
        assert_eq!(c.now(), 2.0);
    }
}
