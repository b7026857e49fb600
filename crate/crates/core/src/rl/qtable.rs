//! Dense action-value table with visit counts and a text file format.
//!
//! File layout:
//!
//! ```text
//! wsimplex-qtable 1
//! dims 21 41 11 3
//! actions 9
//! entries <n>
//! <w> <v> <theta_l> <theta_c> <q0> .. <q8> <n0> .. <n8>
//! ```
//!
//! Only rows with a visit or a nonzero value are written. Values are printed
//! in shortest round-trip form, so a save/load cycle is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::space::{
    valid_action_indices, RlState, N_ACTIONS, N_STATES, THETA_C_STEPS, THETA_L_STEPS, V_STEPS,
    W_STEPS,
};
use crate::error::{Error, Result};

pub const MAGIC: &str = "wsimplex-qtable";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
    visits: Vec<u32>,
}

impl Default for QTable {
    fn default() -> Self {
        Self::new()
    }
}

impl QTable {
    pub fn new() -> Self {
        assert_eq!(N_STATES, W_STEPS * V_STEPS * THETA_L_STEPS * THETA_C_STEPS);
        Self {
            values: vec![0.0; N_STATES * N_ACTIONS],
            visits: vec![0; N_STATES * N_ACTIONS],
        }
    }

    pub fn value(&self, s: RlState, a: usize) -> f64 {
        self.values[s.index() * N_ACTIONS + a]
    }

    pub fn set_value(&mut self, s: RlState, a: usize, v: f64) {
        self.values[s.index() * N_ACTIONS + a] = v;
    }

    pub fn visits(&self, s: RlState, a: usize) -> u32 {
        self.visits[s.index() * N_ACTIONS + a]
    }

    pub fn record_visit(&mut self, s: RlState, a: usize) {
        let c = &mut self.visits[s.index() * N_ACTIONS + a];
        *c = c.saturating_add(1);
    }

    pub fn row(&self, s: RlState) -> &[f64] {
        let i = s.index() * N_ACTIONS;
        &self.values[i..i + N_ACTIONS]
    }

    /// Maximum over the actions valid in `s`.
    pub fn max_value(&self, s: RlState) -> f64 {
        valid_action_indices(s)
            .map(|i| self.value(s, i))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn state_visits(&self, s: RlState) -> u32 {
        let i = s.index() * N_ACTIONS;
        self.visits[i..i + N_ACTIONS].iter().sum()
    }

    /// Number of `(w, v)` grid cells with at least one visit in any steering bucket.
    pub fn visited_wv_pairs(&self) -> usize {
        let mut seen = vec![false; W_STEPS * V_STEPS];
        for i in 0..N_STATES {
            let s = RlState::from_index(i);
            if self.state_visits(s) > 0 {
                seen[s.w_idx as usize * V_STEPS + s.v_idx as usize] = true;
            }
        }
        seen.into_iter().filter(|&b| b).count()
    }

    pub fn visited_states(&self) -> usize {
        (0..N_STATES)
            .filter(|&i| self.state_visits(RlState::from_index(i)) > 0)
            .count()
    }

    pub fn to_text(&self) -> String {
        let rows: Vec<usize> = (0..N_STATES)
            .filter(|&i| {
                let r = i * N_ACTIONS..(i + 1) * N_ACTIONS;
                self.values[r.clone()].iter().any(|&v| v != 0.0 || v.is_sign_negative())
                    || self.visits[r].iter().any(|&c| c > 0)
            })
            .collect();
        let mut out = String::new();
        writeln!(out, "{MAGIC} {VERSION}").unwrap();
        writeln!(out, "dims {W_STEPS} {V_STEPS} {THETA_L_STEPS} {THETA_C_STEPS}").unwrap();
        writeln!(out, "actions {N_ACTIONS}").unwrap();
        writeln!(out, "entries {}", rows.len()).unwrap();
        for i in rows {
            let s = RlState::from_index(i);
            write!(out, "{} {} {} {}", s.w_idx, s.v_idx, s.theta_l_bucket, s.theta_c_bucket).unwrap();
            for a in 0..N_ACTIONS {
                write!(out, " {:?}", self.values[i * N_ACTIONS + a]).unwrap();
            }
            for a in 0..N_ACTIONS {
                write!(out, " {}", self.visits[i * N_ACTIONS + a]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut header = |key: &str| -> Result<Vec<usize>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::format(format!("missing '{key}' header")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(Error::format(format!("expected '{key}' header, got '{line}'")));
            }
            parts
                .map(|p| p.parse().map_err(|_| Error::format(format!("bad number in '{line}'"))))
                .collect()
        };
        if header(MAGIC)? != [VERSION as usize] {
            return Err(Error::format("unsupported q-table version"));
        }
        let dims = header("dims")?;
        if dims != [W_STEPS, V_STEPS, THETA_L_STEPS, THETA_C_STEPS] {
            return Err(Error::format(format!(
                "dimension mismatch: file {dims:?}, expected [{W_STEPS}, {V_STEPS}, {THETA_L_STEPS}, {THETA_C_STEPS}]"
            )));
        }
        if header("actions")? != [N_ACTIONS] {
            return Err(Error::format("action count mismatch"));
        }
        let entries = match header("entries")?.as_slice() {
            [n] => *n,
            _ => return Err(Error::format("malformed entries header")),
        };
        let mut q = Self::new();
        let mut seen = 0;
        for (k, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 + 2 * N_ACTIONS {
                return Err(Error::format(format!("row {k}: {} fields", f.len())));
            }
            let idx = |j: usize| -> Result<u8> {
                f[j].parse().map_err(|_| Error::format(format!("row {k}: bad index '{}'", f[j])))
            };
            let s = RlState::new(idx(0)?, idx(1)?, idx(2)?, idx(3)?)
                .map_err(|e| Error::format(format!("row {k}: {e}")))?;
            for a in 0..N_ACTIONS {
                let v: f64 = f[4 + a]
                    .parse()
                    .map_err(|_| Error::format(format!("row {k}: bad value '{}'", f[4 + a])))?;
                let c: u32 = f[4 + N_ACTIONS + a]
                    .parse()
                    .map_err(|_| Error::format(format!("row {k}: bad count '{}'", f[4 + N_ACTIONS + a])))?;
                q.values[s.index() * N_ACTIONS + a] = v;
                q.visits[s.index() * N_ACTIONS + a] = c;
            }
            seen += 1;
        }
        if seen != entries {
            return Err(Error::format(format!("expected {entries} rows, found {seen}")));
        }
        Ok(q)
    }
}

pub fn save_qtable(q: &QTable, path: &Path) -> Result<()> {
    fs::write(path, q.to_text())?;
    Ok(())
}

pub fn load_qtable(path: &Path) -> Result<QTable> {
    QTable::from_text(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::learn::q_update;
    use crate::rl::space::ACTIONS;

    fn sample() -> QTable {
        let mut q = QTable::new();
        let s = RlState::new(18, 10, 6, 1).unwrap();
        let s2 = RlState::new(19, 11, 6, 1).unwrap();
        q.set_value(s2, 8, 1.0);
        q_update(&mut q, s, ACTIONS[0], 0.5, s2, 0.1, 0.4);
        q.set_value(RlState::new(0, 0, 0, 0).unwrap(), 3, -1.0 / 3.0);
        q
    }

    #[test]
    fn round_trip_is_exact() {
        let q = sample();
        let back = QTable::from_text(&q.to_text()).unwrap();
        assert_eq!(back, q);
        let s = RlState::new(18, 10, 6, 1).unwrap();
        assert_eq!(back.value(s, 0).to_bits(), q.value(s, 0).to_bits());
        assert!((back.value(s, 0) - 0.09).abs() < 1e-12);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = sample().to_text();
        let cut: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(matches!(QTable::from_text(&cut), Err(Error::Format(_))));
        assert!(matches!(QTable::from_text(""), Err(Error::Format(_))));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let text = sample().to_text().replace("dims 21 41 11 3", "dims 21 41 11 4");
        assert!(matches!(QTable::from_text(&text), Err(Error::Format(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.txt");
        let q = sample();
        save_qtable(&q, &p).unwrap();
        assert_eq!(load_qtable(&p).unwrap(), q);
        assert!(fs::read_to_string(&p).unwrap().starts_with("wsimplex-qtable 1\ndims 21 41 11 3\n"));
    }
}
