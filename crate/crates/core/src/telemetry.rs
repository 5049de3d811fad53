//! Per-cycle CSV telemetry and its invariant audit.
//!
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly, so the audit can demand bit equality.

use std::fmt::Write as _;
use std::path::Path;

use crate::controller::CycleRecord;
use crate::error::{FscoError, Result};

pub const HEADER: &str = "step,g_loss,d_loss,action_u,eta_fsco_d,reward";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRow {
    pub step: u64,
    pub g_loss: f64,
    pub d_loss: f64,
    pub action_u: f64,
    pub eta_fsco_d: f64,
    pub reward: f64,
}

impl From<&CycleRecord> for TelemetryRow {
    fn from(r: &CycleRecord) -> Self {
        TelemetryRow {
            step: r.step,
            g_loss: r.g_loss,
            d_loss: r.d_loss,
            action_u: r.action_u,
            eta_fsco_d: r.eta_fsco_d,
            reward: r.reward,
        }
    }
}

/// 17 significant digits in scientific notation.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_telemetry(records: &[CycleRecord]) -> String {
    let mut s = String::with_capacity(HEADER.len() + 1 + records.len() * 128);
    s.push_str(HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.step,
            format_f64(r.g_loss),
            format_f64(r.d_loss),
            format_f64(r.action_u),
            format_f64(r.eta_fsco_d),
            format_f64(r.reward)
        );
    }
    s
}

pub fn write_telemetry(records: &[CycleRecord], path: &Path) -> Result<()> {
    std::fs::write(path, render_telemetry(records)).map_err(|e| FscoError::io(path, e))
}

pub fn parse_telemetry(text: &str) -> Result<Vec<TelemetryRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(FscoError::Format { offset: 0, msg: format!("expected header `{HEADER}`") }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| FscoError::Format { offset: i + 1, msg: format!("line {}: {msg}", i + 1) };
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(bad(format!("{} cells, expected 6", cells.len())));
        }
        let f = |j: usize| cells[j].trim().parse::<f64>().map_err(|_| bad(format!("cannot parse `{}`", cells[j])));
        rows.push(TelemetryRow {
            step: cells[0].trim().parse().map_err(|_| bad(format!("cannot parse step `{}`", cells[0])))?,
            g_loss: f(1)?,
            d_loss: f(2)?,
            action_u: f(3)?,
            eta_fsco_d: f(4)?,
            reward: f(5)?,
        });
    }
    Ok(rows)
}

pub fn read_telemetry(path: &Path) -> Result<Vec<TelemetryRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| FscoError::io(path, e))?;
    parse_telemetry(&text)
}

/// One failed identity in an audited CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// 1-based line in the CSV file (the header is line 1).
    pub line: usize,
    pub step: u64,
    pub what: String,
}

/// Bit-exact audit of the step-size and reward identities plus the action range.
pub fn audit(rows: &[TelemetryRow], eta_d_base: f64, u_floor: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut flag = |what: String| out.push(Violation { line: i + 2, step: r.step, what });
        let eta = eta_d_base * r.action_u;
        if eta.to_bits() != r.eta_fsco_d.to_bits() {
            flag(format!("eta_fsco_d {} != eta_d_base × action_u = {}", r.eta_fsco_d, eta));
        }
        let reward = -(r.g_loss - r.d_loss).abs();
        if reward.to_bits() != r.reward.to_bits() {
            flag(format!("reward {} != −|g_loss − d_loss| = {}", r.reward, reward));
        }
        if !(r.action_u >= u_floor && r.action_u <= 1.0) {
            flag(format!("action_u {} outside [{u_floor}, 1]", r.action_u));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn rec(step: u64, g: f64, d: f64, u: f64) -> CycleRecord {
        CycleRecord { step, g_loss: g, d_loss: d, action_u: u, eta_fsco_d: 0.002 * u, reward: -(g - d).abs(), wall_time: 0.1 }
    }

    #[test]
    fn empty_is_header_only() {
        assert_eq!(render_telemetry(&[]), format!("{HEADER}\n"));
        assert!(parse_telemetry(&render_telemetry(&[])).unwrap().is_empty());
    }

    #[test]
    fn one_row_per_record_and_clean_audit() {
        let recs: Vec<_> = (0..7).map(|i| rec(i, 0.7 + i as f64 * 0.1, 1.3, 0.1 / (i + 1) as f64)).collect();
        let text = render_telemetry(&recs);
        assert_eq!(text.lines().count(), 8);
        let rows = parse_telemetry(&text).unwrap();
        assert!(audit(&rows, 0.002, 0.001).is_empty());
    }

    #[test]
    fn tampered_reward_names_line() {
        let recs: Vec<_> = (0..3).map(|i| rec(i, 0.7, 1.3, 0.5)).collect();
        let mut rows = parse_telemetry(&render_telemetry(&recs)).unwrap();
        rows[1].reward += 1e-9;
        let v = audit(&rows, 0.002, 0.001);
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].line, v[0].step), (3, 1));
        assert!(v[0].what.contains("reward"));
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(parse_telemetry("a,b\n").is_err());
        assert!(parse_telemetry(&format!("{HEADER}\n1,2,3\n")).is_err());
        assert!(parse_telemetry(&format!("{HEADER}\n1,x,3,4,5,6\n")).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            vals in proptest::collection::vec((any::<f64>(), any::<f64>(), 0.0f64..=1.0), 0..20)
        ) {
            let recs: Vec<CycleRecord> = vals
                .iter()
                .enumerate()
                .filter(|(_, (g, d, _))| g.is_finite() && d.is_finite())
                .map(|(i, &(g, d, u))| rec(i as u64, g, d, u))
                .collect();
            let rows = parse_telemetry(&render_telemetry(&recs)).unwrap();
            prop_assert_eq!(rows.len(), recs.len());
            for (r, c) in rows.iter().zip(&recs) {
                prop_assert_eq!(r.g_loss.to_bits(), c.g_loss.to_bits());
                prop_assert_eq!(r.d_loss.to_bits(), c.d_loss.to_bits());
                prop_assert_eq!(r.action_u.to_bits(), c.action_u.to_bits());
                prop_assert_eq!(r.eta_fsco_d.to_bits(), c.eta_fsco_d.to_bits());
                prop_assert_eq!(r.reward.to_bits(), c.reward.to_bits());
            }
        }
    }
}
