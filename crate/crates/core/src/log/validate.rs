use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::record::{Record, SessionLog, StreamKey};
use super::writer::StreamClock;
use super::LogError;
use crate::protocol::verify_entry;

/// IMU silence longer than this is reported as a coverage gap.
pub const IMU_GAP_NS: u64 = 500_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonMonotonic { record: usize, stream: String, previous: u64, got: u64 },
    FrameIndexNotIncreasing { record: usize, previous: u64, got: u64 },
    /// `ts_appear` is not strictly before `ts_disappear`.
    InvalidWindow { trial: u64, idx: u32, ts_appear: u64, ts_disappear: u64 },
    DuplicateTarget { trial: u64, idx: u32 },
    /// Target event for a trial never issued (only checked when trial records are present).
    UnissuedTarget { trial: u64, idx: u32 },
    MissingEntry { trial: u64 },
    EntryWithoutTargets { trial: u64 },
    DuplicateEntry { trial: u64 },
    /// Stored verdict disagrees with re-verifying the entry against the issued code.
    VerdictMismatch { trial: u64, stored: bool, recomputed: bool },
    NonFiniteValue { record: usize, what: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonMonotonic { record, stream, previous, got } => {
                write!(f, "record {record}: {stream} timestamp {got} ns precedes {previous} ns")
            }
            Violation::FrameIndexNotIncreasing { record, previous, got } => {
                write!(f, "record {record}: frame index {got} does not increase past {previous}")
            }
            Violation::InvalidWindow { trial, idx, ts_appear, ts_disappear } => write!(
                f,
                "trial {trial} digit {idx}: appear {ts_appear} ns is not before disappear {ts_disappear} ns"
            ),
            Violation::DuplicateTarget { trial, idx } => write!(f, "trial {trial} digit {idx}: duplicate target event"),
            Violation::UnissuedTarget { trial, idx } => write!(f, "trial {trial} digit {idx}: target for a trial never issued"),
            Violation::MissingEntry { trial } => write!(f, "trial {trial}: no code entry"),
            Violation::EntryWithoutTargets { trial } => write!(f, "trial {trial}: entry without target events"),
            Violation::DuplicateEntry { trial } => write!(f, "trial {trial}: more than one entry"),
            Violation::VerdictMismatch { trial, stored, recomputed } => {
                write!(f, "trial {trial}: stored accepted={stored} but entry verifies as {recomputed}")
            }
            Violation::NonFiniteValue { record, what } => write!(f, "record {record}: non-finite {what}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImuGap {
    pub sensor: String,
    pub from_ns: u64,
    pub to_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Frames per second from the median inter-frame interval.
    pub frame_rate_fps: Option<f64>,
    pub median_frame_interval_ns: Option<u64>,
    /// Informational: stretches without IMU samples longer than 500 ms.
    pub imu_gaps: Vec<ImuGap>,
    pub record_counts: BTreeMap<String, usize>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (kind, n) in &self.record_counts {
            writeln!(f, "records.{kind}: {n}")?;
        }
        match (self.frame_rate_fps, self.median_frame_interval_ns) {
            (Some(fps), Some(dt)) => writeln!(f, "frame_rate_fps: {fps:.3} (median interval {dt} ns)")?,
            _ => writeln!(f, "frame_rate_fps: n/a")?,
        }
        for gap in &self.imu_gaps {
            writeln!(f, "imu_gap: {} {}..{} ns", gap.sensor, gap.from_ns, gap.to_ns)?;
        }
        writeln!(f, "violations: {}", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Audit a parsed session log. Never fails; findings go in the report.
pub fn validate_session(log: &SessionLog) -> ValidationReport {
    let mut violations = Vec::new();
    let mut record_counts: BTreeMap<String, usize> = BTreeMap::new();

    let mut clock = StreamClock::default();
    for (i, r) in log.records.iter().enumerate() {
        *record_counts.entry(r.kind().to_string()).or_default() += 1;
        match clock.admit(r) {
            Ok(()) => {}
            Err(LogError::MonotonicityViolation { stream, previous, got }) => {
                violations.push(Violation::NonMonotonic { record: i, stream: stream.to_string(), previous, got });
            }
            Err(LogError::FrameIndexNotIncreasing { previous, got }) => {
                violations.push(Violation::FrameIndexNotIncreasing { record: i, previous, got });
            }
            Err(_) => {}
        }
        let finite = |what: &str, vals: &[f64], out: &mut Vec<Violation>| {
            if vals.iter().any(|v| !v.is_finite()) {
                out.push(Violation::NonFiniteValue { record: i, what: what.to_string() });
            }
        };
        match r {
            Record::Imu(s) => finite("imu component", &[s.x, s.y, s.z], &mut violations),
            Record::Target(t) => finite("target coordinate", &[t.u, t.v, t.opacity], &mut violations),
            _ => {}
        }
    }

    let issued: BTreeMap<u64, &crate::protocol::TrialSpec> = log.trials().map(|t| (t.trial_id, t)).collect();
    let voided: BTreeSet<u64> = log.voids().map(|v| v.trial).collect();

    let mut seen_targets = BTreeSet::new();
    let mut trials_with_targets = BTreeSet::new();
    for t in log.targets() {
        if t.ts_appear >= t.ts_disappear {
            violations.push(Violation::InvalidWindow {
                trial: t.trial,
                idx: t.idx,
                ts_appear: t.ts_appear.0,
                ts_disappear: t.ts_disappear.0,
            });
        }
        if !seen_targets.insert((t.trial, t.idx)) {
            violations.push(Violation::DuplicateTarget { trial: t.trial, idx: t.idx });
        }
        if !issued.is_empty() && !issued.contains_key(&t.trial) {
            violations.push(Violation::UnissuedTarget { trial: t.trial, idx: t.idx });
        }
        trials_with_targets.insert(t.trial);
    }

    let mut entered = BTreeSet::new();
    for e in log.entries() {
        if !entered.insert(e.trial) {
            violations.push(Violation::DuplicateEntry { trial: e.trial });
        }
        if !trials_with_targets.contains(&e.trial) {
            violations.push(Violation::EntryWithoutTargets { trial: e.trial });
        }
        if let Some(spec) = issued.get(&e.trial) {
            let recomputed = verify_entry(&spec.code, &e.entered).accepted;
            if recomputed != e.accepted {
                violations.push(Violation::VerdictMismatch { trial: e.trial, stored: e.accepted, recomputed });
            }
        }
    }

    let all_trials: BTreeSet<u64> = issued.keys().copied().chain(trials_with_targets.iter().copied()).collect();
    for trial in all_trials {
        if !entered.contains(&trial) && !voided.contains(&trial) {
            violations.push(Violation::MissingEntry { trial });
        }
    }

    let mut frame_ts: Vec<u64> = log.frames().map(|f| f.ts.0).collect();
    frame_ts.sort_unstable();
    let mut intervals: Vec<u64> = frame_ts.windows(2).map(|w| w[1] - w[0]).collect();
    intervals.sort_unstable();
    let median_frame_interval_ns = match intervals.len() {
        0 => None,
        n if n % 2 == 1 => Some(intervals[n / 2]),
        n => Some((intervals[n / 2 - 1] + intervals[n / 2]) / 2),
    };
    let frame_rate_fps = median_frame_interval_ns.filter(|&dt| dt > 0).map(|dt| 1e9 / dt as f64);

    let mut imu_by_sensor: BTreeMap<StreamKey, Vec<u64>> = BTreeMap::new();
    for s in log.imu() {
        imu_by_sensor.entry(StreamKey::Imu(s.sensor)).or_default().push(s.ts.0);
    }
    let mut imu_gaps = Vec::new();
    for (key, mut ts) in imu_by_sensor {
        ts.sort_unstable();
        for w in ts.windows(2) {
            if w[1] - w[0] > IMU_GAP_NS {
                imu_gaps.push(ImuGap { sensor: key.to_string(), from_ns: w[0], to_ns: w[1] });
            }
        }
    }

    ValidationReport { violations, frame_rate_fps, median_frame_interval_ns, imu_gaps, record_counts }
}
