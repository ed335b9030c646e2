use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use super::record::{FrameRecord, SessionLog, TargetEvent, TimestampNs};
use super::LogError;
use crate::protocol::OrientationMode;

/// Frames sorted by timestamp, for repeated window queries.
#[derive(Debug, Clone)]
pub struct FrameTimeline<'a> {
    frames: Vec<&'a FrameRecord>,
}

impl<'a> FrameTimeline<'a> {
    pub fn new(log: &'a SessionLog) -> Self {
        let mut frames: Vec<&FrameRecord> = log.frames().collect();
        frames.sort_by_key(|f| (f.ts, f.idx));
        FrameTimeline { frames }
    }

    /// Frames with `start <= ts < end`, in time order.
    pub fn window(&self, start: TimestampNs, end: TimestampNs) -> &[&'a FrameRecord] {
        let lo = self.frames.partition_point(|f| f.ts < start);
        let hi = self.frames.partition_point(|f| f.ts < end).max(lo);
        &self.frames[lo..hi]
    }
}

fn find_target(log: &SessionLog, trial: u64, digit_index: u32) -> Option<&TargetEvent> {
    log.targets().find(|t| t.trial == trial && t.idx == digit_index)
}

/// Frames captured while digit `digit_index` of `trial` was on screen: `[ts_appear, ts_disappear)`.
pub fn frames_in_window(log: &SessionLog, trial: u64, digit_index: u32) -> Result<Vec<FrameRecord>, LogError> {
    let target = find_target(log, trial, digit_index).ok_or(LogError::NotFound { trial, digit_index })?;
    let timeline = FrameTimeline::new(log);
    Ok(timeline.window(target.ts_appear, target.ts_disappear).iter().map(|f| (*f).clone()).collect())
}

/// One frame paired with the on-screen target the participant was verified to be looking at.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelPair {
    pub frame_index: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub media: Option<String>,
    pub ts: TimestampNs,
    pub u: f64,
    pub v: f64,
    pub orientation: OrientationMode,
    pub trial: u64,
    pub digit_index: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelSet {
    pub pairs: Vec<LabelPair>,
    pub accepted_trials: Vec<u64>,
    /// Trials with a rejected entry; they contribute no pairs.
    pub rejected_trials: Vec<u64>,
}

fn trial_verdicts(log: &SessionLog) -> (BTreeMap<u64, bool>, BTreeSet<u64>) {
    let mut verdicts: BTreeMap<u64, bool> = BTreeMap::new();
    for e in log.entries() {
        let v = verdicts.entry(e.trial).or_insert(true);
        *v &= e.accepted;
    }
    let voided: BTreeSet<u64> = log.voids().map(|v| v.trial).collect();
    let accepted = verdicts.iter().filter(|(t, &ok)| ok && !voided.contains(t)).map(|(&t, _)| t).collect();
    (verdicts, accepted)
}

/// Pair every frame inside an accepted trial's digit windows with that digit's target.
///
/// A trial is accepted when all of its entry records say `accepted` and it was
/// not voided. Orientation comes from the trial record; logs without trial
/// records fall back to the latest determinate orientation sample at or before
/// the frame, then to portrait.
pub fn extract_labels(log: &SessionLog) -> LabelSet {
    let (verdicts, accepted) = trial_verdicts(log);
    let rejected_trials = verdicts.keys().filter(|t| !accepted.contains(t)).copied().collect();

    let mut orient_samples: Vec<(TimestampNs, OrientationMode)> =
        log.orients().filter_map(|o| o.mode.mode().map(|m| (o.ts, m))).collect();
    orient_samples.sort_by_key(|(ts, _)| *ts);
    let fallback_orientation = |ts: TimestampNs| {
        let i = orient_samples.partition_point(|(t, _)| *t <= ts);
        if i == 0 {
            OrientationMode::Portrait
        } else {
            orient_samples[i - 1].1
        }
    };

    let timeline = FrameTimeline::new(log);
    let mut pairs = Vec::new();
    for target in log.targets().filter(|t| accepted.contains(&t.trial)) {
        let required = log.required_orientation(target.trial);
        for frame in timeline.window(target.ts_appear, target.ts_disappear) {
            pairs.push(LabelPair {
                frame_index: frame.idx,
                media: frame.media.clone(),
                ts: frame.ts,
                u: target.u,
                v: target.v,
                orientation: required.unwrap_or_else(|| fallback_orientation(frame.ts)),
                trial: target.trial,
                digit_index: target.idx,
            });
        }
    }
    LabelSet { pairs, accepted_trials: accepted.into_iter().collect(), rejected_trials }
}

pub const LABEL_CSV_HEADER: &str = "frame_index,ts,u,v,orientation,trial,digit_index";

/// Comma-separated label table with a header row.
pub fn labels_to_csv(pairs: &[LabelPair]) -> String {
    let mut out = String::with_capacity(64 * (pairs.len() + 1));
    out.push_str(LABEL_CSV_HEADER);
    out.push('\n');
    for p in pairs {
        let _ = writeln!(out, "{},{},{},{},{},{},{}", p.frame_index, p.ts, p.u, p.v, p.orientation, p.trial, p.digit_index);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TapLatency {
    pub trial: u64,
    pub digit_index: u32,
    pub latency_ms: f64,
}

/// Appear-to-tap latency for each digit of accepted trials that logged taps.
///
/// Tap `i` of an entry is matched with target `i` of the same trial. Taps
/// recorded before their digit appeared are skipped.
pub fn tap_latencies(log: &SessionLog) -> Vec<TapLatency> {
    let (_, accepted) = trial_verdicts(log);
    let mut out = Vec::new();
    for e in log.entries().filter(|e| accepted.contains(&e.trial)) {
        let Some(taps) = &e.taps else { continue };
        for (i, tap) in taps.iter().enumerate() {
            let Some(target) = find_target(log, e.trial, i as u32) else { continue };
            if tap.0 >= target.ts_appear.0 {
                out.push(TapLatency {
                    trial: e.trial,
                    digit_index: i as u32,
                    latency_ms: (tap.0 - target.ts_appear.0) as f64 / 1e6,
                });
            }
        }
    }
    out
}
