//! Synchronized multi-stream session log.
//!
//! A session log is UTF-8 text with one JSON object per line. Every object has
//! a `"t"` field naming its record type; the first line is always the `meta`
//! record. Timestamps are integer nanoseconds on a session-monotonic clock that
//! starts at session creation; `meta.created_utc` anchors it to wall time.
//!
//! ```text
//! {"t":"meta","session_id":"s-000001","created_utc":"...","schema_version":"gazecode-log/1","geometry":{...},"config":{...}}
//! {"t":"trial","trial_id":0,"code":[4,7,1,1],...}
//! {"t":"orient","ts":1000000,"mode":"landscape"}
//! {"t":"target","trial":0,"idx":0,"digit":4,"u":0.41,"v":0.77,"opacity":0.1,"ts_appear":5000000,"ts_disappear":305000000}
//! {"t":"imu","ts":5100000,"sensor":"accel","x":-9.7,"y":0.3,"z":0.8}
//! {"t":"frame","ts":62500000,"idx":1}
//! {"t":"entry","trial":0,"entered":[4,7,1,1],"ts":4100000000,"accepted":true}
//! ```
//!
//! Record types the parser does not know are kept verbatim, so older readers
//! pass newer logs through unchanged.

mod labels;
mod parse;
mod record;
mod validate;
mod writer;

pub use labels::{
    extract_labels, frames_in_window, labels_to_csv, tap_latencies, FrameTimeline, LabelPair, LabelSet, TapLatency,
    LABEL_CSV_HEADER,
};
pub use parse::{parse_session, ParseError, ParseErrorKind};
pub use record::{
    EntryRecord, FrameRecord, ImuSample, Meta, OrientRecord, Record, Sensor, SessionLog, StreamKey,
    TargetEvent, TimestampNs, UnknownRecord, VoidRecord, SCHEMA_VERSION,
};
pub use validate::{validate_session, ImuGap, ValidationReport, Violation};
pub use writer::{LogWriter, StreamClock};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("timestamp regression in stream {stream}: {got} ns after {previous} ns")]
    MonotonicityViolation { stream: StreamKey, previous: u64, got: u64 },
    #[error("frame index {got} does not increase past {previous}")]
    FrameIndexNotIncreasing { previous: u64, got: u64 },
    #[error("log is finalized; no further records accepted")]
    ClosedLog,
    #[error("meta record may only appear once, as the first line")]
    DuplicateMeta,
    #[error("no target event for trial {trial} digit {digit_index}")]
    NotFound { trial: u64, digit_index: u32 },
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
