use std::fmt;

use serde::{Deserialize, Serialize};

use crate::protocol::{Code, DeviceGeometry, OrientationMode, OrientationReading, TrialSpec};

pub const SCHEMA_VERSION: &str = "gazecode-log/1";

/// Nanoseconds since session creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimestampNs(pub u64);

impl TimestampNs {
    pub fn from_ms(ms: f64) -> Self {
        TimestampNs((ms * 1e6).round() as u64)
    }

    pub fn as_ms(self) -> f64 {
        self.0 as f64 / 1e6
    }
}

impl fmt::Display for TimestampNs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub session_id: String,
    pub created_utc: String,
    pub schema_version: String,
    pub geometry: DeviceGeometry,
    /// Snapshot of the session configuration in effect.
    pub config: serde_json::Value,
    /// Opaque reference to the externally stored video, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media: Option<String>,
}

impl Meta {
    pub fn new(session_id: impl Into<String>, created_utc: impl Into<String>, geometry: DeviceGeometry, config: serde_json::Value) -> Self {
        Meta {
            session_id: session_id.into(),
            created_utc: created_utc.into(),
            schema_version: SCHEMA_VERSION.to_string(),
            geometry,
            config,
            media: None,
        }
    }
}

/// One digit's appearance on screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEvent {
    pub trial: u64,
    pub idx: u32,
    pub digit: u8,
    pub u: f64,
    pub v: f64,
    pub opacity: f64,
    pub ts_appear: TimestampNs,
    pub ts_disappear: TimestampNs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sensor {
    Accel,
    Gyro,
}

/// Accelerometer (m/s²) or gyroscope (rad/s) reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub ts: TimestampNs,
    pub sensor: Sensor,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub ts: TimestampNs,
    pub idx: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub trial: u64,
    pub entered: Code,
    pub ts: TimestampNs,
    pub accepted: bool,
    /// Tap timestamps, TAP condition only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<Vec<TimestampNs>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientRecord {
    pub ts: TimestampNs,
    pub mode: OrientationReading,
}

/// A trial abandoned before its entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoidRecord {
    pub trial: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// A line whose record type this version does not understand, kept byte for byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownRecord {
    pub kind: String,
    pub raw: String,
}

/// Any record after the meta line.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    /// An issued trial, written before any of its events.
    Trial(Box<TrialSpec>),
    Target(TargetEvent),
    Imu(ImuSample),
    Frame(FrameRecord),
    Entry(EntryRecord),
    Orient(OrientRecord),
    Void(VoidRecord),
    Unknown(UnknownRecord),
}

/// Ordering domain for the monotonicity contract. Accelerometer and gyroscope
/// are separate streams since devices deliver them independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamKey {
    Target,
    Imu(Sensor),
    Frame,
    Entry,
    Orient,
}

impl fmt::Display for StreamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamKey::Target => f.write_str("target"),
            StreamKey::Imu(Sensor::Accel) => f.write_str("imu.accel"),
            StreamKey::Imu(Sensor::Gyro) => f.write_str("imu.gyro"),
            StreamKey::Frame => f.write_str("frame"),
            StreamKey::Entry => f.write_str("entry"),
            StreamKey::Orient => f.write_str("orient"),
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "t", rename_all = "lowercase")]
enum Tagged<'a> {
    Meta(&'a Meta),
    Trial(&'a TrialSpec),
    Target(&'a TargetEvent),
    Imu(&'a ImuSample),
    Frame(&'a FrameRecord),
    Entry(&'a EntryRecord),
    Orient(&'a OrientRecord),
    Void(&'a VoidRecord),
}

impl Record {
    /// Value of the `"t"` field.
    pub fn kind(&self) -> &str {
        match self {
            Record::Trial(_) => "trial",
            Record::Target(_) => "target",
            Record::Imu(_) => "imu",
            Record::Frame(_) => "frame",
            Record::Entry(_) => "entry",
            Record::Orient(_) => "orient",
            Record::Void(_) => "void",
            Record::Unknown(u) => &u.kind,
        }
    }

    /// The stream this record is ordered in and its ordering timestamp.
    pub fn stream_ts(&self) -> Option<(StreamKey, TimestampNs)> {
        match self {
            Record::Target(t) => Some((StreamKey::Target, t.ts_appear)),
            Record::Imu(s) => Some((StreamKey::Imu(s.sensor), s.ts)),
            Record::Frame(f) => Some((StreamKey::Frame, f.ts)),
            Record::Entry(e) => Some((StreamKey::Entry, e.ts)),
            Record::Orient(o) => Some((StreamKey::Orient, o.ts)),
            Record::Trial(_) | Record::Void(_) | Record::Unknown(_) => None,
        }
    }

    /// Trial this record belongs to, for trial-scoped record types.
    pub fn trial(&self) -> Option<u64> {
        match self {
            Record::Trial(t) => Some(t.trial_id),
            Record::Target(t) => Some(t.trial),
            Record::Entry(e) => Some(e.trial),
            Record::Void(v) => Some(v.trial),
            _ => None,
        }
    }

    /// Serialize as one log line, without the trailing newline.
    pub fn to_line(&self) -> Result<String, serde_json::Error> {
        let tagged = match self {
            Record::Trial(t) => Tagged::Trial(t),
            Record::Target(t) => Tagged::Target(t),
            Record::Imu(s) => Tagged::Imu(s),
            Record::Frame(f) => Tagged::Frame(f),
            Record::Entry(e) => Tagged::Entry(e),
            Record::Orient(o) => Tagged::Orient(o),
            Record::Void(v) => Tagged::Void(v),
            Record::Unknown(u) => return Ok(u.raw.clone()),
        };
        serde_json::to_string(&tagged)
    }
}

pub(crate) fn meta_line(meta: &Meta) -> Result<String, serde_json::Error> {
    serde_json::to_string(&Tagged::Meta(meta))
}

/// A parsed session: the meta record plus every other record in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub meta: Meta,
    pub records: Vec<Record>,
}

impl SessionLog {
    pub fn new(meta: Meta) -> Self {
        SessionLog { meta, records: Vec::new() }
    }

    /// Canonical text form; parsing it yields an equal log.
    pub fn serialize(&self) -> Result<String, serde_json::Error> {
        let mut out = meta_line(&self.meta)?;
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.to_line()?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn trials(&self) -> impl Iterator<Item = &TrialSpec> {
        self.records.iter().filter_map(|r| match r {
            Record::Trial(t) => Some(t.as_ref()),
            _ => None,
        })
    }

    pub fn targets(&self) -> impl Iterator<Item = &TargetEvent> {
        self.records.iter().filter_map(|r| match r {
            Record::Target(t) => Some(t),
            _ => None,
        })
    }

    pub fn imu(&self) -> impl Iterator<Item = &ImuSample> {
        self.records.iter().filter_map(|r| match r {
            Record::Imu(s) => Some(s),
            _ => None,
        })
    }

    pub fn frames(&self) -> impl Iterator<Item = &FrameRecord> {
        self.records.iter().filter_map(|r| match r {
            Record::Frame(f) => Some(f),
            _ => None,
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = &EntryRecord> {
        self.records.iter().filter_map(|r| match r {
            Record::Entry(e) => Some(e),
            _ => None,
        })
    }

    pub fn orients(&self) -> impl Iterator<Item = &OrientRecord> {
        self.records.iter().filter_map(|r| match r {
            Record::Orient(o) => Some(o),
            _ => None,
        })
    }

    pub fn voids(&self) -> impl Iterator<Item = &VoidRecord> {
        self.records.iter().filter_map(|r| match r {
            Record::Void(v) => Some(v),
            _ => None,
        })
    }

    pub fn unknown(&self) -> impl Iterator<Item = &UnknownRecord> {
        self.records.iter().filter_map(|r| match r {
            Record::Unknown(u) => Some(u),
            _ => None,
        })
    }

    pub fn trial(&self, trial_id: u64) -> Option<&TrialSpec> {
        self.trials().find(|t| t.trial_id == trial_id)
    }

    pub fn required_orientation(&self, trial_id: u64) -> Option<OrientationMode> {
        self.trial(trial_id).map(|t| t.required_orientation)
    }
}
