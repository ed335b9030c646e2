//! Orientation modes, accelerometer classification and the start gate.
//!
//! Axis convention (portrait-native device frame): `+x` points right and `+y`
//! points down in screen space. The accelerometer reports the reaction to
//! gravity, so a device held upright in portrait reads roughly `(0, -9.81, 0)`:
//! the reading points towards the physical "up" edge of the screen.
//!
//! | reading direction | up edge of the portrait screen | mode              |
//! |-------------------|--------------------------------|-------------------|
//! | `-y`              | top                            | Portrait          |
//! | `+y`              | bottom                         | ReversePortrait   |
//! | `-x`              | left (rotated 90° clockwise)   | Landscape         |
//! | `+x`              | right (rotated 90° counter-cw) | ReverseLandscape  |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ProtocolError, Result};

/// Consecutive matching samples required before a trial may start.
pub const GATE_WINDOW: usize = 10;

/// In-plane gravity below this (m/s², half of g) means the device is too flat to classify.
pub const IN_PLANE_GRAVITY_THRESHOLD: f64 = 4.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationMode {
    Portrait,
    ReversePortrait,
    Landscape,
    ReverseLandscape,
}

impl OrientationMode {
    pub const ALL: [OrientationMode; 4] = [
        OrientationMode::Portrait,
        OrientationMode::ReversePortrait,
        OrientationMode::Landscape,
        OrientationMode::ReverseLandscape,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OrientationMode::Portrait => "portrait",
            OrientationMode::ReversePortrait => "reverse_portrait",
            OrientationMode::Landscape => "landscape",
            OrientationMode::ReverseLandscape => "reverse_landscape",
        }
    }

    /// True for the two modes whose displayed frame swaps width and height.
    pub fn is_landscape(self) -> bool {
        matches!(self, OrientationMode::Landscape | OrientationMode::ReverseLandscape)
    }
}

impl fmt::Display for OrientationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OrientationMode {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self> {
        OrientationMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ProtocolError::InvalidArgument(format!("unknown orientation '{s}'")))
    }
}

/// One classified accelerometer sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationReading {
    Portrait,
    ReversePortrait,
    Landscape,
    ReverseLandscape,
    Indeterminate,
}

impl OrientationReading {
    pub fn mode(self) -> Option<OrientationMode> {
        match self {
            OrientationReading::Portrait => Some(OrientationMode::Portrait),
            OrientationReading::ReversePortrait => Some(OrientationMode::ReversePortrait),
            OrientationReading::Landscape => Some(OrientationMode::Landscape),
            OrientationReading::ReverseLandscape => Some(OrientationMode::ReverseLandscape),
            OrientationReading::Indeterminate => None,
        }
    }
}

impl From<OrientationMode> for OrientationReading {
    fn from(mode: OrientationMode) -> Self {
        match mode {
            OrientationMode::Portrait => OrientationReading::Portrait,
            OrientationMode::ReversePortrait => OrientationReading::ReversePortrait,
            OrientationMode::Landscape => OrientationReading::Landscape,
            OrientationMode::ReverseLandscape => OrientationReading::ReverseLandscape,
        }
    }
}

/// Classify an accelerometer reading (m/s²) in the device frame.
///
/// The dominant in-plane axis decides; ties between `|x|` and `|y|` resolve to
/// the portrait pair.
pub fn classify_orientation(accel: [f64; 3]) -> Result<OrientationReading> {
    if accel.iter().any(|c| !c.is_finite()) {
        return Err(ProtocolError::InvalidArgument("non-finite accelerometer sample".into()));
    }
    let [x, y, _] = accel;
    if x.hypot(y) < IN_PLANE_GRAVITY_THRESHOLD {
        return Ok(OrientationReading::Indeterminate);
    }
    Ok(if y.abs() >= x.abs() {
        if y < 0.0 {
            OrientationReading::Portrait
        } else {
            OrientationReading::ReversePortrait
        }
    } else if x < 0.0 {
        OrientationReading::Landscape
    } else {
        OrientationReading::ReverseLandscape
    })
}

/// True iff the newest [`GATE_WINDOW`] readings all equal `required`.
pub fn check_orientation_gate(required: OrientationMode, recent: &[OrientationReading]) -> bool {
    recent.len() >= GATE_WINDOW
        && recent[recent.len() - GATE_WINDOW..].iter().all(|r| r.mode() == Some(required))
}

/// Streaming gate state for one trial.
///
/// Tracks whether the required mode has been held for the debounce window and,
/// once it has, whether it was later lost for a full window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateTracker {
    pub required: OrientationMode,
    window: usize,
    matching_run: usize,
    mismatching_run: usize,
    pub passed: bool,
    pub lost_after_pass: bool,
}

impl GateTracker {
    pub fn new(required: OrientationMode) -> Self {
        Self::with_window(required, GATE_WINDOW)
    }

    pub fn with_window(required: OrientationMode, window: usize) -> Self {
        GateTracker {
            required,
            window: window.max(1),
            matching_run: 0,
            mismatching_run: 0,
            passed: false,
            lost_after_pass: false,
        }
    }

    pub fn observe(&mut self, reading: OrientationReading) {
        if reading.mode() == Some(self.required) {
            self.matching_run += 1;
            self.mismatching_run = 0;
            if self.matching_run >= self.window {
                self.passed = true;
            }
        } else {
            self.matching_run = 0;
            self.mismatching_run += 1;
            if self.passed && self.mismatching_run >= self.window {
                self.lost_after_pass = true;
            }
        }
    }

    /// Currently holding the required mode for at least a full window.
    pub fn holding(&self) -> bool {
        self.matching_run >= self.window
    }
}
