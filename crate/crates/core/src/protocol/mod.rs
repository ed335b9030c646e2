//! Pure protocol engine: codes, verification, trial planning, orientation
//! gating, device geometry and the entropy / trial-time models.
//!
//! Everything here is deterministic given its seed inputs and holds no shared
//! mutable state.

mod code;
mod entropy;
mod geometry;
mod orientation;
mod planning;

pub use code::{generate_code, generate_code_from, verify_entry, Code, VerificationResult, DIGIT_ALPHABET};
pub use entropy::{
    expected_random_successes, p_guess, p_guess_with_alphabet, trial_time, TimeModelParams,
};
pub use geometry::{eccentricity_deg, target_offset_from_camera, view_offset_from_camera, DeviceGeometry};
pub use orientation::{
    check_orientation_gate, classify_orientation, GateTracker, OrientationMode, OrientationReading,
    GATE_WINDOW, IN_PLANE_GRAVITY_THRESHOLD,
};
pub(crate) use planning::plan_validated;
pub use planning::{
    plan_trial, Condition, ConditionBlock, DigitDuration, DigitWindow, Placement, RingLayout,
    SessionConfig, StimulusParams, TrialSpec,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;
