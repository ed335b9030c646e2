//! Monte-Carlo participant simulation.
//!
//! Three behavioural models stand in for human participants:
//!
//! - [`ParticipantModel::Guesser`] never looks and types uniform digits.
//! - [`ParticipantModel::PeripheralReader`] fixates away from the digit (a ring
//!   dot, or the screen centre) and reads it with a probability that decays with
//!   distance; unread digits are guessed.
//! - [`ParticipantModel::Foveator`] looks at every digit; perception, memory and
//!   keypad errors can still make it fail.
//!
//! Only foveator trials yield valid gaze labels, so the label-noise rate of a
//! campaign is the share of accepted trials produced by the other two models.

mod campaign;
mod frontier;
mod models;
mod readability;
pub mod report;
mod session;

pub use campaign::{
    bayes_label_noise, simulate_campaign, wilson_interval, CampaignConfig, CampaignMetrics,
    ConditionMetrics, MixtureComponent, ModelMetrics,
};
pub use frontier::{sweep_entropy_throughput, FrontierRow};
pub use models::{
    analytic_acceptance, simulate_trial, FoveatorParams, IdentifyParams, ModelKind,
    ParticipantModel, SimContext, SimOutcome,
};
pub use session::{accel_for, synthesize_session, SessionRecorder, StreamTiming, SynthConfig, TrialRecording};
pub use readability::{
    fit_two_point_exponential, readability, DurationMultipliers, ExponentialFit, OpacityLevel,
    ReadabilityParams,
};

use thiserror::Error;

use crate::protocol::ProtocolError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

pub type Result<T> = std::result::Result<T, SimError>;
