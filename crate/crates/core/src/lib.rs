//! Recall-verified gaze data collection.
//!
//! A trial shows a participant `N` faint digits one after another at random
//! screen positions. Only a participant who looked at every digit can type the
//! code back reliably, so frames captured while a digit was visible become gaze
//! labels only when the code entry is correct.
//!
//! The crate is split into three layers:
//!
//! - [`protocol`]: pure, seeded trial planning, entry verification, orientation
//!   gating, device geometry, and the guess-probability / trial-time models.
//! - [`log`]: the line-delimited multi-stream session log, its writer, parser,
//!   validator, frame alignment, and label extraction.
//! - [`sim`]: Monte-Carlo participant models (guessers, peripheral readers,
//!   attentive foveators) and campaign metrics.

pub mod log;
pub mod protocol;
pub mod rng;
pub mod sim;

pub use protocol::{Code, OrientationMode, OrientationReading, TrialSpec};
