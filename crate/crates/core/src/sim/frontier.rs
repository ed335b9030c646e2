use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{Result, SimError};
use crate::protocol::{expected_random_successes, p_guess, trial_time, TimeModelParams};

/// One code length on the verification-entropy / throughput frontier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub n: u32,
    pub p_guess: f64,
    /// Accepted blind guesses per 1000 trials from an all-guessing population.
    pub expected_mislabeled_per_1000: f64,
    pub trial_time_ms: f64,
    pub throughput_trials_per_min: f64,
}

pub fn sweep_entropy_throughput(n_range: RangeInclusive<u32>, time: &TimeModelParams) -> Result<Vec<FrontierRow>> {
    if n_range.is_empty() || *n_range.start() == 0 {
        return Err(SimError::InvalidArgument(format!(
            "code length range {}..={} must be non-empty and start at 1 or more",
            n_range.start(),
            n_range.end()
        )));
    }
    if !time.is_valid() {
        return Err(SimError::InvalidArgument("time model components must be non-negative".into()));
    }
    Ok(n_range
        .map(|n| {
            let t = trial_time(time, n);
            FrontierRow {
                n,
                p_guess: p_guess(n),
                expected_mislabeled_per_1000: expected_random_successes(n, 1000),
                trial_time_ms: t,
                throughput_trials_per_min: 60_000.0 / t,
            }
        })
        .collect())
}
