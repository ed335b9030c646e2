//! Guess probability and the affine trial-time model.

use serde::{Deserialize, Serialize};

use super::DIGIT_ALPHABET;

/// Probability that a uniform blind guess of an `N`-digit decimal code is correct: `10^-N`.
pub fn p_guess(code_length: u32) -> f64 {
    p_guess_with_alphabet(code_length, DIGIT_ALPHABET)
}

/// `alphabet^-N`, computed as a single correctly rounded division.
pub fn p_guess_with_alphabet(code_length: u32, alphabet: u8) -> f64 {
    1.0 / (alphabet as f64).powi(code_length as i32)
}

/// Expected number of blind-guess successes over `trials` trials.
pub fn expected_random_successes(code_length: u32, trials: u64) -> f64 {
    // Divide rather than multiply by p_guess so that e.g. 1000 / 10^4 is the
    // correctly rounded 0.1.
    trials as f64 / (DIGIT_ALPHABET as f64).powi(code_length as i32)
}

/// Per-trial time components in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeModelParams {
    pub t_setup_ms: f64,
    /// Per digit: bubble animation, display interval and inter-digit gap.
    pub t_digit_ms: f64,
    pub t_entry_ms: f64,
}

impl Default for TimeModelParams {
    fn default() -> Self {
        TimeModelParams { t_setup_ms: 2000.0, t_digit_ms: 800.0, t_entry_ms: 3000.0 }
    }
}

impl TimeModelParams {
    pub fn is_valid(&self) -> bool {
        [self.t_setup_ms, self.t_digit_ms, self.t_entry_ms]
            .iter()
            .all(|t| t.is_finite() && *t >= 0.0)
    }
}

/// `t_setup + N * t_digit + t_entry`.
pub fn trial_time(params: &TimeModelParams, code_length: u32) -> f64 {
    params.t_setup_ms + code_length as f64 * params.t_digit_ms + params.t_entry_ms
}
