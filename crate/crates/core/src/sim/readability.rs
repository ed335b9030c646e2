//! Peripheral readability: `base(opacity) * duration_multiplier * exp(-k * eccentricity)`.

use serde::{Deserialize, Serialize};

use super::{Result, SimError};
use crate::protocol::DigitDuration;

/// Opacities are table keys; values closer than this count as the same key.
const OPACITY_KEY_TOLERANCE: f64 = 1e-9;

/// Piecewise-constant multiplier over display duration.
///
/// A duration uses the entry with the largest key not above it; durations
/// shorter than every key use the first entry. Digits shown until tapped use
/// `until_tap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationMultipliers {
    /// `(duration_ms, multiplier)`, ascending by duration.
    pub steps: Vec<(f64, f64)>,
    pub until_tap: f64,
}

impl Default for DurationMultipliers {
    fn default() -> Self {
        DurationMultipliers { steps: vec![(50.0, 0.9), (150.0, 0.95), (300.0, 1.0)], until_tap: 1.0 }
    }
}

impl DurationMultipliers {
    /// No duration effect.
    pub fn flat() -> Self {
        DurationMultipliers { steps: vec![(0.0, 1.0)], until_tap: 1.0 }
    }

    pub fn multiplier(&self, duration: DigitDuration) -> f64 {
        match duration {
            DigitDuration::UntilTap => self.until_tap,
            DigitDuration::Fixed(ms) => {
                let i = self.steps.partition_point(|(d, _)| *d <= ms);
                self.steps[i.saturating_sub(1)].1
            }
        }
    }

    /// Non-decreasing in duration, with `until_tap` at least the last step.
    pub fn is_monotone(&self) -> bool {
        self.steps.windows(2).all(|w| w[0].1 <= w[1].1)
            && self.steps.last().is_none_or(|(_, m)| *m <= self.until_tap)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(SimError::InvalidConfiguration("duration table is empty".into()));
        }
        if !self.steps.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(SimError::InvalidConfiguration("duration keys must be strictly ascending".into()));
        }
        let mults = self.steps.iter().map(|s| s.1).chain([self.until_tap]);
        for m in mults {
            if !(0.0..=1.0).contains(&m) {
                return Err(SimError::InvalidConfiguration(format!("duration multiplier {m} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Per-opacity base probability, optionally with its own decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpacityLevel {
    pub opacity: f64,
    pub base: f64,
    /// Overrides [`ReadabilityParams::decay_k_per_in`] for this opacity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_k_per_in: Option<f64>,
}

pub(crate) fn lookup_opacity(levels: &[OpacityLevel], opacity: f64) -> Result<&OpacityLevel> {
    levels
        .iter()
        .find(|l| (l.opacity - opacity).abs() <= OPACITY_KEY_TOLERANCE)
        .ok_or_else(|| SimError::InvalidConfiguration(format!("no readability entry for opacity {opacity}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityParams {
    pub base_by_opacity: Vec<OpacityLevel>,
    pub decay_k_per_in: f64,
    #[serde(default)]
    pub duration_multipliers: DurationMultipliers,
}

impl Default for ReadabilityParams {
    /// Faint digits calibrated to the RING endpoints (0.33 at 0.13 in, 0.11 at
    /// 0.33 in). Visible digits start at 1.0 and decay slowly; that level is
    /// illustrative, not fitted.
    fn default() -> Self {
        let fit = fit_two_point_exponential(0.13, 0.33, 0.33, 0.11).expect("valid calibration points");
        ReadabilityParams {
            base_by_opacity: vec![
                OpacityLevel { opacity: 0.1, base: fit.base, decay_k_per_in: None },
                OpacityLevel { opacity: 1.0, base: 1.0, decay_k_per_in: Some(0.5) },
            ],
            decay_k_per_in: fit.k_per_in,
            duration_multipliers: DurationMultipliers::flat(),
        }
    }
}

impl ReadabilityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.decay_k_per_in.is_finite() && self.decay_k_per_in >= 0.0) {
            return Err(SimError::InvalidConfiguration("decay k must be non-negative".into()));
        }
        for l in &self.base_by_opacity {
            if !(0.0..=1.0).contains(&l.base) {
                return Err(SimError::InvalidConfiguration(format!("base {} outside [0, 1]", l.base)));
            }
            if let Some(k) = l.decay_k_per_in {
                if !(k.is_finite() && k >= 0.0) {
                    return Err(SimError::InvalidConfiguration("decay k must be non-negative".into()));
                }
            }
        }
        self.duration_multipliers.validate()
    }
}

/// Probability of reading a digit at `eccentricity_in` inches from fixation.
///
/// Non-increasing in eccentricity; non-decreasing in duration for a monotone
/// duration table, and in opacity when bases rise with opacity.
pub fn readability(
    params: &ReadabilityParams,
    eccentricity_in: f64,
    opacity: f64,
    duration: DigitDuration,
) -> Result<f64> {
    if !(eccentricity_in.is_finite() && eccentricity_in >= 0.0) {
        return Err(SimError::InvalidArgument(format!("eccentricity {eccentricity_in} must be non-negative")));
    }
    let level = lookup_opacity(&params.base_by_opacity, opacity)?;
    let k = level.decay_k_per_in.unwrap_or(params.decay_k_per_in);
    let p = level.base * params.duration_multipliers.multiplier(duration) * (-k * eccentricity_in).exp();
    Ok(p.clamp(0.0, 1.0))
}

/// `p(e) = base * exp(-k * e)` through two points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub base: f64,
    pub k_per_in: f64,
}

impl ExponentialFit {
    pub fn eval(&self, eccentricity_in: f64) -> f64 {
        self.base * (-self.k_per_in * eccentricity_in).exp()
    }
}

/// Solve `p1 = base*exp(-k*e1)`, `p2 = base*exp(-k*e2)` for `(base, k)`.
pub fn fit_two_point_exponential(e1: f64, p1: f64, e2: f64, p2: f64) -> Result<ExponentialFit> {
    for p in [p1, p2] {
        if !(p > 0.0 && p <= 1.0) {
            return Err(SimError::InvalidArgument(format!("probability {p} outside (0, 1]")));
        }
    }
    if !(e1.is_finite() && e2.is_finite()) || e1 == e2 {
        return Err(SimError::InvalidArgument("eccentricities must be finite and distinct".into()));
    }
    let k_per_in = (p1 / p2).ln() / (e2 - e1);
    let base = p1 * (k_per_in * e1).exp();
    Ok(ExponentialFit { base, k_per_in })
}
