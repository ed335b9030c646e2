//! Session configuration, study conditions and seeded trial planning.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    generate_code_from, Code, DeviceGeometry, OrientationMode, ProtocolError, Result,
    TimeModelParams, DIGIT_ALPHABET, GATE_WINDOW,
};
use crate::rng::rng_from_seed;

/// Study condition of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Condition {
    /// Baseline recall with a fixed display duration.
    Control { duration_ms: f64 },
    /// Each digit stays until the participant taps.
    Tap,
    /// Digit at the centre of a ring of four fixation dots; the participant fixates a dot.
    Ring { radius_in: f64 },
    /// Varied display duration.
    Interval { duration_ms: f64 },
}

impl Condition {
    pub fn label(&self) -> String {
        self.to_string()
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Condition::Control { duration_ms } | Condition::Interval { duration_ms }
                if !(duration_ms.is_finite() && duration_ms > 0.0) =>
            {
                Err(ProtocolError::InvalidConfiguration(format!(
                    "{self}: duration must be positive"
                )))
            }
            Condition::Ring { radius_in } if !(radius_in.is_finite() && radius_in > 0.0) => Err(
                ProtocolError::InvalidConfiguration(format!("{self}: ring radius must be positive")),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Control { duration_ms } => write!(f, "CONTROL/{duration_ms}ms"),
            Condition::Tap => f.write_str("TAP"),
            Condition::Ring { radius_in } => write!(f, "RING/{radius_in}in"),
            Condition::Interval { duration_ms } => write!(f, "INTERVAL/{duration_ms}ms"),
        }
    }
}

/// Parses `control:300`, `tap`, `ring:0.13`, `interval:50` (case-insensitive kind).
impl FromStr for Condition {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let number = |what: &str| -> Result<f64> {
            arg.ok_or_else(|| ProtocolError::InvalidArgument(format!("{kind} needs a {what}")))?
                .trim_end_matches("ms")
                .trim_end_matches("in")
                .parse::<f64>()
                .map_err(|e| ProtocolError::InvalidArgument(format!("bad {what} in '{s}': {e}")))
        };
        let cond = match kind.to_ascii_lowercase().as_str() {
            "control" => Condition::Control { duration_ms: number("duration")? },
            "tap" => Condition::Tap,
            "ring" => Condition::Ring { radius_in: number("radius")? },
            "interval" => Condition::Interval { duration_ms: number("duration")? },
            other => return Err(ProtocolError::InvalidArgument(format!("unknown condition '{other}'"))),
        };
        cond.validate().map_err(|e| ProtocolError::InvalidArgument(e.to_string()))?;
        Ok(cond)
    }
}

/// How long each digit stays on screen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DigitDuration {
    Fixed(f64),
    /// Serialized as `null`.
    UntilTap,
}

impl DigitDuration {
    pub fn fixed_ms(self) -> Option<f64> {
        match self {
            DigitDuration::Fixed(ms) => Some(ms),
            DigitDuration::UntilTap => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulusParams {
    pub opacity: f64,
    pub digit_duration_ms: DigitDuration,
    pub inter_digit_gap_ms: f64,
    pub bubble_diameter_px: u32,
}

/// A run of consecutive trials sharing a condition and digit opacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionBlock {
    pub condition: Condition,
    pub opacity: f64,
    pub repeats: u32,
}

/// Everything trial planning needs besides the device and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub code_length: usize,
    /// Symbols per digit; 10 for decimal codes, smaller only for simulating binary probes.
    pub alphabet_size: u8,
    /// Trial `k` uses the block covering `k` in the repeated schedule, cycling at the end.
    pub schedule: Vec<ConditionBlock>,
    /// Display duration used in RING trials.
    pub ring_duration_ms: f64,
    pub inter_digit_gap_ms: f64,
    pub bubble_diameter_px: u32,
    /// Extra inset beyond the bubble (or ring) radius.
    pub placement_margin_px: f64,
    pub time_model: TimeModelParams,
    pub viewing_distance_in: f64,
    pub gate_window: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        let control = Condition::Control { duration_ms: 300.0 };
        SessionConfig {
            code_length: 4,
            alphabet_size: DIGIT_ALPHABET,
            schedule: vec![
                ConditionBlock { condition: control, opacity: 1.0, repeats: 6 },
                ConditionBlock { condition: control, opacity: 0.1, repeats: 6 },
            ],
            ring_duration_ms: 300.0,
            inter_digit_gap_ms: 200.0,
            bubble_diameter_px: 48,
            placement_margin_px: 16.0,
            time_model: TimeModelParams::default(),
            viewing_distance_in: 12.0,
            gate_window: GATE_WINDOW,
        }
    }
}

impl SessionConfig {
    /// The full within-subject study: every condition at both opacities, six repeats each.
    pub fn formative_study() -> Self {
        let mut conditions = vec![Condition::Control { duration_ms: 300.0 }, Condition::Tap];
        conditions.extend([0.13, 0.23, 0.33].map(|radius_in| Condition::Ring { radius_in }));
        conditions.extend([50.0, 150.0, 300.0].map(|duration_ms| Condition::Interval { duration_ms }));
        let schedule = conditions
            .into_iter()
            .flat_map(|condition| {
                [1.0, 0.1].map(|opacity| ConditionBlock { condition, opacity, repeats: 6 })
            })
            .collect();
        SessionConfig { schedule, ..SessionConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ProtocolError::InvalidConfiguration(m));
        if self.code_length == 0 {
            return bad("code_length must be >= 1".into());
        }
        if !(2..=DIGIT_ALPHABET).contains(&self.alphabet_size) {
            return bad(format!("alphabet_size {} outside 2..=10", self.alphabet_size));
        }
        if self.schedule.is_empty() {
            return bad("schedule must contain at least one block".into());
        }
        for block in &self.schedule {
            block.condition.validate()?;
            if !(block.opacity > 0.0 && block.opacity <= 1.0) {
                return bad(format!("opacity {} outside (0, 1]", block.opacity));
            }
            if block.repeats == 0 {
                return bad(format!("{}: repeats must be >= 1", block.condition));
            }
        }
        if !(self.ring_duration_ms.is_finite() && self.ring_duration_ms > 0.0) {
            return bad("ring_duration_ms must be positive".into());
        }
        if !(self.inter_digit_gap_ms.is_finite() && self.inter_digit_gap_ms >= 0.0) {
            return bad("inter_digit_gap_ms must be non-negative".into());
        }
        if self.bubble_diameter_px == 0 {
            return bad("bubble_diameter_px must be positive".into());
        }
        if !(self.placement_margin_px.is_finite() && self.placement_margin_px >= 0.0) {
            return bad("placement_margin_px must be non-negative".into());
        }
        if !self.time_model.is_valid() {
            return bad("time model components must be non-negative".into());
        }
        if !(self.viewing_distance_in.is_finite() && self.viewing_distance_in > 0.0) {
            return bad("viewing_distance_in must be positive".into());
        }
        if self.gate_window == 0 {
            return bad("gate_window must be >= 1".into());
        }
        Ok(())
    }

    /// Block governing trial `trial_index`.
    pub fn block_for_trial(&self, trial_index: u64) -> ConditionBlock {
        let cycle: u64 = self.schedule.iter().map(|b| b.repeats as u64).sum();
        let mut k = trial_index % cycle.max(1);
        for block in &self.schedule {
            if k < block.repeats as u64 {
                return *block;
            }
            k -= block.repeats as u64;
        }
        self.schedule[0]
    }

    /// Stimulus parameters for a block under this configuration.
    pub fn stimulus_for(&self, block: &ConditionBlock) -> StimulusParams {
        let digit_duration_ms = match block.condition {
            Condition::Control { duration_ms } | Condition::Interval { duration_ms } => {
                DigitDuration::Fixed(duration_ms)
            }
            Condition::Ring { .. } => DigitDuration::Fixed(self.ring_duration_ms),
            Condition::Tap => DigitDuration::UntilTap,
        };
        StimulusParams {
            opacity: block.opacity,
            digit_duration_ms,
            inter_digit_gap_ms: self.inter_digit_gap_ms,
            bubble_diameter_px: self.bubble_diameter_px,
        }
    }
}

/// Normalized position in the displayed frame of the trial's orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub u: f64,
    pub v: f64,
}

/// Display window of one digit, relative to trial start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DigitWindow {
    Timed { appear_offset_ms: f64, disappear_offset_ms: f64 },
    /// Shown until tapped; appears this long after the previous tap (or trial start).
    UntilTap { delay_ms: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingLayout {
    pub center: Placement,
    pub radius_in: f64,
    pub radius_px: f64,
    /// North, east, south, west of the centre.
    pub fixation_dots: [Placement; 4],
}

/// One issued trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub trial_id: u64,
    pub code: Code,
    pub condition: Condition,
    pub stimulus: StimulusParams,
    pub required_orientation: OrientationMode,
    pub digit_placements: Vec<Placement>,
    pub schedule: Vec<DigitWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring_layout: Option<RingLayout>,
}

/// Plan one trial.
///
/// The seed drives, in order: the code digits (identical to
/// [`generate_code`](super::generate_code) for decimal codes), the required
/// orientation, then the placements (or the ring centre). In RING trials every
/// digit sits at the ring centre.
pub fn plan_trial(
    config: &SessionConfig,
    block: &ConditionBlock,
    geometry: &DeviceGeometry,
    trial_id: u64,
    rng_seed: u64,
) -> Result<TrialSpec> {
    config.validate()?;
    geometry.validate()?;
    plan_validated(config, block, geometry, trial_id, rng_seed)
}

/// [`plan_trial`] without re-validating `config` and `geometry`.
pub(crate) fn plan_validated(
    config: &SessionConfig,
    block: &ConditionBlock,
    geometry: &DeviceGeometry,
    trial_id: u64,
    rng_seed: u64,
) -> Result<TrialSpec> {
    let mut rng = rng_from_seed(rng_seed);
    let code = generate_code_from(config.code_length, config.alphabet_size, &mut rng)?;
    let required_orientation = OrientationMode::ALL[rng.gen_range(0..4)];
    let (dw, dh) = geometry.displayed_size(required_orientation);

    let bubble_inset = config.bubble_diameter_px as f64 / 2.0 + config.placement_margin_px;
    if 2.0 * bubble_inset > dw.min(dh) {
        return Err(ProtocolError::InvalidConfiguration(format!(
            "bubble of {} px does not fit a {dw}x{dh} screen",
            config.bubble_diameter_px
        )));
    }

    let stimulus = config.stimulus_for(block);
    let n = code.len();

    let (digit_placements, ring_layout) = match block.condition {
        Condition::Ring { radius_in } => {
            let radius_px = radius_in * geometry.dpi;
            let inset = (radius_px + config.placement_margin_px).max(bubble_inset);
            if 2.0 * inset > dw.min(dh) {
                return Err(ProtocolError::InvalidConfiguration(format!(
                    "ring of {radius_in} in ({radius_px} px) does not fit a {dw}x{dh} screen"
                )));
            }
            let center = sample_inset(&mut rng, dw, dh, inset);
            let (cx, cy) = (center.u * dw, center.v * dh);
            let dot = |x: f64, y: f64| Placement { u: x / dw, v: y / dh };
            let fixation_dots = [
                dot(cx, cy - radius_px),
                dot(cx + radius_px, cy),
                dot(cx, cy + radius_px),
                dot(cx - radius_px, cy),
            ];
            (vec![center; n], Some(RingLayout { center, radius_in, radius_px, fixation_dots }))
        }
        _ => ((0..n).map(|_| sample_inset(&mut rng, dw, dh, bubble_inset)).collect(), None),
    };

    let gap = stimulus.inter_digit_gap_ms;
    let schedule = match stimulus.digit_duration_ms {
        DigitDuration::Fixed(duration) => (0..n)
            .map(|i| {
                let appear = i as f64 * (duration + gap);
                DigitWindow::Timed { appear_offset_ms: appear, disappear_offset_ms: appear + duration }
            })
            .collect(),
        DigitDuration::UntilTap => (0..n)
            .map(|i| DigitWindow::UntilTap { delay_ms: if i == 0 { 0.0 } else { gap } })
            .collect(),
    };

    Ok(TrialSpec {
        trial_id,
        code,
        condition: block.condition,
        stimulus,
        required_orientation,
        digit_placements,
        schedule,
        ring_layout,
    })
}

fn sample_inset<R: Rng>(rng: &mut R, w: f64, h: f64, inset: f64) -> Placement {
    let x = rng.gen_range(inset..=w - inset);
    let y = rng.gen_range(inset..=h - inset);
    Placement { u: x / w, v: y / h }
}
