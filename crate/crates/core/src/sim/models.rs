use rand::Rng;
use serde::{Deserialize, Serialize};

use super::readability::{lookup_opacity, readability, DurationMultipliers, OpacityLevel, ReadabilityParams};
use super::{Result, SimError};
use crate::protocol::{
    verify_entry, Code, Condition, DeviceGeometry, DigitDuration, Placement, TrialSpec, DIGIT_ALPHABET,
};

/// Probability that an attentive participant identifies a digit, by opacity and duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifyParams {
    /// `decay_k_per_in` is ignored here; the digit is foveated.
    pub base_by_opacity: Vec<OpacityLevel>,
    #[serde(default)]
    pub duration_multipliers: DurationMultipliers,
}

impl IdentifyParams {
    pub fn p_identify(&self, opacity: f64, duration: DigitDuration) -> Result<f64> {
        let level = lookup_opacity(&self.base_by_opacity, opacity)?;
        Ok((level.base * self.duration_multipliers.multiplier(duration)).clamp(0.0, 1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoveatorParams {
    pub identify: IdentifyParams,
    pub eps_memory_per_digit: f64,
    pub eps_entry_per_digit: f64,
}

impl Default for FoveatorParams {
    /// Visible digits always identified; faint digits at `0.67^(1/4)` so a
    /// 4-digit faint CONTROL trial succeeds about 67% of the time. Both are
    /// calibrations, not measurements.
    fn default() -> Self {
        FoveatorParams {
            identify: IdentifyParams {
                base_by_opacity: vec![
                    OpacityLevel { opacity: 1.0, base: 1.0, decay_k_per_in: None },
                    OpacityLevel { opacity: 0.1, base: 0.67f64.powf(0.25), decay_k_per_in: None },
                ],
                duration_multipliers: DurationMultipliers::default(),
            },
            eps_memory_per_digit: 0.0,
            eps_entry_per_digit: 0.0,
        }
    }
}

impl FoveatorParams {
    /// Perfect perception and memory, with a keypad error rate chosen so an
    /// `code_length`-digit trial is accepted with probability `acceptance`.
    pub fn with_acceptance(acceptance: f64, code_length: usize) -> Result<Self> {
        if !(acceptance > 0.0 && acceptance <= 1.0) || code_length == 0 {
            return Err(SimError::InvalidArgument(format!(
                "acceptance {acceptance} must be in (0, 1] with code_length >= 1"
            )));
        }
        Ok(FoveatorParams {
            identify: IdentifyParams {
                base_by_opacity: [1.0, 0.1]
                    .map(|opacity| OpacityLevel { opacity, base: 1.0, decay_k_per_in: None })
                    .to_vec(),
                duration_multipliers: DurationMultipliers::flat(),
            },
            eps_memory_per_digit: 0.0,
            eps_entry_per_digit: 1.0 - acceptance.powf(1.0 / code_length as f64),
        })
    }

    pub fn validate(&self) -> Result<()> {
        for eps in [self.eps_memory_per_digit, self.eps_entry_per_digit] {
            if !(0.0..1.0).contains(&eps) {
                return Err(SimError::InvalidConfiguration(format!("error rate {eps} outside [0, 1)")));
            }
        }
        for l in &self.identify.base_by_opacity {
            if !(0.0..=1.0).contains(&l.base) {
                return Err(SimError::InvalidConfiguration(format!("identify base {} outside [0, 1]", l.base)));
            }
        }
        self.identify.duration_multipliers.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParticipantModel {
    Guesser,
    Foveator(FoveatorParams),
    /// Fixates the nearest ring dot in RING trials and the screen centre otherwise.
    PeripheralReader(ReadabilityParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Guesser,
    Foveator,
    PeripheralReader,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Guesser => "guesser",
            ModelKind::Foveator => "foveator",
            ModelKind::PeripheralReader => "peripheral_reader",
        }
    }
}

impl ParticipantModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            ParticipantModel::Guesser => ModelKind::Guesser,
            ParticipantModel::Foveator(_) => ModelKind::Foveator,
            ParticipantModel::PeripheralReader(_) => ModelKind::PeripheralReader,
        }
    }

    /// Whether accepted trials of this model carry valid gaze labels.
    pub fn foveates(&self) -> bool {
        matches!(self, ParticipantModel::Foveator(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ParticipantModel::Guesser => Ok(()),
            ParticipantModel::Foveator(p) => p.validate(),
            ParticipantModel::PeripheralReader(p) => p.validate(),
        }
    }
}

/// What a simulated participant needs to know about the device and code alphabet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimContext {
    pub geometry: DeviceGeometry,
    pub alphabet_size: u8,
}

impl Default for SimContext {
    fn default() -> Self {
        SimContext { geometry: DeviceGeometry::default(), alphabet_size: DIGIT_ALPHABET }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub trial_id: u64,
    pub entered: Code,
    pub accepted: bool,
    pub foveated_per_digit: Vec<bool>,
    pub model_kind: ModelKind,
}

/// Distance in inches from the peripheral reader's fixation point to each digit.
fn peripheral_eccentricities(spec: &TrialSpec, geometry: &DeviceGeometry) -> Vec<f64> {
    let (dw, dh) = geometry.displayed_size(spec.required_orientation);
    let dist_in = |a: Placement, b: Placement| ((a.u - b.u) * dw).hypot((a.v - b.v) * dh) / geometry.dpi;
    match (&spec.condition, &spec.ring_layout) {
        (Condition::Ring { .. }, Some(ring)) => spec
            .digit_placements
            .iter()
            .map(|&p| ring.fixation_dots.iter().map(|&dot| dist_in(p, dot)).fold(f64::INFINITY, f64::min))
            .collect(),
        _ => {
            let centre = Placement { u: 0.5, v: 0.5 };
            spec.digit_placements.iter().map(|&p| dist_in(p, centre)).collect()
        }
    }
}

fn other_symbol<R: Rng + ?Sized>(rng: &mut R, current: u8, alphabet: u8) -> u8 {
    let r = rng.gen_range(0..alphabet - 1);
    if r >= current {
        r + 1
    } else {
        r
    }
}

/// Play one trial with `model` and verify the entry against the issued code.
pub fn simulate_trial<R: Rng + ?Sized>(
    model: &ParticipantModel,
    spec: &TrialSpec,
    ctx: &SimContext,
    rng: &mut R,
) -> Result<SimOutcome> {
    let alphabet = ctx.alphabet_size;
    if !(2..=DIGIT_ALPHABET).contains(&alphabet) {
        return Err(SimError::InvalidArgument(format!("alphabet size {alphabet} outside 2..=10")));
    }
    let truth = spec.code.digits();
    let n = truth.len();
    let opacity = spec.stimulus.opacity;
    let duration = spec.stimulus.digit_duration_ms;

    let entered: Vec<u8> = match model {
        ParticipantModel::Guesser => (0..n).map(|_| rng.gen_range(0..alphabet)).collect(),
        ParticipantModel::Foveator(p) => {
            let p_id = p.identify.p_identify(opacity, duration)?;
            truth
                .iter()
                .map(|&d| {
                    let mut held = if rng.gen::<f64>() < p_id { d } else { rng.gen_range(0..alphabet) };
                    if rng.gen::<f64>() < p.eps_memory_per_digit {
                        held = other_symbol(rng, held, alphabet);
                    }
                    if rng.gen::<f64>() < p.eps_entry_per_digit {
                        held = other_symbol(rng, held, alphabet);
                    }
                    held
                })
                .collect()
        }
        ParticipantModel::PeripheralReader(params) => {
            let ecc = peripheral_eccentricities(spec, &ctx.geometry);
            truth
                .iter()
                .zip(ecc)
                .map(|(&d, e)| {
                    let r = readability(params, e, opacity, duration)?;
                    Ok(if rng.gen::<f64>() < r { d } else { rng.gen_range(0..alphabet) })
                })
                .collect::<Result<_>>()?
        }
    };

    let entered = Code::new(entered)?;
    let accepted = verify_entry(&spec.code, &entered).accepted;
    Ok(SimOutcome {
        trial_id: spec.trial_id,
        entered,
        accepted,
        foveated_per_digit: vec![model.foveates(); n],
        model_kind: model.kind(),
    })
}

/// Exact probability that `model` passes `spec`.
///
/// Per digit: correct after perception with `p + (1-p)/A`, then each
/// corruption stage keeps a correct digit with `1-eps` and turns a wrong one
/// correct with `eps/(A-1)`. Digits are independent, so the trial probability
/// is the product.
pub fn analytic_acceptance(model: &ParticipantModel, spec: &TrialSpec, ctx: &SimContext) -> Result<f64> {
    let a = ctx.alphabet_size as f64;
    let n = spec.code.len() as i32;
    let opacity = spec.stimulus.opacity;
    let duration = spec.stimulus.digit_duration_ms;
    let perceive = |p: f64| p + (1.0 - p) / a;
    let corrupt = |c: f64, eps: f64| c * (1.0 - eps) + (1.0 - c) * eps / (a - 1.0);
    Ok(match model {
        ParticipantModel::Guesser => 1.0 / a.powi(n),
        ParticipantModel::Foveator(p) => {
            let c = perceive(p.identify.p_identify(opacity, duration)?);
            let c = corrupt(corrupt(c, p.eps_memory_per_digit), p.eps_entry_per_digit);
            c.powi(n)
        }
        ParticipantModel::PeripheralReader(params) => {
            let mut prob = 1.0;
            for e in peripheral_eccentricities(spec, &ctx.geometry) {
                prob *= perceive(readability(params, e, opacity, duration)?);
            }
            prob
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{plan_trial, ConditionBlock, SessionConfig};
    use crate::rng::rng_from_seed;

    fn spec_for(condition: Condition, opacity: f64, seed: u64) -> TrialSpec {
        let cfg = SessionConfig::default();
        let block = ConditionBlock { condition, opacity, repeats: 1 };
        plan_trial(&cfg, &block, &DeviceGeometry::default(), seed, seed).unwrap()
    }

    #[test]
    fn perfect_foveator_always_passes() {
        let model = ParticipantModel::Foveator(FoveatorParams::with_acceptance(1.0, 4).unwrap());
        let ctx = SimContext::default();
        let mut rng = rng_from_seed(1);
        for seed in 0..500 {
            let spec = spec_for(Condition::Control { duration_ms: 300.0 }, 0.1, seed);
            let out = simulate_trial(&model, &spec, &ctx, &mut rng).unwrap();
            assert!(out.accepted);
            assert_eq!(out.entered, spec.code);
            assert!(out.foveated_per_digit.iter().all(|&f| f));
        }
    }

    #[test]
    fn corruption_never_reproduces_truth() {
        let mut rng = rng_from_seed(3);
        for current in 0..10 {
            for _ in 0..200 {
                assert_ne!(other_symbol(&mut rng, current, 10), current);
            }
        }
        for _ in 0..100 {
            assert_eq!(other_symbol(&mut rng, 0, 2), 1);
            assert_eq!(other_symbol(&mut rng, 1, 2), 0);
        }
    }

    #[test]
    fn ring_reader_eccentricity_is_the_radius() {
        let spec = spec_for(Condition::Ring { radius_in: 0.23 }, 0.1, 4);
        for e in peripheral_eccentricities(&spec, &DeviceGeometry::default()) {
            assert!((e - 0.23).abs() < 1e-9, "{e}");
        }
    }

    #[test]
    fn with_acceptance_hits_target() {
        let p = FoveatorParams::with_acceptance(0.9, 4).unwrap();
        let model = ParticipantModel::Foveator(p);
        let spec = spec_for(Condition::Control { duration_ms: 300.0 }, 1.0, 0);
        let a = analytic_acceptance(&model, &spec, &SimContext::default()).unwrap();
        assert!((a - 0.9).abs() < 1e-12);
    }

    #[test]
    fn outcome_agrees_with_verification() {
        let models = [
            ParticipantModel::Guesser,
            ParticipantModel::Foveator(FoveatorParams::default()),
            ParticipantModel::PeripheralReader(ReadabilityParams::default()),
        ];
        let ctx = SimContext::default();
        let mut rng = rng_from_seed(11);
        for (i, model) in models.iter().enumerate() {
            for seed in 0..200 {
                let spec = spec_for(Condition::Ring { radius_in: 0.13 }, 0.1, seed);
                let out = simulate_trial(model, &spec, &ctx, &mut rng).unwrap();
                assert_eq!(out.accepted, verify_entry(&spec.code, &out.entered).accepted, "model {i}");
                assert_eq!(out.foveated_per_digit.iter().all(|&f| f), model.foveates());
            }
        }
    }
}
