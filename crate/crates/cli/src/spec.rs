//! Parsers for the compact command-line forms of mixtures and schedules.

use anyhow::{bail, Context, Result};
use gazecode_core::protocol::{Condition, ConditionBlock};
use gazecode_core::sim::{FoveatorParams, MixtureComponent, ParticipantModel, ReadabilityParams};

/// How `foveator` entries in a mixture are parameterized.
#[derive(Debug, Clone, Copy)]
pub enum FoveatorChoice {
    /// Perfect perception, keypad errors tuned to this trial acceptance.
    Acceptance(f64),
    /// Identification calibrated by opacity and duration.
    Calibrated,
}

/// `guesser=0.5,foveator=0.5,peripheral=0`
pub fn parse_mixture(s: &str, foveator: FoveatorChoice, code_length: usize) -> Result<Vec<MixtureComponent>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, weight) = part.split_once('=').with_context(|| format!("mixture entry '{part}' is not model=weight"))?;
        let weight: f64 = weight.trim().parse().with_context(|| format!("bad weight in '{part}'"))?;
        let model = match name.trim() {
            "guesser" => ParticipantModel::Guesser,
            "foveator" => ParticipantModel::Foveator(match foveator {
                FoveatorChoice::Acceptance(a) => FoveatorParams::with_acceptance(a, code_length)?,
                FoveatorChoice::Calibrated => FoveatorParams::default(),
            }),
            "peripheral" | "peripheral_reader" => ParticipantModel::PeripheralReader(ReadabilityParams::default()),
            other => bail!("unknown model '{other}', expected guesser, foveator or peripheral"),
        };
        out.push(MixtureComponent { weight, model });
    }
    if out.is_empty() {
        bail!("mixture is empty");
    }
    Ok(out)
}

/// `control:300@0.1x6,ring:0.13@0.1x6`; `@opacity` defaults to 1.0 and `xrepeats` to 1.
pub fn parse_schedule(s: &str) -> Result<Vec<ConditionBlock>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (rest, repeats) = match part.rsplit_once('x') {
            Some((r, n)) if n.chars().all(|c| c.is_ascii_digit()) && !n.is_empty() => (r, n.parse()?),
            _ => (part, 1),
        };
        let (cond, opacity) = match rest.split_once('@') {
            Some((c, o)) => (c, o.parse().with_context(|| format!("bad opacity in '{part}'"))?),
            None => (rest, 1.0),
        };
        let condition: Condition = cond.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
        out.push(ConditionBlock { condition, opacity, repeats });
    }
    if out.is_empty() {
        bail!("schedule is empty");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture() {
        let m = parse_mixture("guesser=0.5, foveator=0.5", FoveatorChoice::Acceptance(0.9), 4).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].model, ParticipantModel::Guesser);
        assert!(parse_mixture("wizard=1", FoveatorChoice::Calibrated, 4).is_err());
        assert!(parse_mixture("guesser", FoveatorChoice::Calibrated, 4).is_err());
        assert!(parse_mixture("", FoveatorChoice::Calibrated, 4).is_err());
    }

    #[test]
    fn schedule() {
        let s = parse_schedule("control:300@0.1x6,tap,ring:0.13@0.1").unwrap();
        assert_eq!(s[0], ConditionBlock { condition: Condition::Control { duration_ms: 300.0 }, opacity: 0.1, repeats: 6 });
        assert_eq!(s[1], ConditionBlock { condition: Condition::Tap, opacity: 1.0, repeats: 1 });
        assert_eq!(s[2].condition, Condition::Ring { radius_in: 0.13 });
        assert!(parse_schedule("teleport").is_err());
    }
}
