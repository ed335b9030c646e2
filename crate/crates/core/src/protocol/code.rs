use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ProtocolError, Result};
use crate::rng::rng_from_seed;

/// Symbols available to a code: the decimal digits.
pub const DIGIT_ALPHABET: u8 = 10;

/// A non-empty sequence of decimal digits.
///
/// Serialized as a JSON array of integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct Code(Vec<u8>);

impl Code {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if digits.is_empty() {
            return Err(ProtocolError::InvalidArgument("code must have at least one digit".into()));
        }
        if let Some(bad) = digits.iter().find(|&&d| d >= DIGIT_ALPHABET) {
            return Err(ProtocolError::InvalidArgument(format!("digit {bad} outside 0..=9")));
        }
        Ok(Code(digits))
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<u8>> for Code {
    type Error = ProtocolError;

    fn try_from(digits: Vec<u8>) -> Result<Self> {
        Code::new(digits)
    }
}

impl From<Code> for Vec<u8> {
    fn from(code: Code) -> Self {
        code.0
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for Code {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| ProtocolError::InvalidArgument(format!("'{c}' is not a digit")))
            })
            .collect::<Result<Vec<_>>>()?;
        Code::new(digits)
    }
}

/// Draw `code_length` i.i.d. uniform digits from `0..alphabet` using `rng`.
///
/// Repeats are allowed; that is what makes the chance of a blind guess exactly
/// `alphabet^-N`.
pub fn generate_code_from<R: Rng + ?Sized>(code_length: usize, alphabet: u8, rng: &mut R) -> Result<Code> {
    if code_length == 0 {
        return Err(ProtocolError::InvalidArgument("code_length must be >= 1".into()));
    }
    if !(2..=DIGIT_ALPHABET).contains(&alphabet) {
        return Err(ProtocolError::InvalidArgument(format!("alphabet size {alphabet} outside 2..=10")));
    }
    Ok(Code((0..code_length).map(|_| rng.gen_range(0..alphabet)).collect()))
}

/// Seeded decimal code of the given length.
pub fn generate_code(code_length: usize, rng_seed: u64) -> Result<Code> {
    generate_code_from(code_length, DIGIT_ALPHABET, &mut rng_from_seed(rng_seed))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub accepted: bool,
    /// Element-wise comparison over the shorter of the two codes.
    pub per_digit_correct: Vec<bool>,
}

/// Accept iff `entered` matches `issued` digit for digit with the same length.
///
/// A length mismatch is a rejection, not an error.
pub fn verify_entry(issued: &Code, entered: &Code) -> VerificationResult {
    let per_digit_correct: Vec<bool> =
        issued.0.iter().zip(&entered.0).map(|(a, b)| a == b).collect();
    let accepted = issued.len() == entered.len() && per_digit_correct.iter().all(|&ok| ok);
    VerificationResult { accepted, per_digit_correct }
}
