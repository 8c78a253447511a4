//! Pairwise belief combination and the measures that gate it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kleene::{Valuation, Words};

/// Maximum inconsistency at which two agents still combine, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct InconsistencyThreshold(f64);

impl InconsistencyThreshold {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::config(format!(
                "inconsistency threshold {gamma} outside [0, 1]"
            )));
        }
        Ok(InconsistencyThreshold(gamma))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Combination always allowed.
    pub const OPEN: InconsistencyThreshold = InconsistencyThreshold(1.0);
}

impl<'de> Deserialize<'de> for InconsistencyThreshold {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        InconsistencyThreshold::new(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Which combination operator agents use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operator {
    /// The three-valued consensus operator: conflicts become borderline.
    ThreeValued,
    /// Boolean baseline: conflicts are settled by a fair coin.
    #[serde(rename = "boolean")]
    BooleanStochastic,
}

impl Operator {
    pub fn name(self) -> &'static str {
        match self {
            Operator::ThreeValued => "three-valued",
            Operator::BooleanStochastic => "boolean",
        }
    }

    pub fn combine<R: Rng + ?Sized>(
        self,
        v1: &Valuation,
        v2: &Valuation,
        rng: &mut R,
    ) -> Result<Valuation> {
        match self {
            Operator::ThreeValued => consensus(v1, v2),
            Operator::BooleanStochastic => boolean_stochastic_consensus(v1, v2, rng),
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "three-valued" => Ok(Operator::ThreeValued),
            "boolean" | "boolean-stochastic" => Ok(Operator::BooleanStochastic),
            _ => Err(Error::Parse(format!("unknown operator {s:?}"))),
        }
    }
}

/// The consensus `v1 ⊙ v2`, with orthopair
/// `((P1 − N2) ∪ (P2 − N1), (N1 − P2) ∪ (N2 − P1))`.
pub fn consensus(v1: &Valuation, v2: &Valuation) -> Result<Valuation> {
    v1.check_same_len(v2)?;
    let (p1, n1, p2, n2) = (
        v1.pos_words(),
        v1.neg_words(),
        v2.pos_words(),
        v2.neg_words(),
    );
    let pos: Words = (0..p1.len())
        .map(|w| (p1[w] & !n2[w]) | (p2[w] & !n1[w]))
        .collect();
    let neg: Words = (0..p1.len())
        .map(|w| (n1[w] & !p2[w]) | (n2[w] & !p1[w]))
        .collect();
    Ok(Valuation::from_words(v1.len(), pos, neg))
}

/// Boolean combination: agreeing variables keep their value, each
/// conflicting variable becomes true or false with probability 1/2.
///
/// Coins are drawn one per conflicting variable in ascending index order;
/// no randomness is consumed when the valuations agree everywhere.
pub fn boolean_stochastic_consensus<R: Rng + ?Sized>(
    v1: &Valuation,
    v2: &Valuation,
    rng: &mut R,
) -> Result<Valuation> {
    v1.check_same_len(v2)?;
    if !v1.is_crisp() || !v2.is_crisp() {
        return Err(Error::BorderlineInBooleanOperator);
    }
    let (p1, p2) = (v1.pos_words(), v2.pos_words());
    let n = v1.len();
    let mut pos: Words = p1.iter().zip(p2).map(|(a, b)| a & b).collect();
    for (w, (a, b)) in p1.iter().zip(p2).enumerate() {
        let mut conflicts = a ^ b;
        while conflicts != 0 {
            let bit = conflicts & conflicts.wrapping_neg();
            if rng.random::<bool>() {
                pos[w] |= bit;
            }
            conflicts &= conflicts - 1;
        }
    }
    let neg: Words = pos
        .iter()
        .enumerate()
        .map(|(w, p)| !p & valid_mask(n, w))
        .collect();
    Ok(Valuation::from_words(n, pos, neg))
}

fn valid_mask(n: usize, word: usize) -> u64 {
    let bits = n - word * 64;
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Fraction of variables that `v` leaves borderline.
pub fn vagueness(v: &Valuation) -> f64 {
    v.borderline_count() as f64 / v.len() as f64
}

/// Number of variables on which one valuation is true and the other false.
pub fn conflict_count(v1: &Valuation, v2: &Valuation) -> Result<usize> {
    v1.check_same_len(v2)?;
    let (p1, n1, p2, n2) = (
        v1.pos_words(),
        v1.neg_words(),
        v2.pos_words(),
        v2.neg_words(),
    );
    Ok((0..p1.len())
        .map(|w| ((p1[w] & n2[w]) | (p2[w] & n1[w])).count_ones() as usize)
        .sum())
}

/// `(|P1 ∩ N2| + |P2 ∩ N1|) / n`.
pub fn inconsistency(v1: &Valuation, v2: &Valuation) -> Result<f64> {
    Ok(conflict_count(v1, v2)? as f64 / v1.len() as f64)
}

/// Combines `v1` and `v2` with `operator` when their inconsistency is at most
/// `gamma`; `None` means the pair keeps its beliefs. Both agents adopt the
/// returned valuation.
pub fn gate_and_combine<R: Rng + ?Sized>(
    v1: &Valuation,
    v2: &Valuation,
    gamma: InconsistencyThreshold,
    operator: Operator,
    rng: &mut R,
) -> Result<Option<Valuation>> {
    if inconsistency(v1, v2)? <= gamma.value() {
        operator.combine(v1, v2, rng).map(Some)
    } else {
        Ok(None)
    }
}
