//! Kleene three-valued truth values, orthopair valuations and sentence
//! evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// One of the three Kleene truth values, ordered `False < Borderline < True`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthValue {
    False,
    Borderline,
    True,
}

impl TruthValue {
    pub const ALL: [TruthValue; 3] = [TruthValue::False, TruthValue::Borderline, TruthValue::True];

    /// Numeric interpretation: 0, 1/2 or 1.
    pub fn as_f64(self) -> f64 {
        match self {
            TruthValue::False => 0.0,
            TruthValue::Borderline => 0.5,
            TruthValue::True => 1.0,
        }
    }

    pub fn neg(self) -> TruthValue {
        match self {
            TruthValue::False => TruthValue::True,
            TruthValue::Borderline => TruthValue::Borderline,
            TruthValue::True => TruthValue::False,
        }
    }

    pub fn conj(self, other: TruthValue) -> TruthValue {
        self.min(other)
    }

    pub fn disj(self, other: TruthValue) -> TruthValue {
        self.max(other)
    }

    pub fn is_borderline(self) -> bool {
        self == TruthValue::Borderline
    }

    /// The character used in the valuation text form.
    pub fn symbol(self) -> char {
        match self {
            TruthValue::False => '0',
            TruthValue::Borderline => '?',
            TruthValue::True => '1',
        }
    }

    pub fn from_symbol(c: char) -> Option<TruthValue> {
        match c {
            '0' => Some(TruthValue::False),
            '?' => Some(TruthValue::Borderline),
            '1' => Some(TruthValue::True),
            _ => None,
        }
    }
}

impl From<bool> for TruthValue {
    fn from(b: bool) -> Self {
        if b {
            TruthValue::True
        } else {
            TruthValue::False
        }
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

pub(crate) type Words = SmallVec<[u64; 2]>;

pub(crate) fn word_count(n: usize) -> usize {
    n.div_ceil(64)
}

/// A Kleene valuation over `n` propositional variables, stored as its
/// orthopair `(P, N)`: the variables valued true and false. Everything else
/// is borderline.
///
/// Both sets are bit sets of `ceil(n / 64)` words with all bits at positions
/// `>= n` clear, so derived equality and hashing coincide with equality of
/// the `(P, N)` pair.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Valuation {
    n: usize,
    pos: Words,
    neg: Words,
}

impl Valuation {
    /// Builds a valuation from explicit positive and negative index sets.
    pub fn new(
        n: usize,
        positives: impl IntoIterator<Item = usize>,
        negatives: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut v = Valuation::all_borderline(n)?;
        for i in positives {
            check_index(i, n)?;
            set_bit(&mut v.pos, i);
        }
        for i in negatives {
            check_index(i, n)?;
            if get_bit(&v.pos, i) {
                return Err(Error::OverlappingOrthopair(i));
            }
            set_bit(&mut v.neg, i);
        }
        Ok(v)
    }

    /// The valuation with `P = N = ∅`.
    pub fn all_borderline(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("valuation needs at least one variable"));
        }
        let w = word_count(n);
        Ok(Valuation {
            n,
            pos: SmallVec::from_elem(0, w),
            neg: SmallVec::from_elem(0, w),
        })
    }

    pub fn from_truth_values(values: &[TruthValue]) -> Result<Self> {
        let mut v = Valuation::all_borderline(values.len())?;
        for (i, t) in values.iter().enumerate() {
            match t {
                TruthValue::True => set_bit(&mut v.pos, i),
                TruthValue::False => set_bit(&mut v.neg, i),
                TruthValue::Borderline => {}
            }
        }
        Ok(v)
    }

    pub(crate) fn from_words(n: usize, pos: Words, neg: Words) -> Self {
        debug_assert_eq!(pos.len(), word_count(n));
        debug_assert!(pos.iter().zip(&neg).all(|(p, q)| p & q == 0));
        Valuation { n, pos, neg }
    }

    pub(crate) fn pos_words(&self) -> &[u64] {
        &self.pos
    }

    pub(crate) fn neg_words(&self) -> &[u64] {
        &self.neg
    }

    /// Number of propositional variables.
    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false; valuations have at least one variable.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Truth value of variable `i`, or `None` when `i >= n`.
    pub fn get(&self, i: usize) -> Option<TruthValue> {
        if i >= self.n {
            None
        } else if get_bit(&self.pos, i) {
            Some(TruthValue::True)
        } else if get_bit(&self.neg, i) {
            Some(TruthValue::False)
        } else {
            Some(TruthValue::Borderline)
        }
    }

    /// Truth value of variable `i`.
    ///
    /// Panics if `i` is out of range.
    pub fn truth_of(&self, i: usize) -> TruthValue {
        self.get(i)
            .unwrap_or_else(|| panic!("variable {i} out of range for {} variables", self.n))
    }

    pub fn truth_values(&self) -> Vec<TruthValue> {
        (0..self.n).map(|i| self.truth_of(i)).collect()
    }

    /// Indices in `P`, ascending.
    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        iter_bits(&self.pos)
    }

    /// Indices in `N`, ascending.
    pub fn negatives(&self) -> impl Iterator<Item = usize> + '_ {
        iter_bits(&self.neg)
    }

    pub fn positive_count(&self) -> usize {
        popcount(&self.pos)
    }

    pub fn negative_count(&self) -> usize {
        popcount(&self.neg)
    }

    /// Size of `(P ∪ N)ᶜ`.
    pub fn borderline_count(&self) -> usize {
        self.n - self.positive_count() - self.negative_count()
    }

    /// True when no variable is borderline.
    pub fn is_crisp(&self) -> bool {
        self.borderline_count() == 0
    }

    /// Returns a copy with variable `i` set to `t`.
    pub fn with(&self, i: usize, t: TruthValue) -> Result<Self> {
        check_index(i, self.n)?;
        let mut v = self.clone();
        clear_bit(&mut v.pos, i);
        clear_bit(&mut v.neg, i);
        match t {
            TruthValue::True => set_bit(&mut v.pos, i),
            TruthValue::False => set_bit(&mut v.neg, i),
            TruthValue::Borderline => {}
        }
        Ok(v)
    }

    pub(crate) fn check_same_len(&self, other: &Valuation) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            write!(f, "{}", self.truth_of(i).symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Valuation(\"{self}\")")
    }
}

impl FromStr for Valuation {
    type Err = Error;

    /// Parses the text form: one of `0`, `?`, `1` per variable.
    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .chars()
            .map(|c| {
                TruthValue::from_symbol(c)
                    .ok_or_else(|| Error::Parse(format!("invalid truth symbol {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::Parse("empty valuation".into()));
        }
        Valuation::from_truth_values(&values)
    }
}

impl Serialize for Valuation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Valuation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        Err(Error::VariableOutOfRange { index: i, n })
    } else {
        Ok(())
    }
}

fn set_bit(words: &mut [u64], i: usize) {
    words[i / 64] |= 1 << (i % 64);
}

fn clear_bit(words: &mut [u64], i: usize) {
    words[i / 64] &= !(1 << (i % 64));
}

fn get_bit(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

pub(crate) fn popcount(words: &[u64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}

pub(crate) fn iter_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(wi, &w)| {
        let mut rest = w;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(wi * 64 + b)
        })
    })
}

/// A sentence built from propositional variables with `¬`, `∧` and `∨`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Sentence {
    Var(usize),
    Not(Box<Sentence>),
    And(Box<Sentence>, Box<Sentence>),
    Or(Box<Sentence>, Box<Sentence>),
}

impl Sentence {
    pub fn var(i: usize) -> Self {
        Sentence::Var(i)
    }

    pub fn negate(s: Sentence) -> Self {
        Sentence::Not(Box::new(s))
    }

    pub fn and(a: Sentence, b: Sentence) -> Self {
        Sentence::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Sentence, b: Sentence) -> Self {
        Sentence::Or(Box::new(a), Box::new(b))
    }

    /// Largest variable index appearing in the sentence.
    pub fn max_var(&self) -> usize {
        match self {
            Sentence::Var(i) => *i,
            Sentence::Not(s) => s.max_var(),
            Sentence::And(a, b) | Sentence::Or(a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Kleene evaluation under `v`.
    pub fn evaluate(&self, v: &Valuation) -> Result<TruthValue> {
        Ok(match self {
            Sentence::Var(i) => v.get(*i).ok_or(Error::VariableOutOfRange {
                index: *i,
                n: v.len(),
            })?,
            Sentence::Not(s) => s.evaluate(v)?.neg(),
            Sentence::And(a, b) => a.evaluate(v)?.conj(b.evaluate(v)?),
            Sentence::Or(a, b) => a.evaluate(v)?.disj(b.evaluate(v)?),
        })
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sentence::Var(i) => write!(f, "p{i}"),
            Sentence::Not(s) => write!(f, "¬{s}"),
            Sentence::And(a, b) => write!(f, "({a} ∧ {b})"),
            Sentence::Or(a, b) => write!(f, "({a} ∨ {b})"),
        }
    }
}

pub fn neg(t: TruthValue) -> TruthValue {
    t.neg()
}

pub fn conj(a: TruthValue, b: TruthValue) -> TruthValue {
    a.conj(b)
}

pub fn disj(a: TruthValue, b: TruthValue) -> TruthValue {
    a.disj(b)
}

pub fn evaluate(s: &Sentence, v: &Valuation) -> Result<TruthValue> {
    s.evaluate(v)
}
