//! Summative payoffs over valuations and the selection weights derived from
//! them.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kleene::Valuation;

/// Per-variable payoff weights, each in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PayoffProfile(Vec<f64>);

impl PayoffProfile {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::config("payoff profile is empty"));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(-1.0..=1.0).contains(*w))
        {
            return Err(Error::config(format!(
                "payoff weight {w} for variable {i} outside [-1, 1]"
            )));
        }
        Ok(PayoffProfile(weights))
    }

    /// Parses one decimal per line. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let weights = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(lineno, l)| {
                l.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {l:?}: {e}", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        PayoffProfile::new(weights)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PayoffProfile::parse(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    /// Scales every weight by `c`, failing if the result leaves `[-1, 1]`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        PayoffProfile::new(self.0.iter().map(|w| w * c).collect())
    }

    /// The valuation attaining [`max_payoff`]: true where the weight is
    /// positive, false where negative, borderline where zero.
    pub fn optimal_valuation(&self) -> Valuation {
        Valuation::new(
            self.len(),
            (0..self.len()).filter(|&i| self.0[i] > 0.0),
            (0..self.len()).filter(|&i| self.0[i] < 0.0),
        )
        .expect("profile is nonempty and index sets are disjoint")
    }

    fn check_len(&self, v: &Valuation) -> Result<()> {
        if self.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: v.len(),
                found: self.len(),
            });
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for PayoffProfile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        PayoffProfile::new(Vec::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// `Σ_{i∈P} f_i − Σ_{i∈N} f_i`.
pub fn valuation_payoff(v: &Valuation, profile: &PayoffProfile) -> Result<f64> {
    profile.check_len(v)?;
    let f = profile.weights();
    let gain: f64 = v.positives().map(|i| f[i]).sum();
    let loss: f64 = v.negatives().map(|i| f[i]).sum();
    Ok(gain - loss)
}

/// `Σ |f_i|`, the payoff of [`PayoffProfile::optimal_valuation`].
pub fn max_payoff(profile: &PayoffProfile) -> f64 {
    profile.weights().iter().map(|w| w.abs()).sum()
}

/// Payoff shifted by `n`, which is never negative.
pub fn selection_weight(v: &Valuation, profile: &PayoffProfile) -> Result<f64> {
    // clamp absorbs rounding when the payoff sits exactly at -n
    Ok((valuation_payoff(v, profile)? + v.len() as f64).max(0.0))
}

/// Draws each weight independently from Uniform(-1, 1).
pub fn sample_profile<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PayoffProfile> {
    if n == 0 {
        return Err(Error::config("payoff profile needs at least one variable"));
    }
    PayoffProfile::new((0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn profile(w: &[f64]) -> PayoffProfile {
        PayoffProfile::new(w.to_vec()).unwrap()
    }

    #[test]
    fn payoff_examples() {
        let f = profile(&[0.5, -0.2]);
        assert_eq!(valuation_payoff(&"??".parse().unwrap(), &f).unwrap(), 0.0);
        let v = Valuation::new(2, [0], [1]).unwrap();
        assert!((valuation_payoff(&v, &f).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(f.optimal_valuation(), v);
    }

    #[test]
    fn max_payoff_examples() {
        assert_eq!(max_payoff(&profile(&[0.0, 0.0, 0.0])), 0.0);
        assert!((max_payoff(&profile(&[0.5, -0.2])) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn selection_weight_examples() {
        let any = profile(&[0.3, -0.9, 0.1, 1.0, -1.0]);
        assert_eq!(
            selection_weight(&"?????".parse().unwrap(), &any).unwrap(),
            5.0
        );

        let ones = profile(&[1.0, 1.0]);
        assert_eq!(
            selection_weight(&Valuation::new(2, [], [0, 1]).unwrap(), &ones).unwrap(),
            0.0
        );

        let f = profile(&[0.5, -0.2]);
        let best = selection_weight(&"10".parse().unwrap(), &f).unwrap();
        let worst = selection_weight(&"01".parse().unwrap(), &f).unwrap();
        assert!((best - 2.7).abs() < 1e-12);
        assert!((worst - 1.3).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_error() {
        let f = profile(&[0.5]);
        assert!(matches!(
            valuation_payoff(&"10".parse().unwrap(), &f),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
        assert!(selection_weight(&"10".parse().unwrap(), &f).is_err());
    }

    #[test]
    fn profile_validation_and_parsing() {
        assert!(PayoffProfile::new(vec![]).is_err());
        assert!(PayoffProfile::new(vec![1.01]).is_err());
        assert!(PayoffProfile::new(vec![f64::NAN]).is_err());
        let p = PayoffProfile::parse("0.5\n-0.25\n\n1\n").unwrap();
        assert_eq!(p.weights(), &[0.5, -0.25, 1.0]);
        assert!(PayoffProfile::parse("0.5\n2.0\n").is_err());
        assert!(PayoffProfile::parse("abc\n").is_err());
        assert!(serde_json::from_str::<PayoffProfile>("[0.1, -3]").is_err());
    }

    #[test]
    fn profile_file_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profile.txt");
        std::fs::write(&path, "0.1\n7\n").unwrap();
        let err = PayoffProfile::from_file(&path).unwrap_err().to_string();
        assert!(err.contains("profile.txt"), "{err}");
        assert!(PayoffProfile::from_file(dir.path().join("missing.txt")).is_err());
    }

    #[test]
    fn sampled_profiles_are_in_range_and_centered() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let p = sample_profile(1_000_000, &mut rng).unwrap();
        assert!(p.weights().iter().all(|w| (-1.0..=1.0).contains(w)));
        let mean = p.weights().iter().sum::<f64>() / p.len() as f64;
        assert!(mean.abs() <= 0.01, "mean {mean}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_profile(16, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_profile(16, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert!(sample_profile(0, &mut ChaCha8Rng::seed_from_u64(5)).is_err());
    }
}
