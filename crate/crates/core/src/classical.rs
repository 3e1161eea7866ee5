//! Classical words: sequences of basis rays.
//!
//! Grouping equal letters makes the Gram matrix block-diagonal with one
//! all-ones block per distinct letter, so the spectrum is read off the
//! letter multiplicities without any eigensolve.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GramError, Result};
use crate::linalg::{ProjectiveState, SpectralMeasure, StateSequence};
use crate::random::RngSeed;

/// Letters drawn from `{0, ..., alphabet_size - 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalWord {
    letters: Vec<usize>,
    alphabet_size: usize,
}

impl ClassicalWord {
    pub fn new(letters: Vec<usize>, alphabet_size: usize) -> Result<Self> {
        if letters.is_empty() {
            return Err(GramError::EmptySequence);
        }
        if let Some(&bad) = letters.iter().find(|&&l| l >= alphabet_size) {
            return Err(GramError::IndexOutOfRange {
                index: bad,
                size: alphabet_size,
            });
        }
        Ok(Self {
            letters,
            alphabet_size,
        })
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(e_{i(1)}, ..., e_{i(K)})` in dimension `alphabet_size`.
    pub fn to_sequence(&self) -> Result<StateSequence> {
        let states = self
            .letters
            .iter()
            .map(|&l| ProjectiveState::basis(self.alphabet_size, l))
            .collect::<Result<Vec<_>>>()?;
        StateSequence::new(states)
    }
}

/// Letter -> multiplicity, for the letters that occur.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicityProfile {
    counts: BTreeMap<usize, usize>,
}

impl MultiplicityProfile {
    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.counts
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, letter: usize) -> usize {
        self.counts.get(&letter).copied().unwrap_or(0)
    }
}

pub fn multiplicities(word: &ClassicalWord) -> MultiplicityProfile {
    let mut counts = BTreeMap::new();
    for &l in &word.letters {
        *counts.entry(l).or_insert(0) += 1;
    }
    MultiplicityProfile { counts }
}

/// One eigenvalue `m(j)` and `m(j) - 1` zeros per distinct letter `j`.
pub fn word_gram_spectrum(word: &ClassicalWord) -> SpectralMeasure {
    let mut values = Vec::with_capacity(word.len());
    for &m in multiplicities(word).counts.values() {
        values.push(m as f64);
        values.extend(std::iter::repeat_n(0.0, m - 1));
    }
    SpectralMeasure::from_exact(values)
}

/// `length` i.i.d. uniform letters.
pub fn sample_uniform_word(
    alphabet_size: usize,
    length: usize,
    seed: RngSeed,
) -> Result<ClassicalWord> {
    if alphabet_size == 0 {
        return Err(GramError::InvalidDimension { min: 1, got: 0 });
    }
    if length == 0 {
        return Err(GramError::EmptySequence);
    }
    let mut rng = seed.rng();
    let n = alphabet_size as u64;
    let letters = (0..length)
        .map(|_| rng.random_range(0..n) as usize)
        .collect();
    ClassicalWord::new(letters, alphabet_size)
}

/// `e^{-tau} tau^k / k!`, evaluated in log space.
pub fn poisson_pmf(k: u64, tau: f64) -> Result<f64> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(GramError::InvalidParameter {
            name: "tau",
            reason: format!("must be positive and finite, got {tau}"),
        });
    }
    let ln_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
    Ok((-tau + k as f64 * tau.ln() - ln_fact).exp())
}

/// Fraction of alphabet letters having each multiplicity, `k = 0` included.
/// Stored as integer numerators over a common denominator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicityDistribution {
    /// Number of letters (over all pooled words) per multiplicity.
    letters_with: BTreeMap<usize, usize>,
    total_letters: usize,
}

impl MultiplicityDistribution {
    pub fn pooled<'a>(parts: impl IntoIterator<Item = &'a MultiplicityDistribution>) -> Self {
        let mut letters_with = BTreeMap::new();
        let mut total_letters = 0;
        for p in parts {
            total_letters += p.total_letters;
            for (&k, &c) in &p.letters_with {
                *letters_with.entry(k).or_insert(0) += c;
            }
        }
        Self {
            letters_with,
            total_letters,
        }
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.numerator(k) as f64 / self.total_letters as f64
    }

    pub fn numerator(&self, k: usize) -> usize {
        self.letters_with.get(&k).copied().unwrap_or(0)
    }

    pub fn denominator(&self) -> usize {
        self.total_letters
    }

    pub fn max_multiplicity(&self) -> usize {
        self.letters_with.keys().next_back().copied().unwrap_or(0)
    }

    /// `(k, pmf(k))` for every multiplicity that occurs.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.letters_with.keys().map(|&k| (k, self.pmf(k)))
    }

    /// Total variation distance to Poisson(`tau`) over all `k >= 0`.
    pub fn total_variation_to_poisson(&self, tau: f64) -> Result<f64> {
        let k_max = self
            .max_multiplicity()
            .max((20.0 * tau + 50.0).ceil() as usize);
        let mut diff = 0.0;
        let mut reference_mass = 0.0;
        for k in 0..=k_max {
            let p = poisson_pmf(k as u64, tau)?;
            reference_mass += p;
            diff += (self.pmf(k) - p).abs();
        }
        diff += (1.0 - reference_mass).max(0.0);
        Ok(0.5 * diff)
    }
}

pub fn multiplicity_distribution(word: &ClassicalWord) -> MultiplicityDistribution {
    let profile = multiplicities(word);
    let mut letters_with = BTreeMap::new();
    let vacant = word.alphabet_size - profile.distinct();
    if vacant > 0 {
        letters_with.insert(0, vacant);
    }
    for &m in profile.counts.values() {
        *letters_with.entry(m).or_insert(0) += 1;
    }
    MultiplicityDistribution {
        letters_with,
        total_letters: word.alphabet_size,
    }
}
