//! Deterministic sequence generators: kicked (Floquet) evolution on rays and
//! bijections of a finite classical phase space.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classical::ClassicalWord;
use crate::error::{GramError, Result};
use crate::linalg::{ProjectiveState, StateSequence};
use crate::random::{RngSeed, UnitaryMatrix, UNITARY_TOLERANCE};

/// One period of a kicked evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetOperator {
    unitary: UnitaryMatrix,
}

impl FloquetOperator {
    pub fn new(unitary: UnitaryMatrix) -> Result<Self> {
        let defect = unitary.unitarity_defect();
        if defect > UNITARY_TOLERANCE {
            return Err(GramError::NotUnitary(defect));
        }
        Ok(Self { unitary })
    }

    pub fn unitary(&self) -> &UnitaryMatrix {
        &self.unitary
    }

    pub fn dim(&self) -> usize {
        self.unitary.dim()
    }

    /// `V u V^H`.
    pub fn conjugated(&self, v: &UnitaryMatrix) -> Result<Self> {
        let unitary = v.matmul(&self.unitary)?.matmul(&v.adjoint())?;
        Ok(Self { unitary })
    }
}

/// `(p0, u p0, ..., u^{K-1} p0)`, renormalizing after each step.
pub fn evolve_sequence(
    op: &FloquetOperator,
    initial: &ProjectiveState,
    steps: usize,
) -> Result<StateSequence> {
    if initial.dim() != op.dim() {
        return Err(GramError::DimensionMismatch {
            expected: op.dim(),
            found: initial.dim(),
        });
    }
    if steps == 0 {
        return Err(GramError::EmptySequence);
    }
    let mut states = Vec::with_capacity(steps);
    states.push(initial.clone());
    for _ in 1..steps {
        let next = op.unitary.apply(states.last().expect("nonempty"))?;
        states.push(next);
    }
    StateSequence::new(states)
}

/// Kick profile `v(j) = cos(2 pi j / N)`.
pub fn kick_profile(j: usize, dim: usize) -> f64 {
    (2.0 * PI * j as f64 / dim as f64).cos()
}

/// Rotation profile `w(j) = j (j + 1) / N`.
pub fn rotation_profile(j: usize, dim: usize) -> f64 {
    (j as f64) * (j as f64 + 1.0) / dim as f64
}

/// `D2 F^H D1 F` with `F` the unitary DFT, `D1 = diag(exp(i kick v(j)))`
/// and `D2 = diag(exp(i rotation w(j)))`.
///
/// `F^H D1 F` is circulant, so its entries come from a single length-N
/// inverse transform of the kick phases.
pub fn build_phase_kick_operator(
    dim: usize,
    kick_strength: f64,
    rotation: f64,
) -> Result<FloquetOperator> {
    if dim < 2 {
        return Err(GramError::InvalidDimension { min: 2, got: dim });
    }
    if !kick_strength.is_finite() || !rotation.is_finite() {
        return Err(GramError::NonFinite("kick parameters"));
    }
    let n = dim;
    let kicks: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, kick_strength * kick_profile(m, n)))
        .collect();
    let circulant: Vec<Complex64> = (0..n)
        .map(|r| {
            let sum: Complex64 = kicks
                .iter()
                .enumerate()
                .map(|(m, d)| {
                    d * Complex64::from_polar(1.0, 2.0 * PI * ((m * r) % n) as f64 / n as f64)
                })
                .sum();
            sum / n as f64
        })
        .collect();
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let rot = Complex64::from_polar(1.0, rotation * rotation_profile(j, n));
        for k in 0..n {
            entries[j * n + k] = rot * circulant[(j + n - k) % n];
        }
    }
    FloquetOperator::new(UnitaryMatrix::from_entries(n, entries)?)
}

/// A bijection of `{0, ..., N-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = GramError;

    fn try_from(map: Vec<usize>) -> Result<Self> {
        Permutation::new(map)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.map
    }
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        if map.is_empty() {
            return Err(GramError::InvalidPermutation("empty map".into()));
        }
        let n = map.len();
        let mut seen = vec![false; n];
        for (i, &m) in map.iter().enumerate() {
            if m >= n {
                return Err(GramError::InvalidPermutation(format!(
                    "map[{i}] = {m} out of range"
                )));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(GramError::InvalidPermutation(format!(
                    "{m} has two preimages"
                )));
            }
        }
        Ok(Self { map })
    }

    pub fn identity(size: usize) -> Result<Self> {
        Self::new((0..size).collect())
    }

    /// The single cycle `0 -> 1 -> ... -> N-1 -> 0`.
    pub fn shift(size: usize) -> Result<Self> {
        Self::new((0..size).map(|i| (i + 1) % size.max(1)).collect())
    }

    /// Uniformly random permutation.
    pub fn random(size: usize, seed: RngSeed) -> Result<Self> {
        let mut map: Vec<usize> = (0..size).collect();
        map.shuffle(&mut seed.rng());
        Self::new(map)
    }

    pub fn size(&self) -> usize {
        self.map.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    fn check_start(&self, start: usize) -> Result<()> {
        if start >= self.size() {
            return Err(GramError::IndexOutOfRange {
                index: start,
                size: self.size(),
            });
        }
        Ok(())
    }
}

/// The cycle through `start`, beginning at `start`.
pub fn permutation_orbit(perm: &Permutation, start: usize) -> Result<Vec<usize>> {
    perm.check_start(start)?;
    let mut orbit = vec![start];
    let mut i = perm.apply(start);
    while i != start {
        orbit.push(i);
        i = perm.apply(i);
    }
    Ok(orbit)
}

/// Cycle lengths, longest first.
pub fn cycle_type(perm: &Permutation) -> Vec<usize> {
    let mut visited = vec![false; perm.size()];
    let mut lengths = Vec::new();
    for s in 0..perm.size() {
        if visited[s] {
            continue;
        }
        let mut len = 0;
        let mut i = s;
        while !visited[i] {
            visited[i] = true;
            i = perm.apply(i);
            len += 1;
        }
        lengths.push(len);
    }
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    lengths
}

/// `(i0, pi(i0), ..., pi^{K-1}(i0))` over the alphabet `{0, ..., N-1}`.
pub fn permutation_word(perm: &Permutation, start: usize, steps: usize) -> Result<ClassicalWord> {
    perm.check_start(start)?;
    if steps == 0 {
        return Err(GramError::EmptySequence);
    }
    let mut letters = Vec::with_capacity(steps);
    let mut i = start;
    for _ in 0..steps {
        letters.push(i);
        i = perm.apply(i);
    }
    ClassicalWord::new(letters, perm.size())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::word_gram_spectrum;
    use crate::linalg::{rank_and_zero_count, sequence_spectrum};

    #[test]
    fn zero_parameters_give_identity() {
        let op = build_phase_kick_operator(16, 0.0, 0.0).unwrap();
        let id = UnitaryMatrix::identity(16).unwrap();
        for (a, b) in op.unitary().entries().iter().zip(id.entries()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(build_phase_kick_operator(1, 0.0, 0.0).is_err());
    }

    #[test]
    fn kick_operator_is_unitary() {
        for (n, k, r) in [
            (2, 1.0, 0.5),
            (31, 6.0, 1.0),
            (128, 6.0, 1.0),
            (64, 0.3, -2.0),
        ] {
            let op = build_phase_kick_operator(n, k, r).unwrap();
            assert!(op.unitary().unitarity_defect() < 1e-10);
        }
    }

    #[test]
    fn kick_operator_matches_dense_product() {
        let (n, kick, rot) = (8, 1.7, 0.9);
        let f: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                let (j, k) = (idx / n, idx % n);
                Complex64::from_polar(
                    1.0 / (n as f64).sqrt(),
                    -2.0 * PI * (j * k) as f64 / n as f64,
                )
            })
            .collect();
        let f = UnitaryMatrix::from_entries(n, f).unwrap();
        let d1 = UnitaryMatrix::diagonal_phases(
            &(0..n)
                .map(|j| kick * kick_profile(j, n))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let d2 = UnitaryMatrix::diagonal_phases(
            &(0..n)
                .map(|j| rot * rotation_profile(j, n))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let dense = d2
            .matmul(&f.adjoint())
            .unwrap()
            .matmul(&d1)
            .unwrap()
            .matmul(&f)
            .unwrap();
        let op = build_phase_kick_operator(n, kick, rot).unwrap();
        for (a, b) in op.unitary().entries().iter().zip(dense.entries()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_evolution_is_all_ones_block() {
        let op = FloquetOperator::new(UnitaryMatrix::identity(6).unwrap()).unwrap();
        let p0 = ProjectiveState::new(
            (0..6)
                .map(|j| Complex64::new(j as f64 + 1.0, 0.5))
                .collect(),
        )
        .unwrap();
        let s = sequence_spectrum(&evolve_sequence(&op, &p0, 5).unwrap()).unwrap();
        assert!((s.eigenvalues()[0] - 5.0).abs() < 1e-12);
        assert_eq!(rank_and_zero_count(&s), (1, 4));
    }

    #[test]
    fn eigenvector_initial_condition() {
        let op =
            FloquetOperator::new(UnitaryMatrix::diagonal_phases(&[0.3, 1.1, -2.0, 0.7]).unwrap())
                .unwrap();
        let p0 = ProjectiveState::basis(4, 2).unwrap();
        let s = sequence_spectrum(&evolve_sequence(&op, &p0, 7).unwrap()).unwrap();
        assert!((s.eigenvalues()[0] - 7.0).abs() < 1e-12);
        assert_eq!(rank_and_zero_count(&s), (1, 6));
    }

    #[test]
    fn evolution_keeps_unit_norm_and_prefix() {
        let op = build_phase_kick_operator(32, 6.0, 1.0).unwrap();
        let p0 = ProjectiveState::basis(32, 0).unwrap();
        let long = evolve_sequence(&op, &p0, 400).unwrap();
        let short = evolve_sequence(&op, &p0, 200).unwrap();
        for s in long.states() {
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(&long.states()[..200], short.states());
        let other = ProjectiveState::basis(16, 0).unwrap();
        assert!(evolve_sequence(&op, &other, 3).is_err());
    }

    #[test]
    fn kicked_run_full_trace() {
        let op = build_phase_kick_operator(128, 6.0, 1.0).unwrap();
        let p0 = ProjectiveState::basis(128, 0).unwrap();
        let s = sequence_spectrum(&evolve_sequence(&op, &p0, 128).unwrap()).unwrap();
        let (_, zeros) = rank_and_zero_count(&s);
        assert!(zeros < 128);
        assert!((s.mean() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::new(vec![]).is_err());
        let p: Permutation = serde_json::from_str("[2,0,1]").unwrap();
        assert_eq!(p.as_slice(), &[2, 0, 1]);
        assert!(serde_json::from_str::<Permutation>("[1,1]").is_err());
    }

    #[test]
    fn orbits() {
        let id = Permutation::identity(5).unwrap();
        assert_eq!(permutation_orbit(&id, 3).unwrap(), vec![3]);
        let cyc = Permutation::shift(3).unwrap();
        assert_eq!(permutation_orbit(&cyc, 0).unwrap(), vec![0, 1, 2]);
        assert!(matches!(
            permutation_orbit(&cyc, 3),
            Err(GramError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn cycle_types() {
        assert_eq!(
            cycle_type(&Permutation::identity(4).unwrap()),
            vec![1, 1, 1, 1]
        );
        assert_eq!(cycle_type(&Permutation::shift(9).unwrap()), vec![9]);
        let p = Permutation::new(vec![1, 0, 3, 4, 2]).unwrap();
        assert_eq!(cycle_type(&p), vec![3, 2]);
        let r = Permutation::random(1000, RngSeed::new(4)).unwrap();
        assert_eq!(cycle_type(&r).iter().sum::<usize>(), 1000);
        let total: usize = (0..1000)
            .filter(|&s| permutation_orbit(&r, s).unwrap().iter().min() == Some(&s))
            .map(|s| permutation_orbit(&r, s).unwrap().len())
            .sum();
        assert_eq!(total, 1000);
    }

    #[test]
    fn words() {
        let id = Permutation::identity(6).unwrap();
        assert_eq!(
            permutation_word(&id, 4, 4).unwrap().letters(),
            &[4, 4, 4, 4]
        );
        let cyc = Permutation::shift(3).unwrap();
        assert_eq!(
            permutation_word(&cyc, 0, 5).unwrap().letters(),
            &[0, 1, 2, 0, 1]
        );
        let spec = word_gram_spectrum(&permutation_word(&cyc, 0, 6).unwrap());
        assert_eq!(spec.eigenvalues(), &[2.0, 2.0, 2.0, 0.0, 0.0, 0.0]);
        assert!(permutation_word(&cyc, 5, 2).is_err());
    }

    #[test]
    fn word_within_period_is_injective() {
        let r = Permutation::random(200, RngSeed::new(8)).unwrap();
        let period = permutation_orbit(&r, 17).unwrap().len();
        let spec = word_gram_spectrum(&permutation_word(&r, 17, period).unwrap());
        assert!(spec.eigenvalues().iter().all(|&x| x == 1.0));
    }
}
