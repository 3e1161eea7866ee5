//! States, sequences, Gram matrices and their spectra.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen;
use crate::error::{GramError, Result};

pub type ComplexScalar = Complex64;

/// Eigenvalues below `ZERO_THRESHOLD * K` are reported as exactly zero.
pub const ZERO_THRESHOLD: f64 = 1e-10;
/// Eigenvalues below `-PSD_TOLERANCE * K` mean the input was not a Gram matrix.
pub const PSD_TOLERANCE: f64 = 1e-9;
/// Largest tolerated `|G[i][j] - conj(G[j][i])|`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// A normalized vector standing for the ray it spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InterleavedVector", into = "InterleavedVector")]
pub struct ProjectiveState {
    amplitudes: Vec<Complex64>,
}

impl ProjectiveState {
    /// Normalizes `amplitudes` to unit Euclidean norm.
    pub fn new(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(GramError::InvalidDimension { min: 1, got: 0 });
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(GramError::NonFinite("state amplitudes"));
        }
        let norm = norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(GramError::ZeroVector);
        }
        for z in &mut amplitudes {
            *z /= norm;
        }
        Ok(Self { amplitudes })
    }

    /// The standard basis ray `e_index` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 {
            return Err(GramError::InvalidDimension { min: 1, got: 0 });
        }
        if index >= dim {
            return Err(GramError::IndexOutOfRange { index, size: dim });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        check_dims(self.dim(), other.dim())?;
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    /// The same ray with a different representative vector.
    pub fn with_phase(&self, phase: f64) -> Self {
        let z = Complex64::from_polar(1.0, phase);
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * z).collect(),
        }
    }
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(GramError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Interleaved `(re, im)` storage used for every serialized complex array.
#[derive(Serialize, Deserialize)]
struct InterleavedVector {
    dim: usize,
    amplitudes: Vec<f64>,
}

impl From<ProjectiveState> for InterleavedVector {
    fn from(s: ProjectiveState) -> Self {
        Self {
            dim: s.dim(),
            amplitudes: interleave(&s.amplitudes),
        }
    }
}

impl TryFrom<InterleavedVector> for ProjectiveState {
    type Error = GramError;

    fn try_from(v: InterleavedVector) -> Result<Self> {
        let amplitudes = deinterleave(&v.amplitudes, v.dim)?;
        ProjectiveState::new(amplitudes)
    }
}

pub(crate) fn interleave(values: &[Complex64]) -> Vec<f64> {
    values.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub(crate) fn deinterleave(flat: &[f64], expected_len: usize) -> Result<Vec<Complex64>> {
    if flat.len() != 2 * expected_len {
        return Err(GramError::DimensionMismatch {
            expected: 2 * expected_len,
            found: flat.len(),
        });
    }
    Ok(flat
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect())
}

/// `2 - 2 |<a, b>|`, zero for equal rays and two for orthogonal ones.
pub fn projective_distance(a: &ProjectiveState, b: &ProjectiveState) -> Result<f64> {
    let overlap = a.inner(b)?.norm().min(1.0);
    Ok(2.0 - 2.0 * overlap)
}

/// An ordered, nonempty list of states of a common dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSequence {
    states: Vec<ProjectiveState>,
}

impl StateSequence {
    pub fn new(states: Vec<ProjectiveState>) -> Result<Self> {
        let first = states.first().ok_or(GramError::EmptySequence)?;
        let dim = first.dim();
        for s in &states {
            check_dims(dim, s.dim())?;
        }
        Ok(Self { states })
    }

    pub fn states(&self) -> &[ProjectiveState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// Rescaled time `K / N`.
    pub fn tau(&self) -> f64 {
        self.len() as f64 / self.dim() as f64
    }

    /// Reorders the states; `order` must be a permutation of `0..len`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(GramError::DimensionMismatch {
                expected: self.len(),
                found: order.len(),
            });
        }
        let mut seen = vec![false; self.len()];
        for &i in order {
            if i >= self.len() || std::mem::replace(&mut seen[i], true) {
                return Err(GramError::InvalidPermutation(format!("{order:?}")));
            }
        }
        Ok(Self {
            states: order.iter().map(|&i| self.states[i].clone()).collect(),
        })
    }

    pub fn into_states(self) -> Vec<ProjectiveState> {
        self.states
    }
}

/// Matrix of pairwise inner products, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InterleavedMatrix", into = "InterleavedMatrix")]
pub struct GramMatrix {
    size: usize,
    entries: Vec<Complex64>,
}

impl GramMatrix {
    /// Wraps arbitrary row-major entries. Hermiticity is checked when the
    /// spectrum is requested.
    pub fn from_entries(size: usize, entries: Vec<Complex64>) -> Result<Self> {
        if size == 0 {
            return Err(GramError::EmptySequence);
        }
        if entries.len() != size * size {
            return Err(GramError::Malformed(format!(
                "{} entries for a {size}x{size} matrix",
                entries.len()
            )));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(GramError::NonFinite("matrix entries"));
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.size + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.size).map(|i| self.entry(i, i).re).sum()
    }

    fn hermitian_defect(&self) -> f64 {
        let n = self.size;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        worst
    }
}

#[derive(Serialize, Deserialize)]
struct InterleavedMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl From<GramMatrix> for InterleavedMatrix {
    fn from(g: GramMatrix) -> Self {
        Self {
            size: g.size,
            entries: interleave(&g.entries),
        }
    }
}

impl TryFrom<InterleavedMatrix> for GramMatrix {
    type Error = GramError;

    fn try_from(m: InterleavedMatrix) -> Result<Self> {
        let entries = deinterleave(&m.entries, m.size * m.size)?;
        GramMatrix::from_entries(m.size, entries)
    }
}

/// `G[i][j] = <phi(i), phi(j)>`. The lower triangle is the exact conjugate
/// of the upper one.
pub fn build_gram(seq: &StateSequence) -> GramMatrix {
    let k = seq.len();
    let states = seq.states();
    let mut entries = vec![Complex64::new(0.0, 0.0); k * k];
    for i in 0..k {
        let a = states[i].amplitudes();
        for j in i..k {
            let z = inner(a, states[j].amplitudes());
            entries[i * k + j] = z;
            entries[j * k + i] = z.conj();
        }
        // forces a real diagonal
        entries[i * k + i] = Complex64::new(entries[i * k + i].re, 0.0);
    }
    GramMatrix { size: k, entries }
}

/// The multiset of eigenvalues of a Gram matrix, largest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    eigenvalues: Vec<f64>,
}

impl SpectralMeasure {
    /// Accepts eigenvalues computed elsewhere (e.g. loaded from disk).
    /// Values below the zero threshold are clamped, values below the PSD
    /// tolerance are rejected.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(GramError::EmptySequence);
        }
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(GramError::NonFinite("eigenvalues"));
        }
        let k = eigenvalues.len() as f64;
        let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOLERANCE * k {
            return Err(GramError::NotPositiveSemidefinite(min));
        }
        clamp_zeros(&mut eigenvalues, ZERO_THRESHOLD * k);
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { eigenvalues })
    }

    /// Exact spectra (already non-negative, already clamped).
    pub(crate) fn from_exact(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Self { eigenvalues }
    }

    /// Union of several spectra, e.g. across Monte Carlo trials.
    pub fn pooled<'a>(parts: impl IntoIterator<Item = &'a SpectralMeasure>) -> Result<Self> {
        let eigenvalues: Vec<f64> = parts
            .into_iter()
            .flat_map(|s| s.eigenvalues.iter().copied())
            .collect();
        if eigenvalues.is_empty() {
            return Err(GramError::EmptySequence);
        }
        Ok(Self::from_exact(eigenvalues))
    }

    /// Descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn ascending(&self) -> Vec<f64> {
        self.eigenvalues.iter().rev().copied().collect()
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.count() as f64
    }

    /// `(1/K) sum_j gamma_j^order`.
    pub fn moment(&self, order: u32) -> f64 {
        let k = self.count() as f64;
        self.eigenvalues
            .iter()
            .map(|x| x.powi(order as i32))
            .sum::<f64>()
            / k
    }

    pub fn zero_count(&self) -> usize {
        self.eigenvalues.iter().filter(|&&x| x == 0.0).count()
    }

    /// Fraction of eigenvalues `<= x`.
    pub fn empirical_cdf(&self, x: f64) -> f64 {
        let below = self.eigenvalues.iter().filter(|&&v| v <= x).count();
        below as f64 / self.count() as f64
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Smallest eigenvalue that is not an exact zero.
    pub fn min_nonzero(&self) -> Option<f64> {
        self.eigenvalues.iter().rev().copied().find(|&x| x != 0.0)
    }
}

fn clamp_zeros(values: &mut [f64], threshold: f64) {
    for v in values {
        if *v < threshold {
            *v = 0.0;
        }
    }
}

fn validated_eigh(
    g: &GramMatrix,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<Complex64>>)> {
    let defect = g.hermitian_defect();
    if defect > HERMITIAN_TOLERANCE {
        return Err(GramError::Malformed(format!(
            "not Hermitian (asymmetry {defect:e})"
        )));
    }
    eigen::eigh(&g.entries, g.size, want_vectors)
}

/// All eigenvalues of `g`, largest first, with numerical zeros clamped.
pub fn hermitian_spectrum(g: &GramMatrix) -> Result<SpectralMeasure> {
    let (mut values, _) = validated_eigh(g, false)?;
    let k = g.size as f64;
    if values[0] < -PSD_TOLERANCE * k {
        return Err(GramError::NotPositiveSemidefinite(values[0]));
    }
    clamp_zeros(&mut values, ZERO_THRESHOLD * k);
    values.reverse();
    Ok(SpectralMeasure {
        eigenvalues: values,
    })
}

/// Unclamped eigenvalues (ascending) and column-major eigenvectors.
#[cfg(test)]
pub(crate) fn hermitian_eigenpairs(g: &GramMatrix) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let (values, vectors) = validated_eigh(g, true)?;
    Ok((values, vectors.expect("vectors requested")))
}

/// `(rank, zeros)` where zeros counts the clamped eigenvalues.
pub fn rank_and_zero_count(s: &SpectralMeasure) -> (usize, usize) {
    let zeros = s.zero_count();
    (s.count() - zeros, zeros)
}

/// Gram matrix followed by its spectrum.
pub fn sequence_spectrum(seq: &StateSequence) -> Result<SpectralMeasure> {
    hermitian_spectrum(&build_gram(seq))
}
