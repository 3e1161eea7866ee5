//! Seeded Haar sampling of rays and unitaries.
//!
//! Every draw is a pure function of `(parameters, RngSeed)`. Sequences and
//! Monte Carlo trials derive one substream per element, so results do not
//! depend on evaluation order or thread count.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{GramError, Result};
use crate::linalg::{deinterleave, inner, interleave, ProjectiveState, StateSequence};

/// Tolerance of the `U U^H = I` check.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// A master seed plus a substream index into ChaCha8's 2^64 streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub master: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(master: u64) -> Self {
        Self { master, stream: 0 }
    }

    /// Child seed for the `index`-th element below this one.
    pub fn substream(self, index: u64) -> Self {
        Self {
            master: self.master,
            stream: splitmix64(self.stream ^ splitmix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// A Haar-uniform ray: a normalized standard complex Gaussian vector.
pub fn sample_uniform_state(dim: usize, seed: RngSeed) -> Result<ProjectiveState> {
    if dim == 0 {
        return Err(GramError::InvalidDimension { min: 1, got: 0 });
    }
    let mut rng = seed.rng();
    loop {
        let amplitudes: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(&mut rng)).collect();
        match ProjectiveState::new(amplitudes) {
            Err(GramError::ZeroVector) => continue,
            other => return other,
        }
    }
}

/// `count` independent Haar-uniform rays; state `j` is drawn from
/// `seed.substream(j)`.
pub fn sample_state_sequence(dim: usize, count: usize, seed: RngSeed) -> Result<StateSequence> {
    if count == 0 {
        return Err(GramError::EmptySequence);
    }
    let states = (0..count)
        .map(|j| sample_uniform_state(dim, seed.substream(j as u64)))
        .collect::<Result<Vec<_>>>()?;
    StateSequence::new(states)
}

/// A unitary matrix, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InterleavedUnitary", into = "InterleavedUnitary")]
pub struct UnitaryMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl UnitaryMatrix {
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(GramError::InvalidDimension { min: 1, got: 0 });
        }
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Ok(Self { dim, entries })
    }

    /// Checks unitarity within [`UNITARY_TOLERANCE`].
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(GramError::InvalidDimension { min: 1, got: 0 });
        }
        if entries.len() != dim * dim {
            return Err(GramError::Malformed(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(GramError::NonFinite("unitary entries"));
        }
        let u = Self { dim, entries };
        let defect = u.unitarity_defect();
        if defect > UNITARY_TOLERANCE {
            return Err(GramError::NotUnitary(defect));
        }
        Ok(u)
    }

    /// Diagonal unitary with the given phases (radians).
    pub fn diagonal_phases(phases: &[f64]) -> Result<Self> {
        let dim = phases.len();
        let mut u = Self::identity(dim)?;
        for (i, &p) in phases.iter().enumerate() {
            u.entries[i * dim + i] = Complex64::from_polar(1.0, p);
        }
        Ok(u)
    }

    pub(crate) fn from_entries_unchecked(dim: usize, entries: Vec<Complex64>) -> Self {
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Largest entrywise deviation of `U U^H` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            let ri = &self.entries[i * n..(i + 1) * n];
            for j in 0..n {
                let rj = &self.entries[j * n..(j + 1) * n];
                // (U U^H)_{ij} = sum_k U_ik conj(U_jk) = conj(<row_i, row_j>)
                let z = inner(ri, rj).conj();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((z - want).norm());
            }
        }
        worst
    }

    pub fn apply_vector(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                self.entries[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn apply(&self, state: &ProjectiveState) -> Result<ProjectiveState> {
        if state.dim() != self.dim {
            return Err(GramError::DimensionMismatch {
                expected: self.dim,
                found: state.dim(),
            });
        }
        ProjectiveState::new(self.apply_vector(state.amplitudes()))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(GramError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let n = self.dim;
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                let row = &other.entries[k * n..(k + 1) * n];
                for (out, b) in entries[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *out += a * b;
                }
            }
        }
        Ok(Self { dim: n, entries })
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        Self { dim: n, entries }
    }
}

#[derive(Serialize, Deserialize)]
struct InterleavedUnitary {
    dim: usize,
    entries: Vec<f64>,
}

impl From<UnitaryMatrix> for InterleavedUnitary {
    fn from(u: UnitaryMatrix) -> Self {
        Self {
            dim: u.dim,
            entries: interleave(&u.entries),
        }
    }
}

impl TryFrom<InterleavedUnitary> for UnitaryMatrix {
    type Error = GramError;

    fn try_from(u: InterleavedUnitary) -> Result<Self> {
        let entries = deinterleave(&u.entries, u.dim * u.dim)?;
        UnitaryMatrix::from_entries(u.dim, entries)
    }
}

/// Haar unitary from the QR factorization of a complex Ginibre matrix with
/// positive real diagonal in `R`.
///
/// The columns are orthonormalized by classical Gram-Schmidt applied twice,
/// which yields exactly that phase convention since each `R[j][j]` is the
/// positive norm of the residual column.
pub fn sample_haar_unitary(dim: usize, seed: RngSeed) -> Result<UnitaryMatrix> {
    if dim == 0 {
        return Err(GramError::InvalidDimension { min: 1, got: 0 });
    }
    let mut rng = seed.rng();
    // columns[j] is the j-th column
    let mut columns: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| (0..dim).map(|_| complex_gaussian(&mut rng)).collect())
        .collect();
    for j in 0..dim {
        let (done, rest) = columns.split_at_mut(j);
        let col = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let proj = inner(q, col);
                for (c, qv) in col.iter_mut().zip(q) {
                    *c -= proj * qv;
                }
            }
        }
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(GramError::ZeroVector);
        }
        for c in col.iter_mut() {
            *c /= norm;
        }
    }
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (j, col) in columns.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            entries[i * dim + j] = z;
        }
    }
    Ok(UnitaryMatrix::from_entries_unchecked(dim, entries))
}
