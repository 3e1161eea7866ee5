//! Spectral analysis of sequences of rays in projective Hilbert space.
//!
//! A sequence of normalized vectors is summarized by the eigenvalues of its
//! Gram matrix. For `K` Haar-uniform rays in dimension `N` the empirical
//! eigenvalue distribution approaches the Marchenko–Pastur law with ratio
//! `tau = K / N`, including an atom at zero of weight `(tau - 1) / tau` once
//! `tau > 1`. Classical words (sequences of basis vectors) have an exact
//! block spectrum given by letter multiplicities, whose large-alphabet limit
//! is Poisson.
//!
//! Modules:
//! - [`linalg`]: states, Gram matrices and their spectra.
//! - [`random`]: seeded Haar sampling of states and unitaries.
//! - [`dynamics`]: Floquet evolution and permutation orbits.
//! - [`classical`]: exact word spectra and the Poisson reference.
//! - [`mp`]: the limiting law and goodness-of-fit statistics.
//! - [`experiment`]: the seeded Monte Carlo driver used by the CLI.

pub mod classical;
pub mod dynamics;
mod eigen;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod mp;
pub mod output;
pub mod par;
pub mod quadrature;
pub mod random;

pub use error::{GramError, Result};
pub use linalg::{
    build_gram, hermitian_spectrum, projective_distance, rank_and_zero_count, ComplexScalar,
    GramMatrix, ProjectiveState, SpectralMeasure, StateSequence,
};
pub use mp::{FitReport, MPLaw};
pub use random::{RngSeed, UnitaryMatrix};
