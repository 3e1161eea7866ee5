//! Seeded Monte Carlo driver behind the `gramspec` subcommands.
//!
//! Trial `t` of a run with master seed `s` draws from
//! `RngSeed::new(s).substream(t)`. Spectra are collected in trial order, so a
//! run is reproducible bit for bit whatever the [`Execution`] mode.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::classical::{
    multiplicity_distribution, poisson_pmf, sample_uniform_word, MultiplicityDistribution,
};
use crate::dynamics::{
    build_phase_kick_operator, cycle_type, evolve_sequence, permutation_orbit, permutation_word,
    Permutation,
};
use crate::error::{GramError, Result};
use crate::linalg::{sequence_spectrum, ProjectiveState, SpectralMeasure};
use crate::mp::{
    density_grid, fit_spectrum, linspace, support_length_entropy, FitReport, GridRow, MPLaw,
};
use crate::par::{try_map_indices, Execution};
use crate::random::{sample_state_sequence, sample_uniform_state, RngSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Random,
    Floquet,
    Permutation,
    Classical,
    MpGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub dim: usize,
    /// Rescaled time; the sequence length becomes `ceil(tau * dim)`.
    pub tau: Option<f64>,
    /// Explicit sequence length `K`.
    pub steps: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub bins: usize,
    pub kick: f64,
    pub rot: f64,
    pub start: Option<usize>,
    /// Explicit permutation for `permutation` mode; random when absent.
    pub permutation: Option<Vec<usize>>,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_points: usize,
    pub x_points: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Random,
            dim: 256,
            tau: None,
            steps: None,
            trials: 1,
            seed: 0,
            bins: 100,
            kick: 6.0,
            rot: 1.0,
            start: None,
            permutation: None,
            tau_min: 0.02,
            tau_max: 3.0,
            tau_points: 150,
            x_points: 400,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> GramError {
    GramError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mode == Mode::MpGrid {
            if !(self.tau_min > 0.0 && self.tau_min.is_finite()) {
                return Err(invalid("tau_min", "must be positive"));
            }
            if !(self.tau_max >= self.tau_min && self.tau_max.is_finite()) {
                return Err(invalid("tau_max", "must be finite and >= tau_min"));
            }
            if self.tau_points == 0 {
                return Err(invalid("tau_points", "must be at least 1"));
            }
            if self.x_points < 2 {
                return Err(invalid("x_points", "must be at least 2"));
            }
            return Ok(());
        }
        let min_dim = if self.mode == Mode::Floquet { 2 } else { 1 };
        if self.dim < min_dim {
            return Err(invalid("dim", format!("must be at least {min_dim}")));
        }
        match (self.tau, self.steps) {
            (Some(_), Some(_)) => return Err(invalid("tau", "give either tau or steps, not both")),
            (None, None) => return Err(invalid("tau", "one of tau or steps is required")),
            (Some(t), None) if !(t > 0.0 && t.is_finite()) => {
                return Err(invalid("tau", "must be positive and finite"))
            }
            (None, Some(0)) => return Err(invalid("steps", "must be at least 1")),
            _ => {}
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.bins < 10 {
            return Err(invalid("bins", "must be at least 10"));
        }
        if !self.kick.is_finite() {
            return Err(invalid("kick", "must be finite"));
        }
        if !self.rot.is_finite() {
            return Err(invalid("rot", "must be finite"));
        }
        if let Some(p) = &self.permutation {
            if self.mode == Mode::Permutation && p.len() != self.dim {
                return Err(invalid(
                    "permutation",
                    format!("has length {} but dim is {}", p.len(), self.dim),
                ));
            }
            Permutation::new(p.clone()).map_err(|e| invalid("permutation", e.to_string()))?;
        }
        if let Some(s) = self.start {
            if s >= self.dim {
                return Err(invalid(
                    "start",
                    format!("must be below dim = {}", self.dim),
                ));
            }
        }
        Ok(())
    }

    /// `K`, either given or `ceil(tau * N)`.
    pub fn sequence_length(&self) -> usize {
        match (self.steps, self.tau) {
            (Some(k), _) => k,
            // the small offset keeps exact products such as 0.25 * 200 from
            // rounding up after floating-point noise
            (None, Some(t)) => ((t * self.dim as f64 - 1e-9).ceil() as usize).max(1),
            (None, None) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Exact zeros counted apart from uniform bins on `[0, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub atom_count: usize,
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    /// `upper` is raised to the largest eigenvalue if needed so that every
    /// value lands in a bin.
    pub fn build(spectrum: &SpectralMeasure, bins: usize, upper: f64) -> Self {
        let upper = upper.max(spectrum.max());
        let width = upper / bins as f64;
        let mut counts = vec![0usize; bins];
        let mut atom_count = 0;
        for &v in spectrum.eigenvalues() {
            if v == 0.0 {
                atom_count += 1;
            } else {
                let idx = ((v / width) as usize).min(bins - 1);
                counts[idx] += 1;
            }
        }
        let bins = counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| HistogramBin {
                left: width * i as f64,
                right: if i + 1 == bins {
                    upper
                } else {
                    width * (i + 1) as f64
                },
                count,
            })
            .collect();
        Self { atom_count, bins }
    }

    pub fn total(&self) -> usize {
        self.atom_count + self.bins.iter().map(|b| b.count).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationSummary {
    pub cycle_type: Vec<usize>,
    pub start: usize,
    pub period: usize,
    pub word: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfRow {
    pub k: usize,
    pub empirical: f64,
    pub poisson: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSummary {
    pub pmf: Vec<PmfRow>,
    pub total_variation: f64,
    pub distribution: MultiplicityDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_effective: Option<f64>,
    /// One descending spectrum per trial.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub spectra: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Histogram>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation: Option<PermutationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub grid: Vec<GridRow>,
    /// Wall-clock time; kept out of serialized output so files are
    /// reproducible.
    #[serde(skip)]
    pub duration: Duration,
}

impl RunResult {
    fn empty(config: &ExperimentConfig) -> Self {
        Self {
            config: config.clone(),
            sequence_length: None,
            tau_effective: None,
            spectra: Vec::new(),
            histogram: None,
            fit: None,
            entropy: None,
            permutation: None,
            classical: None,
            grid: Vec::new(),
            duration: Duration::ZERO,
        }
    }

    /// All trial spectra as one measure.
    pub fn pooled(&self) -> Result<SpectralMeasure> {
        let all: Vec<f64> = self.spectra.iter().flatten().copied().collect();
        SpectralMeasure::from_eigenvalues(all)
    }
}

fn default_hist_upper(tau: f64) -> f64 {
    (tau.sqrt() + 1.0).powi(2) + 0.5
}

fn expect_mode(config: &ExperimentConfig, mode: Mode) -> Result<()> {
    if config.mode != mode {
        return Err(invalid(
            "mode",
            format!("expected {mode:?}, got {:?}", config.mode),
        ));
    }
    config.validate()
}

/// Fills spectra, histogram, fit and entropy from per-trial spectra.
fn summarize(result: &mut RunResult, spectra: Vec<SpectralMeasure>, fit: bool) -> Result<()> {
    let n = result.config.dim;
    let k = spectra[0].count();
    let tau = k as f64 / n as f64;
    let pooled = SpectralMeasure::pooled(&spectra)?;
    result.sequence_length = Some(k);
    result.tau_effective = Some(tau);
    result.histogram = Some(Histogram::build(
        &pooled,
        result.config.bins,
        default_hist_upper(tau),
    ));
    result.entropy = Some(support_length_entropy(&pooled));
    if fit {
        result.fit = Some(fit_spectrum(&pooled, &MPLaw::new(tau)?));
    }
    result.spectra = spectra
        .into_iter()
        .map(|s| s.eigenvalues().to_vec())
        .collect();
    Ok(())
}

/// Haar-uniform sequences, pooled and fitted against the limiting law.
pub fn run_random(config: &ExperimentConfig, exec: Execution) -> Result<RunResult> {
    expect_mode(config, Mode::Random)?;
    let (n, k) = (config.dim, config.sequence_length());
    let master = RngSeed::new(config.seed);
    let spectra = try_map_indices(exec, config.trials, |t| {
        sequence_spectrum(&sample_state_sequence(n, k, master.substream(t as u64))?)
    })?;
    let mut result = RunResult::empty(config);
    summarize(&mut result, spectra, true)?;
    Ok(result)
}

/// Phase-kick evolution from `e_start`, or from a Haar-uniform state per
/// trial when no start is given.
pub fn run_floquet(config: &ExperimentConfig, exec: Execution) -> Result<RunResult> {
    expect_mode(config, Mode::Floquet)?;
    let (n, k) = (config.dim, config.sequence_length());
    let op = build_phase_kick_operator(n, config.kick, config.rot)?;
    let master = RngSeed::new(config.seed);
    let spectra = try_map_indices(exec, config.trials, |t| {
        let initial = match config.start {
            Some(s) => ProjectiveState::basis(n, s)?,
            None => sample_uniform_state(n, master.substream(t as u64))?,
        };
        sequence_spectrum(&evolve_sequence(&op, &initial, k)?)
    })?;
    let mut result = RunResult::empty(config);
    summarize(&mut result, spectra, true)?;
    Ok(result)
}

/// Cycle structure and the exact word spectrum of one orbit.
pub fn run_permutation(config: &ExperimentConfig, _exec: Execution) -> Result<RunResult> {
    expect_mode(config, Mode::Permutation)?;
    let perm = match &config.permutation {
        Some(map) => Permutation::new(map.clone())?,
        None => Permutation::random(config.dim, RngSeed::new(config.seed))?,
    };
    let start = config.start.unwrap_or(0);
    let word = permutation_word(&perm, start, config.sequence_length())?;
    let spectrum = crate::classical::word_gram_spectrum(&word);
    let mut result = RunResult::empty(config);
    result.permutation = Some(PermutationSummary {
        cycle_type: cycle_type(&perm),
        start,
        period: permutation_orbit(&perm, start)?.len(),
        word: word.letters().to_vec(),
    });
    summarize(&mut result, vec![spectrum], false)?;
    Ok(result)
}

/// Uniform random words; letter multiplicities against Poisson(K / N).
pub fn run_classical(config: &ExperimentConfig, exec: Execution) -> Result<RunResult> {
    expect_mode(config, Mode::Classical)?;
    let (n, k) = (config.dim, config.sequence_length());
    let master = RngSeed::new(config.seed);
    let parts = try_map_indices(exec, config.trials, |t| {
        Ok::<_, GramError>(multiplicity_distribution(&sample_uniform_word(
            n,
            k,
            master.substream(t as u64),
        )?))
    })?;
    let distribution = MultiplicityDistribution::pooled(&parts);
    let tau = k as f64 / n as f64;
    let k_max = distribution
        .max_multiplicity()
        .max((4.0 * tau + 10.0).ceil() as usize);
    let pmf = (0..=k_max)
        .map(|m| {
            Ok(PmfRow {
                k: m,
                empirical: distribution.pmf(m),
                poisson: poisson_pmf(m as u64, tau)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = RunResult::empty(config);
    result.sequence_length = Some(k);
    result.tau_effective = Some(tau);
    result.classical = Some(ClassicalSummary {
        pmf,
        total_variation: distribution.total_variation_to_poisson(tau)?,
        distribution,
    });
    Ok(result)
}

/// Tabulated limiting law over `[tau_min, tau_max]`.
pub fn run_mp_grid(config: &ExperimentConfig, _exec: Execution) -> Result<RunResult> {
    expect_mode(config, Mode::MpGrid)?;
    let taus = linspace(config.tau_min, config.tau_max, config.tau_points);
    let mut result = RunResult::empty(config);
    result.grid = density_grid(&taus, config.x_points)?;
    Ok(result)
}

/// Dispatches on `config.mode` and records the wall-clock time.
pub fn run(config: &ExperimentConfig, exec: Execution) -> Result<RunResult> {
    config.validate()?;
    let started = Instant::now();
    let mut result = match config.mode {
        Mode::Random => run_random(config, exec),
        Mode::Floquet => run_floquet(config, exec),
        Mode::Permutation => run_permutation(config, exec),
        Mode::Classical => run_classical(config, exec),
        Mode::MpGrid => run_mp_grid(config, exec),
    }?;
    result.duration = started.elapsed();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(mode: Mode) -> ExperimentConfig {
        ExperimentConfig {
            mode,
            dim: 20,
            tau: Some(1.0),
            trials: 3,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn validation_names_fields() {
        let mut c = config(Mode::Random);
        c.steps = Some(10);
        assert!(matches!(
            c.validate(),
            Err(GramError::InvalidParameter { name: "tau", .. })
        ));
        let mut c = config(Mode::Random);
        c.trials = 0;
        assert!(matches!(
            c.validate(),
            Err(GramError::InvalidParameter { name: "trials", .. })
        ));
        let mut c = config(Mode::Random);
        c.bins = 9;
        assert!(matches!(
            c.validate(),
            Err(GramError::InvalidParameter { name: "bins", .. })
        ));
        let mut c = config(Mode::Floquet);
        c.dim = 1;
        assert!(matches!(
            c.validate(),
            Err(GramError::InvalidParameter { name: "dim", .. })
        ));
        let mut c = config(Mode::Permutation);
        c.permutation = Some(vec![0, 0]);
        assert!(matches!(
            c.validate(),
            Err(GramError::InvalidParameter {
                name: "permutation",
                ..
            })
        ));
        let mut c = config(Mode::Random);
        c.start = Some(20);
        assert!(matches!(
            c.validate(),
            Err(GramError::InvalidParameter { name: "start", .. })
        ));
    }

    #[test]
    fn sequence_length_rounds_up() {
        let mut c = config(Mode::Random);
        c.dim = 200;
        c.tau = Some(0.25);
        assert_eq!(c.sequence_length(), 50);
        c.tau = Some(0.251);
        assert_eq!(c.sequence_length(), 51);
        c.tau = None;
        c.steps = Some(7);
        assert_eq!(c.sequence_length(), 7);
    }

    #[test]
    fn histogram_conserves_counts() {
        let r = run(&config(Mode::Random), Execution::default()).unwrap();
        assert_eq!(r.histogram.as_ref().unwrap().total(), 3 * 20);
        let s = SpectralMeasure::from_eigenvalues(vec![50.0, 0.0, 0.0, 1.0]).unwrap();
        let h = Histogram::build(&s, 10, 4.5);
        assert_eq!(h.atom_count, 2);
        assert_eq!(h.total(), 4);
        assert_eq!(h.bins.last().unwrap().right, 50.0);
    }

    #[test]
    fn single_state_trial() {
        let mut c = config(Mode::Random);
        c.tau = None;
        c.steps = Some(1);
        c.trials = 1;
        let r = run(&c, Execution::Sequential).unwrap();
        assert_eq!(r.spectra.len(), 1);
        assert_eq!(r.spectra[0].len(), 1);
        assert!((r.spectra[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn execution_modes_agree() {
        let c = config(Mode::Random);
        let a = run(&c, Execution::Sequential).unwrap();
        let b = run(&c, Execution::Parallel).unwrap();
        assert_eq!(a.spectra, b.spectra);
        assert_eq!(a.fit, b.fit);
    }

    #[test]
    fn identity_permutation_word() {
        let mut c = config(Mode::Permutation);
        c.dim = 4;
        c.permutation = Some(vec![0, 1, 2, 3]);
        c.tau = None;
        c.steps = Some(10);
        let r = run(&c, Execution::default()).unwrap();
        let mut want = vec![0.0; 10];
        want[0] = 10.0;
        assert_eq!(r.spectra, vec![want]);
        assert_eq!(r.permutation.unwrap().cycle_type, vec![1, 1, 1, 1]);
    }

    #[test]
    fn floquet_with_no_kick_is_static() {
        let mut c = config(Mode::Floquet);
        c.kick = 0.0;
        c.rot = 0.0;
        c.tau = None;
        c.steps = Some(12);
        let r = run(&c, Execution::default()).unwrap();
        for s in &r.spectra {
            assert!((s[0] - 12.0).abs() < 1e-9);
            assert!(s[1..].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let c = config(Mode::Random);
        assert!(run_classical(&c, Execution::default()).is_err());
    }
}
