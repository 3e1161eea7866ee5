//! The Marchenko–Pastur law with ratio `tau` and goodness-of-fit statistics
//! against it.
//!
//! For `tau > 1` the law has an atom of weight `(tau - 1) / tau` at zero.
//! The continuous part has density
//! `rho(x) = sqrt((x - a)(b - x)) / (2 pi tau x)` on `[a, b]` with
//! `a = (sqrt(tau) - 1)^2`, `b = (sqrt(tau) + 1)^2`, and total mass
//! `min(1, 1 / tau)`.
//!
//! Integrals of `rho` are taken in the variable `u` with
//! `x = a + (b - a) sin^2(u)`, which removes the square-root endpoint
//! behaviour and the `x^{-1/2}` singularity at `tau = 1`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{GramError, Result};
use crate::linalg::SpectralMeasure;
use crate::quadrature::integrate;

/// Absolute tolerance of every CDF quadrature.
pub const CDF_TOLERANCE: f64 = 1e-12;
/// Bisection tolerance (in `x`) of [`MPLaw::quantile`].
pub const QUANTILE_TOLERANCE: f64 = 1e-10;
pub const MAX_MOMENT_ORDER: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MPLaw {
    tau: f64,
}

impl MPLaw {
    pub fn new(tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(GramError::InvalidParameter {
                name: "tau",
                reason: format!("must be positive and finite, got {tau}"),
            });
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn atom_weight(&self) -> f64 {
        ((self.tau - 1.0) / self.tau).max(0.0)
    }

    /// `[(sqrt(tau) - 1)^2, (sqrt(tau) + 1)^2]`.
    pub fn support(&self) -> (f64, f64) {
        let s = self.tau.sqrt();
        ((s - 1.0).powi(2), (s + 1.0).powi(2))
    }

    pub fn density(&self, x: f64) -> f64 {
        let (a, b) = self.support();
        if x <= a || x >= b || x <= 0.0 {
            return 0.0;
        }
        ((x - a) * (b - x)).sqrt() / (2.0 * PI * self.tau * x)
    }

    /// `rho(x(u)) dx/du`.
    fn density_in_u(&self, u: f64) -> f64 {
        let (a, b) = self.support();
        let w = b - a;
        let (s, c) = u.sin_cos();
        if a == 0.0 {
            return b * c * c / (PI * self.tau);
        }
        let x = a + w * s * s;
        w * w * s * s * c * c / (PI * self.tau * x)
    }

    fn u_of(&self, x: f64) -> f64 {
        let (a, b) = self.support();
        if x <= a {
            0.0
        } else if x >= b {
            FRAC_PI_2
        } else {
            ((x - a) / (b - a)).sqrt().asin()
        }
    }

    /// `int_a^x rho`, by quadrature.
    pub fn continuous_mass_below(&self, x: f64) -> f64 {
        let u = self.u_of(x);
        if u == 0.0 {
            return 0.0;
        }
        integrate(|t| self.density_in_u(t), 0.0, u, CDF_TOLERANCE).value
    }

    fn continuous_mass_between(&self, lo: f64, hi: f64) -> f64 {
        let (ul, uh) = (self.u_of(lo), self.u_of(hi));
        if uh <= ul {
            return 0.0;
        }
        integrate(|t| self.density_in_u(t), ul, uh, CDF_TOLERANCE).value
    }

    /// Total mass of the continuous part, by quadrature.
    pub fn density_mass(&self) -> f64 {
        integrate(|t| self.density_in_u(t), 0.0, FRAC_PI_2, CDF_TOLERANCE).value
    }

    /// `mu_tau((-inf, x])`, atom included for `x >= 0`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        (self.atom_weight() + self.continuous_mass_below(x)).clamp(0.0, 1.0)
    }

    /// `mu_tau((-inf, x))`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.cdf(x)
        }
    }

    /// Smallest `x` with `cdf(x) >= q`, by bisection on `[a, b]`.
    pub fn quantile(&self, q: f64) -> f64 {
        self.quantile_from(q, self.support().0)
    }

    /// As [`MPLaw::quantile`], with the search starting at `lower`, which
    /// must not exceed the answer.
    fn quantile_from(&self, q: f64, lower: f64) -> f64 {
        let atom = self.atom_weight();
        if q <= atom {
            return 0.0;
        }
        let (a, b) = self.support();
        let (mut lo, mut hi) = (lower.max(a), b);
        let mut mass_lo = self.continuous_mass_below(lo);
        let target = q - atom;
        while hi - lo > QUANTILE_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            let mass_mid = mass_lo + self.continuous_mass_between(lo, mid);
            if mass_mid < target {
                lo = mid;
                mass_lo = mass_mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Closed-form `k`-th moment, `sum_r tau^r C(k,r) C(k-1,r) / (r+1)`.
    pub fn moment(&self, order: u32) -> Result<f64> {
        if order == 0 || order > MAX_MOMENT_ORDER {
            return Err(GramError::InvalidParameter {
                name: "order",
                reason: format!("must be in 1..={MAX_MOMENT_ORDER}, got {order}"),
            });
        }
        let k = order as u64;
        Ok((0..k)
            .map(|r| {
                let coeff = binomial(k, r) * binomial(k - 1, r) / (r + 1) as f64;
                coeff * self.tau.powi(r as i32)
            })
            .sum())
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn mp_atom_weight(law: &MPLaw) -> f64 {
    law.atom_weight()
}

pub fn mp_support(law: &MPLaw) -> (f64, f64) {
    law.support()
}

pub fn mp_density(law: &MPLaw, x: f64) -> f64 {
    law.density(x)
}

pub fn mp_cdf(law: &MPLaw, x: f64) -> f64 {
    law.cdf(x)
}

pub fn mp_moment(law: &MPLaw, order: u32) -> Result<f64> {
    law.moment(order)
}

/// Distance of an empirical spectrum from the reference law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub tau: f64,
    pub ks_distance: f64,
    pub wasserstein1: f64,
    pub atom_fraction_empirical: f64,
    pub atom_weight_reference: f64,
    /// `(smallest nonzero eigenvalue, largest eigenvalue)`.
    pub support_observed: (f64, f64),
    pub support_reference: (f64, f64),
    /// Empirical moments of orders 1, 2 and 3.
    pub moments_empirical: [f64; 3],
    pub moments_reference: [f64; 3],
}

/// Kolmogorov–Smirnov distance against the full mixed CDF, quantile-matched
/// Wasserstein-1 distance, atom fraction, support and low moments.
pub fn fit_spectrum(s: &SpectralMeasure, law: &MPLaw) -> FitReport {
    let xs = s.ascending();
    let n = xs.len();
    let nf = n as f64;

    let mut ks = 0.0f64;
    let mut i = 0;
    while i < n {
        let v = xs[i];
        let mut j = i;
        while j < n && xs[j] == v {
            j += 1;
        }
        let before = i as f64 / nf;
        let after = j as f64 / nf;
        ks = ks.max((after - law.cdf(v)).abs());
        ks = ks.max((before - law.cdf_left(v)).abs());
        i = j;
    }

    let mut lower = law.support().0;
    let mut w1 = 0.0;
    for (idx, &x) in xs.iter().enumerate() {
        let q = law.quantile_from((idx as f64 + 0.5) / nf, lower);
        if q > 0.0 {
            lower = q;
        }
        w1 += (x - q).abs();
    }
    w1 /= nf;

    let moments_reference = [1, 2, 3].map(|k| law.moment(k).expect("order in range"));
    FitReport {
        tau: law.tau(),
        ks_distance: ks.clamp(0.0, 1.0),
        wasserstein1: w1,
        atom_fraction_empirical: s.zero_count() as f64 / nf,
        atom_weight_reference: law.atom_weight(),
        support_observed: (s.min_nonzero().unwrap_or(0.0), s.max()),
        support_reference: law.support(),
        moments_empirical: [s.moment(1), s.moment(2), s.moment(3)],
        moments_reference,
    }
}

/// Largest eigenvalue minus the smallest nonzero one.
pub fn support_length_entropy(s: &SpectralMeasure) -> f64 {
    match s.min_nonzero() {
        Some(min) => s.max() - min,
        None => 0.0,
    }
}

/// One row of a tabulated law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub tau: f64,
    pub x: f64,
    pub density: f64,
    pub cdf: f64,
    pub atom_weight: f64,
}

/// `count` evenly spaced values covering `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let d = (count - 1) as f64;
            (0..count)
                .map(|i| (lo * (d - i as f64) + hi * i as f64) / d)
                .collect()
        }
    }
}

/// Tabulates density and CDF for each `tau`.
///
/// The `x` grid runs over `[0, 1.1 b]` with quadratic spacing
/// `x_i = x_max (i / (n - 1))^2`, which resolves the lower edge where the
/// density is singular at `tau = 1`. The CDF is accumulated interval by
/// interval, so it is monotone along each row block.
pub fn density_grid(taus: &[f64], x_points: usize) -> Result<Vec<GridRow>> {
    let mut rows = Vec::with_capacity(taus.len() * x_points);
    for &tau in taus {
        let law = MPLaw::new(tau)?;
        let (_, b) = law.support();
        let x_max = 1.1 * b;
        let atom = law.atom_weight();
        let mut mass = 0.0;
        let mut prev = 0.0;
        for i in 0..x_points {
            let t = if x_points > 1 {
                i as f64 / (x_points - 1) as f64
            } else {
                0.0
            };
            let x = x_max * t * t;
            mass += law.continuous_mass_between(prev, x);
            prev = x;
            rows.push(GridRow {
                tau,
                x,
                density: law.density(x),
                cdf: (atom + mass).min(1.0),
                atom_weight: atom,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(tau: f64) -> MPLaw {
        MPLaw::new(tau).unwrap()
    }

    #[test]
    fn rejects_bad_tau() {
        assert!(MPLaw::new(0.0).is_err());
        assert!(MPLaw::new(-1.0).is_err());
        assert!(MPLaw::new(f64::NAN).is_err());
    }

    #[test]
    fn atom_weights() {
        assert_eq!(law(0.5).atom_weight(), 0.0);
        assert_eq!(law(1.0).atom_weight(), 0.0);
        assert_eq!(law(2.0).atom_weight(), 0.5);
    }

    #[test]
    fn supports() {
        assert_eq!(law(1.0).support(), (0.0, 4.0));
        assert_eq!(law(4.0).support(), (1.0, 9.0));
        for tau in [0.02, 0.3, 1.7, 9.0] {
            let (a, b) = law(tau).support();
            assert!((b - a - 4.0 * tau.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn density_outside_support_is_zero() {
        let l = law(4.0);
        for x in [-1.0, 0.0, 0.5, 1.0, 9.0, 12.0] {
            assert_eq!(l.density(x), 0.0);
        }
        assert!(l.density(4.0) > 0.0);
    }

    #[test]
    fn inverse_square_root_edge_at_tau_one() {
        let l = law(1.0);
        let samples: Vec<f64> = (1..=100)
            .map(|i| 1e-4 * i as f64)
            .map(|x| l.density(x) * x.sqrt())
            .collect();
        let (lo, hi) = samples
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        assert!(lo > 0.3 && hi < 0.33, "{lo} {hi}");
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(law(2.0).cdf(-0.1), 0.0);
        assert_eq!(law(2.0).cdf(0.0), 0.5);
        assert_eq!(law(2.0).cdf_left(0.0), 0.0);
        assert!((law(1.0).cdf(4.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn closed_moments() {
        for tau in [0.3, 1.0, 2.5] {
            let l = law(tau);
            assert!((l.moment(1).unwrap() - 1.0).abs() < 1e-15);
            assert!((l.moment(2).unwrap() - (1.0 + tau)).abs() < 1e-14);
            assert!((l.moment(3).unwrap() - (1.0 + 3.0 * tau + tau * tau)).abs() < 1e-13);
        }
        assert_eq!(law(1.0).moment(2).unwrap(), 2.0);
        assert_eq!(law(1.0).moment(3).unwrap(), 5.0);
        // Catalan numbers at tau = 1
        assert_eq!(law(1.0).moment(6).unwrap(), 132.0);
        assert!(law(1.0).moment(0).is_err());
        assert!(law(1.0).moment(13).is_err());
    }

    #[test]
    fn quantiles_invert_cdf() {
        for tau in [0.5, 1.0, 3.0] {
            let l = law(tau);
            for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let x = l.quantile(q);
                if q > l.atom_weight() {
                    assert!((l.cdf(x) - q).abs() < 1e-6, "tau={tau} q={q}");
                } else {
                    assert_eq!(x, 0.0);
                }
            }
        }
    }

    #[test]
    fn fit_of_quantile_midpoints() {
        let l = law(1.0);
        let k = 200;
        let pts: Vec<f64> = (0..k)
            .map(|i| l.quantile((i as f64 + 0.5) / k as f64))
            .collect();
        let s = SpectralMeasure::from_eigenvalues(pts).unwrap();
        let r = fit_spectrum(&s, &l);
        assert!(r.ks_distance <= 1.0 / k as f64 + 1e-6, "{}", r.ks_distance);
        assert!(r.wasserstein1 < 1e-8);
    }

    #[test]
    fn fit_of_rank_one() {
        let mut e = vec![0.0; 10];
        e[0] = 10.0;
        let s = SpectralMeasure::from_eigenvalues(e).unwrap();
        let r = fit_spectrum(&s, &law(1.0));
        assert_eq!(r.atom_fraction_empirical, 0.9);
        assert_eq!(r.support_observed, (10.0, 10.0));
        assert!((r.ks_distance - 0.9).abs() < 1e-12);
        assert_eq!(support_length_entropy(&s), 0.0);
    }

    #[test]
    fn entropy_of_identity() {
        let s = SpectralMeasure::from_eigenvalues(vec![1.0; 6]).unwrap();
        assert_eq!(support_length_entropy(&s), 0.0);
        let s = SpectralMeasure::from_eigenvalues(vec![3.0, 0.5, 0.0]).unwrap();
        assert_eq!(support_length_entropy(&s), 2.5);
    }

    #[test]
    fn grid_shape() {
        let rows = density_grid(&[0.5, 2.0], 50).unwrap();
        assert_eq!(rows.len(), 100);
        assert_eq!(rows[0].x, 0.0);
        assert!(rows[50..].iter().all(|r| r.atom_weight == 0.5));
        for block in rows.chunks(50) {
            assert!(block.windows(2).all(|w| w[1].cdf >= w[0].cdf));
            assert!((block[49].cdf - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn linspace_hits_endpoints() {
        let v = linspace(0.02, 3.0, 150);
        assert_eq!(v[0], 0.02);
        assert_eq!(v[149], 3.0);
        assert_eq!(v[49], 1.0);
    }
}
