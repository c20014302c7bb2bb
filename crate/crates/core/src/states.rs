//! Ground-truth photon-number distributions on a truncated Fock basis.

use std::ops::Index;

use num_complex::Complex;

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Captured mass below which a truncation is considered too small.
pub const MIN_CAPTURED_MASS: f64 = 0.99;

/// Probabilities `rho_n` for `n = 0..truncation`.
///
/// Entries are nonnegative. The sum may be below one when the truncation cuts
/// off part of the distribution, and an EM estimate is not renormalized, so
/// the sum is not constrained here.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution<T> {
    probs: Vec<T>,
}

impl<T: Scalar> PhotonDistribution<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("photon distribution needs at least one entry"));
        }
        if let Some(n) = probs.iter().position(|p| !p.is_finite() || *p < T::zero()) {
            return Err(invalid(format!(
                "photon distribution entry {n} is {} (must be finite and >= 0)",
                probs[n]
            )));
        }
        Ok(Self { probs })
    }

    pub(crate) fn from_vec_unchecked(probs: Vec<T>) -> Self {
        Self { probs }
    }

    /// `(1 + nbar)^-1`-style flat start on `truncation` entries.
    pub fn uniform(truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(invalid("truncation must be >= 1"));
        }
        let v = T::one() / T::from_usize_lossy(truncation);
        Ok(Self {
            probs: vec![v; truncation],
        })
    }

    pub fn vacuum(truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(invalid("truncation must be >= 1"));
        }
        let mut probs = vec![T::zero(); truncation];
        probs[0] = T::one();
        Ok(Self { probs })
    }

    pub fn truncation(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }

    /// Total probability inside the window.
    pub fn captured_mass(&self) -> T {
        self.probs.iter().copied().sum()
    }

    pub fn mean_photons(&self) -> T {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| T::from_usize_lossy(n) * *p)
            .sum()
    }

    /// False when the window holds less than [`MIN_CAPTURED_MASS`].
    pub fn is_truncation_adequate(&self) -> bool {
        self.captured_mass() >= T::lit(MIN_CAPTURED_MASS)
    }

    pub fn normalized(&self) -> Self {
        let s = self.captured_mass();
        if s <= T::zero() {
            return self.clone();
        }
        Self {
            probs: self.probs.iter().map(|p| *p / s).collect(),
        }
    }
}

impl<T> Index<usize> for PhotonDistribution<T> {
    type Output = T;

    fn index(&self, n: usize) -> &T {
        &self.probs[n]
    }
}

/// The three state families used as ground truth.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec<T> {
    Coherent {
        mean_photons: T,
    },
    /// `D(alpha) S(xi) |0>` parametrized by the total mean photon number and
    /// the fraction of it that comes from squeezing.
    Squeezed {
        mean_photons: T,
        squeeze_fraction: T,
        /// Phase of `xi` relative to a real, positive `alpha` (radians).
        relative_phase: T,
    },
    /// Pure superposition `sum_k c_k |n_k>` with real amplitudes.
    FockSuperposition {
        terms: Vec<(usize, T)>,
    },
}

impl<T: Scalar> StateSpec<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            StateSpec::Coherent { mean_photons } => check_mean(*mean_photons),
            StateSpec::Squeezed {
                mean_photons,
                squeeze_fraction,
                relative_phase,
            } => {
                check_mean(*mean_photons)?;
                check_fraction(*squeeze_fraction)?;
                if !relative_phase.is_finite() {
                    return Err(invalid("relative phase must be finite"));
                }
                Ok(())
            }
            StateSpec::FockSuperposition { terms } => check_terms(terms, None),
        }
    }

    pub fn distribution(&self, truncation: usize) -> Result<PhotonDistribution<T>> {
        match self {
            StateSpec::Coherent { mean_photons } => {
                coherent_distribution(*mean_photons, truncation)
            }
            StateSpec::Squeezed {
                mean_photons,
                squeeze_fraction,
                relative_phase,
            } => squeezed_distribution(
                *mean_photons,
                *squeeze_fraction,
                *relative_phase,
                truncation,
            ),
            StateSpec::FockSuperposition { terms } => {
                fock_superposition_distribution(terms, truncation)
            }
        }
    }

    /// Mean photon number of the untruncated state.
    pub fn mean_photons(&self) -> T {
        match self {
            StateSpec::Coherent { mean_photons } | StateSpec::Squeezed { mean_photons, .. } => {
                *mean_photons
            }
            StateSpec::FockSuperposition { terms } => terms
                .iter()
                .map(|(n, c)| T::from_usize_lossy(*n) * *c * *c)
                .sum(),
        }
    }
}

fn check_mean<T: Scalar>(mean: T) -> Result<()> {
    if !(mean.is_finite() && mean >= T::zero()) {
        return Err(invalid(format!(
            "mean photon number must be >= 0, got {mean}"
        )));
    }
    Ok(())
}

fn check_fraction<T: Scalar>(zeta: T) -> Result<()> {
    if !(zeta >= T::zero() && zeta <= T::one()) {
        return Err(invalid(format!(
            "squeeze fraction must lie in [0, 1], got {zeta}"
        )));
    }
    Ok(())
}

fn check_truncation(truncation: usize) -> Result<()> {
    if truncation == 0 {
        return Err(invalid("truncation must be >= 1"));
    }
    Ok(())
}

fn check_terms<T: Scalar>(terms: &[(usize, T)], truncation: Option<usize>) -> Result<()> {
    if terms.is_empty() {
        return Err(invalid("Fock superposition needs at least one term"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (n, c) in terms {
        if !seen.insert(*n) {
            return Err(invalid(format!("Fock superposition lists |{n}> twice")));
        }
        if !c.is_finite() {
            return Err(invalid(format!("amplitude of |{n}> is not finite")));
        }
        if let Some(t) = truncation {
            if *n >= t {
                return Err(invalid(format!(
                    "Fock term |{n}> lies outside the truncation window 0..{t}"
                )));
            }
        }
    }
    let norm: T = terms.iter().map(|(_, c)| *c * *c).sum();
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
    if (norm - T::one()).abs() > tol {
        return Err(invalid(format!(
            "Fock superposition amplitudes must satisfy sum c^2 = 1, got {norm}"
        )));
    }
    Ok(())
}

/// Poisson law `e^-mu mu^n / n!` on `0..truncation`.
pub fn coherent_distribution<T: Scalar>(
    mean_photons: T,
    truncation: usize,
) -> Result<PhotonDistribution<T>> {
    check_mean(mean_photons)?;
    check_truncation(truncation)?;
    if mean_photons == T::zero() {
        return PhotonDistribution::vacuum(truncation);
    }
    // log domain keeps large means from underflowing e^-mu
    let ln_mu = mean_photons.ln();
    let mut ln_fact = T::zero();
    let probs = (0..truncation)
        .map(|n| {
            if n > 0 {
                ln_fact += T::from_usize_lossy(n).ln();
            }
            (T::from_usize_lossy(n) * ln_mu - mean_photons - ln_fact).exp()
        })
        .collect();
    Ok(PhotonDistribution::from_vec_unchecked(probs))
}

/// Squared amplitudes of a real-amplitude superposition of number states.
pub fn fock_superposition_distribution<T: Scalar>(
    terms: &[(usize, T)],
    truncation: usize,
) -> Result<PhotonDistribution<T>> {
    check_truncation(truncation)?;
    check_terms(terms, Some(truncation))?;
    let mut probs = vec![T::zero(); truncation];
    for (n, c) in terms {
        probs[*n] = *c * *c;
    }
    Ok(PhotonDistribution::from_vec_unchecked(probs))
}

/// Displacement and squeezing magnitudes behind a (mean, fraction) pair.
///
/// `|alpha|^2 = (1 - zeta) <n>`, photons from squeezing `zeta <n>` equal
/// `sinh^2 r = |xi|^2 / (1 - |xi|^2)`, so `|xi| = tanh r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParameters<T> {
    pub displacement: T,
    pub squeeze_magnitude: T,
    pub squeeze_r: T,
}

impl<T: Scalar> SqueezeParameters<T> {
    pub fn from_mean_and_fraction(mean_photons: T, squeeze_fraction: T) -> Result<Self> {
        check_mean(mean_photons)?;
        check_fraction(squeeze_fraction)?;
        let coherent_part = (T::one() - squeeze_fraction) * mean_photons;
        let squeezed_part = squeeze_fraction * mean_photons;
        let squeeze_magnitude = (squeezed_part / (T::one() + squeezed_part)).sqrt();
        Ok(Self {
            displacement: coherent_part.max(T::zero()).sqrt(),
            squeeze_magnitude,
            squeeze_r: squeezed_part.sqrt().asinh(),
        })
    }
}

/// Photon distribution of `D(alpha) S(xi) |0>`.
///
/// Both operators are applied to the vacuum by propagating
/// `exp(G)` on a working basis at least four times the requested window, with
/// `S(xi) = exp(xi/2 a^dag^2 - conj(xi)/2 a^2)` (exponent magnitude `r`) and
/// `D(alpha) = exp(alpha a^dag - conj(alpha) a)`. Call
/// [`PhotonDistribution::is_truncation_adequate`] to detect a window that is
/// too small.
pub fn squeezed_distribution<T: Scalar>(
    mean_photons: T,
    squeeze_fraction: T,
    relative_phase: T,
    truncation: usize,
) -> Result<PhotonDistribution<T>> {
    check_truncation(truncation)?;
    if !relative_phase.is_finite() {
        return Err(invalid("relative phase must be finite"));
    }
    let params = SqueezeParameters::from_mean_and_fraction(mean_photons, squeeze_fraction)?;
    let mean = mean_photons.to_f64_lossy();
    let working = (4 * truncation).max(64 + (40.0 * mean).ceil() as usize);

    let zero = Complex::new(T::zero(), T::zero());
    let mut psi = vec![zero; working];
    psi[0] = Complex::new(T::one(), T::zero());

    let half = T::lit(0.5);
    if params.squeeze_r > T::zero() {
        let xi = Complex::from_polar(params.squeeze_r, relative_phase);
        let gen = Ladder {
            create2: xi * half,
            annihilate2: -xi.conj() * half,
            ..Ladder::zero()
        };
        psi = gen.exp_apply(&psi);
    }
    if params.displacement > T::zero() {
        let alpha = Complex::new(params.displacement, T::zero());
        let gen = Ladder {
            create: alpha,
            annihilate: -alpha.conj(),
            ..Ladder::zero()
        };
        psi = gen.exp_apply(&psi);
    }

    let probs = psi[..truncation].iter().map(|c| c.norm_sqr()).collect();
    Ok(PhotonDistribution::from_vec_unchecked(probs))
}

/// `create2 a^dag^2 + annihilate2 a^2 + create a^dag + annihilate a`
/// restricted to a finite number basis.
#[derive(Debug, Clone, Copy)]
struct Ladder<T> {
    create2: Complex<T>,
    annihilate2: Complex<T>,
    create: Complex<T>,
    annihilate: Complex<T>,
}

impl<T: Scalar> Ladder<T> {
    fn zero() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self {
            create2: z,
            annihilate2: z,
            create: z,
            annihilate: z,
        }
    }

    fn scaled(self, s: T) -> Self {
        Self {
            create2: self.create2 * s,
            annihilate2: self.annihilate2 * s,
            create: self.create * s,
            annihilate: self.annihilate * s,
        }
    }

    fn apply(&self, v: &[Complex<T>], out: &mut [Complex<T>]) {
        let dim = v.len();
        for (n, o) in out.iter_mut().enumerate() {
            let nf = T::from_usize_lossy(n);
            let mut acc = Complex::new(T::zero(), T::zero());
            if n >= 2 {
                acc += self.create2 * v[n - 2] * (nf * (nf - T::one())).sqrt();
            }
            if n >= 1 {
                acc += self.create * v[n - 1] * nf.sqrt();
            }
            if n + 1 < dim {
                acc += self.annihilate * v[n + 1] * (nf + T::one()).sqrt();
            }
            if n + 2 < dim {
                acc += self.annihilate2 * v[n + 2] * ((nf + T::one()) * (nf + T::lit(2.0))).sqrt();
            }
            *o = acc;
        }
    }

    /// Operator-norm bound on the truncated basis of size `dim`.
    fn norm_bound(&self, dim: usize) -> T {
        let d = T::from_usize_lossy(dim);
        (self.create2.norm() + self.annihilate2.norm()) * d
            + (self.create.norm() + self.annihilate.norm()) * d.sqrt()
    }

    /// `exp(self) v` by Taylor series over substeps of norm at most 1/2.
    fn exp_apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let bound = self.norm_bound(v.len()).to_f64_lossy();
        let steps = (bound / 0.5).ceil().max(1.0) as usize;
        let step = self.scaled(T::one() / T::from_usize_lossy(steps));
        let mut acc = v.to_vec();
        let mut term = vec![Complex::new(T::zero(), T::zero()); v.len()];
        let mut next = term.clone();
        for _ in 0..steps {
            term.copy_from_slice(&acc);
            for k in 1..=64 {
                step.apply(&term, &mut next);
                let inv_k = T::one() / T::from_usize_lossy(k);
                let mut term_norm = T::zero();
                for (t, nx) in term.iter_mut().zip(next.iter()) {
                    *t = *nx * inv_k;
                    term_norm += t.norm_sqr();
                }
                for (a, t) in acc.iter_mut().zip(term.iter()) {
                    *a += *t;
                }
                if term_norm.sqrt() <= T::epsilon() * T::lit(1e-2) {
                    break;
                }
            }
        }
        acc
    }
}
