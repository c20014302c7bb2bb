//! On/off detection at a grid of quantum efficiencies.
//!
//! A detector of efficiency `eta` stays silent on `|n>` with probability
//! `(1 - eta)^n`, so the no-click probability of a state is
//! `p(eta) = sum_n (1 - eta)^n rho_n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::states::PhotonDistribution;

/// Strictly increasing efficiencies in `(0, 1)` plus an optional fluctuation
/// half-width `sigma` (each shot then sees `eta' ~ U(eta - sigma, eta + sigma)`).
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyGrid<T> {
    etas: Vec<T>,
    fluctuation_half_width: T,
}

impl<T: Scalar> EfficiencyGrid<T> {
    /// `count` equally spaced values from `eta_min` to `eta_max` inclusive.
    pub fn uniform(eta_min: T, eta_max: T, count: usize) -> Result<Self> {
        if !(eta_min > T::zero()) {
            return Err(invalid(format!("eta_min must be > 0, got {eta_min}")));
        }
        if !(eta_max < T::one()) {
            return Err(invalid(format!("eta_max must be < 1, got {eta_max}")));
        }
        if !(eta_min < eta_max) {
            return Err(invalid(format!(
                "eta_min must be < eta_max, got {eta_min} >= {eta_max}"
            )));
        }
        if count < 2 {
            return Err(invalid(format!(
                "grid needs at least 2 efficiencies, got {count}"
            )));
        }
        let span = eta_max - eta_min;
        let last = T::from_usize_lossy(count - 1);
        let etas = (0..count)
            .map(|i| {
                if i + 1 == count {
                    eta_max
                } else {
                    eta_min + span * T::from_usize_lossy(i) / last
                }
            })
            .collect();
        Self::from_etas(etas)
    }

    pub fn from_etas(etas: Vec<T>) -> Result<Self> {
        if etas.is_empty() {
            return Err(invalid("efficiency grid is empty"));
        }
        for (i, &eta) in etas.iter().enumerate() {
            if !(eta > T::zero() && eta < T::one()) {
                return Err(invalid(format!("efficiency #{i} = {eta} outside (0, 1)")));
            }
            if i > 0 && !(eta > etas[i - 1]) {
                return Err(invalid(format!(
                    "efficiencies must be strictly increasing (#{i} = {eta} after {})",
                    etas[i - 1]
                )));
            }
        }
        Ok(Self {
            etas,
            fluctuation_half_width: T::zero(),
        })
    }

    /// `sigma = (eta_max - eta_min) / (a N)`.
    pub fn fluctuation_half_width_for(&self, a: T) -> Result<T> {
        if !(a > T::zero() && a.is_finite()) {
            return Err(invalid(format!(
                "fluctuation parameter a must be > 0, got {a}"
            )));
        }
        if self.len() < 2 {
            return Err(invalid("fluctuation model needs at least 2 efficiencies"));
        }
        Ok((self.eta_max() - self.eta_min()) / (a * T::from_usize_lossy(self.len())))
    }

    /// Grid with fluctuation half-width derived from `a`.
    pub fn with_fluctuation(&self, a: T) -> Result<Self> {
        let sigma = self.fluctuation_half_width_for(a)?;
        self.with_half_width(sigma)
    }

    pub fn with_half_width(&self, sigma: T) -> Result<Self> {
        if !(sigma >= T::zero() && sigma.is_finite()) {
            return Err(invalid(format!(
                "fluctuation half-width must be >= 0, got {sigma}"
            )));
        }
        if sigma > T::zero() {
            if !(self.eta_min() - sigma > T::zero()) {
                return Err(invalid(format!(
                    "fluctuation pushes eta below 0: eta_min - sigma = {}",
                    self.eta_min() - sigma
                )));
            }
            if !(self.eta_max() + sigma < T::one()) {
                return Err(invalid(format!(
                    "fluctuation pushes eta above 1: eta_max + sigma = {}",
                    self.eta_max() + sigma
                )));
            }
        }
        Ok(Self {
            etas: self.etas.clone(),
            fluctuation_half_width: sigma,
        })
    }

    pub fn etas(&self) -> &[T] {
        &self.etas
    }

    pub fn len(&self) -> usize {
        self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }

    pub fn eta_min(&self) -> T {
        self.etas[0]
    }

    pub fn eta_max(&self) -> T {
        self.etas[self.etas.len() - 1]
    }

    pub fn fluctuation_half_width(&self) -> T {
        self.fluctuation_half_width
    }

    /// `count` indices spread evenly over the grid, endpoints included.
    pub fn spread_indices(&self, count: usize) -> Result<Vec<usize>> {
        if count == 0 || count > self.len() {
            return Err(invalid(format!(
                "cannot pick {count} of {} efficiencies",
                self.len()
            )));
        }
        if count == 1 {
            return Ok(vec![0]);
        }
        let n = self.len() - 1;
        Ok((0..count)
            .map(|i| (i * n + (count - 1) / 2) / (count - 1))
            .collect())
    }

    /// Sub-grid at [`spread_indices`](Self::spread_indices).
    pub fn spread_subset(&self, count: usize) -> Result<Self> {
        let etas = self
            .spread_indices(count)?
            .into_iter()
            .map(|i| self.etas[i])
            .collect();
        Ok(Self {
            etas,
            fluctuation_half_width: self.fluctuation_half_width,
        })
    }
}

/// `A[nu][n] = (1 - eta_nu)^n`, `N` rows by `truncation` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix<T> {
    etas: Vec<T>,
    cols: usize,
    entries: Vec<T>,
    row_sums: Vec<T>,
    column_sums: Vec<T>,
}

impl<T: Scalar> ResponseMatrix<T> {
    pub fn new(grid: &EfficiencyGrid<T>, truncation: usize) -> Result<Self> {
        Self::from_etas(grid.etas(), truncation)
    }

    /// Builds the matrix from raw efficiencies (no ordering requirement).
    pub fn from_etas(etas: &[T], truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(invalid("truncation must be >= 1"));
        }
        if etas.is_empty() {
            return Err(invalid("response matrix needs at least one efficiency"));
        }
        let mut entries = Vec::with_capacity(etas.len() * truncation);
        let mut row_sums = Vec::with_capacity(etas.len());
        for &eta in etas {
            if !(eta > T::zero() && eta <= T::one()) {
                return Err(invalid(format!("efficiency {eta} outside (0, 1]")));
            }
            let x = T::one() - eta;
            let mut v = T::one();
            let mut sum = T::zero();
            for _ in 0..truncation {
                entries.push(v);
                sum += v;
                v *= x;
            }
            row_sums.push(sum);
        }
        let mut column_sums = vec![T::zero(); truncation];
        for row in entries.chunks_exact(truncation) {
            for (c, a) in column_sums.iter_mut().zip(row) {
                *c += *a;
            }
        }
        Ok(Self {
            etas: etas.to_vec(),
            cols: truncation,
            entries,
            row_sums,
            column_sums,
        })
    }

    pub fn rows(&self) -> usize {
        self.etas.len()
    }

    pub fn truncation(&self) -> usize {
        self.cols
    }

    pub fn etas(&self) -> &[T] {
        &self.etas
    }

    pub fn get(&self, nu: usize, n: usize) -> T {
        self.entries[nu * self.cols + n]
    }

    pub fn row(&self, nu: usize) -> &[T] {
        &self.entries[nu * self.cols..(nu + 1) * self.cols]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    /// `sum_{m < truncation} A[nu][m]`.
    pub fn row_sums(&self) -> &[T] {
        &self.row_sums
    }

    /// `sum_nu A[nu][n]`.
    pub fn column_sums(&self) -> &[T] {
        &self.column_sums
    }

    /// `p_nu = sum_n A[nu][n] rho_n`, written into `out`.
    pub(crate) fn predict_into(&self, rho: &[T], out: &mut [T]) {
        for (row, o) in self.entries.chunks_exact(self.cols).zip(out.iter_mut()) {
            *o = row.iter().zip(rho).map(|(a, r)| *a * *r).sum();
        }
    }
}

/// Exact no-click probabilities `p_nu = sum_n A[nu][n] rho_n`.
pub fn off_probabilities<T: Scalar>(
    dist: &PhotonDistribution<T>,
    matrix: &ResponseMatrix<T>,
) -> Result<Vec<T>> {
    if dist.truncation() != matrix.truncation() {
        return Err(Error::DimensionMismatch {
            context: "off_probabilities",
            expected: matrix.truncation(),
            found: dist.truncation(),
        });
    }
    let mut p = vec![T::zero(); matrix.rows()];
    matrix.predict_into(dist.probs(), &mut p);
    Ok(p)
}

/// No-click probability at a single efficiency (Horner in `1 - eta`).
pub fn off_probability<T: Scalar>(dist: &PhotonDistribution<T>, eta: T) -> T {
    let x = T::one() - eta;
    dist.probs()
        .iter()
        .rev()
        .fold(T::zero(), |acc, p| acc * x + *p)
}

/// Shot and no-click counts per efficiency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnOffDataset {
    shots: Vec<u64>,
    no_clicks: Vec<u64>,
}

impl OnOffDataset {
    pub fn new(shots: Vec<u64>, no_clicks: Vec<u64>) -> Result<Self> {
        if shots.len() != no_clicks.len() {
            return Err(Error::DimensionMismatch {
                context: "OnOffDataset",
                expected: shots.len(),
                found: no_clicks.len(),
            });
        }
        if shots.is_empty() {
            return Err(invalid("dataset is empty"));
        }
        for (nu, (&n, &h)) in shots.iter().zip(&no_clicks).enumerate() {
            if n == 0 {
                return Err(invalid(format!("efficiency #{nu} has zero shots")));
            }
            if h > n {
                return Err(invalid(format!(
                    "efficiency #{nu}: {h} no-click events exceed {n} shots"
                )));
            }
        }
        Ok(Self { shots, no_clicks })
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    pub fn shots(&self) -> &[u64] {
        &self.shots
    }

    pub fn no_clicks(&self) -> &[u64] {
        &self.no_clicks
    }

    pub fn total_shots(&self) -> u64 {
        self.shots.iter().sum()
    }

    /// `f_nu = h_nu / n_nu`.
    pub fn frequencies<T: Scalar>(&self) -> Vec<T> {
        self.shots
            .iter()
            .zip(&self.no_clicks)
            .map(|(&n, &h)| T::lit(h as f64 / n as f64))
            .collect()
    }
}

/// Monte Carlo counts with `shots_per_eta` shots at every efficiency.
///
/// With `fluctuation_a`, the half-width is `(eta_max - eta_min) / (a N)`;
/// otherwise the grid's own half-width is used (zero for a plain grid).
pub fn sample_dataset<T: Scalar>(
    dist: &PhotonDistribution<T>,
    grid: &EfficiencyGrid<T>,
    shots_per_eta: u64,
    seed: u64,
    fluctuation_a: Option<T>,
) -> Result<OnOffDataset> {
    let sigma = match fluctuation_a {
        Some(a) => grid.with_fluctuation(a)?.fluctuation_half_width(),
        None => grid.fluctuation_half_width(),
    };
    sample_dataset_with_shots(dist, grid, &vec![shots_per_eta; grid.len()], seed, sigma)
}

/// Monte Carlo counts with an explicit shot count per efficiency.
///
/// Efficiency `nu` draws from ChaCha8 stream `nu` of `seed`, so the result
/// does not depend on thread scheduling. Without fluctuation each count is a
/// single binomial draw; with fluctuation every shot samples its own
/// efficiency and then a Bernoulli outcome.
pub fn sample_dataset_with_shots<T: Scalar>(
    dist: &PhotonDistribution<T>,
    grid: &EfficiencyGrid<T>,
    shots: &[u64],
    seed: u64,
    half_width: T,
) -> Result<OnOffDataset> {
    if shots.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            context: "sample_dataset shots",
            expected: grid.len(),
            found: shots.len(),
        });
    }
    if let Some(nu) = shots.iter().position(|&s| s == 0) {
        return Err(invalid(format!("efficiency #{nu} has zero shots")));
    }
    // validates that eta +- sigma stays inside (0, 1)
    grid.with_half_width(half_width)?;

    let rho: Vec<f64> = dist.probs().iter().map(|p| p.to_f64_lossy()).collect();
    let sigma = half_width.to_f64_lossy();
    let no_clicks = grid
        .etas()
        .par_iter()
        .zip(shots.par_iter())
        .enumerate()
        .map(|(nu, (eta, &n))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(nu as u64);
            let eta = eta.to_f64_lossy();
            if sigma > 0.0 {
                let mut h = 0u64;
                for _ in 0..n {
                    let eta_shot = rng.random_range(eta - sigma..eta + sigma);
                    let p = horner(&rho, 1.0 - eta_shot).clamp(0.0, 1.0);
                    if rng.random::<f64>() < p {
                        h += 1;
                    }
                }
                Ok(h)
            } else {
                let p = horner(&rho, 1.0 - eta).clamp(0.0, 1.0);
                let draw = Binomial::new(n, p)
                    .map_err(|e| invalid(format!("binomial draw at efficiency #{nu}: {e}")))?;
                Ok(draw.sample(&mut rng))
            }
        })
        .collect::<Result<Vec<u64>>>()?;
    OnOffDataset::new(shots.to_vec(), no_clicks)
}

fn horner(rho: &[f64], x: f64) -> f64 {
    rho.iter().rev().fold(0.0, |acc, p| acc * x + p)
}
