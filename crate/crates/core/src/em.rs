//! Expectation-maximization reconstruction of the photon distribution from
//! on/off frequencies, with convergence diagnostics and Fisher-information
//! error bars.
//!
//! The model `p_nu = sum_n A[nu][n] rho_n` is linear with positive unknowns,
//! so the multiplicative update
//!
//! ```text
//! rho_n <- rho_n * sum_nu W[nu][n] * f_nu / p_nu[rho]
//! ```
//!
//! keeps every iterate nonnegative. The weights `W` depend on
//! [`UpdateNormalization`].

use crate::detection::{EfficiencyGrid, OnOffDataset, ResponseMatrix};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::states::PhotonDistribution;

/// How `A[nu][n]` is normalized inside the update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateNormalization {
    /// `W[nu][n] = A[nu][n] / sum_mu A[mu][n]`. The true distribution is a
    /// fixed point when the frequencies are exact, and the iteration climbs
    /// the Poisson likelihood of the no-click counts.
    #[default]
    Column,
    /// `W[nu][n] = A[nu][n] / sum_{m < nbar} A[nu][m]`: row normalization
    /// over the truncated window.
    RowTruncated,
    /// `W[nu][n] = A[nu][n] * eta_nu`: row normalization by the untruncated
    /// geometric sum `1 / eta_nu`.
    RowAnalytic,
}

impl UpdateNormalization {
    pub fn name(self) -> &'static str {
        match self {
            UpdateNormalization::Column => "column",
            UpdateNormalization::RowTruncated => "row_truncated",
            UpdateNormalization::RowAnalytic => "row_analytic",
        }
    }

    fn weights<T: Scalar>(self, matrix: &ResponseMatrix<T>) -> Vec<T> {
        let cols = matrix.truncation();
        let mut w = matrix.entries().to_vec();
        match self {
            UpdateNormalization::Column => {
                for row in w.chunks_exact_mut(cols) {
                    for (x, c) in row.iter_mut().zip(matrix.column_sums()) {
                        *x /= *c;
                    }
                }
            }
            UpdateNormalization::RowTruncated => {
                for (row, s) in w.chunks_exact_mut(cols).zip(matrix.row_sums()) {
                    row.iter_mut().for_each(|x| *x /= *s);
                }
            }
            UpdateNormalization::RowAnalytic => {
                for (row, eta) in w.chunks_exact_mut(cols).zip(matrix.etas()) {
                    row.iter_mut().for_each(|x| *x *= *eta);
                }
            }
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig<T> {
    /// Fixed iteration budget; there is no early exit.
    pub max_iterations: usize,
    pub normalization: UpdateNormalization,
    /// Divide each iterate by its sum. Off by default: the drift
    /// `S = sum rho - 1` is tracked instead.
    pub renormalize_each_step: bool,
    /// Record a trace row every this many iterations (plus start and end).
    pub trace_stride: usize,
    /// Starting point; uniform `1 / nbar` when absent. Must be strictly positive.
    pub initial: Option<PhotonDistribution<T>>,
    /// Shot count `n_x` in `sigma_n = 1 / sqrt(n_x F_n)`. Defaults to the
    /// mean number of shots per efficiency.
    pub error_bar_shots: Option<T>,
}

impl<T: Scalar> EmConfig<T> {
    pub fn new(max_iterations: usize) -> Self {
        Self {
            max_iterations,
            normalization: UpdateNormalization::default(),
            renormalize_each_step: false,
            trace_stride: default_trace_stride(max_iterations),
            initial: None,
            error_bar_shots: None,
        }
    }

    pub fn validate(&self, truncation: usize) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be >= 1"));
        }
        if self.trace_stride == 0 {
            return Err(invalid("trace_stride must be >= 1"));
        }
        if let Some(init) = &self.initial {
            if init.truncation() != truncation {
                return Err(Error::DimensionMismatch {
                    context: "initial distribution",
                    expected: truncation,
                    found: init.truncation(),
                });
            }
            if let Some(n) = init.probs().iter().position(|p| *p <= T::zero()) {
                return Err(invalid(format!(
                    "initial distribution must be strictly positive (entry {n} is {})",
                    init[n]
                )));
            }
        }
        if let Some(s) = self.error_bar_shots {
            if !(s > T::zero()) {
                return Err(invalid("error_bar_shots must be > 0"));
            }
        }
        Ok(())
    }
}

/// `max(1, n_it / 1000)`.
pub fn default_trace_stride(max_iterations: usize) -> usize {
    (max_iterations / 1000).max(1)
}

/// One trace sample after `iteration` updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow<T> {
    pub iteration: usize,
    /// `sum_nu |p_nu - p_nu[rho^(k)]|` against the theoretical probabilities
    /// when the truth is known, otherwise against the frequencies.
    pub total_error: T,
    /// Same sum against the observed frequencies.
    pub empirical_error: T,
    /// `sum_n rho_n^(k) - 1`.
    pub normalization_drift: T,
    pub fidelity: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult<T> {
    pub estimate: PhotonDistribution<T>,
    pub fisher_information: Vec<T>,
    pub error_bars: Vec<T>,
    pub trace: Vec<TraceRow<T>>,
    pub iterations_run: usize,
}

impl<T: Scalar> ReconstructionResult<T> {
    pub fn final_row(&self) -> &TraceRow<T> {
        self.trace
            .last()
            .expect("trace holds at least the start row")
    }
}

/// Precomputed update weights for repeated steps on one matrix.
struct Updater<'a, T> {
    matrix: &'a ResponseMatrix<T>,
    weights: Vec<T>,
    renormalize: bool,
    predicted: Vec<T>,
    ratio: Vec<T>,
}

impl<'a, T: Scalar> Updater<'a, T> {
    fn new(
        matrix: &'a ResponseMatrix<T>,
        normalization: UpdateNormalization,
        renormalize: bool,
    ) -> Self {
        Self {
            matrix,
            weights: normalization.weights(matrix),
            renormalize,
            predicted: vec![T::zero(); matrix.rows()],
            ratio: vec![T::zero(); matrix.rows()],
        }
    }

    fn step(&mut self, rho: &mut [T], frequencies: &[T]) -> Result<()> {
        self.matrix.predict_into(rho, &mut self.predicted);
        let floor = T::probability_floor();
        for (nu, ((r, p), f)) in self
            .ratio
            .iter_mut()
            .zip(&self.predicted)
            .zip(frequencies)
            .enumerate()
        {
            *r = if *f == T::zero() {
                T::zero()
            } else if *p <= T::zero() {
                return Err(Error::Infeasible {
                    index: nu,
                    frequency: f.to_f64_lossy(),
                });
            } else {
                *f / p.max(floor)
            };
        }
        let cols = self.matrix.truncation();
        let mut multiplier = vec![T::zero(); cols];
        for (wrow, r) in self.weights.chunks_exact(cols).zip(&self.ratio) {
            if *r == T::zero() {
                continue;
            }
            for (m, w) in multiplier.iter_mut().zip(wrow) {
                *m += *w * *r;
            }
        }
        for (x, m) in rho.iter_mut().zip(&multiplier) {
            *x *= *m;
        }
        if self.renormalize {
            let s: T = rho.iter().copied().sum();
            if s > T::zero() {
                rho.iter_mut().for_each(|x| *x /= s);
            }
        }
        Ok(())
    }
}

fn check_frequencies<T: Scalar>(matrix: &ResponseMatrix<T>, frequencies: &[T]) -> Result<()> {
    if frequencies.len() != matrix.rows() {
        return Err(Error::DimensionMismatch {
            context: "frequencies",
            expected: matrix.rows(),
            found: frequencies.len(),
        });
    }
    if let Some(nu) = frequencies
        .iter()
        .position(|f| !(*f >= T::zero() && *f <= T::one()))
    {
        return Err(invalid(format!(
            "frequency #{nu} = {} outside [0, 1]",
            frequencies[nu]
        )));
    }
    Ok(())
}

/// A single EM update. Entries that are zero stay zero.
pub fn em_step<T: Scalar>(
    current: &PhotonDistribution<T>,
    matrix: &ResponseMatrix<T>,
    frequencies: &[T],
    normalization: UpdateNormalization,
    renormalize: bool,
) -> Result<PhotonDistribution<T>> {
    if current.truncation() != matrix.truncation() {
        return Err(Error::DimensionMismatch {
            context: "em_step",
            expected: matrix.truncation(),
            found: current.truncation(),
        });
    }
    check_frequencies(matrix, frequencies)?;
    let mut rho = current.probs().to_vec();
    Updater::new(matrix, normalization, renormalize).step(&mut rho, frequencies)?;
    Ok(PhotonDistribution::from_vec_unchecked(rho))
}

/// Runs exactly `config.max_iterations` EM updates on the dataset's
/// frequencies, recording diagnostics along the way.
pub fn reconstruct<T: Scalar>(
    dataset: &OnOffDataset,
    grid: &EfficiencyGrid<T>,
    truncation: usize,
    config: &EmConfig<T>,
    ground_truth: Option<&PhotonDistribution<T>>,
) -> Result<ReconstructionResult<T>> {
    if dataset.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            context: "dataset vs efficiency grid",
            expected: grid.len(),
            found: dataset.len(),
        });
    }
    config.validate(truncation)?;
    if let Some(truth) = ground_truth {
        if truth.truncation() != truncation {
            return Err(Error::DimensionMismatch {
                context: "ground truth",
                expected: truncation,
                found: truth.truncation(),
            });
        }
    }
    let matrix = ResponseMatrix::new(grid, truncation)?;
    let frequencies: Vec<T> = dataset.frequencies();
    let theoretical = ground_truth.map(|t| {
        let mut p = vec![T::zero(); matrix.rows()];
        matrix.predict_into(t.probs(), &mut p);
        p
    });

    let mut rho = match &config.initial {
        Some(init) => init.probs().to_vec(),
        None => PhotonDistribution::<T>::uniform(truncation)?.into_vec(),
    };
    let mut updater = Updater::new(&matrix, config.normalization, config.renormalize_each_step);
    let mut predicted = vec![T::zero(); matrix.rows()];

    let mut record = |k: usize, rho: &[T]| -> TraceRow<T> {
        matrix.predict_into(rho, &mut predicted);
        let empirical_error = abs_diff_sum(&frequencies, &predicted);
        let total_error = theoretical
            .as_ref()
            .map(|p| abs_diff_sum(p, &predicted))
            .unwrap_or(empirical_error);
        TraceRow {
            iteration: k,
            total_error,
            empirical_error,
            normalization_drift: rho.iter().copied().sum::<T>() - T::one(),
            fidelity: ground_truth.map(|t| overlap(t.probs(), rho)),
        }
    };

    let mut trace = vec![record(0, &rho)];
    for k in 1..=config.max_iterations {
        updater.step(&mut rho, &frequencies)?;
        if k % config.trace_stride == 0 || k == config.max_iterations {
            trace.push(record(k, &rho));
        }
    }

    let estimate = PhotonDistribution::from_vec_unchecked(rho);
    let fisher = fisher_information(&estimate, &matrix)?;
    let shots = config
        .error_bar_shots
        .unwrap_or_else(|| T::lit(dataset.total_shots() as f64 / dataset.len() as f64));
    let error_bars = error_bars(&fisher, shots);
    Ok(ReconstructionResult {
        estimate,
        fisher_information: fisher,
        error_bars,
        trace,
        iterations_run: config.max_iterations,
    })
}

fn abs_diff_sum<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y).abs()).sum()
}

fn overlap<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x * *y).sqrt()).sum()
}

/// `sum_nu |p_nu - sum_n A[nu][n] rho_n|`.
pub fn total_error<T: Scalar>(
    current: &PhotonDistribution<T>,
    matrix: &ResponseMatrix<T>,
    reference: &[T],
) -> Result<T> {
    if current.truncation() != matrix.truncation() {
        return Err(Error::DimensionMismatch {
            context: "total_error distribution",
            expected: matrix.truncation(),
            found: current.truncation(),
        });
    }
    if reference.len() != matrix.rows() {
        return Err(Error::DimensionMismatch {
            context: "total_error reference",
            expected: matrix.rows(),
            found: reference.len(),
        });
    }
    let mut p = vec![T::zero(); matrix.rows()];
    matrix.predict_into(current.probs(), &mut p);
    Ok(abs_diff_sum(reference, &p))
}

/// `sum_n rho_n - 1`.
pub fn normalization_drift<T: Scalar>(current: &PhotonDistribution<T>) -> T {
    current.captured_mass() - T::one()
}

/// `G = sum_n sqrt(rho_n rho'_n)`.
pub fn fidelity<T: Scalar>(
    estimate: &PhotonDistribution<T>,
    truth: &PhotonDistribution<T>,
) -> Result<T> {
    if estimate.truncation() != truth.truncation() {
        return Err(Error::DimensionMismatch {
            context: "fidelity",
            expected: truth.truncation(),
            found: estimate.truncation(),
        });
    }
    Ok(overlap(estimate.probs(), truth.probs()))
}

/// Fisher information of each `rho_n` for the renormalized no-click
/// probabilities `q_nu = p_nu / N0`, `N0 = sum_nu p_nu`:
///
/// ```text
/// F_n = 1/N0^3 sum_nu (A[nu][n] N0 - p_nu sum_k A[k][n])^2 / p_nu
/// ```
pub fn fisher_information<T: Scalar>(
    estimate: &PhotonDistribution<T>,
    matrix: &ResponseMatrix<T>,
) -> Result<Vec<T>> {
    if estimate.truncation() != matrix.truncation() {
        return Err(Error::DimensionMismatch {
            context: "fisher_information",
            expected: matrix.truncation(),
            found: estimate.truncation(),
        });
    }
    let mut p = vec![T::zero(); matrix.rows()];
    matrix.predict_into(estimate.probs(), &mut p);
    if let Some(nu) = p.iter().position(|x| !(*x > T::zero())) {
        return Err(Error::SingularInformation(nu));
    }
    let n0: T = p.iter().copied().sum();
    let n0_cubed = n0 * n0 * n0;
    let info = (0..matrix.truncation())
        .map(|n| {
            let col_sum = matrix.column_sums()[n];
            let s: T = p
                .iter()
                .enumerate()
                .map(|(nu, pnu)| {
                    let d = matrix.get(nu, n) * n0 - *pnu * col_sum;
                    d * d / *pnu
                })
                .sum();
            s / n0_cubed
        })
        .collect();
    Ok(info)
}

/// `sigma_n = 1 / sqrt(shots * F_n)`; infinite where `F_n = 0`.
pub fn error_bars<T: Scalar>(fisher: &[T], shots: T) -> Vec<T> {
    fisher
        .iter()
        .map(|f| {
            if *f > T::zero() {
                T::one() / (shots * *f).sqrt()
            } else {
                T::infinity()
            }
        })
        .collect()
}
