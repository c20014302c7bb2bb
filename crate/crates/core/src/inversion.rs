//! Direct linear inversion of `p = V rho`, where `V[i][j] = x_i^j` and
//! `x_i = 1 - eta_i`.
//!
//! This is the baseline that maximum-likelihood reconstruction replaces. No
//! positivity or normalization is imposed on the output: negative or
//! larger-than-one entries are exactly what the baseline is meant to show.
//! Solving `N x nbar` Vandermonde systems needs frequencies accurate to
//! roughly `kappa_2(V)`, which grows by about a factor five per extra photon
//! number on typical grids.

use crate::error::{invalid, Error, Result};
use crate::linalg::{least_squares_qr, singular_values, vandermonde_solve, Matrix};
use crate::scalar::Scalar;

/// Vandermonde matrix built on nodes `x_i = 1 - eta_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeSystem<T> {
    nodes: Vec<T>,
    order: usize,
}

impl<T: Scalar> VandermondeSystem<T> {
    pub fn from_etas(etas: &[T], order: usize) -> Result<Self> {
        if order == 0 {
            return Err(invalid("Vandermonde order must be >= 1"));
        }
        if etas.is_empty() {
            return Err(invalid("Vandermonde system needs at least one node"));
        }
        Ok(Self {
            nodes: etas.iter().map(|e| T::one() - *e).collect(),
            order,
        })
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn matrix(&self) -> Matrix<T> {
        Matrix::from_fn(self.nodes.len(), self.order, |i, j| {
            self.nodes[i].powi(j as i32)
        })
    }
}

/// `rho = V^-1 p` for exactly `nbar` probabilities at `nbar` efficiencies.
pub fn invert_square<T: Scalar>(probabilities: &[T], etas: &[T]) -> Result<Vec<T>> {
    if probabilities.len() != etas.len() {
        return Err(Error::DimensionMismatch {
            context: "invert_square",
            expected: etas.len(),
            found: probabilities.len(),
        });
    }
    let system = VandermondeSystem::from_etas(etas, etas.len())?;
    vandermonde_solve(system.nodes(), probabilities)
}

/// Least-squares `rho` minimizing `||V rho - f||_2` for `N >= nbar`.
///
/// Uses Householder QR on `V` directly; the normal-equations form
/// `(V^T V)^-1 V^T` would square the condition number.
pub fn invert_least_squares<T: Scalar>(
    frequencies: &[T],
    etas: &[T],
    truncation: usize,
) -> Result<Vec<T>> {
    if frequencies.len() != etas.len() {
        return Err(Error::DimensionMismatch {
            context: "invert_least_squares",
            expected: etas.len(),
            found: frequencies.len(),
        });
    }
    if truncation > etas.len() {
        return Err(invalid(format!(
            "least squares needs at least as many efficiencies ({}) as unknowns ({truncation})",
            etas.len()
        )));
    }
    let system = VandermondeSystem::from_etas(etas, truncation)?;
    least_squares_qr(&system.matrix(), frequencies)
}

/// 2-norm condition number `sigma_max / sigma_min` of the `N x nbar` system.
pub fn condition_number<T: Scalar>(etas: &[T], truncation: usize) -> Result<T> {
    if truncation > etas.len() {
        return Err(invalid(format!(
            "condition number needs nbar ({truncation}) <= N ({})",
            etas.len()
        )));
    }
    let sv = singular_values(&VandermondeSystem::from_etas(etas, truncation)?.matrix());
    let (max, min) = (sv[0], sv[sv.len() - 1]);
    Ok(if min == T::zero() {
        T::infinity()
    } else {
        max / min
    })
}

/// Indices of entries that are not valid probabilities (`< 0` or `> 1`).
pub fn nonphysical_entries<T: Scalar>(rho: &[T]) -> Vec<usize> {
    rho.iter()
        .enumerate()
        .filter(|(_, r)| **r < T::zero() || **r > T::one() || !r.is_finite())
        .map(|(n, _)| n)
        .collect()
}
