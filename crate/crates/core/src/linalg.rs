//! Small dense kernels used by the linear-inversion baseline.

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| *a * *b).sum())
            .collect()
    }
}

/// Least-squares solution of `min ||A x - b||_2` by Householder QR.
///
/// Fails with [`Error::RankDeficient`] when a diagonal entry of `R` falls
/// below `max(m, n) * eps * max |R_jj|`.
pub fn least_squares_qr<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            context: "least_squares_qr",
            expected: m,
            found: b.len(),
        });
    }
    if m < n {
        return Err(invalid(format!(
            "underdetermined system: {m} rows < {n} columns"
        )));
    }
    // column-major working copy
    let mut cols: Vec<Vec<T>> = (0..n)
        .map(|j| (0..m).map(|i| a.get(i, j)).collect())
        .collect();
    let mut rhs = b.to_vec();
    let mut diag = vec![T::zero(); n];

    for k in 0..n {
        let norm = cols[k][k..].iter().map(|v| *v * *v).sum::<T>().sqrt();
        if norm == T::zero() {
            diag[k] = T::zero();
            continue;
        }
        let alpha = if cols[k][k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|x| *x * *x).sum();
        diag[k] = alpha;
        if vnorm2 == T::zero() {
            continue;
        }
        let two = T::lit(2.0);
        for col in cols.iter_mut().skip(k + 1) {
            let dot: T = v.iter().zip(&col[k..]).map(|(x, y)| *x * *y).sum();
            let s = two * dot / vnorm2;
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= s * *vi;
            }
        }
        let dot: T = v.iter().zip(&rhs[k..]).map(|(x, y)| *x * *y).sum();
        let s = two * dot / vnorm2;
        for (r, vi) in rhs[k..].iter_mut().zip(&v) {
            *r -= s * *vi;
        }
        cols[k][k] = alpha;
    }

    let scale = diag.iter().fold(T::zero(), |acc, d| acc.max(d.abs()));
    let tol = T::from_usize_lossy(m.max(n)) * T::epsilon() * scale;
    let rank = diag.iter().filter(|d| d.abs() > tol).count();
    if rank < n || scale == T::zero() {
        return Err(Error::RankDeficient { rank, columns: n });
    }

    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in k + 1..n {
            s -= cols[j][k] * x[j];
        }
        x[k] = s / diag[k];
    }
    Ok(x)
}

/// Singular values, largest first, by one-sided (Hestenes) Jacobi rotations.
pub fn singular_values<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    let a = if a.rows() < a.cols() {
        a.transpose()
    } else {
        a.clone()
    };
    let (m, n) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<T>> = (0..n)
        .map(|j| (0..m).map(|i| a.get(i, j)).collect())
        .collect();
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: T = cols[p].iter().map(|x| *x * *x).sum();
                let beta: T = cols[q].iter().map(|x| *x * *x).sum();
                let gamma: T = cols[p].iter().zip(&cols[q]).map(|(x, y)| *x * *y).sum();
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = cols
        .iter()
        .map(|c| c.iter().map(|x| *x * *x).sum::<T>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Solves the square Vandermonde system `sum_j x_i^j c_j = f_i` in `O(n^2)`
/// (Björck-Pereyra). Nodes must be pairwise distinct.
pub fn vandermonde_solve<T: Scalar>(nodes: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = nodes.len();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            context: "vandermonde_solve",
            expected: n,
            found: rhs.len(),
        });
    }
    for i in 0..n {
        for j in 0..i {
            if nodes[i] == nodes[j] {
                return Err(Error::Singular(format!(
                    "repeated node {} at positions {j} and {i}",
                    nodes[i]
                )));
            }
        }
    }
    let mut c = rhs.to_vec();
    // Newton divided differences
    for k in 0..n.saturating_sub(1) {
        for i in (k + 1..n).rev() {
            c[i] = (c[i] - c[i - 1]) / (nodes[i] - nodes[i - k - 1]);
        }
    }
    // Newton form to monomial coefficients
    for k in (0..n.saturating_sub(1)).rev() {
        for i in k..n - 1 {
            let next = c[i + 1];
            c[i] -= nodes[k] * next;
        }
    }
    Ok(c)
}
