//! Tridiagonal solvers.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix stored by its diagonal and first
/// off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if off.len() + 1 != diag.len() && !(diag.is_empty() && off.is_empty()) {
            return Err(Error::DimensionMismatch {
                expected: diag.len().saturating_sub(1),
                found: off.len(),
            });
        }
        Ok(Self { diag, off })
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    /// `A v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.order();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        solve_tridiagonal(&self.diag, &self.off, rhs)
    }
}

/// Solves `A x = rhs` for a symmetric positive definite tridiagonal `A` by
/// an `L D L^T` factorization. A non-positive pivot means `A` is not
/// positive definite and is reported as [`Error::PivotBreakdown`].
pub fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: off.len(),
        });
    }
    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n.saturating_sub(1)];
    let mut y = vec![0.0; n];
    d[0] = diag[0];
    if !(d[0] > 0.0) {
        return Err(Error::PivotBreakdown { row: 0, pivot: d[0] });
    }
    y[0] = rhs[0];
    for i in 1..n {
        l[i - 1] = off[i - 1] / d[i - 1];
        d[i] = diag[i] - l[i - 1] * off[i - 1];
        if !(d[i] > 0.0) {
            return Err(Error::PivotBreakdown { row: i, pivot: d[i] });
        }
        y[i] = rhs[i] - l[i - 1] * y[i - 1];
    }
    let mut x = vec![0.0; n];
    x[n - 1] = y[n - 1] / d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = y[i] / d[i] - l[i] * x[i + 1];
    }
    Ok(x)
}

/// Thomas algorithm for a general tridiagonal system with sub-diagonal
/// `lower`, diagonal `diag` and super-diagonal `upper`. Intended for
/// diagonally dominant matrices; a vanishing pivot is reported.
pub fn solve_tridiagonal_general(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if lower.len() + 1 != n || upper.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: lower.len().min(upper.len()),
        });
    }
    let mut c = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::PivotBreakdown { row: 0, pivot });
    }
    if n > 1 {
        c[0] = upper[0] / pivot;
    }
    y[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::PivotBreakdown { row: i, pivot });
        }
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        y[i] = (rhs[i] - lower[i - 1] * y[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        y[i] -= c[i] * y[i + 1];
    }
    Ok(y)
}
