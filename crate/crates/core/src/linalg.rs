//! Symmetric positive-definite solves with an explicit conditioning gate.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest condition number accepted before a covariance is declared singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Cholesky factor of a symmetric positive-definite matrix together with its
/// spectral condition number.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    condition: f64,
}

impl SpdFactor {
    /// Factors `m`, failing with `SingularCovariance` when the factorization
    /// breaks down or the condition number exceeds [`MAX_CONDITION`].
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let condition = condition_number(m);
        if !(condition.is_finite() && condition <= MAX_CONDITION) {
            return Err(Error::SingularCovariance { condition });
        }
        let chol = Cholesky::new(m.clone()).ok_or(Error::SingularCovariance { condition })?;
        Ok(Self { chol, condition })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }
}

/// Eigenvalues of a symmetric matrix in increasing order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `lambda_max / lambda_min` for a symmetric matrix; infinite when the
/// smallest eigenvalue is not positive.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let ev = symmetric_eigenvalues(m);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}
