use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `V = λI + Σ_k x_k x_kᵀ` with its inverse kept in step.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    lambda: f64,
    v: DMatrix<f64>,
    inv: DMatrix<f64>,
    updates: usize,
}

/// Rank-one inverse updates between exact refactorizations.
const REFACTOR_EVERY: usize = 256;

impl DesignMatrix {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("ridge parameter must be positive, got {lambda}")));
        }
        Ok(DesignMatrix {
            lambda,
            v: DMatrix::identity(dim, dim) * lambda,
            inv: DMatrix::identity(dim, dim) / lambda,
            updates: 0,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    /// `V ← V + x xᵀ`.
    pub fn add(&mut self, x: &[f64]) {
        let x = DVector::from_column_slice(x);
        self.v.ger(1.0, &x, &x, 1.0);
        self.updates += 1;
        if self.updates % REFACTOR_EVERY == 0 {
            self.inv = self
                .v
                .clone()
                .cholesky()
                .expect("V is positive definite")
                .inverse();
        } else {
            let vx = &self.inv * &x;
            let denom = 1.0 + x.dot(&vx);
            self.inv.ger(-1.0 / denom, &vx, &vx, 1.0);
        }
    }

    /// `‖x‖²_{V⁻¹}`.
    pub fn sq_norm_inv(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        x.dot(&(&self.inv * &x))
    }

    pub fn trace(&self) -> f64 {
        self.v.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.v.clone().symmetric_eigenvalues().min()
    }
}
