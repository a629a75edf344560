use nalgebra::{DMatrix, DVector};

use super::ControlError;
use crate::model::check_len;

/// Controller gains. Diagonal gains are stored as their diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Gains {
    /// `K`, length `m`.
    pub k: DVector<f64>,
    /// `Kₙ`, length `k` (empty when fully actuated).
    pub kn: DVector<f64>,
    /// `Λ₁`, length `m`.
    pub lambda1: DVector<f64>,
    /// `Λ₂`, length `m`.
    pub lambda2: DVector<f64>,
    /// `Γ`, `p×p` symmetric positive definite.
    pub gamma: DMatrix<f64>,
    /// Determinant floor `ε`.
    pub epsilon: f64,
}

fn positive_diagonal(name: &'static str, v: &DVector<f64>) -> Result<(), ControlError> {
    match v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        Some(bad) => Err(ControlError::InvalidGain {
            name,
            reason: format!("entry {bad} is not strictly positive"),
        }),
        None => Ok(()),
    }
}

impl Gains {
    pub fn new(
        k: DVector<f64>,
        kn: DVector<f64>,
        lambda1: DVector<f64>,
        lambda2: DVector<f64>,
        gamma: DMatrix<f64>,
        epsilon: f64,
    ) -> Result<Self, ControlError> {
        positive_diagonal("K", &k)?;
        positive_diagonal("Kn", &kn)?;
        positive_diagonal("Lambda1", &lambda1)?;
        positive_diagonal("Lambda2", &lambda2)?;
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(ControlError::InvalidGain {
                name: "epsilon",
                reason: format!("{epsilon} is not strictly positive"),
            });
        }
        if !gamma.is_square() || gamma.is_empty() {
            return Err(ControlError::InvalidGain {
                name: "Gamma",
                reason: format!("shape {}x{} is not square", gamma.nrows(), gamma.ncols()),
            });
        }
        let asym = (&gamma - gamma.transpose()).amax();
        if asym > 1e-12 * gamma.amax().max(1.0) || gamma.clone().cholesky().is_none() {
            return Err(ControlError::InvalidGain {
                name: "Gamma",
                reason: "not symmetric positive definite".into(),
            });
        }
        Ok(Self {
            k,
            kn,
            lambda1,
            lambda2,
            gamma,
            epsilon,
        })
    }

    pub(crate) fn check_dims(&self, k: usize, m: usize, p: usize) -> Result<(), ControlError> {
        check_len("K", m, self.k.len())?;
        check_len("Kn", k, self.kn.len())?;
        check_len("Lambda1", m, self.lambda1.len())?;
        check_len("Lambda2", m, self.lambda2.len())?;
        check_len("Gamma", p, self.gamma.nrows())?;
        Ok(())
    }

    /// `Γ⁻¹`, used by the Lyapunov monitor.
    pub fn gamma_inverse(&self) -> DMatrix<f64> {
        self.gamma
            .clone()
            .cholesky()
            .expect("validated positive definite")
            .inverse()
    }
}
