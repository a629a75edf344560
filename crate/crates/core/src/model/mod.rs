//! Mechanical models that are linear in a constant set of base parameters.
//!
//! A model provides the terms of
//!
//! ```text
//! M(q, π) q̈ + C(q, q̇, π) q̇ + g(q, π) + F_v(π) q̇ + F(q, q̇, π) = τ
//! ```
//!
//! together with the Slotine–Li regressor `Y(q, q̇, ξ, ξ̇)` satisfying
//! `Y π = M ξ̇ + C ξ + g + F_v ξ + F` for every auxiliary vector `ξ`.

mod bounds;
mod two_link;

pub use bounds::{estimate_property_bounds, PropertyBounds};
pub use two_link::{LinkGeometry, TwoLinkArm};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("base parameter vector must be non-empty")]
    EmptyParams,
    #[error("base parameter {index} is not finite ({value})")]
    NonFiniteParam { index: usize, value: f64 },
    #[error("row split {k} out of range for a regressor with {n} rows")]
    RowSplit { k: usize, n: usize },
    #[error("mass column {column} out of range for a {k}x{k} minor")]
    ColumnIndex { column: usize, k: usize },
    #[error("invalid partition: n = {n}, k = {k} (need k < n)")]
    Partition { n: usize, k: usize },
    #[error("mass matrix not positive definite at q = {q:?} (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { q: Vec<f64>, min_eigenvalue: f64 },
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), ModelError> {
    if expected == got {
        Ok(())
    } else {
        Err(ModelError::Dimension {
            what,
            expected,
            got,
        })
    }
}

/// Constant base-parameter vector `π` (also used for the estimate `π̂`).
#[derive(Debug, Clone, PartialEq)]
pub struct BaseParams(DVector<f64>);

impl BaseParams {
    pub fn new(values: DVector<f64>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::EmptyParams);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(ModelError::NonFiniteParam { index, value });
        }
        Ok(Self(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self, ModelError> {
        Self::new(DVector::from_column_slice(values))
    }

    pub fn zeros(p: usize) -> Self {
        Self(DVector::zeros(p.max(1)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    /// `π̃ = self − truth`.
    pub fn error_from(&self, truth: &BaseParams) -> DVector<f64> {
        &self.0 - &truth.0
    }
}

/// Generalized coordinates and velocities with the noncollocated/collocated
/// split: the first `k` entries are unactuated, the last `m = n − k` actuated.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
    k: usize,
}

impl JointState {
    pub fn new(q: DVector<f64>, qdot: DVector<f64>, k: usize) -> Result<Self, ModelError> {
        check_len("qdot", q.len(), qdot.len())?;
        if k >= q.len() {
            return Err(ModelError::Partition { n: q.len(), k });
        }
        Ok(Self { q, qdot, k })
    }

    /// Fully actuated state (`k = 0`).
    pub fn actuated(q: DVector<f64>, qdot: DVector<f64>) -> Result<Self, ModelError> {
        Self::new(q, qdot, 0)
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.q.len() - self.k
    }

    pub fn q_collocated(&self) -> DVector<f64> {
        self.q.rows(self.k, self.m()).into_owned()
    }

    pub fn qdot_collocated(&self) -> DVector<f64> {
        self.qdot.rows(self.k, self.m()).into_owned()
    }

    pub fn qdot_noncollocated(&self) -> DVector<f64> {
        self.qdot.rows(0, self.k).into_owned()
    }
}

/// `M`, `C`, `g`, `F_v` and the nonlinear friction vector `F` at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsQuantities {
    pub mass: DMatrix<f64>,
    pub coriolis: DMatrix<f64>,
    pub gravity: DVector<f64>,
    pub viscous: DMatrix<f64>,
    pub friction: DVector<f64>,
}

impl DynamicsQuantities {
    /// Left-hand side of the equation of motion for a given acceleration.
    pub fn generalized_force(&self, qdot: &DVector<f64>, qddot: &DVector<f64>) -> DVector<f64> {
        &self.mass * qddot
            + &self.coriolis * qdot
            + &self.gravity
            + &self.viscous * qdot
            + &self.friction
    }
}

/// `Y(q, q̇, ξ, ξ̇) ∈ ℝ^{n×p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorMatrix(pub DMatrix<f64>);

impl RegressorMatrix {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn apply(&self, params: &BaseParams) -> DVector<f64> {
        &self.0 * params.as_vector()
    }

    /// First `k` rows (`Yₙ`).
    pub fn noncollocated_rows(&self, k: usize) -> Result<DMatrix<f64>, ModelError> {
        let n = self.0.nrows();
        if k > n {
            return Err(ModelError::RowSplit { k, n });
        }
        Ok(self.0.rows(0, k).into_owned())
    }

    /// Last `n − k` rows (`Y_c`).
    pub fn collocated_rows(&self, k: usize) -> Result<DMatrix<f64>, ModelError> {
        let n = self.0.nrows();
        if k > n {
            return Err(ModelError::RowSplit { k, n });
        }
        Ok(self.0.rows(k, n - k).into_owned())
    }
}

/// A mechanical system whose dynamics are linear in its base parameters.
///
/// Implementations supply closed-form terms; the free functions in this module
/// perform the dimension checks.
pub trait MechanicalModel: Send + Sync {
    /// Number of generalized coordinates `n`.
    fn dof(&self) -> usize;

    /// Number of base parameters `p`.
    fn param_count(&self) -> usize;

    /// Closed-form `M`, `C`, `g`, `F_v`; no dimension checks.
    fn dynamics_unchecked(
        &self,
        q: &DVector<f64>,
        qdot: &DVector<f64>,
        params: &DVector<f64>,
    ) -> DynamicsQuantities;

    /// Closed-form regressor; no dimension checks.
    fn regressor_unchecked(
        &self,
        q: &DVector<f64>,
        qdot: &DVector<f64>,
        xi: &DVector<f64>,
        xidot: &DVector<f64>,
    ) -> DMatrix<f64>;

    /// Mass matrix alone. The default goes through `dynamics_unchecked`.
    fn mass_unchecked(&self, q: &DVector<f64>, params: &DVector<f64>) -> DMatrix<f64> {
        let zero = DVector::zeros(self.dof());
        self.dynamics_unchecked(q, &zero, params).mass
    }

    /// Analytic `∂/∂q [Y_{Mₙ}(q, eᵢ) π̂]` (a `k×n` matrix) if the model has one.
    fn mass_column_gradient(
        &self,
        _q: &DVector<f64>,
        _pihat: &DVector<f64>,
        _k: usize,
        _column: usize,
    ) -> Option<DMatrix<f64>> {
        None
    }
}

pub fn eval_dynamics(
    model: &dyn MechanicalModel,
    state: &JointState,
    params: &BaseParams,
) -> Result<DynamicsQuantities, ModelError> {
    check_len("q", model.dof(), state.n())?;
    check_len("params", model.param_count(), params.len())?;
    Ok(model.dynamics_unchecked(&state.q, &state.qdot, params.as_vector()))
}

pub fn eval_regressor(
    model: &dyn MechanicalModel,
    q: &DVector<f64>,
    qdot: &DVector<f64>,
    xi: &DVector<f64>,
    xidot: &DVector<f64>,
) -> Result<RegressorMatrix, ModelError> {
    let n = model.dof();
    check_len("q", n, q.len())?;
    check_len("qdot", n, qdot.len())?;
    check_len("xi", n, xi.len())?;
    check_len("xidot", n, xidot.len())?;
    Ok(RegressorMatrix(model.regressor_unchecked(q, qdot, xi, xidot)))
}

/// Leading `k×k` principal block of `M(q, π̂)`, i.e. `S M(q, π̂) Sᵀ`.
pub fn mass_minor_estimate(
    model: &dyn MechanicalModel,
    q: &DVector<f64>,
    pihat: &BaseParams,
    k: usize,
) -> Result<DMatrix<f64>, ModelError> {
    let n = model.dof();
    check_len("q", n, q.len())?;
    check_len("pihat", model.param_count(), pihat.len())?;
    if k == 0 || k > n {
        return Err(ModelError::RowSplit { k, n });
    }
    let mass = model.mass_unchecked(q, pihat.as_vector());
    Ok(mass.view((0, 0), (k, k)).into_owned())
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
