//! Adaptation law with the determinant floor on `M̂ₙ`.
//!
//! `π̂̇ = −Γ[Yᵀs − ηδ]` where `δ = Σᵢ Y_{Mₙ}ᵀ(q, eᵢ) M̂ₙ⁻¹ eᵢ` and `η` is
//! nonzero only when `det M̂ₙ ≤ ε` and `tr(M̂ₙ⁻¹Υ) < 0`. When active, `η` makes
//! `d/dt det M̂ₙ` vanish, so the determinant cannot cross the floor.

use nalgebra::{DMatrix, DVector};

use super::{ControlError, Gains, Mutation};
use crate::model::{check_len, eval_regressor, mass_minor_estimate, BaseParams, MechanicalModel, ModelError};
use crate::plant::{condition_number, SINGULAR_CONDITION};

/// Central-difference step for `∂/∂q [Y_{Mₙ} π̂]`, in radians.
pub const GRAD_STEP: f64 = 1e-6;

/// Guard on `δᵀΓδ`.
const DELTA_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct Desingularization {
    pub pihatdot: DVector<f64>,
    pub eta: f64,
    pub delta: DVector<f64>,
    pub det: f64,
    /// `tr(M̂ₙ⁻¹Υ)`.
    pub trace_term: f64,
    /// `Υ = (υ₁ … υ_k)`.
    pub upsilon: DMatrix<f64>,
}

fn column_range(k: usize, n: usize, column: usize) -> Result<(), ModelError> {
    if k == 0 || k > n {
        return Err(ModelError::RowSplit { k, n });
    }
    if column >= k {
        return Err(ModelError::ColumnIndex { column, k });
    }
    Ok(())
}

fn mass_column_unchecked(
    model: &dyn MechanicalModel,
    q: &DVector<f64>,
    k: usize,
    column: usize,
) -> DMatrix<f64> {
    let n = model.dof();
    let zero = DVector::zeros(n);
    let mut unit = DVector::zeros(n);
    unit[column] = 1.0;
    let with = model.regressor_unchecked(q, &zero, &zero, &unit);
    let without = model.regressor_unchecked(q, &zero, &zero, &zero);
    (with - without).rows(0, k).into_owned()
}

/// `Y_{Mₙ}(q, eᵢ) = S[Y(q, 0, 0, (eᵢ, 0_m)) − Y(q, 0, 0, 0)]` (`k×p`), so that
/// `Y_{Mₙ}(q, eᵢ) π` is column `i` (zero-based) of the leading `k×k` block of
/// `M(q, π)`.
pub fn regressor_mass_column(
    model: &dyn MechanicalModel,
    q: &DVector<f64>,
    k: usize,
    column: usize,
) -> Result<DMatrix<f64>, ModelError> {
    check_len("q", model.dof(), q.len())?;
    column_range(k, model.dof(), column)?;
    Ok(mass_column_unchecked(model, q, k, column))
}

/// Central finite-difference Jacobian `∂/∂q [Y_{Mₙ}(q, eᵢ) π̂]` (`k×n`) with
/// step [`GRAD_STEP`].
pub fn grad_q_mass_column(
    model: &dyn MechanicalModel,
    q: &DVector<f64>,
    pihat: &BaseParams,
    k: usize,
    column: usize,
) -> Result<DMatrix<f64>, ModelError> {
    check_len("q", model.dof(), q.len())?;
    check_len("pihat", model.param_count(), pihat.len())?;
    column_range(k, model.dof(), column)?;
    Ok(fd_gradient(model, q, pihat.as_vector(), k, column))
}

fn fd_gradient(
    model: &dyn MechanicalModel,
    q: &DVector<f64>,
    pihat: &DVector<f64>,
    k: usize,
    column: usize,
) -> DMatrix<f64> {
    let n = model.dof();
    let mut jac = DMatrix::zeros(k, n);
    let mut qp = q.clone();
    for j in 0..n {
        qp[j] = q[j] + GRAD_STEP;
        let plus = mass_column_unchecked(model, &qp, k, column) * pihat;
        qp[j] = q[j] - GRAD_STEP;
        let minus = mass_column_unchecked(model, &qp, k, column) * pihat;
        qp[j] = q[j];
        jac.set_column(j, &((plus - minus) / (2.0 * GRAD_STEP)));
    }
    jac
}

fn gradient(
    model: &dyn MechanicalModel,
    q: &DVector<f64>,
    pihat: &DVector<f64>,
    k: usize,
    column: usize,
) -> DMatrix<f64> {
    model
        .mass_column_gradient(q, pihat, k, column)
        .unwrap_or_else(|| fd_gradient(model, q, pihat, k, column))
}

pub(crate) fn delta_direction(
    model: &dyn MechanicalModel,
    q: &DVector<f64>,
    k: usize,
    minor_inverse: &DMatrix<f64>,
) -> DVector<f64> {
    let mut delta = DVector::zeros(model.param_count());
    for i in 0..k {
        let y_mn = mass_column_unchecked(model, q, k, i);
        delta += y_mn.transpose() * minor_inverse.column(i);
    }
    delta
}

/// Core of the desingularized law once `Y`, `M̂ₙ⁻¹` and `det M̂ₙ` are known.
/// Fails with the value of `δᵀΓδ` when it is degenerate.
#[allow(clippy::too_many_arguments)]
pub(crate) fn adaptation_from_parts(
    model: &dyn MechanicalModel,
    q: &DVector<f64>,
    qdot: &DVector<f64>,
    regressor: &DMatrix<f64>,
    s: &DVector<f64>,
    pihat: &BaseParams,
    gains: &Gains,
    k: usize,
    minor_inverse: &DMatrix<f64>,
    det: f64,
    mutation: Mutation,
) -> Result<Desingularization, f64> {
    let gamma_ys = &gains.gamma * (regressor.transpose() * s);
    let mut delta = DVector::zeros(model.param_count());
    let mut upsilon = DMatrix::zeros(k, k);
    for i in 0..k {
        let y_mn = mass_column_unchecked(model, q, k, i);
        delta += y_mn.transpose() * minor_inverse.column(i);
        let grad = gradient(model, q, pihat.as_vector(), k, i);
        upsilon.set_column(i, &(grad * qdot - &y_mn * &gamma_ys));
    }
    let trace_term = (minor_inverse * &upsilon).trace();
    let gamma_delta = &gains.gamma * &delta;
    let mut eta = 0.0;
    if !(trace_term >= 0.0 || det > gains.epsilon) {
        let quad = delta.dot(&gamma_delta);
        if !(quad >= DELTA_FLOOR) {
            return Err(quad);
        }
        eta = -trace_term / quad;
    }
    if mutation == Mutation::FlipEtaSign {
        eta = -eta;
    }
    let pihatdot = -gamma_ys + gamma_delta * eta;
    Ok(Desingularization {
        pihatdot,
        eta,
        delta,
        det,
        trace_term,
        upsilon,
    })
}

/// Desingularized adaptation evaluated from scratch. Errors carry `t = NaN`
/// since no time is supplied here.
#[allow(clippy::too_many_arguments)]
pub fn desingularized_adaptation(
    model: &dyn MechanicalModel,
    q: &DVector<f64>,
    qdot: &DVector<f64>,
    xi: &DVector<f64>,
    xidot: &DVector<f64>,
    s: &DVector<f64>,
    pihat: &BaseParams,
    gains: &Gains,
    k: usize,
) -> Result<Desingularization, ControlError> {
    let n = model.dof();
    check_len("s", n, s.len())?;
    check_len("Gamma", model.param_count(), gains.gamma.nrows())?;
    let regressor = eval_regressor(model, q, qdot, xi, xidot)?;
    let minor = mass_minor_estimate(model, q, pihat, k)?;
    let det = minor.determinant();
    let condition = condition_number(&minor);
    let singular = ControlError::SingularMinor {
        t: f64::NAN,
        det,
        condition,
    };
    if det <= 0.0 || condition > SINGULAR_CONDITION {
        return Err(singular);
    }
    let inverse = minor.try_inverse().ok_or(singular)?;
    adaptation_from_parts(
        model,
        q,
        qdot,
        regressor.as_matrix(),
        s,
        pihat,
        gains,
        k,
        &inverse,
        det,
        Mutation::None,
    )
    .map_err(|value| ControlError::DegenerateDelta { t: f64::NAN, value })
}
