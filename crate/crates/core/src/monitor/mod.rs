//! Runtime certificates for the closed loop: the Lyapunov function and its
//! closed-form derivative, the determinant floor, and per-trace checks.
//!
//! These monitors read the true plant parameters and therefore only make
//! sense in simulation.

mod checks;

pub use checks::{
    convergence_ratio, delta_identity_report, determinant_floor_monitor,
    lyapunov_monotonicity, DeltaIdentityReport, DeterminantFloorReport, MonotonicityReport,
    FLOOR_TOLERANCE,
};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::control::{ControllerState, Gains, Reference};
use crate::model::{BaseParams, JointState, MechanicalModel};

/// Integral state consistent with `ξ_c = ṙ − Λ₁e − Λ₂y`.
///
/// `ẏ = e` holds along any solution, so this differs from the integrated
/// controller state `y` by a constant between reference switches.
pub fn consistent_integral(
    xi_c: &DVector<f64>,
    rdot: &DVector<f64>,
    e: &DVector<f64>,
    gains: &Gains,
) -> DVector<f64> {
    (rdot - gains.lambda1.component_mul(e) - xi_c).component_div(&gains.lambda2)
}

struct Signals {
    s: DVector<f64>,
    e: DVector<f64>,
    edot: DVector<f64>,
    y: DVector<f64>,
}

fn signals(
    t: f64,
    state: &JointState,
    ctrl: &ControllerState,
    gains: &Gains,
    reference: &dyn Reference,
) -> Signals {
    let (k, m) = (state.k(), state.m());
    let r = reference.sample(t);
    let e = state.q_collocated() - &r.r;
    let edot = state.qdot_collocated() - &r.rdot;
    let xi_c = ctrl.xi.rows(k, m).into_owned();
    let y = consistent_integral(&xi_c, &r.rdot, &e, gains);
    Signals {
        s: &state.qdot - &ctrl.xi,
        e,
        edot,
        y,
    }
}

/// `V = ½[sᵀMs + π̃ᵀΓ⁻¹π̃ + 2eᵀKΛ₁e + 2yᵀΛ₁KΛ₂y]` with `M = M(q, π)`.
pub fn lyapunov_value(
    model: &dyn MechanicalModel,
    t: f64,
    state: &JointState,
    ctrl: &ControllerState,
    gains: &Gains,
    reference: &dyn Reference,
    true_params: &BaseParams,
) -> f64 {
    let sig = signals(t, state, ctrl, gains, reference);
    let mass = model.mass_unchecked(&state.q, true_params.as_vector());
    let err = ctrl.pihat.error_from(true_params);
    let param_term = match gains.gamma.clone().cholesky() {
        Some(chol) => err.dot(&chol.solve(&err)),
        None => f64::NAN,
    };
    let k_l1 = gains.k.component_mul(&gains.lambda1);
    let k_l1_l2 = k_l1.component_mul(&gains.lambda2);
    0.5 * (sig.s.dot(&(&mass * &sig.s))
        + param_term
        + 2.0 * sig.e.dot(&k_l1.component_mul(&sig.e))
        + 2.0 * sig.y.dot(&k_l1_l2.component_mul(&sig.y)))
}

/// `K̄ = [K K; K K]`.
pub fn kbar(k: &DVector<f64>) -> DMatrix<f64> {
    let m = k.len();
    let diag = DMatrix::from_diagonal(k);
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    for (r, c) in [(0, 0), (0, m), (m, 0), (m, m)] {
        out.view_mut((r, c), (m, m)).copy_from(&diag);
    }
    out
}

/// Closed-form `V̇` along the collocated law while `η = 0`:
/// `−sₙᵀKₙsₙ − (ė, Λ₂y)ᵀK̄(ė, Λ₂y) − sᵀF_v s − eᵀΛ₁KΛ₁e`.
pub fn lyapunov_rate(
    model: &dyn MechanicalModel,
    t: f64,
    state: &JointState,
    ctrl: &ControllerState,
    gains: &Gains,
    reference: &dyn Reference,
    true_params: &BaseParams,
) -> f64 {
    let sig = signals(t, state, ctrl, gains, reference);
    let k = state.k();
    let s_n = sig.s.rows(0, k);
    let viscous = model
        .dynamics_unchecked(&state.q, &state.qdot, true_params.as_vector())
        .viscous;
    let mut stacked = DVector::zeros(2 * state.m());
    stacked.rows_mut(0, state.m()).copy_from(&sig.edot);
    stacked
        .rows_mut(state.m(), state.m())
        .copy_from(&gains.lambda2.component_mul(&sig.y));
    let l1_k_l1 = gains.lambda1.component_mul(&gains.k).component_mul(&gains.lambda1);
    -s_n.dot(&gains.kn.component_mul(&s_n))
        - stacked.dot(&(kbar(&gains.k) * &stacked))
        - sig.s.dot(&(&viscous * &sig.s))
        - sig.e.dot(&l1_k_l1.component_mul(&sig.e))
}

/// Whether `K̄` is positive semidefinite (min eigenvalue ≥ −1e-12).
pub fn kbar_psd_check(k: &DVector<f64>) -> bool {
    if k.is_empty() {
        return true;
    }
    SymmetricEigen::new(kbar(k)).eigenvalues.min() >= -1e-12
}

#[cfg(test)]
mod tests;
