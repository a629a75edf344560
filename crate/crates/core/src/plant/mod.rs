//! Plant forward dynamics under partial actuation and the fixed-step
//! integrator that advances plant and controller together.

mod sim;

pub use sim::{SimError, SimOutcome, SimState, Simulation, TraceRecord};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::{check_len, eval_dynamics, BaseParams, JointState, MechanicalModel, ModelError};

/// Condition number above which a matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("plant mass matrix singular at q = {q:?} (condition {condition:e})")]
    SingularPlant { q: Vec<f64>, condition: f64 },
}

/// Spectral condition number; infinite for a zero smallest singular value.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let (lo, hi) = (sv.min(), sv.max());
    if lo <= 0.0 || !lo.is_finite() {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `M q̈ = (0_k, τ̄) − C q̇ − g − F_v q̇ − F` for `q̈`.
pub fn forward_dynamics(
    model: &dyn MechanicalModel,
    state: &JointState,
    params: &BaseParams,
    tau_bar: &DVector<f64>,
) -> Result<DVector<f64>, PlantError> {
    check_len("tau_bar", state.m(), tau_bar.len())?;
    let d = eval_dynamics(model, state, params)?;
    let condition = condition_number(&d.mass);
    if condition > SINGULAR_CONDITION {
        return Err(PlantError::SingularPlant {
            q: state.q.iter().copied().collect(),
            condition,
        });
    }
    let mut force = DVector::zeros(state.n());
    force.rows_mut(state.k(), state.m()).copy_from(tau_bar);
    let rhs = force
        - &d.coriolis * &state.qdot
        - &d.gravity
        - &d.viscous * &state.qdot
        - &d.friction;
    let qddot = match d.mass.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => d.mass.lu().solve(&rhs).ok_or_else(|| PlantError::SingularPlant {
            q: state.q.iter().copied().collect(),
            condition,
        })?,
    };
    Ok(qddot)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Rk4Error<E> {
    #[error("non-finite derivative at t = {t} (stage {stage})")]
    Divergence { t: f64, stage: usize },
    #[error("derivative failed at t = {t} (stage {stage}): {source}")]
    Derivative { t: f64, stage: usize, source: E },
}

/// One classical fourth-order Runge–Kutta step of size `h` from `(t, x)`.
pub fn rk4_step<E, F>(mut f: F, t: f64, x: &DVector<f64>, h: f64) -> Result<DVector<f64>, Rk4Error<E>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>, E>,
{
    let mut stage = |stage: usize, ts: f64, xs: &DVector<f64>| -> Result<DVector<f64>, Rk4Error<E>> {
        let dx = f(ts, xs).map_err(|source| Rk4Error::Derivative {
            t: ts,
            stage,
            source,
        })?;
        if dx.iter().all(|v| v.is_finite()) {
            Ok(dx)
        } else {
            Err(Rk4Error::Divergence { t: ts, stage })
        }
    };
    let k1 = stage(1, t, x)?;
    let k2 = stage(2, t + 0.5 * h, &(x + &k1 * (0.5 * h)))?;
    let k3 = stage(3, t + 0.5 * h, &(x + &k2 * (0.5 * h)))?;
    let k4 = stage(4, t + h, &(x + &k3 * h))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{eval_regressor, TwoLinkArm};
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use std::convert::Infallible;

    fn truth() -> BaseParams {
        BaseParams::from_slice(&[7.0, 0.4, 0.55, 6.0, 2.0, 1.5, 0.3]).unwrap()
    }

    #[test]
    fn equilibrium_has_zero_acceleration() {
        // Hip straight down with knee straight: g₁ = g₂ = 0.
        let a = truth();
        let state = JointState::new(dvector![0.0, 0.0], dvector![0.0, 0.0], 1).unwrap();
        let qdd = forward_dynamics(&TwoLinkArm, &state, &a, &dvector![0.0]).unwrap();
        assert_eq!(qdd, dvector![0.0, 0.0]);

        // q₁ + q₂ = 0 with q₁ ≠ 0 needs g_n = a₄ sin q₁ = 0, so use the
        // horizontal-plane arm and compensate the knee's (zero) gravity.
        let flat = BaseParams::from_slice(&[7.0, 0.4, 0.55, 0.0, 0.0, 1.5, 0.3]).unwrap();
        let state = JointState::new(dvector![0.9, -0.3], dvector![0.0, 0.0], 1).unwrap();
        let qdd = forward_dynamics(&TwoLinkArm, &state, &flat, &dvector![0.0]).unwrap();
        assert_relative_eq!(qdd, dvector![0.0, 0.0], epsilon = 1e-15);
    }

    #[test]
    fn inverse_dynamics_round_trip() {
        // Fully actuated split: every inverse-dynamics torque is admissible.
        let a = truth();
        let q = dvector![0.3, -0.8];
        let qdot = dvector![1.2, -0.4];
        let qdd_star = dvector![-2.0, 3.5];
        let tau = eval_regressor(&TwoLinkArm, &q, &qdot, &qdot, &qdd_star)
            .unwrap()
            .apply(&a);
        let state = JointState::new(q.clone(), qdot.clone(), 0).unwrap();
        let qdd = forward_dynamics(&TwoLinkArm, &state, &a, &tau).unwrap();
        assert_relative_eq!(qdd, qdd_star, epsilon = 1e-9);

        // Underactuated split: pick q̈₁ so that the hip row of Yπ vanishes.
        let y0 = eval_regressor(&TwoLinkArm, &q, &qdot, &qdot, &dvector![0.0, 3.5]).unwrap().apply(&a);
        let y1 = eval_regressor(&TwoLinkArm, &q, &qdot, &qdot, &dvector![1.0, 3.5]).unwrap().apply(&a);
        let qdd1 = -y0[0] / (y1[0] - y0[0]);
        let qdd_star = dvector![qdd1, 3.5];
        let tau = eval_regressor(&TwoLinkArm, &q, &qdot, &qdot, &qdd_star).unwrap().apply(&a);
        assert!(tau[0].abs() < 1e-12);
        let state = JointState::new(q, qdot, 1).unwrap();
        let qdd = forward_dynamics(&TwoLinkArm, &state, &a, &dvector![tau[1]]).unwrap();
        assert_relative_eq!(qdd, qdd_star, epsilon = 1e-9);
    }

    #[test]
    fn residual_of_equation_of_motion_is_small() {
        let a = truth();
        let state = JointState::new(dvector![-0.4, 1.3], dvector![2.0, -3.0], 1).unwrap();
        let tau = dvector![4.2];
        let qdd = forward_dynamics(&TwoLinkArm, &state, &a, &tau).unwrap();
        let d = eval_dynamics(&TwoLinkArm, &state, &a).unwrap();
        let lhs = d.generalized_force(&state.qdot, &qdd);
        assert!((lhs - dvector![0.0, 4.2]).norm() <= 1e-10);
    }

    #[test]
    fn free_horizontal_arm_at_rest_stays() {
        let p = BaseParams::from_slice(&[7.0, 0.4, 0.55, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let state = JointState::new(dvector![1.0, 2.0], dvector![0.0, 0.0], 1).unwrap();
        let qdd = forward_dynamics(&TwoLinkArm, &state, &p, &dvector![0.0]).unwrap();
        assert_eq!(qdd, dvector![0.0, 0.0]);
    }

    #[test]
    fn singular_plant_is_reported() {
        let state = JointState::new(dvector![0.5, 0.5], dvector![0.0, 0.0], 1).unwrap();
        let err = forward_dynamics(&TwoLinkArm, &state, &BaseParams::zeros(7), &dvector![0.0]).unwrap_err();
        assert!(matches!(err, PlantError::SingularPlant { .. }));
        let err = forward_dynamics(&TwoLinkArm, &state, &truth(), &dvector![0.0, 1.0]).unwrap_err();
        assert!(matches!(err, PlantError::Model(_)));
    }

    #[test]
    fn rk4_constant_state() {
        let x = dvector![1.0, -2.0];
        let next = rk4_step(|_, x: &DVector<f64>| Ok::<_, Infallible>(x * 0.0), 0.0, &x, 0.1).unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn rk4_decay_matches_hand_stages() {
        // k₁ = −1, k₂ = −0.95, k₃ = −0.9525, k₄ = −0.90475
        let next = rk4_step(|_, x: &DVector<f64>| Ok::<_, Infallible>(-x), 0.0, &dvector![1.0], 0.1).unwrap();
        let hand = 1.0 + 0.1 / 6.0 * (-1.0 - 2.0 * 0.95 - 2.0 * 0.9525 - 0.90475);
        assert_relative_eq!(next[0], hand, epsilon = 1e-15);
        assert_relative_eq!(next[0], 0.9048375, epsilon = 5e-8);
    }

    #[test]
    fn rk4_linear_system_matches_taylor_series() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.3]);
        let x0 = dvector![1.0, 0.5];
        let h = 0.05;
        let next = rk4_step(|_, x: &DVector<f64>| Ok::<_, Infallible>(&a * x), 0.0, &x0, h).unwrap();
        // Σ_{j≤4} (hA)ʲ/j! x₀
        let mut term = x0.clone();
        let mut taylor = x0.clone();
        for j in 1..=4 {
            term = &a * term * (h / j as f64);
            taylor += &term;
        }
        assert_relative_eq!(next, taylor, epsilon = 1e-12);
    }

    #[test]
    fn rk4_reports_stage_of_divergence() {
        let err = rk4_step(
            |t, x: &DVector<f64>| Ok::<_, Infallible>(if t > 0.0 { x * f64::NAN } else { x.clone() }),
            0.0,
            &dvector![1.0],
            0.1,
        )
        .unwrap_err();
        assert_eq!(err, Rk4Error::Divergence { t: 0.05, stage: 2 });
        let err = rk4_step(|_, _: &DVector<f64>| Err::<DVector<f64>, _>("boom"), 1.0, &dvector![1.0], 0.1)
            .unwrap_err();
        assert!(matches!(err, Rk4Error::Derivative { stage: 1, .. }));
    }

    #[test]
    fn rk4_empirical_order() {
        let one_step_error = |h: f64| {
            let x = rk4_step(|_, x: &DVector<f64>| Ok::<_, Infallible>(-x), 0.0, &dvector![1.0], h).unwrap();
            (x[0] - (-h).exp()).abs()
        };
        let ratio = one_step_error(0.1) / one_step_error(0.05);
        assert!(ratio >= 16.0 * 0.9, "ratio {ratio}");
    }
}
