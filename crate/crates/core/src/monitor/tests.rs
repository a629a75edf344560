use approx::assert_relative_eq;
use nalgebra::{dvector, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::control::{Controller, ControllerState, Gains, Mutation};
use crate::experiment::{PiecewiseReference, Segment, SegmentShape};
use crate::model::{BaseParams, JointState, TwoLinkArm};
use crate::plant::forward_dynamics;

fn truth() -> BaseParams {
    BaseParams::from_slice(&[4.9, 0.85, 1.5, 4.0, 1.5, 0.5, 0.2]).unwrap()
}

fn gains(m: usize, k: usize) -> Gains {
    Gains::new(
        DVector::from_element(m, 0.4),
        DVector::from_element(k, 0.2),
        DVector::from_element(m, 5.0),
        DVector::from_element(m, 1.0),
        DMatrix::identity(7, 7) * 0.1,
        5.0,
    )
    .unwrap()
}

fn sinusoid(m: usize) -> PiecewiseReference {
    let v = |x: f64| DVector::from_element(m, x);
    PiecewiseReference::new(vec![Segment {
        start: 0.0,
        shape: SegmentShape::Sinusoid {
            offset: v(-1.0),
            amplitude: v(0.6),
            frequency: v(0.3),
            phase: v(0.0),
        },
    }])
    .unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, a: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-a..a))
}

#[test]
fn lyapunov_value_vanishes_on_the_reference() {
    let g = gains(1, 1);
    let reference = sinusoid(1);
    let t = 2.0;
    let r = reference.sample(t);
    let state = JointState::new(dvector![0.3, r.r[0]], dvector![0.1, r.rdot[0]], 1).unwrap();
    let ctrl = ControllerState::new(state.qdot.clone(), truth(), dvector![0.0]);
    let v = lyapunov_value(&TwoLinkArm, t, &state, &ctrl, &g, &reference, &truth());
    assert_eq!(v, 0.0);
}

#[test]
fn lyapunov_value_is_positive_elsewhere() {
    let g = gains(1, 1);
    let reference = sinusoid(1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let state = JointState::new(random_vec(&mut rng, 2, 3.0), random_vec(&mut rng, 2, 3.0), 1).unwrap();
        let pihat = BaseParams::new(truth().as_vector() + random_vec(&mut rng, 7, 0.5)).unwrap();
        let ctrl = ControllerState::new(random_vec(&mut rng, 2, 3.0), pihat, dvector![0.0]);
        let v = lyapunov_value(&TwoLinkArm, 1.0, &state, &ctrl, &g, &reference, &truth());
        assert!(v > 0.0, "{v}");
    }
}

#[test]
fn rate_is_non_positive_on_random_states() {
    let reference = sinusoid(1);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10_000 {
        let g = Gains::new(
            DVector::from_element(1, rng.random_range(0.01..10.0)),
            DVector::from_element(1, rng.random_range(0.01..10.0)),
            DVector::from_element(1, rng.random_range(0.01..10.0)),
            DVector::from_element(1, rng.random_range(0.01..10.0)),
            DMatrix::identity(7, 7),
            5.0,
        )
        .unwrap();
        let state = JointState::new(random_vec(&mut rng, 2, 3.0), random_vec(&mut rng, 2, 5.0), 1).unwrap();
        let params = BaseParams::new(random_vec(&mut rng, 7, 3.0).add_scalar(3.5)).unwrap();
        let ctrl = ControllerState::new(random_vec(&mut rng, 2, 5.0), truth(), dvector![0.0]);
        let rate = lyapunov_rate(&TwoLinkArm, rng.random_range(0.0..10.0), &state, &ctrl, &g, &reference, &params);
        assert!(rate <= 0.0, "{rate}");
    }
}

#[test]
fn kbar_is_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let m = rng.random_range(1..5);
        let k = DVector::from_fn(m, |_, _| rng.random_range(0.01..10.0));
        assert!(kbar_psd_check(&k));
        // The spectrum of [K K; K K] is {2kᵢ} together with m zeros.
        let mut got: Vec<f64> = SymmetricEigen::new(kbar(&k)).eigenvalues.iter().copied().collect();
        let mut want: Vec<f64> = k.iter().map(|x| 2.0 * x).chain(std::iter::repeat_n(0.0, m)).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }
    assert!(!kbar_psd_check(&dvector![1.0, -0.5]));
    assert!(kbar_psd_check(&DVector::zeros(0)));
}

/// Flattened closed-loop state `(q, q̇, ξ, π̂)` and its derivative.
fn closed_loop_derivative(
    controller: &Controller,
    t: f64,
    state: &JointState,
    ctrl: &ControllerState,
    reference: &PiecewiseReference,
) -> (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
    let out = controller.evaluate(&TwoLinkArm, t, state, ctrl, reference).unwrap();
    let qddot = forward_dynamics(&TwoLinkArm, state, &truth(), &out.tau_bar).unwrap();
    (state.qdot.clone(), qddot, out.xidot, out.pihatdot)
}

fn check_rate_against_finite_difference(k: usize, seed: u64) {
    let m = 2 - k;
    let g = gains(m, k);
    let controller = match k {
        0 => Controller::Lemma1 {
            gains: g.clone(),
            mutation: Mutation::None,
        },
        _ => Controller::Theorem1 {
            gains: g.clone(),
            desingularized: false,
            mutation: Mutation::None,
        },
    };
    let reference = sinusoid(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    while checked < 50 {
        let state = JointState::new(random_vec(&mut rng, 2, 1.5), random_vec(&mut rng, 2, 1.0), k).unwrap();
        let pihat = BaseParams::new(truth().as_vector() + random_vec(&mut rng, 7, 0.3)).unwrap();
        let ctrl = ControllerState::new(random_vec(&mut rng, 2, 1.0), pihat, DVector::zeros(m));
        let t = rng.random_range(0.5..5.0);
        let Ok(_) = controller.evaluate(&TwoLinkArm, t, &state, &ctrl, &reference) else {
            continue;
        };
        checked += 1;
        let (dq, dqdot, dxi, dpihat) = closed_loop_derivative(&controller, t, &state, &ctrl, &reference);
        let h = 1e-4;
        let v_at = |sign: f64| {
            let st = JointState::new(&state.q + &dq * (sign * h), &state.qdot + &dqdot * (sign * h), k).unwrap();
            let c = ControllerState::new(
                &ctrl.xi + &dxi * (sign * h),
                BaseParams::new(ctrl.pihat.as_vector() + &dpihat * (sign * h)).unwrap(),
                ctrl.y.clone(),
            );
            lyapunov_value(&TwoLinkArm, t + sign * h, &st, &c, &g, &reference, &truth())
        };
        let fd = (v_at(1.0) - v_at(-1.0)) / (2.0 * h);
        let rate = lyapunov_rate(&TwoLinkArm, t, &state, &ctrl, &g, &reference, &truth());
        assert_relative_eq!(fd, rate, epsilon = 1e-6, max_relative = 1e-4);
    }
}

#[test]
fn rate_matches_finite_difference_for_collocated_law() {
    check_rate_against_finite_difference(1, 6);
}

#[test]
fn rate_matches_finite_difference_for_fully_actuated_law() {
    check_rate_against_finite_difference(0, 7);
}

#[test]
fn consistent_integral_inverts_the_reference_velocity() {
    let g = gains(1, 1);
    let y = dvector![0.37];
    let e = dvector![-0.2];
    let rdot = dvector![1.1];
    let xi_c = &rdot - g.lambda1.component_mul(&e) - g.lambda2.component_mul(&y);
    assert_relative_eq!(consistent_integral(&xi_c, &rdot, &e, &g), y, epsilon = 1e-15);
}
