use nalgebra::{dvector, DVector};
use proptest::prelude::*;

use collocated::model::{eval_dynamics, eval_regressor, JointState, LinkGeometry, TwoLinkArm};

fn geometry() -> impl Strategy<Value = LinkGeometry> {
    (
        (0.5..5.0f64, 0.3..1.5f64, 0.1..1.0f64, 0.01..1.0f64),
        (0.5..5.0f64, 0.05..1.5f64, 0.01..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..9.81f64),
    )
        .prop_map(|((m1, l1, frac, i1), (m2, lc2, i2, fv1, fv2, g0))| LinkGeometry {
            m1,
            l1,
            lc1: frac * l1,
            i1,
            m2,
            lc2,
            i2,
            fv1,
            fv2,
            g0,
        })
}

fn angle() -> impl Strategy<Value = f64> {
    -std::f64::consts::PI..std::f64::consts::PI
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn mass_matrix_is_symmetric_positive_definite(g in geometry(), q1 in angle(), q2 in angle()) {
        let state = JointState::actuated(dvector![q1, q2], DVector::zeros(2)).unwrap();
        let mass = eval_dynamics(&TwoLinkArm, &state, &g.base_params()).unwrap().mass;
        prop_assert!((&mass - mass.transpose()).amax() <= 1e-12 * mass.amax());
        prop_assert!(mass.cholesky().is_some());
    }

    #[test]
    fn gravity_vanishes_at_hanging_rest(g in geometry()) {
        let state = JointState::actuated(DVector::zeros(2), DVector::zeros(2)).unwrap();
        let d = eval_dynamics(&TwoLinkArm, &state, &g.base_params()).unwrap();
        prop_assert!(d.gravity.amax() <= 1e-15);
    }

    #[test]
    fn regressor_is_linear_in_the_reference_acceleration(
        q1 in angle(), q2 in angle(),
        a in -20.0..20.0f64, b in -20.0..20.0f64,
        w in -5.0..5.0f64,
    ) {
        let q = dvector![q1, q2];
        let zero = DVector::zeros(2);
        let y = |xidot: DVector<f64>| eval_regressor(&TwoLinkArm, &q, &zero, &zero, &xidot).unwrap().0;
        let base = y(zero.clone());
        let lhs = y(dvector![a * w, b * w]) - &base;
        let rhs = (y(dvector![a, b]) - &base) * w;
        prop_assert!((lhs - rhs).amax() <= 1e-9 * (1.0 + w.abs() * (a.abs() + b.abs())));
    }
}

#[test]
fn dimension_errors_are_reported() {
    let short = DVector::zeros(1);
    let two = DVector::zeros(2);
    assert!(eval_regressor(&TwoLinkArm, &short, &two, &two, &two).is_err());
    assert!(JointState::new(two.clone(), two, 3).is_err());
}
