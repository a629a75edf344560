//! Sampled estimates of the structural bounds on `M`, `C` and `g`.

use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_len, BaseParams, MechanicalModel, ModelError};

/// Empirical constants with `λ₁ I ≤ M ≤ λ₂ I`, `|C| ≤ λ₀|q̇|`, `|g| ≤ γ₀`
/// over the sampled configurations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyBounds {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda0: f64,
    pub gamma0: f64,
}

/// Samples `q` uniformly in `[−π, π]ⁿ` and unit-norm velocity directions.
///
/// Deterministic for a given seed. Returns the first configuration where the
/// mass matrix fails to be positive definite, if any.
pub fn estimate_property_bounds(
    model: &dyn MechanicalModel,
    params: &BaseParams,
    sample_count: usize,
    rng_seed: u64,
) -> Result<PropertyBounds, ModelError> {
    check_len("params", model.param_count(), params.len())?;
    let n = model.dof();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut bounds = PropertyBounds {
        lambda1: f64::INFINITY,
        lambda2: 0.0,
        lambda0: 0.0,
        gamma0: 0.0,
    };
    let pi = std::f64::consts::PI;
    for _ in 0..sample_count.max(1) {
        let q = DVector::from_fn(n, |_, _| rng.random_range(-pi..pi));
        let mut dir = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let norm = dir.norm();
        if norm > 0.0 {
            dir /= norm;
        }
        let d = model.dynamics_unchecked(&q, &dir, params.as_vector());
        let eig = SymmetricEigen::new(d.mass.clone()).eigenvalues;
        let lo = eig.min();
        let hi = eig.max();
        if !(lo > 0.0) {
            return Err(ModelError::NotPositiveDefinite {
                q: q.iter().copied().collect(),
                min_eigenvalue: lo,
            });
        }
        bounds.lambda1 = bounds.lambda1.min(lo);
        bounds.lambda2 = bounds.lambda2.max(hi);
        // C is linear in q̇, so |C(q, u)| with |u| = 1 is the ratio itself.
        bounds.lambda0 = bounds.lambda0.max(d.coriolis.norm());
        bounds.gamma0 = bounds.gamma0.max(d.gravity.norm());
    }
    Ok(bounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TwoLinkArm;

    fn truth() -> BaseParams {
        BaseParams::from_slice(&[7.0, 0.4, 0.55, 6.0, 2.0, 1.5, 0.3]).unwrap()
    }

    #[test]
    fn zero_params_are_rejected() {
        let err = estimate_property_bounds(&TwoLinkArm, &BaseParams::zeros(7), 10, 1).unwrap_err();
        assert!(matches!(err, ModelError::NotPositiveDefinite { .. }));
    }

    #[test]
    fn bounds_hold_on_samples_and_are_deterministic() {
        let b = estimate_property_bounds(&TwoLinkArm, &truth(), 10_000, 42).unwrap();
        assert!(b.lambda1 > 0.0 && b.lambda1 <= b.lambda2);
        assert_eq!(b, estimate_property_bounds(&TwoLinkArm, &truth(), 10_000, 42).unwrap());

        // Re-draw the same samples and check each one against the bounds.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pi = std::f64::consts::PI;
        let mut max_g: f64 = 0.0;
        for _ in 0..10_000 {
            let q = DVector::from_fn(2, |_, _| rng.random_range(-pi..pi));
            let dir = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            let speed = dir.norm();
            let d = TwoLinkArm.dynamics_unchecked(&q, &dir, truth().as_vector());
            let eig = SymmetricEigen::new(d.mass).eigenvalues;
            assert!(eig.min() >= b.lambda1 && eig.max() <= b.lambda2);
            assert!(d.coriolis.norm() <= b.lambda0 * speed * (1.0 + 1e-12));
            max_g = max_g.max(d.gravity.norm());
        }
        assert_eq!(max_g, b.gamma0);
    }

    #[test]
    fn two_link_min_eigenvalue_sweep() {
        // Dense grid over q₂ (M does not depend on q₁).
        let mut min_eig = f64::INFINITY;
        for i in 0..10_000 {
            let q2 = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / 10_000.0;
            let m = TwoLinkArm.mass_unchecked(&DVector::from_column_slice(&[0.0, q2]), truth().as_vector());
            min_eig = min_eig.min(SymmetricEigen::new(m).eigenvalues.min());
        }
        let b = estimate_property_bounds(&TwoLinkArm, &truth(), 10_000, 7).unwrap();
        assert!(min_eig > 0.0);
        assert!(b.lambda1 >= min_eig - 1e-6);
    }
}
