use nalgebra::{DMatrix, DVector};

use super::{symmetrize, BaseParams, DynamicsQuantities, MechanicalModel, ModelError};

/// Planar two-link arm with revolute joints.
///
/// Angles are measured from the downward vertical, so `q = 0` is the hanging
/// rest configuration when gravity is on. Joint 1 (hip) comes first; with
/// `k = 1` it is the unactuated coordinate.
///
/// Base parameters, `p = 7`:
///
/// | index | symbol | value |
/// |-------|--------|-------|
/// | 0 | a₁ | I₁ + m₁l_c1² + I₂ + m₂(l₁² + l_c2²) |
/// | 1 | a₂ | I₂ + m₂l_c2² |
/// | 2 | a₃ | m₂l₁l_c2 |
/// | 3 | a₄ | (m₁l_c1 + m₂l₁)·g₀ |
/// | 4 | a₅ | m₂l_c2·g₀ |
/// | 5 | f₁ | hip viscous friction |
/// | 6 | f₂ | knee viscous friction |
///
/// which gives `M₁₁ = a₁ + 2a₃cos q₂`, `M₁₂ = a₂ + a₃cos q₂`, `M₂₂ = a₂`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TwoLinkArm;

pub const TWO_LINK_PARAMS: usize = 7;

/// Physical description of the two-link arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub m1: f64,
    pub l1: f64,
    pub lc1: f64,
    pub i1: f64,
    pub m2: f64,
    pub lc2: f64,
    pub i2: f64,
    pub fv1: f64,
    pub fv2: f64,
    /// Gravitational acceleration; 0 gives the horizontal-plane arm.
    pub g0: f64,
}

impl LinkGeometry {
    pub fn base_params(&self) -> BaseParams {
        let a2 = self.i2 + self.m2 * self.lc2 * self.lc2;
        let a1 = self.i1 + self.m1 * self.lc1 * self.lc1 + self.m2 * self.l1 * self.l1 + a2;
        let a3 = self.m2 * self.l1 * self.lc2;
        let a4 = (self.m1 * self.lc1 + self.m2 * self.l1) * self.g0;
        let a5 = self.m2 * self.lc2 * self.g0;
        BaseParams(DVector::from_column_slice(&[
            a1, a2, a3, a4, a5, self.fv1, self.fv2,
        ]))
    }
}

impl TwoLinkArm {
    /// Kinetic energy `½ q̇ᵀ M q̇`.
    pub fn kinetic_energy(&self, q: &DVector<f64>, qdot: &DVector<f64>, params: &BaseParams) -> f64 {
        let m = self.mass_unchecked(q, params.as_vector());
        0.5 * qdot.dot(&(m * qdot))
    }

    /// Potential energy, zero at the hanging configuration.
    pub fn potential_energy(&self, q: &DVector<f64>, params: &BaseParams) -> f64 {
        let a = params.as_vector();
        a[3] * (1.0 - q[0].cos()) + a[4] * (1.0 - (q[0] + q[1]).cos())
    }

    pub fn total_energy(
        &self,
        q: &DVector<f64>,
        qdot: &DVector<f64>,
        params: &BaseParams,
    ) -> Result<f64, ModelError> {
        super::check_len("q", 2, q.len())?;
        super::check_len("qdot", 2, qdot.len())?;
        super::check_len("params", TWO_LINK_PARAMS, params.len())?;
        Ok(self.kinetic_energy(q, qdot, params) + self.potential_energy(q, params))
    }
}

impl MechanicalModel for TwoLinkArm {
    fn dof(&self) -> usize {
        2
    }

    fn param_count(&self) -> usize {
        TWO_LINK_PARAMS
    }

    #[rustfmt::skip]
    fn dynamics_unchecked(
        &self,
        q: &DVector<f64>,
        qdot: &DVector<f64>,
        params: &DVector<f64>,
    ) -> DynamicsQuantities {
        let a = params;
        let (s2, c2) = q[1].sin_cos();
        let s1 = q[0].sin();
        let s12 = (q[0] + q[1]).sin();

        let mut mass = DMatrix::from_row_slice(2, 2, &[
            a[0] + 2.0 * a[2] * c2, a[1] + a[2] * c2,
            a[1] + a[2] * c2,       a[1],
        ]);
        symmetrize(&mut mass);

        // Christoffel form; Ṁ − 2C is skew-symmetric.
        let h = -a[2] * s2;
        let coriolis = DMatrix::from_row_slice(2, 2, &[
            h * qdot[1], h * (qdot[0] + qdot[1]),
            -h * qdot[0], 0.0,
        ]);
        let gravity = DVector::from_column_slice(&[a[3] * s1 + a[4] * s12, a[4] * s12]);
        let viscous = DMatrix::from_diagonal(&DVector::from_column_slice(&[a[5], a[6]]));

        DynamicsQuantities {
            mass,
            coriolis,
            gravity,
            viscous,
            friction: DVector::zeros(2),
        }
    }

    #[rustfmt::skip]
    fn regressor_unchecked(
        &self,
        q: &DVector<f64>,
        qdot: &DVector<f64>,
        xi: &DVector<f64>,
        xidot: &DVector<f64>,
    ) -> DMatrix<f64> {
        let (s2, c2) = q[1].sin_cos();
        let s1 = q[0].sin();
        let s12 = (q[0] + q[1]).sin();
        let coupling_1 = 2.0 * c2 * xidot[0] + c2 * xidot[1]
            - s2 * qdot[1] * xi[0]
            - s2 * (qdot[0] + qdot[1]) * xi[1];
        let coupling_2 = c2 * xidot[0] + s2 * qdot[0] * xi[0];
        DMatrix::from_row_slice(2, TWO_LINK_PARAMS, &[
            xidot[0], xidot[1],            coupling_1, s1,  s12, xi[0], 0.0,
            0.0,      xidot[0] + xidot[1], coupling_2, 0.0, s12, 0.0,   xi[1],
        ])
    }

    fn mass_unchecked(&self, q: &DVector<f64>, params: &DVector<f64>) -> DMatrix<f64> {
        let c2 = q[1].cos();
        let m11 = params[0] + 2.0 * params[2] * c2;
        let m12 = params[1] + params[2] * c2;
        DMatrix::from_row_slice(2, 2, &[m11, m12, m12, params[1]])
    }

    fn mass_column_gradient(
        &self,
        q: &DVector<f64>,
        pihat: &DVector<f64>,
        k: usize,
        column: usize,
    ) -> Option<DMatrix<f64>> {
        // Only the k = 1 split exists for a two-link arm with an actuator.
        if k != 1 || column != 0 {
            return None;
        }
        Some(DMatrix::from_row_slice(1, 2, &[0.0, -2.0 * pihat[2] * q[1].sin()]))
    }
}
