//! Adaptive tracking laws.
//!
//! All laws are pure functions of `(t, q, q̇)` and the controller state
//! `(ξ, π̂, y)`; none of them reads the plant acceleration. Each returns the
//! torque command together with the time derivatives of the controller state.
//!
//! * [`lemma1_control`]: fully actuated regressor law.
//! * [`theorem1_control`]: collocated law for `k ≥ 1` unactuated joints,
//!   with the fictitious input `ξ̇ₙ`.
//! * [`desingularized_adaptation`]: adaptation law that keeps `det M̂ₙ`
//!   above the floor `ε`.

mod desingular;
mod gains;
mod reference;

pub use desingular::{
    desingularized_adaptation, grad_q_mass_column, regressor_mass_column, Desingularization,
    GRAD_STEP,
};
pub use gains::Gains;
pub use reference::{Reference, ReferenceSample, SetPoint};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::{
    check_len, eval_regressor, mass_minor_estimate, BaseParams, JointState, MechanicalModel,
    ModelError,
};
use crate::plant::{condition_number, SINGULAR_CONDITION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid gain {name}: {reason}")]
    InvalidGain { name: &'static str, reason: String },
    #[error("collocated law needs at least one unactuated joint (k = 0)")]
    NotUnderactuated,
    #[error("fully actuated law applied to a state with k = {k} unactuated joints")]
    NotFullyActuated { k: usize },
    #[error("singular estimated minor M̂ₙ at t = {t}: det = {det:e}, condition = {condition:e}")]
    SingularMinor { t: f64, det: f64, condition: f64 },
    #[error("noncollocated identity Yₙπ̂ = Kₙsₙ violated at t = {t}: residual {residual:e}")]
    NoncollocatedIdentity { t: f64, residual: f64 },
    #[error("desingularization direction degenerate at t = {t}: δᵀΓδ = {value:e}")]
    DegenerateDelta { t: f64, value: f64 },
}

/// Deliberate faults used to check that the verification suite constrains
/// the laws. [`Mutation::None`] is the correct law.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Mutation {
    #[default]
    None,
    /// Uses `−η` in the desingularized adaptation.
    FlipEtaSign,
    /// Drops `Λ₂e` from `ξ̇_c`.
    DropLambda2Term,
    /// Drops `Kₙsₙ` from `ξ̇ₙ`.
    OmitKnTerm,
}

/// `ξ`, `π̂` and `y` (`ẏ = e`).
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub xi: DVector<f64>,
    pub pihat: BaseParams,
    pub y: DVector<f64>,
}

impl ControllerState {
    pub fn new(xi: DVector<f64>, pihat: BaseParams, y: DVector<f64>) -> Self {
        Self { xi, pihat, y }
    }

    pub(crate) fn check(&self, model: &dyn MechanicalModel, m: usize) -> Result<(), ModelError> {
        check_len("xi", model.dof(), self.xi.len())?;
        check_len("pihat", model.param_count(), self.pihat.len())?;
        check_len("y", m, self.y.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub tau_bar: DVector<f64>,
    pub xidot: DVector<f64>,
    pub pihatdot: DVector<f64>,
    pub eta: f64,
    pub delta: DVector<f64>,
    pub s: DVector<f64>,
    pub e: DVector<f64>,
    /// `det M̂ₙ`; 1 when `k = 0`.
    pub det_mn_hat: f64,
    /// `π̂ᵀδ − k`.
    pub delta_identity: f64,
}

/// Which law a [`Controller`] runs.
#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    /// Zero torque and frozen controller state.
    Passive,
    Lemma1 { gains: Gains, mutation: Mutation },
    Theorem1 { gains: Gains, desingularized: bool, mutation: Mutation },
}

impl Controller {
    pub fn gains(&self) -> Option<&Gains> {
        match self {
            Controller::Passive => None,
            Controller::Lemma1 { gains, .. } | Controller::Theorem1 { gains, .. } => Some(gains),
        }
    }

    pub fn evaluate(
        &self,
        model: &dyn MechanicalModel,
        t: f64,
        state: &JointState,
        ctrl: &ControllerState,
        reference: &dyn Reference,
    ) -> Result<ControlOutput, ControlError> {
        match self {
            Controller::Passive => passive_output(model, t, state, ctrl, reference),
            Controller::Lemma1 { gains, mutation } => {
                lemma1_law(model, t, state, ctrl, gains, reference, *mutation)
            }
            Controller::Theorem1 {
                gains,
                desingularized,
                mutation,
            } => {
                if state.k() == 0 {
                    return Err(ControlError::NotUnderactuated);
                }
                collocated_law(model, t, state, ctrl, gains, reference, *desingularized, *mutation)
            }
        }
    }
}

fn check_inputs(
    model: &dyn MechanicalModel,
    state: &JointState,
    ctrl: &ControllerState,
    gains: &Gains,
    reference: &dyn Reference,
) -> Result<(), ControlError> {
    check_len("q", model.dof(), state.n())?;
    ctrl.check(model, state.m())?;
    gains.check_dims(state.k(), state.m(), model.param_count())?;
    check_len("reference", state.m(), reference.dim())?;
    Ok(())
}

fn passive_output(
    model: &dyn MechanicalModel,
    t: f64,
    state: &JointState,
    ctrl: &ControllerState,
    reference: &dyn Reference,
) -> Result<ControlOutput, ControlError> {
    check_len("q", model.dof(), state.n())?;
    ctrl.check(model, state.m())?;
    check_len("reference", state.m(), reference.dim())?;
    let r = reference.sample(t);
    let (k, m, p) = (state.k(), state.m(), model.param_count());
    let det_mn_hat = if k == 0 {
        1.0
    } else {
        mass_minor_estimate(model, &state.q, &ctrl.pihat, k)?.determinant()
    };
    Ok(ControlOutput {
        tau_bar: DVector::zeros(m),
        xidot: DVector::zeros(state.n()),
        pihatdot: DVector::zeros(p),
        eta: 0.0,
        delta: DVector::zeros(p),
        s: &state.qdot - &ctrl.xi,
        e: state.q_collocated() - r.r,
        det_mn_hat,
        delta_identity: 0.0,
    })
}

/// Fully actuated law:
/// `τ = Y(q, q̇, ξ, ξ̇)π̂ − Ks`, `π̂̇ = −ΓYᵀs`, `ξ̇ = r̈ − Λ₁ė − Λ₂e`.
pub fn lemma1_control(
    model: &dyn MechanicalModel,
    t: f64,
    state: &JointState,
    ctrl: &ControllerState,
    gains: &Gains,
    reference: &dyn Reference,
) -> Result<ControlOutput, ControlError> {
    lemma1_law(model, t, state, ctrl, gains, reference, Mutation::None)
}

fn lemma1_law(
    model: &dyn MechanicalModel,
    t: f64,
    state: &JointState,
    ctrl: &ControllerState,
    gains: &Gains,
    reference: &dyn Reference,
    mutation: Mutation,
) -> Result<ControlOutput, ControlError> {
    if state.k() != 0 {
        return Err(ControlError::NotFullyActuated { k: state.k() });
    }
    check_inputs(model, state, ctrl, gains, reference)?;
    let r = reference.sample(t);
    let e = &state.q - &r.r;
    let edot = &state.qdot - &r.rdot;
    let xidot = collocated_xidot(gains, &r, &e, &edot, mutation);
    let s = &state.qdot - &ctrl.xi;
    let y = eval_regressor(model, &state.q, &state.qdot, &ctrl.xi, &xidot)?;
    let pihatdot = -(&gains.gamma * (y.as_matrix().transpose() * &s));
    let tau_bar = y.apply(&ctrl.pihat) - gains.k.component_mul(&s);
    let p = model.param_count();
    Ok(ControlOutput {
        tau_bar,
        xidot,
        pihatdot,
        eta: 0.0,
        delta: DVector::zeros(p),
        s,
        e,
        det_mn_hat: 1.0,
        delta_identity: 0.0,
    })
}

/// Collocated law for `k ≥ 1` unactuated joints.
///
/// With `desingularized = true` the adaptation runs through
/// [`desingularized_adaptation`]; otherwise `π̂̇ = −ΓYᵀs`.
pub fn theorem1_control(
    model: &dyn MechanicalModel,
    t: f64,
    state: &JointState,
    ctrl: &ControllerState,
    gains: &Gains,
    reference: &dyn Reference,
    desingularized: bool,
) -> Result<ControlOutput, ControlError> {
    if state.k() == 0 {
        return Err(ControlError::NotUnderactuated);
    }
    collocated_law(model, t, state, ctrl, gains, reference, desingularized, Mutation::None)
}

fn collocated_xidot(
    gains: &Gains,
    r: &ReferenceSample,
    e: &DVector<f64>,
    edot: &DVector<f64>,
    mutation: Mutation,
) -> DVector<f64> {
    let mut xidot = &r.rddot - gains.lambda1.component_mul(edot);
    if mutation != Mutation::DropLambda2Term {
        xidot -= gains.lambda2.component_mul(e);
    }
    xidot
}

/// Shared body of the collocated law. Accepts `k = 0`, in which case every
/// noncollocated block is empty and the computation coincides with the
/// fully actuated law.
#[allow(clippy::too_many_arguments)]
pub(crate) fn collocated_law(
    model: &dyn MechanicalModel,
    t: f64,
    state: &JointState,
    ctrl: &ControllerState,
    gains: &Gains,
    reference: &dyn Reference,
    desingularized: bool,
    mutation: Mutation,
) -> Result<ControlOutput, ControlError> {
    check_inputs(model, state, ctrl, gains, reference)?;
    let (n, k, m) = (state.n(), state.k(), state.m());
    let pihat = ctrl.pihat.as_vector();
    let r = reference.sample(t);

    let e = state.q_collocated() - &r.r;
    let edot = state.qdot_collocated() - &r.rdot;
    let xidot_c = collocated_xidot(gains, &r, &e, &edot, mutation);

    let s = &state.qdot - &ctrl.xi;
    let s_n = s.rows(0, k).into_owned();
    let s_c = s.rows(k, m).into_owned();

    let mut xidot = DVector::zeros(n);
    xidot.rows_mut(k, m).copy_from(&xidot_c);

    let mut minor = None;
    if k > 0 {
        let mn_hat = mass_minor_estimate(model, &state.q, &ctrl.pihat, k)?;
        let det = mn_hat.determinant();
        let condition = condition_number(&mn_hat);
        let too_small = mn_hat.amax() <= 0.0 || condition > SINGULAR_CONDITION;
        if too_small || (desingularized && det <= 0.0) {
            return Err(ControlError::SingularMinor { t, det, condition });
        }
        let inverse = mn_hat
            .clone()
            .try_inverse()
            .ok_or(ControlError::SingularMinor { t, det, condition })?;
        // Yₙ(q, q̇, ξ, (0_k, ξ̇_c)) π̂
        let partial = eval_regressor(model, &state.q, &state.qdot, &ctrl.xi, &xidot)?;
        let drift = partial.noncollocated_rows(k)? * pihat;
        let mut target = -drift;
        if mutation != Mutation::OmitKnTerm {
            target += gains.kn.component_mul(&s_n);
        }
        let xidot_n = &inverse * target;
        xidot.rows_mut(0, k).copy_from(&xidot_n);
        minor = Some((mn_hat, inverse, det));
    }

    let y = eval_regressor(model, &state.q, &state.qdot, &ctrl.xi, &xidot)?;

    let (pihatdot, eta, delta, det_mn_hat, delta_identity) = match &minor {
        Some((_, inverse, det)) if desingularized => {
            let d = desingular::adaptation_from_parts(
                model, &state.q, &state.qdot, y.as_matrix(), &s, &ctrl.pihat, gains, k, inverse,
                *det, mutation,
            );
            let d = d.map_err(|value| ControlError::DegenerateDelta { t, value })?;
            let identity = pihat.dot(&d.delta) - k as f64;
            (d.pihatdot, d.eta, d.delta, *det, identity)
        }
        Some((_, inverse, det)) => {
            let delta = desingular::delta_direction(model, &state.q, k, inverse);
            let identity = pihat.dot(&delta) - k as f64;
            let pihatdot = -(&gains.gamma * (y.as_matrix().transpose() * &s));
            (pihatdot, 0.0, delta, *det, identity)
        }
        None => {
            let pihatdot = -(&gains.gamma * (y.as_matrix().transpose() * &s));
            (pihatdot, 0.0, DVector::zeros(model.param_count()), 1.0, 0.0)
        }
    };

    let y_c: DMatrix<f64> = y.collocated_rows(k)?;
    let tau_bar = &y_c * pihat - gains.k.component_mul(&s_c);

    if k > 0 {
        let residual = (y.noncollocated_rows(k)? * pihat - gains.kn.component_mul(&s_n)).norm();
        if residual > 1e-9 * (1.0 + pihat.norm()) {
            return Err(ControlError::NoncollocatedIdentity { t, residual });
        }
    }

    Ok(ControlOutput {
        tau_bar,
        xidot,
        pihatdot,
        eta,
        delta,
        s,
        e,
        det_mn_hat,
        delta_identity,
    })
}
