use nalgebra::DVector;
use thiserror::Error;

use super::{forward_dynamics, rk4_step, PlantError, Rk4Error};
use crate::control::{ControlError, ControlOutput, Controller, ControllerState, Reference};
use crate::model::{BaseParams, JointState, MechanicalModel, ModelError};
use crate::monitor::{lyapunov_rate, lyapunov_value};

/// Velocity magnitude (rad/s) above which a run is declared divergent.
pub const MAX_SPEED: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub plant: JointState,
    pub controller: ControllerState,
}

/// One row of the simulation trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
    pub e: DVector<f64>,
    pub s: DVector<f64>,
    pub xi: DVector<f64>,
    pub pihat: DVector<f64>,
    pub tau_bar: DVector<f64>,
    pub det_mn_hat: f64,
    pub eta: f64,
    pub v: f64,
    pub vdot: f64,
    pub pihat_delta_identity: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation arguments: {0}")]
    InvalidArguments(String),
    #[error("controller failed at t = {t}: {source}")]
    Control { t: f64, source: ControlError },
    #[error("plant failed at t = {t}: {source}")]
    Plant { t: f64, source: PlantError },
    #[error("diverged at t = {t}: {reason}")]
    Divergence { t: f64, reason: String },
}

impl SimError {
    pub fn time(&self) -> Option<f64> {
        match self {
            SimError::InvalidArguments(_) => None,
            SimError::Control { t, .. } | SimError::Plant { t, .. } | SimError::Divergence { t, .. } => {
                Some(*t)
            }
        }
    }
}

/// Result of a run: the trace up to the abort point and the abort reason, if any.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub trace: Vec<TraceRecord>,
    pub error: Option<SimError>,
    pub final_state: SimState,
}

/// Closed loop of a plant with known true parameters and one controller.
pub struct Simulation<'a> {
    pub model: &'a dyn MechanicalModel,
    pub true_params: &'a BaseParams,
    pub controller: &'a Controller,
    pub reference: &'a dyn Reference,
}

struct Layout {
    n: usize,
    p: usize,
    m: usize,
    k: usize,
}

impl Layout {
    fn len(&self) -> usize {
        3 * self.n + self.p + self.m
    }

    fn pack(&self, state: &SimState) -> DVector<f64> {
        let mut x = DVector::zeros(self.len());
        let n = self.n;
        x.rows_mut(0, n).copy_from(&state.plant.q);
        x.rows_mut(n, n).copy_from(&state.plant.qdot);
        x.rows_mut(2 * n, n).copy_from(&state.controller.xi);
        x.rows_mut(3 * n, self.p).copy_from(state.controller.pihat.as_vector());
        x.rows_mut(3 * n + self.p, self.m).copy_from(&state.controller.y);
        x
    }

    fn unpack(&self, t: f64, x: &DVector<f64>) -> Result<SimState, ModelError> {
        let n = self.n;
        let plant = JointState::new(
            x.rows(0, n).into_owned(),
            x.rows(n, n).into_owned(),
            self.k,
        )?;
        let controller = ControllerState::new(
            x.rows(2 * n, n).into_owned(),
            BaseParams::new(x.rows(3 * n, self.p).into_owned())?,
            x.rows(3 * n + self.p, self.m).into_owned(),
        );
        Ok(SimState {
            t,
            plant,
            controller,
        })
    }
}

impl Simulation<'_> {
    fn control(&self, state: &SimState) -> Result<ControlOutput, SimError> {
        self.controller
            .evaluate(self.model, state.t, &state.plant, &state.controller, self.reference)
            .map_err(|source| SimError::Control { t: state.t, source })
    }

    fn derivative(&self, layout: &Layout, t: f64, x: &DVector<f64>) -> Result<DVector<f64>, SimError> {
        let state = layout
            .unpack(t, x)
            .map_err(|e| SimError::Divergence { t, reason: e.to_string() })?;
        let out = self.control(&state)?;
        let qddot = forward_dynamics(self.model, &state.plant, self.true_params, &out.tau_bar)
            .map_err(|source| SimError::Plant { t, source })?;
        let mut dx = DVector::zeros(layout.len());
        let n = layout.n;
        dx.rows_mut(0, n).copy_from(&state.plant.qdot);
        dx.rows_mut(n, n).copy_from(&qddot);
        dx.rows_mut(2 * n, n).copy_from(&out.xidot);
        dx.rows_mut(3 * n, layout.p).copy_from(&out.pihatdot);
        dx.rows_mut(3 * n + layout.p, layout.m).copy_from(&out.e);
        Ok(dx)
    }

    /// Evaluates the trace row for a state (controller output plus monitors).
    pub fn record(&self, state: &SimState) -> Result<TraceRecord, SimError> {
        let out = self.control(state)?;
        let (v, vdot) = match self.controller.gains() {
            Some(gains) => (
                lyapunov_value(
                    self.model,
                    state.t,
                    &state.plant,
                    &state.controller,
                    gains,
                    self.reference,
                    self.true_params,
                ),
                lyapunov_rate(
                    self.model,
                    state.t,
                    &state.plant,
                    &state.controller,
                    gains,
                    self.reference,
                    self.true_params,
                ),
            ),
            None => (0.0, 0.0),
        };
        Ok(TraceRecord {
            t: state.t,
            q: state.plant.q.clone(),
            qdot: state.plant.qdot.clone(),
            e: out.e,
            s: out.s,
            xi: state.controller.xi.clone(),
            pihat: state.controller.pihat.as_vector().clone(),
            tau_bar: out.tau_bar,
            det_mn_hat: out.det_mn_hat,
            eta: out.eta,
            v,
            vdot,
            pihat_delta_identity: out.delta_identity,
        })
    }

    /// Integrates plant and controller together with fixed-step RK4.
    ///
    /// One record is kept every `decimation` steps plus the final state. On
    /// failure the trace collected so far is returned along with the error.
    pub fn run(&self, initial: SimState, duration: f64, h: f64, decimation: usize) -> SimOutcome {
        let fail = |error: SimError, state: SimState, trace| SimOutcome {
            trace,
            error: Some(error),
            final_state: state,
        };
        if !(duration >= 0.0 && duration.is_finite()) || !(h > 0.0 && h.is_finite()) || decimation == 0 {
            return fail(
                SimError::InvalidArguments(format!(
                    "duration = {duration}, h = {h}, decimation = {decimation}"
                )),
                initial,
                Vec::new(),
            );
        }
        let layout = Layout {
            n: initial.plant.n(),
            p: initial.controller.pihat.len(),
            m: initial.plant.m(),
            k: initial.plant.k(),
        };
        if let Err(e) = initial.controller.check(self.model, layout.m) {
            return fail(SimError::InvalidArguments(e.to_string()), initial, Vec::new());
        }

        let steps = (duration / h).round() as usize;
        let t0 = initial.t;
        let mut trace = Vec::with_capacity(steps / decimation + 2);
        let mut state = initial;
        match self.record(&state) {
            Ok(r) => trace.push(r),
            Err(e) => return fail(e, state, trace),
        }
        let mut x = layout.pack(&state);
        for i in 0..steps {
            let t = t0 + i as f64 * h;
            let next = rk4_step(|ts, xs: &DVector<f64>| self.derivative(&layout, ts, xs), t, &x, h);
            x = match next {
                Ok(x) => x,
                Err(Rk4Error::Derivative { source, .. }) => return fail(source, state, trace),
                Err(Rk4Error::Divergence { t, stage }) => {
                    let reason = format!("non-finite derivative in RK4 stage {stage}");
                    return fail(SimError::Divergence { t, reason }, state, trace);
                }
            };
            let t_next = t0 + (i + 1) as f64 * h;
            let speed = x.rows(layout.n, layout.n).amax();
            if !x.iter().all(|v| v.is_finite()) || speed > MAX_SPEED {
                let reason = format!("state left the admissible region (|q̇|∞ = {speed:e})");
                return fail(SimError::Divergence { t: t_next, reason }, state, trace);
            }
            state = match layout.unpack(t_next, &x) {
                Ok(s) => s,
                Err(e) => {
                    let reason = e.to_string();
                    return fail(SimError::Divergence { t: t_next, reason }, state, trace);
                }
            };
            if (i + 1) % decimation == 0 || i + 1 == steps {
                match self.record(&state) {
                    Ok(r) => trace.push(r),
                    Err(e) => return fail(e, state, trace),
                }
            }
        }
        SimOutcome {
            trace,
            error: None,
            final_state: state,
        }
    }
}
