//! Running a configured scenario.

use std::fmt;

use super::config::ScenarioConfig;
use super::trace::{config_hash, TraceAbort, TraceFile, TraceMeta};
use crate::control::Mutation;
use crate::model::TwoLinkArm;
use crate::monitor::{convergence_ratio, determinant_floor_monitor};
use crate::plant::{SimOutcome, Simulation};

/// Runs a scenario on the two-link arm.
pub fn simulate(config: &ScenarioConfig, mutation: Mutation, decimation: usize) -> SimOutcome {
    let controller = config.controller(mutation);
    let sim = Simulation {
        model: &TwoLinkArm,
        true_params: &config.model.true_params,
        controller: &controller,
        reference: &config.reference.reference,
    };
    sim.run(
        config.initial_state(),
        config.integration.duration,
        config.integration.step,
        decimation,
    )
}

/// Packages an outcome for [`write_trace`](super::trace::write_trace).
pub fn trace_file(config_text: &str, config: &ScenarioConfig, outcome: &SimOutcome) -> TraceFile {
    TraceFile {
        meta: TraceMeta {
            config_sha256: config_hash(config_text),
            seed: config.integration.seed,
            scenario: config.name.clone(),
            law: Some(config.controller.law.to_string()),
        },
        records: outcome.trace.clone(),
        abort: outcome.error.as_ref().map(|e| TraceAbort {
            t: e.time(),
            reason: e.to_string(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub records: usize,
    pub final_time: f64,
    /// `|e|` at the last record, radians.
    pub final_error: f64,
    pub max_torque: f64,
    pub min_det: f64,
    pub eta_active: f64,
    pub max_noncollocated_speed: f64,
    pub convergence_ratio: f64,
    pub abort: Option<String>,
}

impl RunSummary {
    pub fn new(outcome: &SimOutcome, epsilon: f64, unactuated: usize) -> Self {
        let trace = &outcome.trace;
        let last = trace.last();
        let floor = determinant_floor_monitor(trace, epsilon);
        let fold_max = |f: &dyn Fn(&crate::plant::TraceRecord) -> f64| {
            trace.iter().map(f).fold(0.0, f64::max)
        };
        Self {
            records: trace.len(),
            final_time: last.map_or(0.0, |r| r.t),
            final_error: last.map_or(f64::NAN, |r| r.e.norm()),
            max_torque: fold_max(&|r| r.tau_bar.amax()),
            min_det: floor.min_det,
            eta_active: floor.eta_active_duration,
            max_noncollocated_speed: fold_max(&|r| r.qdot.rows(0, unactuated).amax()),
            convergence_ratio: convergence_ratio(trace),
            abort: outcome.error.as_ref().map(|e| e.to_string()),
        }
    }

    pub fn converged(&self) -> bool {
        self.convergence_ratio <= 0.1
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records           {} (t = 0 .. {:.3} s)", self.records, self.final_time)?;
        writeln!(
            f,
            "final |e|         {:.6e} rad ({:.4} deg)",
            self.final_error,
            self.final_error.to_degrees()
        )?;
        writeln!(f, "max |tau_bar|     {:.6} N m", self.max_torque)?;
        writeln!(f, "min det(Mn_hat)   {:.6}", self.min_det)?;
        writeln!(f, "eta active        {:.3} s", self.eta_active)?;
        writeln!(f, "max |qdot_n|      {:.6} rad/s", self.max_noncollocated_speed)?;
        writeln!(
            f,
            "convergence ratio {:.4} ({})",
            self.convergence_ratio,
            if self.converged() { "converged" } else { "not converged" }
        )?;
        match &self.abort {
            Some(reason) => write!(f, "aborted           {reason}"),
            None => write!(f, "completed"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::scenario::find_scenario;

    #[test]
    fn zero_duration_gives_one_record() {
        let mut cfg = find_scenario("sim").unwrap().config();
        cfg.integration.duration = 0.0;
        let out = simulate(&cfg, Mutation::None, 10);
        assert!(out.error.is_none());
        assert_eq!(out.trace.len(), 1);
        let summary = RunSummary::new(&out, cfg.controller.gains.epsilon, 1);
        assert_eq!(summary.records, 1);
        assert_eq!(summary.final_time, 0.0);
    }

    #[test]
    fn trace_file_carries_abort_reason() {
        let mut cfg = find_scenario("sim").unwrap().config();
        cfg.integration.duration = 0.0;
        let mut out = simulate(&cfg, Mutation::None, 1);
        out.error = Some(crate::plant::SimError::Divergence {
            t: 1.0,
            reason: "test".into(),
        });
        let file = trace_file("text", &cfg, &out);
        assert_eq!(file.abort.unwrap().t, Some(1.0));
        assert_eq!(file.meta.seed, cfg.integration.seed);
    }
}
