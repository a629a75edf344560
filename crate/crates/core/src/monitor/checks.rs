//! Checks over recorded traces.

use crate::plant::TraceRecord;

/// Slack on the determinant floor, as a fraction of `ε`, for the one-step
/// integration error of the continuous-time argument.
pub const FLOOR_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct DeterminantFloorReport {
    pub epsilon: f64,
    pub min_det: f64,
    pub t_at_min: f64,
    /// Total time with `η ≠ 0`, estimated from record spacing.
    pub eta_active_duration: f64,
    pub violated: bool,
}

impl DeterminantFloorReport {
    /// `min det − (ε − tol)`; negative when violated.
    pub fn margin(&self) -> f64 {
        self.min_det - (1.0 - FLOOR_TOLERANCE) * self.epsilon
    }
}

pub fn determinant_floor_monitor(trace: &[TraceRecord], epsilon: f64) -> DeterminantFloorReport {
    let mut min_det = f64::INFINITY;
    let mut t_at_min = f64::NAN;
    let mut active = 0.0;
    for (i, rec) in trace.iter().enumerate() {
        if rec.det_mn_hat < min_det || rec.det_mn_hat.is_nan() {
            min_det = rec.det_mn_hat;
            t_at_min = rec.t;
        }
        if rec.eta != 0.0 {
            if let Some(next) = trace.get(i + 1) {
                active += next.t - rec.t;
            }
        }
    }
    DeterminantFloorReport {
        epsilon,
        min_det,
        t_at_min,
        eta_active_duration: active,
        violated: !(min_det >= (1.0 - FLOOR_TOLERANCE) * epsilon),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    /// Largest `V(t+h) − V(t)` over checked steps.
    pub worst_increase: f64,
    pub t_at_worst: f64,
    pub tolerance: f64,
    pub checked_steps: usize,
    pub skipped_steps: usize,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.checked_steps > 0 && self.worst_increase <= self.tolerance
    }
}

/// Checks `V(t+h) − V(t) ≤ tol_scale · max(V(0), 1)` on consecutive records.
///
/// Steps touching an `η ≠ 0` record (or its immediate neighbours) and steps
/// spanning a reference switch are skipped: `V` is not claimed to decrease
/// there.
pub fn lyapunov_monotonicity(
    trace: &[TraceRecord],
    switch_times: &[f64],
    tol_scale: f64,
) -> MonotonicityReport {
    let v0 = trace.first().map_or(0.0, |r| r.v);
    let tolerance = tol_scale * v0.max(1.0);
    let active: Vec<bool> = trace.iter().map(|r| r.eta != 0.0).collect();
    let near_active = |i: usize| {
        let lo = i.saturating_sub(1);
        let hi = (i + 2).min(active.len());
        active[lo..hi].iter().any(|&a| a)
    };
    let mut report = MonotonicityReport {
        worst_increase: f64::NEG_INFINITY,
        t_at_worst: f64::NAN,
        tolerance,
        checked_steps: 0,
        skipped_steps: 0,
    };
    for i in 0..trace.len().saturating_sub(1) {
        let (a, b) = (&trace[i], &trace[i + 1]);
        let spans_switch = switch_times.iter().any(|&ts| ts > a.t && ts <= b.t);
        if spans_switch || near_active(i) || near_active(i + 1) {
            report.skipped_steps += 1;
            continue;
        }
        report.checked_steps += 1;
        let inc = b.v - a.v;
        if inc > report.worst_increase || inc.is_nan() {
            report.worst_increase = inc;
            report.t_at_worst = a.t;
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaIdentityReport {
    pub max_abs: f64,
    pub t_at_max: f64,
    pub checked: usize,
}

/// Largest `|π̂ᵀδ − k|` over records with `det M̂ₙ > det_threshold`.
pub fn delta_identity_report(trace: &[TraceRecord], det_threshold: f64) -> DeltaIdentityReport {
    let mut report = DeltaIdentityReport {
        max_abs: 0.0,
        t_at_max: f64::NAN,
        checked: 0,
    };
    for rec in trace.iter().filter(|r| r.det_mn_hat > det_threshold) {
        report.checked += 1;
        let v = rec.pihat_delta_identity.abs();
        if v > report.max_abs || v.is_nan() {
            report.max_abs = v;
            report.t_at_max = rec.t;
        }
    }
    report
}

fn rms(records: &[TraceRecord]) -> f64 {
    if records.is_empty() {
        return f64::NAN;
    }
    let sum: f64 = records.iter().map(|r| r.e.norm_squared()).sum();
    (sum / records.len() as f64).sqrt()
}

/// RMS of `|e|` over the final 10% of the horizon divided by the RMS over
/// the first 10%.
pub fn convergence_ratio(trace: &[TraceRecord]) -> f64 {
    let (Some(first), Some(last)) = (trace.first(), trace.last()) else {
        return f64::NAN;
    };
    let span = last.t - first.t;
    let early_end = first.t + 0.1 * span;
    let late_start = last.t - 0.1 * span;
    let early: Vec<_> = trace.iter().filter(|r| r.t <= early_end).cloned().collect();
    let late: Vec<_> = trace.iter().filter(|r| r.t >= late_start).cloned().collect();
    rms(&late) / rms(&early)
}
