//! Property suite behind `collocated verify`.
//!
//! Model identities and integrator checks run on random samples; closed-loop
//! properties run on the bundled scenarios (or on one user config). Each
//! property reports the measured value, its limit and the margin between them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Law, ScenarioConfig};
use super::reference::{PiecewiseReference, Segment, SegmentShape};
use super::run::simulate;
use super::scenario::{find_scenario, SCENARIOS};
use crate::control::{theorem1_control, ControllerState, Gains, Mutation};
use crate::model::{
    eval_dynamics, eval_regressor, BaseParams, JointState, MechanicalModel, TwoLinkArm,
};
use crate::monitor::{
    delta_identity_report, determinant_floor_monitor, lyapunov_monotonicity, lyapunov_rate,
    FLOOR_TOLERANCE,
};
use crate::plant::{rk4_step, SimOutcome, TraceRecord};

/// Soft limit on the suite's wall-clock time.
pub const RUNTIME_BUDGET: Duration = Duration::from_secs(300);

pub const REGRESSOR_TOLERANCE: f64 = 1e-9;
pub const SKEW_TOLERANCE: f64 = 1e-6;
pub const LINEARITY_TOLERANCE: f64 = 1e-12;
pub const MIN_RK4_ORDER: f64 = 3.9;
pub const ENERGY_DRIFT_TOLERANCE: f64 = 1e-6;
pub const IDENTITY_TOLERANCE: f64 = 1e-9;
pub const DELTA_IDENTITY_DET: f64 = 1e-6;
pub const MONOTONICITY_SCALE: f64 = 1e-6;
pub const SPEED_BOUND: f64 = 10.0;
pub const CONVERGENCE_RATIO: f64 = 0.1;
pub const SIM_ERROR_DEG: f64 = 1.0;
pub const SIM_TORQUE_LIMIT: f64 = 50.0;
pub const BASELINE_ERROR_DEG: f64 = 0.5;
pub const BASELINE_SETTLE: f64 = 30.0;
pub const ADVERSARIAL_WINDOW: f64 = 5.0;
const RATE_SAMPLES: usize = 10_000;

/// Whether a property needs its measured value below or above the limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
    Below,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub limit: f64,
    pub bound: Bound,
    pub detail: String,
    pub elapsed: Duration,
}

impl PropertyResult {
    fn check(name: &'static str, measured: f64, bound: Bound, limit: f64, detail: String) -> Self {
        let passed = match bound {
            Bound::AtMost => measured <= limit,
            Bound::AtLeast => measured >= limit,
            Bound::Below => measured < limit,
        };
        Self {
            name,
            passed,
            measured,
            limit,
            bound,
            detail,
            elapsed: Duration::ZERO,
        }
    }

    fn failed(name: &'static str, limit: f64, bound: Bound, detail: String) -> Self {
        Self {
            name,
            passed: false,
            measured: f64::NAN,
            limit,
            bound,
            detail,
            elapsed: Duration::ZERO,
        }
    }

    /// Distance to the limit; positive when the property holds.
    pub fn margin(&self) -> f64 {
        match self.bound {
            Bound::AtMost | Bound::Below => self.limit - self.measured,
            Bound::AtLeast => self.measured - self.limit,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Replace the bundled closed-loop scenarios by this one.
    pub config: Option<ScenarioConfig>,
    /// Only run properties whose name contains this string.
    pub filter: Option<String>,
    /// Deliberate fault injected into every closed-loop run.
    pub mutation: Mutation,
    pub seed: u64,
    pub samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            config: None,
            filter: None,
            mutation: Mutation::None,
            seed: 0,
            samples: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub results: Vec<PropertyResult>,
    pub elapsed: Duration,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn over_budget(&self) -> bool {
        self.elapsed > RUNTIME_BUDGET
    }

    pub fn get(&self, name: &str) -> Option<&PropertyResult> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let op = match r.bound {
                Bound::AtMost => "<=",
                Bound::AtLeast => ">=",
                Bound::Below => "<",
            };
            let _ = writeln!(
                out,
                "{} {:<28} {:.6e} {op} {:.6e}  margin {:+.3e}  ({:.2?})  {}",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.measured,
                r.limit,
                r.margin(),
                r.elapsed,
                r.detail
            );
        }
        let passed = self.results.iter().filter(|r| r.passed).count();
        let _ = writeln!(
            out,
            "{passed}/{} properties passed in {:.2?}",
            self.results.len(),
            self.elapsed
        );
        if self.over_budget() {
            let _ = writeln!(
                out,
                "warning: suite took longer than the {} s budget",
                RUNTIME_BUDGET.as_secs()
            );
        }
        out
    }

    /// Tab-separated `name status measured limit margin` lines.
    pub fn machine(&self) -> String {
        let mut out = String::from("property\tstatus\tmeasured\tlimit\tmargin\n");
        for r in &self.results {
            let _ = writeln!(
                out,
                "{}\t{}\t{:e}\t{:e}\t{:e}",
                r.name,
                if r.passed { "pass" } else { "fail" },
                r.measured,
                r.limit,
                r.margin()
            );
        }
        out
    }
}

/// One closed-loop run shared by several properties.
pub struct Run {
    pub name: String,
    pub config: ScenarioConfig,
    pub converges: bool,
    pub outcome: SimOutcome,
}

impl Run {
    fn closed_loop(&self) -> bool {
        self.config.controller.law != Law::Passive
    }
}

struct Context {
    runs: BTreeMap<String, Run>,
    seed: u64,
    samples: usize,
}

impl Context {
    fn run(&self, name: &str) -> Option<&Run> {
        self.runs.get(name)
    }

    fn closed_loop(&self) -> impl Iterator<Item = &Run> {
        self.runs.values().filter(|r| r.closed_loop())
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

enum Uses {
    Nothing,
    Runs(&'static [&'static str]),
    AllRuns,
}

struct Property {
    name: &'static str,
    uses: Uses,
    eval: fn(&Context) -> Option<PropertyResult>,
}

const PROPERTIES: &[Property] = &[
    Property { name: "regressor-identity", uses: Uses::Nothing, eval: regressor_identity },
    Property { name: "skew-symmetry", uses: Uses::Nothing, eval: skew_symmetry },
    Property { name: "parameter-linearity", uses: Uses::Nothing, eval: parameter_linearity },
    Property { name: "rk4-order", uses: Uses::Nothing, eval: rk4_order },
    Property { name: "controller-identities", uses: Uses::Nothing, eval: controller_identities },
    Property { name: "lyapunov-rate-sign", uses: Uses::Nothing, eval: lyapunov_rate_sign },
    Property { name: "energy-conservation", uses: Uses::Runs(&["energy-frictionless"]), eval: energy_conservation },
    Property { name: "delta-identity", uses: Uses::AllRuns, eval: delta_identity },
    Property { name: "determinant-floor", uses: Uses::AllRuns, eval: determinant_floor },
    Property {
        name: "adversarial-plain-crossing",
        uses: Uses::Runs(&[ADVERSARIAL_PLAIN]),
        eval: adversarial_plain_crossing,
    },
    Property { name: "lyapunov-monotonicity", uses: Uses::AllRuns, eval: monotonicity },
    Property { name: "sim-reproduction", uses: Uses::Runs(&["sim"]), eval: sim_reproduction },
    Property { name: "velocity-bound", uses: Uses::AllRuns, eval: velocity_bound },
    Property { name: "convergence", uses: Uses::AllRuns, eval: convergence },
    Property { name: "lemma1-tracking", uses: Uses::Runs(&["lemma1-baseline"]), eval: lemma1_tracking },
];

const ADVERSARIAL_PLAIN: &str = "adversarial-desingularization/plain";

pub fn property_names() -> Vec<&'static str> {
    PROPERTIES.iter().map(|p| p.name).collect()
}

/// Bundled runs: every scenario plus the adversarial case under the plain law.
fn bundled_runs() -> Vec<(String, ScenarioConfig, bool)> {
    let mut runs: Vec<_> = SCENARIOS
        .iter()
        .map(|s| (s.name.to_string(), s.config(), s.converges))
        .collect();
    let adversarial = find_scenario("adversarial-desingularization").expect("bundled");
    let mut plain = adversarial.config();
    plain.controller.law = Law::Theorem1;
    runs.push((ADVERSARIAL_PLAIN.to_string(), plain, false));
    runs
}

pub fn verify(options: &VerifyOptions) -> VerifyReport {
    let start = Instant::now();
    let selected: Vec<&Property> = PROPERTIES
        .iter()
        .filter(|p| options.filter.as_deref().is_none_or(|f| p.name.contains(f)))
        .collect();

    let candidates: Vec<(String, ScenarioConfig, bool)> = match &options.config {
        Some(cfg) => vec![(
            cfg.name.clone().unwrap_or_else(|| "config".to_string()),
            cfg.clone(),
            false,
        )],
        None => bundled_runs(),
    };
    let wanted = |name: &str| {
        selected.iter().any(|p| match p.uses {
            Uses::Nothing => false,
            Uses::AllRuns => true,
            Uses::Runs(names) => names.contains(&name),
        })
    };
    let jobs: Vec<_> = candidates.into_iter().filter(|(n, _, _)| wanted(n)).collect();
    let runs = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|(name, config, converges)| {
                scope.spawn(move || {
                    let outcome = simulate(&config, options.mutation, 1);
                    Run {
                        name,
                        config,
                        converges,
                        outcome,
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                let run = h.join().expect("simulation thread panicked");
                (run.name.clone(), run)
            })
            .collect::<BTreeMap<_, _>>()
    });
    let ctx = Context {
        runs,
        seed: options.seed,
        samples: options.samples.max(1),
    };

    let results = std::thread::scope(|scope| {
        let handles: Vec<_> = selected
            .iter()
            .map(|p| {
                let ctx = &ctx;
                scope.spawn(move || {
                    let t0 = Instant::now();
                    (p.eval)(ctx).map(|mut r| {
                        r.elapsed = t0.elapsed();
                        r
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .filter_map(|h| h.join().expect("property thread panicked"))
            .collect()
    });
    VerifyReport {
        results,
        elapsed: start.elapsed(),
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(lo..hi))
}

fn random_params(rng: &mut ChaCha8Rng) -> BaseParams {
    BaseParams::new(uniform(rng, TwoLinkArm.param_count(), 0.05, 5.0)).expect("finite")
}

fn regressor_identity(ctx: &Context) -> Option<PropertyResult> {
    let model = TwoLinkArm;
    let mut rng = ctx.rng(1);
    let mut worst = 0.0f64;
    for _ in 0..ctx.samples {
        let q = uniform(&mut rng, 2, -std::f64::consts::PI, std::f64::consts::PI);
        let qdot = uniform(&mut rng, 2, -5.0, 5.0);
        let xi = uniform(&mut rng, 2, -5.0, 5.0);
        let xidot = uniform(&mut rng, 2, -20.0, 20.0);
        let params = random_params(&mut rng);
        let state = JointState::actuated(q.clone(), qdot.clone()).expect("n = 2");
        let d = eval_dynamics(&model, &state, &params).expect("dims");
        let y = eval_regressor(&model, &q, &qdot, &xi, &xidot).expect("dims").apply(&params);
        let direct = &d.mass * &xidot + &d.coriolis * &xi + &d.gravity + &d.viscous * &xi + &d.friction;
        worst = worst.max((&y - direct).norm() / (1.0 + y.norm()));
    }
    Some(PropertyResult::check(
        "regressor-identity",
        worst,
        Bound::AtMost,
        REGRESSOR_TOLERANCE,
        format!("{} samples, |Y pi - (M xidot + C xi + g + Fv xi)| / (1 + |Y pi|)", ctx.samples),
    ))
}

fn skew_symmetry(ctx: &Context) -> Option<PropertyResult> {
    let model = TwoLinkArm;
    let mut rng = ctx.rng(2);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..ctx.samples {
        let q = uniform(&mut rng, 2, -std::f64::consts::PI, std::f64::consts::PI);
        let qdot = uniform(&mut rng, 2, -5.0, 5.0);
        let x = uniform(&mut rng, 2, -1.0, 1.0);
        let params = random_params(&mut rng);
        let p = params.as_vector();
        let mdot = (model.mass_unchecked(&(&q + &qdot * h), p) - model.mass_unchecked(&(&q - &qdot * h), p))
            / (2.0 * h);
        let c = model.dynamics_unchecked(&q, &qdot, p).coriolis;
        let form = x.dot(&((mdot - c * 2.0) * &x)).abs();
        let scale = x.norm_squared() * (1.0 + qdot.norm()).powi(2);
        worst = worst.max(form / scale);
    }
    Some(PropertyResult::check(
        "skew-symmetry",
        worst,
        Bound::AtMost,
        SKEW_TOLERANCE,
        format!("{} samples, |x'(Mdot - 2C)x| / (|x|^2 (1 + |qdot|)^2)", ctx.samples),
    ))
}

fn parameter_linearity(ctx: &Context) -> Option<PropertyResult> {
    let model = TwoLinkArm;
    let mut rng = ctx.rng(3);
    let mut worst = 0.0f64;
    for _ in 0..ctx.samples {
        let q = uniform(&mut rng, 2, -3.0, 3.0);
        let qdot = uniform(&mut rng, 2, -5.0, 5.0);
        let (p1, p2) = (random_params(&mut rng), random_params(&mut rng));
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let mix = p1.as_vector() * a + p2.as_vector() * b;
        let d = model.dynamics_unchecked(&q, &qdot, &mix);
        let d1 = model.dynamics_unchecked(&q, &qdot, p1.as_vector());
        let d2 = model.dynamics_unchecked(&q, &qdot, p2.as_vector());
        let gap = |x: &DMatrix<f64>, y: &DMatrix<f64>, z: &DMatrix<f64>| {
            (x - (y * a + z * b)).amax() / (1.0 + x.amax())
        };
        let col = |v: &DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());
        worst = worst
            .max(gap(&d.mass, &d1.mass, &d2.mass))
            .max(gap(&d.coriolis, &d1.coriolis, &d2.coriolis))
            .max(gap(&d.viscous, &d1.viscous, &d2.viscous))
            .max(gap(&col(&d.gravity), &col(&d1.gravity), &col(&d2.gravity)));
    }
    Some(PropertyResult::check(
        "parameter-linearity",
        worst,
        Bound::AtMost,
        LINEARITY_TOLERANCE,
        format!("{} samples of M, C, g, Fv at a*pi1 + b*pi2", ctx.samples),
    ))
}

/// Empirical order of RK4 on `ẋ = −x` over `[0, 1]`.
pub fn rk4_empirical_order() -> f64 {
    let error = |h: f64| {
        let steps = (1.0 / h).round() as usize;
        let mut x = DVector::from_element(1, 1.0);
        for i in 0..steps {
            x = rk4_step(
                |_, x: &DVector<f64>| Ok::<_, ()>(-x),
                i as f64 * h,
                &x,
                h,
            )
            .expect("finite");
        }
        (x[0] - (-1.0f64).exp()).abs()
    };
    let hs = [0.2, 0.1, 0.05, 0.025];
    hs.windows(2)
        .map(|w| (error(w[0]) / error(w[1])).log2())
        .fold(f64::INFINITY, f64::min)
}

fn rk4_order(_: &Context) -> Option<PropertyResult> {
    Some(PropertyResult::check(
        "rk4-order",
        rk4_empirical_order(),
        Bound::AtLeast,
        MIN_RK4_ORDER,
        "xdot = -x, h = 0.2 .. 0.025".into(),
    ))
}

fn sinusoid(offset: f64, amplitude: f64, frequency: f64) -> PiecewiseReference {
    PiecewiseReference::new(vec![Segment {
        start: 0.0,
        shape: SegmentShape::Sinusoid {
            offset: DVector::from_element(1, offset),
            amplitude: DVector::from_element(1, amplitude),
            frequency: DVector::from_element(1, frequency),
            phase: DVector::zeros(1),
        },
    }])
    .expect("valid")
}

fn random_gains(rng: &mut ChaCha8Rng, p: usize) -> Gains {
    let one = |rng: &mut ChaCha8Rng| DVector::from_element(1, rng.random_range(0.05..10.0));
    let diag = uniform(rng, p, 0.01, 5.0);
    Gains::new(
        one(rng),
        one(rng),
        one(rng),
        one(rng),
        DMatrix::from_diagonal(&diag),
        rng.random_range(0.1..10.0),
    )
    .expect("positive")
}

fn controller_identities(ctx: &Context) -> Option<PropertyResult> {
    let model = TwoLinkArm;
    let mut rng = ctx.rng(4);
    let truth = BaseParams::from_slice(&[4.9, 0.85, 1.5, 4.0, 1.5, 0.5, 0.2]).expect("finite");
    let reference = sinusoid(-1.0, 0.6, 0.3);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < ctx.samples {
        let q = uniform(&mut rng, 2, -2.5, 2.5);
        let qdot = uniform(&mut rng, 2, -3.0, 3.0);
        let scale = uniform(&mut rng, 7, 0.7, 1.3);
        let pihat = BaseParams::new(truth.as_vector().component_mul(&scale)).expect("finite");
        if model.mass_unchecked(&q, pihat.as_vector())[(0, 0)] < 0.5 {
            continue;
        }
        checked += 1;
        let gains = random_gains(&mut rng, 7);
        let state = JointState::new(q.clone(), qdot.clone(), 1).expect("k = 1");
        let ctrl = ControllerState::new(uniform(&mut rng, 2, -3.0, 3.0), pihat.clone(), uniform(&mut rng, 1, -1.0, 1.0));
        let t = rng.random_range(0.0..20.0);
        let out = match theorem1_control(&model, t, &state, &ctrl, &gains, &reference, false) {
            Ok(out) => out,
            Err(e) => {
                return Some(PropertyResult::failed(
                    "controller-identities",
                    IDENTITY_TOLERANCE,
                    Bound::AtMost,
                    format!("law failed: {e}"),
                ))
            }
        };
        let y = eval_regressor(&model, &q, &qdot, &ctrl.xi, &out.xidot).expect("dims");
        let torque = y.apply(&pihat);
        let s = &qdot - &ctrl.xi;
        let noncollocated = torque[0] - gains.kn[0] * s[0];
        let collocated = torque[1] - gains.k[0] * s[1] - out.tau_bar[0];
        let adaptation = (&out.pihatdot + &gains.gamma * (y.as_matrix().transpose() * &s)).amax();
        let scale = 1.0 + pihat.as_vector().norm();
        worst = worst
            .max(noncollocated.abs() / scale)
            .max(collocated.abs() / scale)
            .max(adaptation / (1.0 + out.pihatdot.amax()));
    }
    Some(PropertyResult::check(
        "controller-identities",
        worst,
        Bound::AtMost,
        IDENTITY_TOLERANCE,
        format!("{checked} states: Yn pihat = Kn sn, tau = Yc pihat - K sc, pihatdot = -Gamma Y's"),
    ))
}

fn lyapunov_rate_sign(ctx: &Context) -> Option<PropertyResult> {
    let model = TwoLinkArm;
    let mut rng = ctx.rng(5);
    let reference = sinusoid(-1.0, 0.6, 0.3);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..RATE_SAMPLES {
        let state = JointState::new(uniform(&mut rng, 2, -3.0, 3.0), uniform(&mut rng, 2, -5.0, 5.0), 1)
            .expect("k = 1");
        let truth = random_params(&mut rng);
        let ctrl = ControllerState::new(
            uniform(&mut rng, 2, -5.0, 5.0),
            random_params(&mut rng),
            uniform(&mut rng, 1, -2.0, 2.0),
        );
        let gains = random_gains(&mut rng, 7);
        let t = rng.random_range(0.0..20.0);
        let rate = lyapunov_rate(&model, t, &state, &ctrl, &gains, &reference, &truth);
        worst = worst.max(rate);
    }
    Some(PropertyResult::check(
        "lyapunov-rate-sign",
        worst,
        Bound::AtMost,
        0.0,
        format!("max closed-form Vdot over {RATE_SAMPLES} random states"),
    ))
}

/// Largest `|E(t) − E(0)| / |E(0)|` along a passive, frictionless trace.
pub fn energy_drift(trace: &[TraceRecord], params: &BaseParams) -> f64 {
    let energy = |r: &TraceRecord| TwoLinkArm.total_energy(&r.q, &r.qdot, params).expect("n = 2");
    let Some(first) = trace.first() else {
        return f64::NAN;
    };
    let e0 = energy(first);
    trace
        .iter()
        .map(|r| (energy(r) - e0).abs() / e0.abs())
        .fold(0.0, f64::max)
}

fn abort_failure(name: &'static str, limit: f64, bound: Bound, run: &Run) -> Option<PropertyResult> {
    run.outcome.error.as_ref().map(|e| {
        PropertyResult::failed(name, limit, bound, format!("{} aborted: {e}", run.name))
    })
}

fn energy_conservation(ctx: &Context) -> Option<PropertyResult> {
    let name = "energy-conservation";
    let run = ctx.run("energy-frictionless")?;
    if let Some(f) = abort_failure(name, ENERGY_DRIFT_TOLERANCE, Bound::AtMost, run) {
        return Some(f);
    }
    let drift = energy_drift(&run.outcome.trace, &run.config.model.true_params);
    Some(PropertyResult::check(
        name,
        drift,
        Bound::AtMost,
        ENERGY_DRIFT_TOLERANCE,
        format!("relative drift over {} s", run.config.integration.duration),
    ))
}

fn delta_identity(ctx: &Context) -> Option<PropertyResult> {
    let mut worst = 0.0f64;
    let mut used = Vec::new();
    for run in ctx.closed_loop().filter(|r| r.config.model.unactuated > 0) {
        let rep = delta_identity_report(&run.outcome.trace, DELTA_IDENTITY_DET);
        if rep.checked > 0 {
            worst = worst.max(rep.max_abs);
            used.push(run.name.as_str());
        }
    }
    if used.is_empty() {
        return None;
    }
    Some(PropertyResult::check(
        "delta-identity",
        worst,
        Bound::AtMost,
        IDENTITY_TOLERANCE,
        format!("|pihat'delta - k| on {}", used.join(", ")),
    ))
}

/// Runs on which the floor is claimed: desingularized law with `det M̂ₙ(0) > ε`.
fn floor_runs(ctx: &Context) -> impl Iterator<Item = &Run> {
    ctx.closed_loop().filter(|r| {
        r.config.controller.law == Law::Theorem1Desingularized
            && r.outcome.trace.first().is_some_and(|f| f.det_mn_hat > r.config.controller.gains.epsilon)
    })
}

fn determinant_floor(ctx: &Context) -> Option<PropertyResult> {
    let name = "determinant-floor";
    let runs: Vec<&Run> = floor_runs(ctx).collect();
    if runs.is_empty() {
        return None;
    }
    let mut worst = f64::INFINITY;
    let mut detail = String::new();
    for run in runs {
        if let Some(f) = abort_failure(name, 1.0 - FLOOR_TOLERANCE, Bound::AtLeast, run) {
            return Some(f);
        }
        let eps = run.config.controller.gains.epsilon;
        let rep = determinant_floor_monitor(&run.outcome.trace, eps);
        let ratio = rep.min_det / eps;
        let _ = write!(
            detail,
            "{}: min det {:.4} at t = {:.2}, eta active {:.2} s; ",
            run.name, rep.min_det, rep.t_at_min, rep.eta_active_duration
        );
        worst = worst.min(ratio);
    }
    Some(PropertyResult::check(
        name,
        worst,
        Bound::AtLeast,
        1.0 - FLOOR_TOLERANCE,
        format!("min det / eps; {}", detail.trim_end_matches("; ")),
    ))
}

fn adversarial_plain_crossing(ctx: &Context) -> Option<PropertyResult> {
    let run = ctx.run(ADVERSARIAL_PLAIN)?;
    let eps = run.config.controller.gains.epsilon;
    let window: Vec<TraceRecord> = run
        .outcome
        .trace
        .iter()
        .filter(|r| r.t <= ADVERSARIAL_WINDOW)
        .cloned()
        .collect();
    let rep = determinant_floor_monitor(&window, eps);
    Some(PropertyResult::check(
        "adversarial-plain-crossing",
        rep.min_det,
        Bound::Below,
        eps,
        format!(
            "plain law min det over the first {ADVERSARIAL_WINDOW} s (t = {:.2}); the case is adversarial only if it crosses",
            rep.t_at_min
        ),
    ))
}

fn monotonicity(ctx: &Context) -> Option<PropertyResult> {
    let name = "lyapunov-monotonicity";
    let mut worst = f64::NEG_INFINITY;
    let mut detail = Vec::new();
    for run in ctx.closed_loop() {
        if let Some(f) = abort_failure(name, MONOTONICITY_SCALE, Bound::AtMost, run) {
            return Some(f);
        }
        let switches = crate::control::Reference::switch_times(&run.config.reference.reference);
        let rep = lyapunov_monotonicity(&run.outcome.trace, &switches, MONOTONICITY_SCALE);
        if rep.checked_steps == 0 {
            continue;
        }
        let scaled = rep.worst_increase / (rep.tolerance / MONOTONICITY_SCALE);
        worst = worst.max(scaled);
        detail.push(format!("{} {}/{}", run.name, rep.checked_steps, rep.checked_steps + rep.skipped_steps));
    }
    if detail.is_empty() {
        return None;
    }
    Some(PropertyResult::check(
        name,
        worst,
        Bound::AtMost,
        MONOTONICITY_SCALE,
        format!("max step increase / max(V(0), 1); steps checked: {}", detail.join(", ")),
    ))
}

fn max_abs_error_deg(trace: &[TraceRecord], from: f64, to: f64) -> f64 {
    trace
        .iter()
        .filter(|r| r.t >= from && r.t < to)
        .map(|r| r.e.amax().to_degrees())
        .fold(0.0, f64::max)
}

fn max_noncollocated_speed(run: &Run) -> f64 {
    let k = run.config.model.unactuated;
    run.outcome
        .trace
        .iter()
        .map(|r| r.qdot.rows(0, k).amax())
        .fold(0.0, f64::max)
}

fn sim_reproduction(ctx: &Context) -> Option<PropertyResult> {
    let name = "sim-reproduction";
    let run = ctx.run("sim")?;
    if let Some(f) = abort_failure(name, SIM_ERROR_DEG, Bound::Below, run) {
        return Some(f);
    }
    let trace = &run.outcome.trace;
    let before = max_abs_error_deg(trace, 36.0, 46.0);
    let after = max_abs_error_deg(trace, 76.0, 90.0 + 1e-9);
    let torque = trace.iter().map(|r| r.tau_bar.amax()).fold(0.0, f64::max);
    let speed = max_noncollocated_speed(run);
    let mut result = PropertyResult::check(
        name,
        before.max(after),
        Bound::Below,
        SIM_ERROR_DEG,
        format!(
            "max |e| {before:.4} deg on [36, 46), {after:.4} deg on [76, 90]; max |tau| {torque:.3} N m; max |qdot_n| {speed:.3} rad/s"
        ),
    );
    if !(torque.is_finite() && torque < SIM_TORQUE_LIMIT && speed < SPEED_BOUND) {
        result.passed = false;
    }
    Some(result)
}

fn velocity_bound(ctx: &Context) -> Option<PropertyResult> {
    let name = "velocity-bound";
    let runs: Vec<&Run> = ctx.closed_loop().filter(|r| r.config.model.unactuated > 0).collect();
    if runs.is_empty() {
        return None;
    }
    let mut worst = 0.0f64;
    for run in runs {
        if let Some(f) = abort_failure(name, SPEED_BOUND, Bound::Below, run) {
            return Some(f);
        }
        worst = worst.max(max_noncollocated_speed(run));
    }
    Some(PropertyResult::check(
        name,
        worst,
        Bound::Below,
        SPEED_BOUND,
        "max |qdot_n| over closed-loop runs".into(),
    ))
}

fn convergence(ctx: &Context) -> Option<PropertyResult> {
    let name = "convergence";
    let runs: Vec<&Run> = ctx.closed_loop().filter(|r| r.converges).collect();
    if runs.is_empty() {
        return None;
    }
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for run in runs {
        if let Some(f) = abort_failure(name, CONVERGENCE_RATIO, Bound::AtMost, run) {
            return Some(f);
        }
        let ratio = crate::monitor::convergence_ratio(&run.outcome.trace);
        worst = if ratio.is_nan() { f64::NAN } else { worst.max(ratio) };
        detail.push(format!("{} {ratio:.4}", run.name));
    }
    Some(PropertyResult::check(
        name,
        worst,
        Bound::AtMost,
        CONVERGENCE_RATIO,
        format!("RMS |e| last 10% / first 10%: {}", detail.join(", ")),
    ))
}

fn lemma1_tracking(ctx: &Context) -> Option<PropertyResult> {
    let name = "lemma1-tracking";
    let run = ctx.run("lemma1-baseline")?;
    if let Some(f) = abort_failure(name, BASELINE_ERROR_DEG, Bound::Below, run) {
        return Some(f);
    }
    let worst = run
        .outcome
        .trace
        .iter()
        .filter(|r| r.t > BASELINE_SETTLE)
        .map(|r| r.e.amax().to_degrees())
        .fold(0.0, f64::max);
    Some(PropertyResult::check(
        name,
        worst,
        Bound::Below,
        BASELINE_ERROR_DEG,
        format!("max |e| (deg) after t = {BASELINE_SETTLE} s"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_properties_pass() {
        let report = verify(&VerifyOptions {
            filter: Some("identit".into()),
            samples: 200,
            ..Default::default()
        });
        let names: Vec<_> = report.results.iter().map(|r| r.name).collect();
        assert!(names.contains(&"regressor-identity"), "{names:?}");
        assert!(names.contains(&"controller-identities"), "{names:?}");
        for r in report.results.iter().filter(|r| r.name != "delta-identity") {
            assert!(r.passed, "{}", report.text());
        }
    }

    #[test]
    fn rk4_order_is_four() {
        let order = rk4_empirical_order();
        assert!(order > 3.9 && order < 4.2, "{order}");
    }

    #[test]
    fn margin_sign_follows_bound() {
        let r = PropertyResult::check("x", 2.0, Bound::AtLeast, 1.0, String::new());
        assert!(r.passed && r.margin() > 0.0);
        let r = PropertyResult::check("x", 2.0, Bound::AtMost, 1.0, String::new());
        assert!(!r.passed && r.margin() < 0.0);
        let r = PropertyResult::check("x", 1.0, Bound::Below, 1.0, String::new());
        assert!(!r.passed);
    }

    #[test]
    fn every_property_name_is_unique() {
        let names = property_names();
        for (i, a) in names.iter().enumerate() {
            assert!(!names[i + 1..].contains(a), "{a}");
        }
    }
}
