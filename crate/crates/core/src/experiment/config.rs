//! Scenario configuration files.
//!
//! Configs are TOML documents with the blocks `[model]`, `[controller]`,
//! `[reference]`, `[initial]`, `[integration]` and an optional `[output]`.
//! Angle keys carry their unit as a suffix (`q_deg`, `q_rad`); angles are
//! stored in radians after parsing. See `docs/config.md` for the full schema.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use super::reference::{PiecewiseReference, Segment, SegmentShape};
use crate::control::{Controller, ControllerState, Gains, Mutation};
use crate::model::{BaseParams, JointState, LinkGeometry, MechanicalModel, TwoLinkArm};
use crate::plant::SimState;

/// Default trace decimation: one record every 10 steps.
pub const DEFAULT_DECIMATION: usize = 10;

const GEOMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: `{key}`: {message}")]
    Invalid {
        line: usize,
        key: String,
        message: String,
    },
}

impl ConfigError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Io { .. } => None,
            ConfigError::Syntax { line, .. } | ConfigError::Invalid { line, .. } => Some(*line),
        }
    }
}

/// Which control law a scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    /// Zero torque; used for the unforced energy check.
    Passive,
    Lemma1,
    Theorem1,
    Theorem1Desingularized,
}

impl Law {
    pub fn as_str(self) -> &'static str {
        match self {
            Law::Passive => "passive",
            Law::Lemma1 => "lemma1",
            Law::Theorem1 => "theorem1",
            Law::Theorem1Desingularized => "theorem1-desingularized",
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Law {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "passive" => Ok(Law::Passive),
            "lemma1" => Ok(Law::Lemma1),
            "theorem1" => Ok(Law::Theorem1),
            "theorem1-desingularized" => Ok(Law::Theorem1Desingularized),
            other => Err(format!(
                "unknown law `{other}` (expected passive, lemma1, theorem1 or theorem1-desingularized)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    ConstantPiecewise,
    SinusoidPiecewise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub p: usize,
    /// Number of unactuated joints; they come first in `q`.
    pub unactuated: usize,
    pub gravity: bool,
    pub true_params: BaseParams,
    pub geometry: Option<LinkGeometry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub law: Law,
    pub gains: Gains,
    pub pihat0: BaseParams,
    pub xi0: DVector<f64>,
    /// Offset of the integral state: `y(0) = −β`.
    pub beta: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceConfig {
    pub kind: ReferenceKind,
    pub reference: PiecewiseReference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationConfig {
    pub duration: f64,
    pub step: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub trace: Option<PathBuf>,
    pub decimation: usize,
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub description: Option<String>,
    pub model: ModelConfig,
    pub controller: ControllerConfig,
    pub reference: ReferenceConfig,
    pub initial: InitialConfig,
    pub integration: IntegrationConfig,
    pub output: OutputConfig,
}

impl ScenarioConfig {
    /// The configured law, optionally with a deliberate fault injected.
    pub fn controller(&self, mutation: Mutation) -> Controller {
        let gains = self.controller.gains.clone();
        match self.controller.law {
            Law::Passive => Controller::Passive,
            Law::Lemma1 => Controller::Lemma1 { gains, mutation },
            Law::Theorem1 => Controller::Theorem1 {
                gains,
                desingularized: false,
                mutation,
            },
            Law::Theorem1Desingularized => Controller::Theorem1 {
                gains,
                desingularized: true,
                mutation,
            },
        }
    }

    pub fn initial_state(&self) -> SimState {
        let plant = JointState::new(
            self.initial.q.clone(),
            self.initial.qdot.clone(),
            self.model.unactuated,
        )
        .expect("validated dimensions");
        SimState {
            t: 0.0,
            plant,
            controller: ControllerState::new(
                self.controller.xi0.clone(),
                self.controller.pihat0.clone(),
                -&self.controller.beta,
            ),
        }
    }
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    Validator { text }.config(raw)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Spanned<RawModel>,
    controller: Spanned<RawController>,
    reference: Spanned<RawReference>,
    initial: Spanned<RawInitial>,
    integration: Spanned<RawIntegration>,
    output: Option<RawOutput>,
    name: Option<String>,
    description: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    p: Spanned<usize>,
    unactuated_joints: Spanned<usize>,
    gravity: Option<bool>,
    true_params: Option<Spanned<Vec<f64>>>,
    geometry: Option<Spanned<RawGeometry>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    m1: f64,
    l1: f64,
    lc1: f64,
    i1: f64,
    m2: f64,
    lc2: f64,
    i2: f64,
    fv1: f64,
    fv2: f64,
    g0: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GammaSpec {
    Scalar(f64),
    Diagonal(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawController {
    law: Spanned<String>,
    lambda1: Spanned<Vec<f64>>,
    lambda2: Spanned<Vec<f64>>,
    k: Spanned<Vec<f64>>,
    kn: Option<Spanned<Vec<f64>>>,
    gamma: Spanned<GammaSpec>,
    epsilon: Spanned<f64>,
    pihat0: Spanned<Vec<f64>>,
    pihat0_select: Option<Spanned<Vec<usize>>>,
    xi0: Option<Spanned<Vec<f64>>>,
    beta: Option<Spanned<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReference {
    #[serde(rename = "type")]
    kind: Spanned<String>,
    segments: Spanned<Vec<Spanned<RawSegment>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    start: Spanned<f64>,
    value_deg: Option<Spanned<Vec<f64>>>,
    value_rad: Option<Spanned<Vec<f64>>>,
    offset_deg: Option<Spanned<Vec<f64>>>,
    offset_rad: Option<Spanned<Vec<f64>>>,
    amplitude_deg: Option<Spanned<Vec<f64>>>,
    amplitude_rad: Option<Spanned<Vec<f64>>>,
    frequency: Option<Spanned<Vec<f64>>>,
    phase_deg: Option<Spanned<Vec<f64>>>,
    phase_rad: Option<Spanned<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    q_deg: Option<Spanned<Vec<f64>>>,
    q_rad: Option<Spanned<Vec<f64>>>,
    qdot_deg: Option<Spanned<Vec<f64>>>,
    qdot_rad: Option<Spanned<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegration {
    duration: Spanned<f64>,
    step: Spanned<f64>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    trace: Option<String>,
    decimation: Option<Spanned<usize>>,
}

struct Validator<'a> {
    text: &'a str,
}

impl Validator<'_> {
    fn err(&self, span: Range<usize>, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            line: line_of(self.text, span.start),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn finite(&self, v: &Spanned<Vec<f64>>, key: &str) -> Result<DVector<f64>, ConfigError> {
        if let Some(bad) = v.get_ref().iter().find(|x| !x.is_finite()) {
            return Err(self.err(v.span(), key, format!("entry {bad} is not finite")));
        }
        Ok(DVector::from_column_slice(v.get_ref()))
    }

    fn sized(&self, v: &Spanned<Vec<f64>>, key: &str, len: usize) -> Result<DVector<f64>, ConfigError> {
        let out = self.finite(v, key)?;
        if out.len() != len {
            return Err(self.err(
                v.span(),
                key,
                format!("expected {len} entries, found {}", out.len()),
            ));
        }
        Ok(out)
    }

    fn positive(&self, v: &Spanned<Vec<f64>>, key: &str, len: usize) -> Result<DVector<f64>, ConfigError> {
        let out = self.sized(v, key, len)?;
        if let Some(bad) = out.iter().find(|x| **x <= 0.0) {
            return Err(self.err(v.span(), key, format!("gain entry {bad} must be positive")));
        }
        Ok(out)
    }

    /// Reads an angle given under a `_deg` or a `_rad` key, converting to radians.
    fn angle(
        &self,
        deg: &Option<Spanned<Vec<f64>>>,
        rad: &Option<Spanned<Vec<f64>>>,
        key: &str,
        len: usize,
    ) -> Result<Option<DVector<f64>>, ConfigError> {
        match (deg, rad) {
            (Some(d), Some(_)) => Err(self.err(
                d.span(),
                key,
                format!("give either `{key}_deg` or `{key}_rad`, not both"),
            )),
            (Some(d), None) => Ok(Some(self.sized(d, &format!("{key}_deg"), len)?.map(f64::to_radians))),
            (None, Some(r)) => Ok(Some(self.sized(r, &format!("{key}_rad"), len)?)),
            (None, None) => Ok(None),
        }
    }

    fn required_angle(
        &self,
        deg: &Option<Spanned<Vec<f64>>>,
        rad: &Option<Spanned<Vec<f64>>>,
        key: &str,
        len: usize,
        outer: Range<usize>,
    ) -> Result<DVector<f64>, ConfigError> {
        self.angle(deg, rad, key, len)?.ok_or_else(|| {
            self.err(outer, key, format!("missing `{key}_deg` or `{key}_rad`"))
        })
    }

    fn config(&self, raw: RawConfig) -> Result<ScenarioConfig, ConfigError> {
        let model = self.model(&raw.model)?;
        let controller = self.controller(&raw.controller, &model)?;
        let reference = self.reference(&raw.reference, model_m(&model))?;
        let initial = self.initial(&raw.initial)?;
        let integration = self.integration(&raw.integration)?;
        let output = self.output(raw.output)?;
        Ok(ScenarioConfig {
            name: raw.name,
            description: raw.description,
            model,
            controller,
            reference,
            initial,
            integration,
            output,
        })
    }

    fn model(&self, raw: &Spanned<RawModel>) -> Result<ModelConfig, ConfigError> {
        let span = raw.span();
        let raw = raw.get_ref();
        let arm = TwoLinkArm;
        let p = *raw.p.get_ref();
        if p != arm.param_count() {
            return Err(self.err(
                raw.p.span(),
                "model.p",
                format!("the two-link arm has {} base parameters, not {p}", arm.param_count()),
            ));
        }
        let k = *raw.unactuated_joints.get_ref();
        if k > arm.dof() {
            return Err(self.err(
                raw.unactuated_joints.span(),
                "model.unactuated_joints",
                format!("at most {} joints", arm.dof()),
            ));
        }
        let gravity = raw.gravity.unwrap_or(true);
        let geometry = raw.geometry.as_ref().map(|g| {
            let v = g.get_ref();
            LinkGeometry {
                m1: v.m1,
                l1: v.l1,
                lc1: v.lc1,
                i1: v.i1,
                m2: v.m2,
                lc2: v.lc2,
                i2: v.i2,
                fv1: v.fv1,
                fv2: v.fv2,
                g0: if gravity { v.g0 } else { 0.0 },
            }
        });
        let explicit = match &raw.true_params {
            Some(v) => {
                let mut params = self.sized(v, "model.true_params", p)?;
                if !gravity {
                    params[3] = 0.0;
                    params[4] = 0.0;
                }
                Some((params, v.span()))
            }
            None => None,
        };
        let true_params = match (explicit, geometry) {
            (Some((params, span)), Some(geom)) => {
                let derived = geom.base_params().into_vector();
                let gap = (&params - &derived).amax();
                if gap > GEOMETRY_TOLERANCE * derived.amax().max(1.0) {
                    return Err(self.err(
                        span,
                        "model.true_params",
                        format!("disagrees with model.geometry by {gap:e}"),
                    ));
                }
                params
            }
            (Some((params, _)), None) => params,
            (None, Some(geom)) => geom.base_params().into_vector(),
            (None, None) => {
                return Err(self.err(span, "model", "needs `true_params` or a `geometry` table"));
            }
        };
        Ok(ModelConfig {
            p,
            unactuated: k,
            gravity,
            true_params: BaseParams::new(true_params).expect("finite, non-empty"),
            geometry,
        })
    }

    fn controller(&self, raw: &Spanned<RawController>, model: &ModelConfig) -> Result<ControllerConfig, ConfigError> {
        let raw = raw.get_ref();
        let (k, m, p) = (model.unactuated, model_m(model), model.p);
        let law: Law = raw
            .law
            .get_ref()
            .parse()
            .map_err(|msg: String| self.err(raw.law.span(), "controller.law", msg))?;
        match law {
            Law::Lemma1 if k != 0 => {
                return Err(self.err(
                    raw.law.span(),
                    "controller.law",
                    format!("lemma1 needs every joint actuated, model has {k} unactuated"),
                ))
            }
            Law::Theorem1 | Law::Theorem1Desingularized if k == 0 => {
                return Err(self.err(
                    raw.law.span(),
                    "controller.law",
                    "the collocated law needs at least one unactuated joint",
                ))
            }
            _ => {}
        }
        let lambda1 = self.positive(&raw.lambda1, "controller.lambda1", m)?;
        let lambda2 = self.positive(&raw.lambda2, "controller.lambda2", m)?;
        let kgain = self.positive(&raw.k, "controller.k", m)?;
        let kn = match &raw.kn {
            Some(v) => self.positive(v, "controller.kn", k)?,
            None if k == 0 => DVector::zeros(0),
            None => {
                return Err(self.err(
                    raw.law.span(),
                    "controller.kn",
                    format!("missing; needs {k} entries"),
                ))
            }
        };
        let gamma = match raw.gamma.get_ref() {
            GammaSpec::Scalar(g) => {
                if !(g.is_finite() && *g > 0.0) {
                    return Err(self.err(raw.gamma.span(), "controller.gamma", format!("gain {g} must be positive")));
                }
                DMatrix::identity(p, p) * *g
            }
            GammaSpec::Diagonal(d) => {
                let spanned = Spanned::new(raw.gamma.span(), d.clone());
                DMatrix::from_diagonal(&self.positive(&spanned, "controller.gamma", p)?)
            }
        };
        let epsilon = *raw.epsilon.get_ref();
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(self.err(
                raw.epsilon.span(),
                "controller.epsilon",
                format!("threshold {epsilon} must be positive"),
            ));
        }
        let gains = Gains::new(kgain, kn, lambda1, lambda2, gamma, epsilon)
            .map_err(|e| self.err(raw.k.span(), "controller", e.to_string()))?;

        let listed = self.finite(&raw.pihat0, "controller.pihat0")?;
        let pihat0 = match &raw.pihat0_select {
            Some(sel) => {
                let idx = sel.get_ref();
                if idx.len() != p {
                    return Err(self.err(
                        sel.span(),
                        "controller.pihat0_select",
                        format!("expected {p} indices, found {}", idx.len()),
                    ));
                }
                if let Some(bad) = idx.iter().find(|&&i| i >= listed.len()) {
                    return Err(self.err(
                        sel.span(),
                        "controller.pihat0_select",
                        format!("index {bad} is out of range for {} listed values", listed.len()),
                    ));
                }
                DVector::from_iterator(p, idx.iter().map(|&i| listed[i]))
            }
            None if listed.len() == p => listed,
            None => {
                return Err(self.err(
                    raw.pihat0.span(),
                    "controller.pihat0",
                    format!(
                        "expected {p} entries, found {}; add `pihat0_select` to pick {p} of them",
                        listed.len()
                    ),
                ))
            }
        };
        let n = k + m;
        let xi0 = match &raw.xi0 {
            Some(v) => self.sized(v, "controller.xi0", n)?,
            None => DVector::zeros(n),
        };
        let beta = match &raw.beta {
            Some(v) => self.sized(v, "controller.beta", m)?,
            None => DVector::zeros(m),
        };
        Ok(ControllerConfig {
            law,
            gains,
            pihat0: BaseParams::new(pihat0).expect("finite, non-empty"),
            xi0,
            beta,
        })
    }

    fn reference(&self, raw: &Spanned<RawReference>, m: usize) -> Result<ReferenceConfig, ConfigError> {
        let raw = raw.get_ref();
        let kind = match raw.kind.get_ref().as_str() {
            "constant-piecewise" => ReferenceKind::ConstantPiecewise,
            "sinusoid-piecewise" => ReferenceKind::SinusoidPiecewise,
            other => {
                return Err(self.err(
                    raw.kind.span(),
                    "reference.type",
                    format!("unknown type `{other}` (expected constant-piecewise or sinusoid-piecewise)"),
                ))
            }
        };
        let segments = raw.segments.get_ref();
        if segments.is_empty() {
            return Err(self.err(raw.segments.span(), "reference.segments", "needs at least one segment"));
        }
        let mut out = Vec::with_capacity(segments.len());
        let mut previous: Option<f64> = None;
        for (i, seg) in segments.iter().enumerate() {
            let span = seg.span();
            let seg = seg.get_ref();
            let start = *seg.start.get_ref();
            let key = format!("reference.segments[{i}]");
            if !start.is_finite() || (i == 0 && start != 0.0) {
                return Err(self.err(seg.start.span(), &format!("{key}.start"), "first segment must start at 0"));
            }
            if let Some(prev) = previous {
                if !(start > prev) {
                    return Err(self.err(
                        seg.start.span(),
                        &format!("{key}.start"),
                        format!("switch times must be strictly increasing ({start} after {prev})"),
                    ));
                }
            }
            previous = Some(start);
            let shape = match kind {
                ReferenceKind::ConstantPiecewise => {
                    let value = self.required_angle(&seg.value_deg, &seg.value_rad, &format!("{key}.value"), m, span.clone())?;
                    let stray = [&seg.offset_deg, &seg.offset_rad, &seg.amplitude_deg, &seg.amplitude_rad, &seg.frequency, &seg.phase_deg, &seg.phase_rad];
                    if stray.iter().any(|v| v.is_some()) {
                        return Err(self.err(span, &key, "constant segments only take `value_deg` or `value_rad`"));
                    }
                    SegmentShape::Constant { value }
                }
                ReferenceKind::SinusoidPiecewise => {
                    if seg.value_deg.is_some() || seg.value_rad.is_some() {
                        return Err(self.err(span, &key, "sinusoid segments take offset, amplitude, frequency and phase"));
                    }
                    let offset = self.required_angle(&seg.offset_deg, &seg.offset_rad, &format!("{key}.offset"), m, span.clone())?;
                    let amplitude = self.required_angle(&seg.amplitude_deg, &seg.amplitude_rad, &format!("{key}.amplitude"), m, span.clone())?;
                    let frequency = match &seg.frequency {
                        Some(f) => self.sized(f, &format!("{key}.frequency"), m)?,
                        None => return Err(self.err(span, &format!("{key}.frequency"), "missing")),
                    };
                    let phase = self
                        .angle(&seg.phase_deg, &seg.phase_rad, &format!("{key}.phase"), m)?
                        .unwrap_or_else(|| DVector::zeros(m));
                    SegmentShape::Sinusoid {
                        offset,
                        amplitude,
                        frequency,
                        phase,
                    }
                }
            };
            out.push(Segment { start, shape });
        }
        let reference = PiecewiseReference::new(out)
            .map_err(|msg| self.err(raw.segments.span(), "reference.segments", msg))?;
        Ok(ReferenceConfig { kind, reference })
    }

    fn initial(&self, raw: &Spanned<RawInitial>) -> Result<InitialConfig, ConfigError> {
        let span = raw.span();
        let raw = raw.get_ref();
        let n = TwoLinkArm.dof();
        let q = self.required_angle(&raw.q_deg, &raw.q_rad, "initial.q", n, span.clone())?;
        let qdot = self
            .angle(&raw.qdot_deg, &raw.qdot_rad, "initial.qdot", n)?
            .unwrap_or_else(|| DVector::zeros(n));
        Ok(InitialConfig { q, qdot })
    }

    fn integration(&self, raw: &Spanned<RawIntegration>) -> Result<IntegrationConfig, ConfigError> {
        let raw = raw.get_ref();
        let duration = *raw.duration.get_ref();
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(self.err(
                raw.duration.span(),
                "integration.duration",
                format!("{duration} is not a non-negative time"),
            ));
        }
        let step = *raw.step.get_ref();
        if !(step.is_finite() && step > 0.0) {
            return Err(self.err(raw.step.span(), "integration.step", format!("{step} must be positive")));
        }
        Ok(IntegrationConfig {
            duration,
            step,
            seed: raw.seed.unwrap_or(0),
        })
    }

    fn output(&self, raw: Option<RawOutput>) -> Result<OutputConfig, ConfigError> {
        let Some(raw) = raw else {
            return Ok(OutputConfig {
                trace: None,
                decimation: DEFAULT_DECIMATION,
            });
        };
        let decimation = match raw.decimation {
            Some(d) if *d.get_ref() == 0 => {
                return Err(self.err(d.span(), "output.decimation", "must be at least 1"))
            }
            Some(d) => d.into_inner(),
            None => DEFAULT_DECIMATION,
        };
        Ok(OutputConfig {
            trace: raw.trace.map(PathBuf::from),
            decimation,
        })
    }
}

fn model_m(model: &ModelConfig) -> usize {
    TwoLinkArm.dof() - model.unactuated
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Reference;

    const MINIMAL: &str = r#"
[model]
p = 7
unactuated_joints = 1
true_params = [4.9, 0.85, 1.5, 4.0, 1.5, 0.5, 0.2]

[controller]
law = "theorem1-desingularized"
lambda1 = [5.0]
lambda2 = [1.0]
k = [0.1]
kn = [0.1]
gamma = 0.1
epsilon = 5.0
pihat0 = [5.4, 0.9, 1.4, 3.5, 1.3, 0.4, 0.15]

[reference]
type = "constant-piecewise"
[[reference.segments]]
start = 0.0
value_deg = [-60.0]
[[reference.segments]]
start = 46.0
value_deg = [-12.0]

[initial]
q_deg = [0.0, -60.0]

[integration]
duration = 90.0
step = 1e-3
"#;

    fn with(replace: &str, by: &str) -> String {
        assert!(MINIMAL.contains(replace), "{replace}");
        MINIMAL.replacen(replace, by, 1)
    }

    #[test]
    fn parses_minimal_config() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.controller.law, Law::Theorem1Desingularized);
        assert_eq!(cfg.model.unactuated, 1);
        assert_eq!(cfg.output.decimation, DEFAULT_DECIMATION);
        assert_eq!(cfg.integration.seed, 0);
        assert_eq!(cfg.controller.gains.gamma, DMatrix::identity(7, 7) * 0.1);
        assert!((cfg.initial.q[1] - (-60f64).to_radians()).abs() < 1e-15);
        assert_eq!(cfg.reference.reference.switch_times(), vec![46.0]);
        let state = cfg.initial_state();
        assert_eq!(state.controller.y.len(), 1);
        assert_eq!(state.plant.k(), 1);
    }

    #[test]
    fn empty_file_names_first_missing_key() {
        let err = parse_config_str("").unwrap_err();
        assert!(err.to_string().contains("`model`"), "{err}");
    }

    #[test]
    fn negative_gain_is_reported_with_its_line() {
        let text = with("k = [0.1]", "k = [-0.1]");
        let err = parse_config_str(&text).unwrap_err();
        let line = text.lines().position(|l| l.starts_with("k = ")).unwrap() + 1;
        assert_eq!(err.line(), Some(line), "{err}");
        assert!(err.to_string().contains("positive"), "{err}");
    }

    #[test]
    fn unordered_segments_are_rejected() {
        let text = with("start = 46.0", "start = 0.0");
        let err = parse_config_str(&text).unwrap_err();
        assert!(err.to_string().contains("strictly increasing"), "{err}");
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = parse_config_str(&with("lambda1 = [5.0]", "lambda1 = [5.0, 5.0]")).unwrap_err();
        assert!(err.to_string().contains("expected 1 entries"), "{err}");
        let err = parse_config_str(&with("p = 7", "p = 8")).unwrap_err();
        assert!(err.to_string().contains("model.p"), "{err}");
    }

    #[test]
    fn pihat_selection_picks_listed_values() {
        let text = with(
            "pihat0 = [5.4, 0.9, 1.4, 3.5, 1.3, 0.4, 0.15]",
            "pihat0 = [1.5, -0.11, 0.01, 2, -0.24, 0.08, 0.05, 0.05]\npihat0_select = [0, 1, 2, 3, 4, 6, 7]",
        );
        let cfg = parse_config_str(&text).unwrap();
        assert_eq!(
            cfg.controller.pihat0.as_vector().as_slice(),
            &[1.5, -0.11, 0.01, 2.0, -0.24, 0.05, 0.05]
        );
        let err = parse_config_str(&with(
            "pihat0 = [5.4, 0.9, 1.4, 3.5, 1.3, 0.4, 0.15]",
            "pihat0 = [1.5, -0.11, 0.01, 2, -0.24, 0.08, 0.05, 0.05]",
        ))
        .unwrap_err();
        assert!(err.to_string().contains("pihat0_select"), "{err}");
    }

    #[test]
    fn angle_units_are_exclusive() {
        let err = parse_config_str(&with("q_deg = [0.0, -60.0]", "q_deg = [0.0, -60.0]\nq_rad = [0.0, 1.0]"))
            .unwrap_err();
        assert!(err.to_string().contains("not both"), "{err}");
        let cfg = parse_config_str(&with("q_deg = [0.0, -60.0]", "q_rad = [0.0, 1.0]")).unwrap();
        assert_eq!(cfg.initial.q[1], 1.0);
    }

    #[test]
    fn law_must_match_actuation() {
        let err = parse_config_str(&with("law = \"theorem1-desingularized\"", "law = \"lemma1\"")).unwrap_err();
        assert!(err.to_string().contains("lemma1"), "{err}");
        let err = parse_config_str(&with("law = \"theorem1-desingularized\"", "law = \"pid\"")).unwrap_err();
        assert!(err.to_string().contains("unknown law"), "{err}");
    }

    #[test]
    fn geometry_must_agree_with_parameters() {
        let geom = "\n[model.geometry]\nm1 = 2.0\nl1 = 1.0\nlc1 = 0.5\ni1 = 0.55\nm2 = 3.0\nlc2 = 0.5\ni2 = 0.1\nfv1 = 0.5\nfv2 = 0.2\ng0 = 1.0\n";
        let text = with("true_params = [4.9, 0.85, 1.5, 4.0, 1.5, 0.5, 0.2]\n", &format!("true_params = [4.9, 0.85, 1.5, 4.0, 1.5, 0.5, 0.2]\n{geom}"));
        assert!(parse_config_str(&text).unwrap().model.geometry.is_some());
        let text = with("true_params = [4.9, 0.85, 1.5, 4.0, 1.5, 0.5, 0.2]\n", &format!("true_params = [4.8, 0.85, 1.5, 4.0, 1.5, 0.5, 0.2]\n{geom}"));
        assert!(parse_config_str(&text).is_err());
        let text = with("true_params = [4.9, 0.85, 1.5, 4.0, 1.5, 0.5, 0.2]\n", &format!("gravity = false\n{geom}"));
        let cfg = parse_config_str(&text).unwrap();
        assert_eq!(cfg.model.true_params.as_vector()[3], 0.0);
    }

    #[test]
    fn zero_duration_is_allowed_but_negative_is_not() {
        assert!(parse_config_str(&with("duration = 90.0", "duration = 0.0")).is_ok());
        assert!(parse_config_str(&with("duration = 90.0", "duration = -1.0")).is_err());
        assert!(parse_config_str(&with("step = 1e-3", "step = 0.0")).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config_str(&with("epsilon = 5.0", "epsilon = 5.0\nepsilom = 5.0")).unwrap_err();
        assert!(err.line().is_some(), "{err}");
    }
}
