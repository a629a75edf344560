//! Piecewise reference trajectories.

use std::f64::consts::TAU;

use nalgebra::DVector;

use crate::control::{Reference, ReferenceSample};

/// Shape of one reference segment. Angles are in radians, time is absolute.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentShape {
    Constant {
        value: DVector<f64>,
    },
    /// `offset + amplitude · sin(2π·frequency·t + phase)`, element-wise.
    Sinusoid {
        offset: DVector<f64>,
        amplitude: DVector<f64>,
        frequency: DVector<f64>,
        phase: DVector<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub shape: SegmentShape,
}

/// Right-continuous piecewise reference; the last segment extends forever.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseReference {
    dim: usize,
    segments: Vec<Segment>,
}

impl PiecewiseReference {
    /// Segments must be non-empty, start at 0, have strictly increasing start
    /// times and share one dimension.
    pub fn new(segments: Vec<Segment>) -> Result<Self, String> {
        let first = segments.first().ok_or("reference needs at least one segment")?;
        if first.start != 0.0 {
            return Err(format!("first segment must start at t = 0, got {}", first.start));
        }
        let dim = first.shape.dim();
        for (i, pair) in segments.windows(2).enumerate() {
            if !(pair[1].start > pair[0].start) {
                return Err(format!(
                    "segment {} starts at {} which is not after {}",
                    i + 1,
                    pair[1].start,
                    pair[0].start
                ));
            }
        }
        for (i, seg) in segments.iter().enumerate() {
            if !seg.shape.consistent() || seg.shape.dim() != dim {
                return Err(format!("segment {i} has inconsistent dimensions"));
            }
        }
        Ok(Self { dim, segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn active(&self, t: f64) -> &Segment {
        let idx = self.segments.partition_point(|s| s.start <= t);
        &self.segments[idx.saturating_sub(1)]
    }
}

impl SegmentShape {
    fn dim(&self) -> usize {
        match self {
            SegmentShape::Constant { value } => value.len(),
            SegmentShape::Sinusoid { offset, .. } => offset.len(),
        }
    }

    fn consistent(&self) -> bool {
        match self {
            SegmentShape::Constant { .. } => true,
            SegmentShape::Sinusoid {
                offset,
                amplitude,
                frequency,
                phase,
            } => {
                let n = offset.len();
                amplitude.len() == n && frequency.len() == n && phase.len() == n
            }
        }
    }

    fn sample(&self, t: f64) -> ReferenceSample {
        match self {
            SegmentShape::Constant { value } => ReferenceSample {
                r: value.clone(),
                rdot: DVector::zeros(value.len()),
                rddot: DVector::zeros(value.len()),
            },
            SegmentShape::Sinusoid {
                offset,
                amplitude,
                frequency,
                phase,
            } => {
                let n = offset.len();
                let mut r = offset.clone();
                let mut rdot = DVector::zeros(n);
                let mut rddot = DVector::zeros(n);
                for i in 0..n {
                    let w = TAU * frequency[i];
                    let (sin, cos) = (w * t + phase[i]).sin_cos();
                    r[i] += amplitude[i] * sin;
                    rdot[i] = amplitude[i] * w * cos;
                    rddot[i] = -amplitude[i] * w * w * sin;
                }
                ReferenceSample { r, rdot, rddot }
            }
        }
    }
}

impl Reference for PiecewiseReference {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, t: f64) -> ReferenceSample {
        self.active(t).shape.sample(t)
    }

    fn switch_times(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }
}
