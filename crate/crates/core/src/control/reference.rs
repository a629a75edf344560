use nalgebra::DVector;

/// `r(t)`, `ṙ(t)`, `r̈(t)` for the collocated coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSample {
    pub r: DVector<f64>,
    pub rdot: DVector<f64>,
    pub rddot: DVector<f64>,
}

/// A bounded reference trajectory with bounded first and second derivatives.
pub trait Reference: Send + Sync {
    /// Number of tracked coordinates (`m`).
    fn dim(&self) -> usize;

    fn sample(&self, t: f64) -> ReferenceSample;

    /// Instants where `r`, `ṙ` or `r̈` may be discontinuous.
    fn switch_times(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Constant set point.
#[derive(Debug, Clone, PartialEq)]
pub struct SetPoint(pub DVector<f64>);

impl Reference for SetPoint {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn sample(&self, _t: f64) -> ReferenceSample {
        let zero = DVector::zeros(self.0.len());
        ReferenceSample {
            r: self.0.clone(),
            rdot: zero.clone(),
            rddot: zero,
        }
    }
}
