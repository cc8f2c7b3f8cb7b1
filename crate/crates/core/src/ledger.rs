//! Append-only store of paid evaluations, shared by every phase.

use std::fmt;

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    EcNoise,
    BurnIn,
    Astars,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::EcNoise => write!(f, "ecnoise"),
            Phase::BurnIn => write!(f, "burnin"),
            Phase::Astars => write!(f, "astars"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub point: DVector<f64>,
    pub value: f64,
    pub phase: Phase,
}

#[derive(Clone, Debug, Default)]
pub struct SampleLedger {
    entries: Vec<Sample>,
    rejected: u64,
}

impl SampleLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one evaluation. Non-finite values are counted as rejected
    /// and reported as [`Error::NonFinite`].
    pub fn record(&mut self, point: &DVector<f64>, value: f64, phase: Phase) -> Result<()> {
        if point.iter().any(|c| !c.is_finite()) {
            self.rejected += 1;
            return Err(Error::InvalidArgument("sample point has non-finite coordinates".into()));
        }
        if !value.is_finite() {
            self.rejected += 1;
            return Err(Error::NonFinite(value));
        }
        self.entries.push(Sample {
            point: point.clone(),
            value,
            phase,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Evaluations that were paid for but not stored.
    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn entries(&self) -> &[Sample] {
        &self.entries
    }

    pub fn count_phase(&self, phase: Phase) -> usize {
        self.entries.iter().filter(|s| s.phase == phase).count()
    }

    /// Sample with the lowest observed value.
    pub fn best(&self) -> Option<&Sample> {
        self.entries
            .iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
    }

    pub fn points(&self) -> Vec<DVector<f64>> {
        self.entries.iter().map(|s| s.point.clone()).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|s| s.value).collect()
    }
}
