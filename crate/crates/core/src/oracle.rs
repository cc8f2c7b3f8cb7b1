//! Noisy black-box objectives.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::rng::RngStream;

/// Default support bound `a` for multiplicative noise draws.
pub const DEFAULT_SUPPORT_BOUND: f64 = 0.9;

/// A deterministic signal `f: R^P -> R`.
///
/// Implementations may fail (an external process that cannot be spawned),
/// but a returned non-finite value is data, not an error: the optimizers
/// treat it as a divergence signal.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> Result<f64>;
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&DVector<f64>) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&DVector<f64>) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok((self.f)(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Additive,
    Multiplicative,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseKind::Additive => write!(f, "additive"),
            NoiseKind::Multiplicative => write!(f, "multiplicative"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    kind: NoiseKind,
    sigma2: f64,
    support_bound: f64,
}

impl NoiseModel {
    pub fn additive(sigma2: f64) -> Result<Self> {
        Self::new(NoiseKind::Additive, sigma2, DEFAULT_SUPPORT_BOUND)
    }

    pub fn multiplicative(sigma2: f64) -> Result<Self> {
        Self::new(NoiseKind::Multiplicative, sigma2, DEFAULT_SUPPORT_BOUND)
    }

    pub fn noiseless() -> Self {
        Self {
            kind: NoiseKind::Additive,
            sigma2: 0.0,
            support_bound: DEFAULT_SUPPORT_BOUND,
        }
    }

    pub fn new(kind: NoiseKind, sigma2: f64, support_bound: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be finite and nonnegative, got {sigma2}"
            )));
        }
        if kind == NoiseKind::Multiplicative && !(0.0..1.0).contains(&support_bound) {
            return Err(Error::InvalidArgument(format!(
                "multiplicative support bound must lie in [0, 1), got {support_bound}"
            )));
        }
        Ok(Self {
            kind,
            sigma2,
            support_bound,
        })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn support_bound(&self) -> f64 {
        self.support_bound
    }

    /// Applies one noise draw to the signal value `f`.
    fn corrupt(&self, f: f64, rng: &mut RngStream) -> f64 {
        if self.sigma2 == 0.0 {
            return f;
        }
        let sd = self.sigma2.sqrt();
        match self.kind {
            NoiseKind::Additive => f + sd * rng.standard_normal(),
            NoiseKind::Multiplicative => {
                // rejection keeps |eps| < a
                let eps = loop {
                    let e = sd * rng.standard_normal();
                    if e.abs() < self.support_bound {
                        break e;
                    }
                };
                f * (1.0 + eps)
            }
        }
    }
}

/// An objective plus its noise model and an evaluation counter.
#[derive(Clone)]
pub struct NoisyOracle {
    objective: Arc<dyn Objective>,
    noise: NoiseModel,
    eval_count: u64,
    true_value_access: bool,
}

impl fmt::Debug for NoisyOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoisyOracle")
            .field("dim", &self.objective.dim())
            .field("noise", &self.noise)
            .field("eval_count", &self.eval_count)
            .field("true_value_access", &self.true_value_access)
            .finish()
    }
}

impl NoisyOracle {
    /// A black box: noisy values only.
    pub fn new(objective: Arc<dyn Objective>, noise: NoiseModel) -> Self {
        Self {
            objective,
            noise,
            eval_count: 0,
            true_value_access: false,
        }
    }

    /// A benchmark oracle that also exposes uncounted noiseless reads.
    pub fn with_true_values(objective: Arc<dyn Objective>, noise: NoiseModel) -> Self {
        Self {
            true_value_access: true,
            ..Self::new(objective, noise)
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn eval_count(&self) -> u64 {
        self.eval_count
    }

    pub fn has_true_values(&self) -> bool {
        self.true_value_access
    }

    /// Noisy evaluation `f(x) + eps` or `f(x)(1 + eps)`; counts one call.
    pub fn evaluate(&mut self, x: &DVector<f64>, rng: &mut RngStream) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let f = self.objective.value(x)?;
        self.eval_count += 1;
        Ok(self.noise.corrupt(f, rng))
    }

    /// Noiseless read, not counted. `None` for real black boxes.
    pub fn true_value(&self, x: &DVector<f64>) -> Option<f64> {
        if !self.true_value_access || x.len() != self.dim() {
            return None;
        }
        self.objective.value(x).ok()
    }
}

/// Free-function form of [`NoisyOracle::evaluate`].
pub fn evaluate(oracle: &mut NoisyOracle, x: &DVector<f64>, rng: &mut RngStream) -> Result<f64> {
    oracle.evaluate(x, rng)
}
